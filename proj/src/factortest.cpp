#include "covfunc/factortest.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/normal.hpp>

#include "covfunc/cvselect.hpp"
#include "covfunc/estimators.hpp"

namespace covfunc {

FactorFit ols_factor_fit(const FactorPanel& panel) {
  const int T = panel.T(), N = panel.N(), K = panel.K();
  require(N >= 1, "factor fit: no assets");
  require(panel.factors.rows() == T, "factor fit: returns and factors have different lengths");
  require(T > K + 2, "factor fit: need T > K + 2");
  require(panel.returns.allFinite() && panel.factors.allFinite(), "factor fit: missing values");

  Matrix design(T, K + 1);
  design.col(0).setOnes();
  design.rightCols(K) = panel.factors;
  const Eigen::ColPivHouseholderQR<Matrix> qr(design);
  if (qr.rank() < K + 1) throw NumericalError("factor fit: design [1, F] is rank deficient");
  const Matrix coef = qr.solve(panel.returns);  // (K + 1) x N

  FactorFit fit;
  fit.alpha = coef.row(0).transpose();
  fit.beta = coef.bottomRows(K).transpose();
  fit.residuals = panel.returns - design * coef;
  fit.nu = T - K - 1;
  fit.resid_cov = fit.residuals.transpose() * fit.residuals / static_cast<double>(fit.nu);
  return fit;
}

WdResult wd_statistic(const FactorPanel& panel) { return wd_statistic(panel, ols_factor_fit(panel)); }

WdResult wd_statistic(const FactorPanel& panel, const FactorFit& fit) {
  const int T = panel.T(), K = panel.K();
  double ones_mf_ones = T;
  if (K > 0) {
    const Matrix& F = panel.factors;
    const Vector f_sum = F.colwise().sum().transpose();
    const Eigen::LDLT<Matrix> ftf(F.transpose() * F);
    if (ftf.info() != Eigen::Success) throw NumericalError("W_d: F'F is singular");
    ones_mf_ones -= f_sum.dot(ftf.solve(f_sum));
  }
  const Vector d = fit.resid_cov.diagonal();
  // residual variance at rounding level relative to the asset's own scale counts as zero
  const Vector scale = panel.returns.colwise().squaredNorm().transpose() / panel.T();
  for (Eigen::Index i = 0; i < d.size(); ++i)
    if (!(d(i) > 1e-20 * std::max(scale(i), 1e-300)))
      throw NumericalError("W_d: zero residual variance for asset " + std::to_string(i + 1));
  return {ones_mf_ones * (fit.alpha.array().square() / d.array()).sum(), fit.nu};
}

double rho_bar_sq_at(const Matrix& resid_cov, double tau) {
  const Eigen::Index N = resid_cov.rows();
  require(N >= 2, "rho_bar_sq: need at least two assets");
  const Vector d = resid_cov.diagonal();
  if (!(d.minCoeff() > 0.0)) throw NumericalError("rho_bar_sq: zero residual variance for some asset");
  const Vector inv = d.cwiseSqrt().cwiseInverse();
  const Matrix rho = inv.asDiagonal() * resid_cov * inv.asDiagonal();
  return q_offdiag_at(rho, tau) / (static_cast<double>(N) * static_cast<double>(N - 1));
}

double rho_bar_sq(const Matrix& residuals, const ThresholdSpec& spec, double* tau_used) {
  require(residuals.cols() >= 2, "rho_bar_sq: need at least two assets");
  double tau;
  if (spec.mode == ThresholdSpec::Mode::CrossValidated) {
    CvConfig cfg = spec.cv;
    cfg.target = CvTarget::RhoBarSq;
    // residuals have mean zero by construction
    tau = cv_threshold(SampleMatrix(residuals, Centering::KnownZeroMean), cfg).tau_final;
  } else {
    tau = resolve_threshold(spec, static_cast<int>(residuals.cols()), static_cast<int>(residuals.rows())).tau;
  }
  if (tau_used) *tau_used = tau;
  return rho_bar_sq_at(residuals.transpose() * residuals, tau);
}

AlphaTestReport j_alpha_test(const FactorPanel& panel, const ThresholdSpec& spec, double alpha_level) {
  const FactorFit fit = ols_factor_fit(panel);
  require(fit.nu > 4, "J_alpha: need nu = T - K - 1 > 4");
  const auto [wd, nu] = wd_statistic(panel, fit);
  const double v = nu, N = panel.N();

  AlphaTestReport rep;
  rep.wd = wd;
  rep.nu = nu;
  rep.rho_bar_sq_hat = rho_bar_sq(fit.residuals, spec, &rep.tau_used);
  rep.e_wd = v * N / (v - 2.0);
  rep.var_wd = 2.0 * N * (v - 1.0) / (v - 4.0) * std::pow(v / (v - 2.0), 2) * (1.0 + (N - 1.0) * rep.rho_bar_sq_hat);
  rep.j_alpha = (wd - rep.e_wd) / std::sqrt(rep.var_wd);
  rep.p_value = boost::math::cdf(boost::math::complement(boost::math::normal_distribution<>(), rep.j_alpha));
  rep.reject = rep.p_value < alpha_level;
  if (!panel.dates.empty()) rep.window_end = panel.dates.back();
  return rep;
}

std::vector<AlphaTestReport> rolling_alpha_tests(const FactorPanel& panel, int window_t,
                                                 const ThresholdSpec& spec, double alpha_level,
                                                 std::vector<std::string>* gaps) {
  require(window_t >= 1 && panel.T() >= window_t, "rolling test: window longer than the panel");
  require(panel.factors.rows() == panel.T(), "rolling test: returns and factors have different lengths");
  std::vector<AlphaTestReport> out;
  for (int end = window_t; end <= panel.T(); ++end) {
    const int start = end - window_t;
    const std::string label = panel.dates.empty() ? std::to_string(end) : panel.dates[static_cast<std::size_t>(end - 1)];
    FactorPanel w;
    w.factors = panel.factors.middleRows(start, window_t);
    if (!w.factors.allFinite()) {
      if (gaps) gaps->push_back(label + ": missing factor values");
      continue;
    }
    std::vector<Eigen::Index> keep;
    for (Eigen::Index a = 0; a < panel.returns.cols(); ++a)
      if (panel.returns.col(a).segment(start, window_t).allFinite()) keep.push_back(a);
    if (keep.size() < 2) {
      if (gaps) gaps->push_back(label + ": fewer than two complete assets");
      continue;
    }
    w.returns.resize(window_t, static_cast<Eigen::Index>(keep.size()));
    for (std::size_t c = 0; c < keep.size(); ++c)
      w.returns.col(static_cast<Eigen::Index>(c)) = panel.returns.col(keep[c]).segment(start, window_t);
    if (!panel.dates.empty())
      w.dates.assign(panel.dates.begin() + start, panel.dates.begin() + end);
    auto rep = j_alpha_test(w, spec, alpha_level);
    rep.window_end = label;
    out.push_back(std::move(rep));
  }
  return out;
}

}  // namespace covfunc

namespace covfunc {

FactorPanel synthetic_factor_panel(const SyntheticPanelConfig& cfg, RngSeed seed) {
  require(cfg.T >= 1 && cfg.N >= 1 && cfg.K >= 0, "synthetic panel: bad dimensions");
  require(cfg.sigma > 0.0 && cfg.alpha_ref_t >= 1, "synthetic panel: bad scale");
  Rng rng(seed);
  FactorPanel panel;
  panel.factors.resize(cfg.T, cfg.K);
  for (int t = 0; t < cfg.T; ++t)
    for (int k = 0; k < cfg.K; ++k) panel.factors(t, k) = rng.normal();
  Matrix beta(cfg.N, cfg.K);
  for (int i = 0; i < cfg.N; ++i)
    for (int k = 0; k < cfg.K; ++k) beta(i, k) = rng.normal();
  const int n_alpha = static_cast<int>(std::lround(cfg.alpha_fraction * cfg.N));
  const double a = cfg.alpha_scale * cfg.sigma / std::sqrt(static_cast<double>(cfg.alpha_ref_t));
  panel.returns = panel.factors * beta.transpose();
  for (int t = 0; t < cfg.T; ++t)
    for (int i = 0; i < cfg.N; ++i) {
      panel.returns(t, i) += cfg.sigma * rng.normal();
      if (i < n_alpha && t >= cfg.switch_at) panel.returns(t, i) += a;
    }
  for (int i = 0; i < cfg.N; ++i) panel.asset_ids.push_back("a" + std::to_string(i + 1));
  for (int t = 0; t < cfg.T; ++t) panel.dates.push_back("t" + std::to_string(t + 1));
  return panel;
}

}  // namespace covfunc
