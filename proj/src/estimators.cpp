#include "covfunc/estimators.hpp"

#include <cmath>
#include <sstream>

#include "covfunc/ustat.hpp"

namespace covfunc {

namespace {

std::string digest(const char* what, int n, int p, double tau) {
  std::ostringstream os;
  os << what << " n=" << n << " p=" << p;
  if (tau >= 0.0) os << " tau=" << tau;
  return os.str();
}

// ||Z'Z||_F^2 / d^2 and tr(Z'Z) / d without forming a p x p matrix when n < p.
std::pair<double, double> scatter_moments(const Matrix& z, double d) {
  const double tr = z.squaredNorm() / d;
  const double fro = (z.rows() < z.cols() ? Matrix(z * z.transpose()).squaredNorm()
                                          : Matrix(z.transpose() * z).squaredNorm()) /
                     (d * d);
  return {fro, tr};
}

}  // namespace

ThresholdSpec ThresholdSpec::explicit_tau(double tau) {
  require(std::isfinite(tau) && tau >= 0.0, "threshold must be a nonnegative number");
  ThresholdSpec s;
  s.mode = Mode::Explicit;
  s.tau = tau;
  return s;
}

ThresholdSpec ThresholdSpec::rule(double c0, double gamma, bool theory_faithful) {
  require(c0 > 0.0 && gamma > 0.0, "rule threshold needs positive C0 and gamma");
  if (theory_faithful)
    require(c0 >= 4.0 && gamma > 8.0, "theory-faithful rule needs C0 >= 4 and gamma > 8");
  ThresholdSpec s;
  s.mode = Mode::Rule;
  s.c0 = c0;
  s.gamma = gamma;
  s.theory_faithful = theory_faithful;
  return s;
}

ThresholdSpec ThresholdSpec::practical(double C) { return rule(C / 2.0, 1.0, false); }

ThresholdSpec ThresholdSpec::cross_validated(CvConfig cfg) {
  require(cfg.m >= 1 && cfg.J >= 2, "cross-validation needs m >= 1 and J >= 2");
  ThresholdSpec s;
  s.mode = Mode::CrossValidated;
  s.cv = cfg;
  return s;
}

std::string to_string(ThresholdSpec::Mode m) {
  switch (m) {
    case ThresholdSpec::Mode::Explicit: return "explicit";
    case ThresholdSpec::Mode::Rule: return "rule";
    case ThresholdSpec::Mode::CrossValidated: return "cv";
  }
  return "?";
}

std::string to_string(CvTarget t) {
  switch (t) {
    case CvTarget::QFunctional: return "q";
    case CvTarget::LrFunctional: return "lr";
    case CvTarget::RhoBarSq: return "rhobar2";
  }
  return "?";
}

std::string to_string(FunctionalKind k) {
  switch (k) {
    case FunctionalKind::Qoff: return "Qoff";
    case FunctionalKind::Ddiag: return "Ddiag";
    case FunctionalKind::TotalFrobSq: return "TotalFrobSq";
    case FunctionalKind::Lr: return "Lr";
    case FunctionalKind::BsB2: return "BS_B2";
    case FunctionalKind::CqTrSigmaSq: return "CQ_TrSigmaSq";
    case FunctionalKind::CqTrSigma12: return "CQ_TrSigma12";
  }
  return "?";
}

Matrix sample_covariance(const SampleMatrix& x) {
  const int n = x.n();
  const bool zero_mean = x.centering() == Centering::KnownZeroMean;
  require(n >= (zero_mean ? 1 : 2), "empirical covariance needs n >= 2 (n >= 1 with known zero mean)");
  const Eigen::Index p = x.p();
  Matrix s = Matrix::Zero(p, p);
  const double scale = 1.0 / static_cast<double>(zero_mean ? n : n - 1);
  // lower triangle only, then mirrored so the result is exactly symmetric
  if (zero_mean)
    s.selfadjointView<Eigen::Lower>().rankUpdate(x.data().transpose(), scale);
  else
    s.selfadjointView<Eigen::Lower>().rankUpdate(ustat::centered(x.data()).transpose(), scale);
  s.triangularView<Eigen::StrictlyUpper>() = s.transpose();
  return s;
}

CovarianceModel empirical_cov(const SampleMatrix& x) {
  return CovarianceModel{kind::Estimated{}, sample_covariance(x)};
}

double rule_tau(double c0, double gamma, double log_p, int n) {
  return 2.0 * c0 * std::sqrt(gamma * log_p / n);
}

ResolvedThreshold resolve_threshold(const ThresholdSpec& spec, int p, int n) {
  require(p >= 2 && n >= 2, "resolve_threshold: need p >= 2 and n >= 2");
  ResolvedThreshold out;
  switch (spec.mode) {
    case ThresholdSpec::Mode::Explicit:
      require(spec.tau >= 0.0, "threshold must be nonnegative");
      out.tau = spec.tau;
      break;
    case ThresholdSpec::Mode::Rule: {
      const double log_p = std::log(static_cast<double>(p));
      out.tau = rule_tau(spec.c0, spec.gamma, log_p, n);
      if (spec.theory_faithful) {
        if (spec.gamma * log_p >= n) out.warnings.emplace_back("gamma * log p >= n: rate assumptions violated");
        if (out.tau > 1.0) out.warnings.emplace_back("tau > 1: rate assumptions violated");
      }
      break;
    }
    case ThresholdSpec::Mode::CrossValidated:
      throw ConfigError("cross-validated threshold needs the sample; call resolve_threshold(spec, X)");
  }
  return out;
}

ThresholdedEstimate threshold(const Matrix& sigma_hat, double tau) {
  require(tau >= 0.0, "threshold: tau must be nonnegative");
  require(sigma_hat.rows() == sigma_hat.cols(), "threshold: matrix must be square");
  ThresholdedEstimate est;
  est.base = sigma_hat;
  est.tau = tau;
  est.kept_mask = sigma_hat.array().abs() > tau;
  est.kept_mask.matrix().diagonal().setConstant(false);
  est.entries = est.kept_mask.select(sigma_hat, 0.0);
  est.entries.diagonal() = sigma_hat.diagonal();
  return est;
}

ThresholdedEstimate threshold(const CovarianceModel& sigma_hat, double tau) {
  return threshold(sigma_hat.entries, tau);
}

double q_offdiag_at(const Matrix& s, double tau) {
  double sum = 0.0;
  const Eigen::Index p = s.rows();
  for (Eigen::Index j = 0; j < p; ++j)
    for (Eigen::Index i = j + 1; i < p; ++i) {
      const double v = s(i, j);
      if (std::abs(v) > tau) sum += v * v;
    }
  return 2.0 * sum;
}

FunctionalEstimate q_offdiag(const ThresholdedEstimate& est) {
  // reads only the kept off-diagonal entries
  double sum = 0.0;
  const Eigen::Index p = est.entries.rows();
  for (Eigen::Index j = 0; j < p; ++j)
    for (Eigen::Index i = 0; i < p; ++i)
      if (i != j && est.kept_mask(i, j)) sum += est.entries(i, j) * est.entries(i, j);
  return {sum, FunctionalKind::Qoff, digest("q_offdiag", -1, est.dim(), est.tau)};
}

FunctionalEstimate d_diag(const SampleMatrix& x) {
  const int n = x.n();
  double value;
  if (x.centering() == Centering::KnownZeroMean) {
    require(n >= 2, "d_diag needs n >= 2");
    const Eigen::ArrayXXd sq = x.data().array().square();
    const Eigen::ArrayXd s2 = sq.colwise().sum().transpose();
    const Eigen::ArrayXd s4 = sq.square().colwise().sum().transpose();
    value = (s2.square() - s4).sum() / (static_cast<double>(n) * (n - 1));
  } else {
    require(n >= 4, "d_diag on centered data needs n >= 4");
    value = ustat::diag_sq(x.data()).sum();
  }
  return {value, FunctionalKind::Ddiag, digest("d_diag", n, x.p(), -1.0)};
}

FunctionalEstimate frobenius_sq(const ThresholdedEstimate& est, const SampleMatrix& x,
                                bool known_unit_diagonal) {
  require(est.dim() == x.p(), "frobenius_sq: dimension mismatch");
  const double q = q_offdiag(est).value;
  const double d = known_unit_diagonal ? static_cast<double>(x.p()) : d_diag(x).value;
  return {q + d, FunctionalKind::TotalFrobSq, digest("frobenius_sq", x.n(), x.p(), est.tau)};
}

double lr_functional_at(const Matrix& s, double tau, double r) {
  require(r > 0.0, "lr_functional: r must be positive");
  double best = 0.0;
  const Eigen::Index p = s.rows();
  for (Eigen::Index j = 0; j < p; ++j) {
    double row = 0.0;
    for (Eigen::Index i = 0; i < p; ++i) {
      const double a = std::abs(s(i, j));
      if (i == j || a > tau) row += r == 1.0 ? a : r == 2.0 ? a * a : std::pow(a, r);
    }
    best = std::max(best, row);
  }
  return best;
}

FunctionalEstimate lr_functional(const ThresholdedEstimate& est, double r) {
  return {lr_functional_at(est.entries, -1.0, r), FunctionalKind::Lr,
          digest("lr_functional", -1, est.dim(), est.tau)};
}

double bs_b2_closed_form(double frob_sq, double trace, double n) {
  return n * n / ((n + 2.0) * (n - 1.0)) * (frob_sq - trace * trace / n);
}

FunctionalEstimate bs_b2(const SampleMatrix& x) {
  const int n = x.n();
  require(n >= 2, "bs_b2 needs n >= 2");
  const auto [fro, tr] = scatter_moments(ustat::centered(x.data()), n);
  return {bs_b2_closed_form(fro, tr, n), FunctionalKind::BsB2, digest("bs_b2", n, x.p(), -1.0)};
}

FunctionalEstimate bs_b2(const SampleMatrix& x1, const SampleMatrix& x2) {
  require(x1.p() == x2.p(), "bs_b2: samples have different dimensions");
  require(x1.n() >= 2 && x2.n() >= 2, "bs_b2 needs n1, n2 >= 2");
  const int n = x1.n() + x2.n();
  Matrix z(n, x1.p());
  z.topRows(x1.n()) = ustat::centered(x1.data());
  z.bottomRows(x2.n()) = ustat::centered(x2.data());
  const auto [fro, tr] = scatter_moments(z, n);
  return {bs_b2_closed_form(fro, tr, n), FunctionalKind::BsB2, digest("bs_b2 pooled", n, x1.p(), -1.0)};
}

CqFunctionals cq_functionals(const SampleMatrix& x1, const SampleMatrix& x2) {
  require(x1.p() == x2.p(), "cq_functionals: samples have different dimensions");
  require(x1.n() >= 4 && x2.n() >= 4, "cq_functionals needs n1, n2 >= 4");
  const int p = x1.p();
  return {
      {ustat::trace_sq(x1.data()), FunctionalKind::CqTrSigmaSq, digest("cq tr(S1^2)", x1.n(), p, -1.0)},
      {ustat::trace_sq(x2.data()), FunctionalKind::CqTrSigmaSq, digest("cq tr(S2^2)", x2.n(), p, -1.0)},
      {ustat::trace_cross(x1.data(), x2.data()), FunctionalKind::CqTrSigma12,
       digest("cq tr(S1 S2)", x1.n() + x2.n(), p, -1.0)},
  };
}

}  // namespace covfunc
