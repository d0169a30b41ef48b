#include "covfunc/cvselect.hpp"

#include <algorithm>
#include <cmath>

#include "covfunc/ustat.hpp"

namespace covfunc {

namespace {

double pow_r(double a, double r) { return r == 1.0 ? a : r == 2.0 ? a * a : std::pow(a, r); }

// Number of grid points strictly below a: the entry survives exactly at those.
// A first guess from the mean spacing is corrected against the stored grid.
class GridIndex {
 public:
  explicit GridIndex(const std::vector<double>& grid)
      : grid_(grid), inv_step_(grid.empty() ? 0.0 : static_cast<double>(grid.size()) / grid.back()) {}

  std::size_t operator()(double a) const {
    const std::size_t J = grid_.size();
    double guess = a * inv_step_;
    std::size_t k = guess <= 0.0 ? 0 : guess >= static_cast<double>(J) ? J : static_cast<std::size_t>(guess);
    while (k < J && grid_[k] < a) ++k;
    while (k > 0 && grid_[k - 1] >= a) --k;
    return k;
  }

 private:
  const std::vector<double>& grid_;
  double inv_step_;
};

Matrix training_matrix(const SampleMatrix& x, CvTarget target) {
  return target == CvTarget::RhoBarSq ? sample_correlation(x) : sample_covariance(x);
}

}  // namespace

Matrix sample_correlation(const SampleMatrix& x) {
  Matrix s = sample_covariance(x);
  Vector inv_sd = s.diagonal().unaryExpr([](double v) { return v > 0.0 ? 1.0 / std::sqrt(v) : 0.0; });
  Matrix r = inv_sd.asDiagonal() * s * inv_sd.asDiagonal();
  return r.selfadjointView<Eigen::Lower>();
}

int cv_training_size(int n, const CvConfig& cfg) {
  const double nd = static_cast<double>(n);
  return cfg.split_rule == SplitRule::NOverLogN ? static_cast<int>(std::lround(nd / std::log(nd)))
                                                : static_cast<int>(std::lround(cfg.fraction * nd));
}

std::vector<double> functional_on_grid(const Matrix& s, const std::vector<double>& grid,
                                       const CvConfig& cfg) {
  const std::size_t J = grid.size();
  const Eigen::Index p = s.rows();
  const GridIndex survivors(grid);
  std::vector<double> out(J, 0.0);
  if (cfg.target == CvTarget::LrFunctional) {
    std::vector<double> add(J + 1);
    for (Eigen::Index j = 0; j < p; ++j) {
      std::fill(add.begin(), add.end(), 0.0);
      for (Eigen::Index i = 0; i < p; ++i) {
        if (i == j) continue;
        const double a = std::abs(s(i, j));
        add[survivors(a)] += pow_r(a, cfg.r);
      }
      double tail = pow_r(std::abs(s(j, j)), cfg.r);
      for (std::size_t k = J; k >= 1; --k) {
        tail += add[k];
        out[k - 1] = std::max(out[k - 1], tail);
      }
    }
    return out;
  }
  std::vector<double> add(J + 1, 0.0);
  for (Eigen::Index j = 0; j < p; ++j)
    for (Eigen::Index i = j + 1; i < p; ++i) {
      const double a = std::abs(s(i, j));
      add[survivors(a)] += a * a;
    }
  const double scale = cfg.target == CvTarget::RhoBarSq
                           ? 2.0 / (static_cast<double>(p) * static_cast<double>(p - 1))
                           : 2.0;
  double tail = 0.0;
  for (std::size_t k = J; k >= 1; --k) {
    tail += add[k];
    out[k - 1] = scale * tail;
  }
  return out;
}

double reference_estimate(const SampleMatrix& x, const CvConfig& cfg) {
  switch (cfg.target) {
    case CvTarget::QFunctional:
      return ustat::offdiag_sq(x.data());
    case CvTarget::RhoBarSq: {
      const Matrix z = ustat::centered(x.data());
      Vector sd = (z.colwise().squaredNorm() / static_cast<double>(x.n() - 1)).cwiseSqrt();
      Vector inv = sd.unaryExpr([](double v) { return v > 0.0 ? 1.0 / v : 0.0; });
      const double p = static_cast<double>(x.p());
      return ustat::offdiag_sq(z * inv.asDiagonal()) / (p * (p - 1.0));
    }
    case CvTarget::LrFunctional:
      return lr_functional_at(sample_covariance(x), -1.0, cfg.r);
  }
  return 0.0;
}

CvTrace cv_threshold(const SampleMatrix& x, const CvConfig& cfg) {
  require(cfg.m >= 1 && cfg.J >= 2, "cv: need m >= 1 and J >= 2");
  require(x.p() >= 2, "cv: need p >= 2");
  require(x.n() >= 8, "cv: need n >= 8");
  const int n = x.n();
  const int n1 = cv_training_size(n, cfg);
  const int min_test = cfg.target == CvTarget::LrFunctional ? 2 : 4;
  require(n1 >= 2 && n - n1 >= min_test, "cv: degenerate split (training " + std::to_string(n1) +
                                             ", testing " + std::to_string(n - n1) + ")");

  CvTrace tr;
  tr.n1 = n1;
  tr.m_hat = cfg.target == CvTarget::RhoBarSq ? 1.0 : sample_covariance(x).diagonal().maxCoeff();
  const double log_p = std::log(static_cast<double>(x.p()));
  tr.delta = tr.m_hat / (cfg.J * std::sqrt(log_p / n1));
  tr.grid.resize(static_cast<std::size_t>(cfg.J));
  for (int j = 1; j <= cfg.J; ++j) tr.grid[static_cast<std::size_t>(j - 1)] = j * tr.m_hat / cfg.J;
  tr.losses.assign(static_cast<std::size_t>(cfg.J), 0.0);

  for (int v = 0; v < cfg.m; ++v) {
    Rng rng(cfg.seed.derive(static_cast<std::uint64_t>(v)));
    const auto perm = rng.permutation(n);
    const std::vector<int> train(perm.begin(), perm.begin() + n1);
    const std::vector<int> test(perm.begin() + n1, perm.end());
    const auto values = functional_on_grid(training_matrix(x.rows(train), cfg.target), tr.grid, cfg);
    const double ref = reference_estimate(x.rows(test), cfg);
    for (std::size_t j = 0; j < values.size(); ++j) tr.losses[j] += std::abs(values[j] - ref);
  }
  for (double& l : tr.losses) l /= cfg.m;

  tr.j_star = static_cast<int>(std::min_element(tr.losses.begin(), tr.losses.end()) - tr.losses.begin()) + 1;
  tr.tau_final = tr.j_star * tr.delta * std::sqrt(log_p / n);
  return tr;
}

ResolvedThreshold resolve_threshold(const ThresholdSpec& spec, const SampleMatrix& x) {
  if (spec.mode != ThresholdSpec::Mode::CrossValidated) return resolve_threshold(spec, x.p(), x.n());
  ResolvedThreshold out;
  out.trace = cv_threshold(x, spec.cv);
  out.tau = out.trace->tau_final;
  return out;
}

}  // namespace covfunc
