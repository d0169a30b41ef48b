#include "covfunc/detect.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "covfunc/cvselect.hpp"
#include "covfunc/estimators.hpp"
#include "covfunc/parallel.hpp"

namespace covfunc {

Envelope envelope(const DetectionConfig& cfg, int n, int p, double kappa) {
  require(n >= 2 && p >= 2, "envelope: need n, p >= 2");
  require(cfg.r > 0.0 && cfg.q >= 0.0 && cfg.q < cfg.r, "envelope: need 0 <= q < r");
  require(cfg.delta > 0.0 && cfg.delta < 1.0, "envelope: delta must lie in (0, 1)");
  require(cfg.R > 0.0, "envelope: R must be positive");
  const double x = (2.0 * std::log(static_cast<double>(p)) + std::log(4.0 / cfg.delta)) / n;
  const double dev = cfg.C * cfg.R * std::pow(x, (cfg.r - cfg.q) / 2.0);
  return {1.0 + dev, 1.0 + std::pow(kappa, cfg.r) - dev,
          2.0 * cfg.C * std::pow(cfg.R, 1.0 / cfg.r) * std::pow(x, (cfg.r - cfg.q) / (2.0 * cfg.r))};
}

double thresholded_lr(const SampleMatrix& x, double r, const ThresholdSpec& spec, double* tau_out) {
  const double tau = resolve_threshold(spec, x).tau;
  if (tau_out) *tau_out = tau;
  return lr_functional_at(sample_covariance(x), tau, r);
}

DetectionReport detect_test(const SampleMatrix& x, double r, const ThresholdSpec& spec, double cutoff_s) {
  require(cutoff_s > 0.0, "detect: cutoff must be positive");
  DetectionReport rep;
  rep.l_r_value = thresholded_lr(x, r, spec, &rep.tau);
  rep.cutoff_s = cutoff_s;
  rep.reject = rep.l_r_value >= cutoff_s;
  return rep;
}

double calibrate_cutoff(int null_draws, int p, int n, double r, const ThresholdSpec& spec, double alpha,
                        std::uint64_t seed, int threads) {
  require(null_draws >= 100, "calibrate_cutoff: need at least 100 null draws");
  require(alpha >= 0.0 && alpha < 1.0, "calibrate_cutoff: alpha must lie in [0, 1)");
  const CovarianceModel identity = make_model(kind::Identity{}, p);
  const GaussianSampler sampler(identity);
  std::vector<double> values(static_cast<std::size_t>(null_draws));
  parallel_for(null_draws, threads, [&](int rep) {
    const RngSeed rs{seed, static_cast<std::uint64_t>(rep)};
    Rng rng(rs);
    const SampleMatrix x(sampler.draw(n, Vector(), rng), Centering::KnownZeroMean);
    ThresholdSpec s = spec;
    s.cv.seed = rs.derive(0xc5);
    values[static_cast<std::size_t>(rep)] = thresholded_lr(x, r, s);
  });
  std::sort(values.begin(), values.end());
  if (alpha == 0.0) return values.back();
  // smallest order statistic with at least (1 - alpha) mass at or below it
  const auto k = static_cast<std::size_t>(std::ceil((1.0 - alpha) * null_draws - 1e-12));
  return values[std::clamp<std::size_t>(k, 1, values.size()) - 1];
}

}  // namespace covfunc
