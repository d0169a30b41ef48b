#pragma once

#include <optional>

#include "covfunc/matgen.hpp"
#include "covfunc/rng.hpp"
#include "covfunc/threshold.hpp"

namespace covfunc {

struct DetectionConfig {
  double r = 1.0;
  double q = 0.0;  // 0 <= q < r
  double R = 1.0;
  double delta = 0.05;
  double C = 1.0;
  ThresholdSpec spec{};
};

struct Envelope {
  double s0 = 0.0;
  double s1 = 0.0;
  double kappa_bar = 0.0;

  /// s0 < s1: the cutoff interval is nonempty.
  [[nodiscard]] bool separated() const { return s0 < s1; }
};

/// With x = (2 log p + log(4 / delta)) / n:
///   s0 = 1 + C R x^{(r-q)/2},  s1 = 1 + kappa^r - C R x^{(r-q)/2},
///   kappa_bar = 2 C R^{1/r} x^{(r-q)/(2r)}.
Envelope envelope(const DetectionConfig& cfg, int n, int p, double kappa);

struct DetectionReport {
  double l_r_value = 0.0;
  double cutoff_s = 0.0;
  bool reject = false;
  double tau = 0.0;
  std::optional<Envelope> envelope;
};

/// Rejects when l_r of the thresholded covariance reaches cutoff_s.
DetectionReport detect_test(const SampleMatrix& x, double r, const ThresholdSpec& spec, double cutoff_s);

/// l_r of the thresholded covariance; the tau actually used is written to tau_out.
double thresholded_lr(const SampleMatrix& x, double r, const ThresholdSpec& spec, double* tau_out = nullptr);

/// Empirical (1 - alpha) quantile of l_r under N(0, I_p) zero-mean data;
/// alpha = 0 gives the maximum. Replicates run on `threads` workers.
double calibrate_cutoff(int null_draws, int p, int n, double r, const ThresholdSpec& spec, double alpha,
                        std::uint64_t seed, int threads = 1);

}  // namespace covfunc
