#pragma once

#include <array>
#include <string>
#include <vector>

#include "covfunc/estimators.hpp"
#include "covfunc/matgen.hpp"
#include "covfunc/threshold.hpp"

namespace covfunc {

enum class TwoSampleMethod { BS, NewBS, CQ, NewCQ, Bonferroni, BH };
enum class Sidedness { Upper, TwoSided };
enum class MarginalTest { Pooled, Welch };

std::string to_string(TwoSampleMethod m);
TwoSampleMethod parse_two_sample_method(const std::string& s);

struct TwoSampleReport {
  TwoSampleMethod method = TwoSampleMethod::BS;
  double statistic = 0.0;
  double z = 0.0;  // Wald-type methods only
  double p_value = 1.0;
  bool reject = false;
  FunctionalEstimate functional_used;  // ||Sigma||_F^2 or null-variance estimate fed to z
  double tau = -1.0;                   // threshold, when one was used
  /// (tr Sigma1^2, tr Sigma2^2, tr Sigma1 Sigma2) estimates for CQ / newCQ.
  std::array<double, 3> traces{};
  std::vector<std::string> warnings;
};

/// Rejection region for Wald-type tests. Two-sided is the default because it
/// reproduces the published size/power table; Upper is available.
struct WaldOptions {
  double alpha = 0.05;
  Sidedness sided = Sidedness::TwoSided;
};

/// Bai-Saranadasa: M = ||xbar1 - xbar2||^2 - n / (n1 n2) tr(S_pooled), with
/// var(M) = 2 n (n - 1) / (n1 n2)^2 * ||Sigma||_F^2. The norm comes from B^2
/// (use_threshold = false) or from the thresholded Q + D plug-in (newBS).
TwoSampleReport bs_test(const SampleMatrix& x1, const SampleMatrix& x2, const WaldOptions& opt,
                        bool use_threshold, const ThresholdSpec& spec = {});

/// Chen-Qin: U-statistic of ||mu1 - mu2||^2 with null variance
/// 2 tr(S1^2) / (n1 (n1 - 1)) + 2 tr(S2^2) / (n2 (n2 - 1)) + 4 tr(S1 S2) / (n1 n2),
/// the traces from U-statistics (CQ) or thresholded plug-ins (newCQ).
TwoSampleReport cq_test(const SampleMatrix& x1, const SampleMatrix& x2, const WaldOptions& opt,
                        bool use_threshold, const ThresholdSpec& spec = {});

/// p coordinatewise two-sided t-tests combined by Bonferroni or BH.
TwoSampleReport marginal_tests(const SampleMatrix& x1, const SampleMatrix& x2, double alpha,
                               TwoSampleMethod correction, MarginalTest kind = MarginalTest::Pooled);

/// Coordinatewise two-sided p-values (1 for zero-variance coordinates).
std::vector<double> marginal_p_values(const SampleMatrix& x1, const SampleMatrix& x2,
                                      MarginalTest kind, int* zero_variance = nullptr);

/// Benjamini-Hochberg step-up: true if any hypothesis is rejected at FDR alpha.
bool bh_any_rejection(std::vector<double> p_values, double alpha);

/// Thresholded estimates that newBS/newCQ feed into the null variance.
struct ThresholdedTraces {
  double tr1 = 0.0, tr2 = 0.0, tr12 = 0.0;
  double tau1 = 0.0, tau2 = 0.0;
};
ThresholdedTraces thresholded_traces(const SampleMatrix& x1, const SampleMatrix& x2,
                                     const ThresholdSpec& spec);

/// newBS plug-in of ||Sigma||_F^2 from the pooled sample; returns (value, tau).
std::pair<double, double> pooled_thresholded_frobenius(const SampleMatrix& x1, const SampleMatrix& x2,
                                                       const ThresholdSpec& spec);

/// Wald p-value for a z-score.
double wald_p_value(double z, Sidedness sided);

}  // namespace covfunc
