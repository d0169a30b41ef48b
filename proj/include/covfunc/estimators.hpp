#pragma once

#include <string>

#include "covfunc/matgen.hpp"
#include "covfunc/threshold.hpp"
#include "covfunc/types.hpp"

namespace covfunc {

/// Empirical covariance with off-diagonal entries |s_ij| <= tau set to zero.
struct ThresholdedEstimate {
  Matrix base;
  double tau = 0.0;
  Matrix entries;
  BoolMatrix kept_mask;  // off-diagonal survivors; diagonal is false

  [[nodiscard]] int dim() const { return static_cast<int>(base.rows()); }
};

enum class FunctionalKind { Qoff, Ddiag, TotalFrobSq, Lr, BsB2, CqTrSigmaSq, CqTrSigma12 };

std::string to_string(FunctionalKind k);

struct FunctionalEstimate {
  double value = 0.0;
  FunctionalKind kind = FunctionalKind::Qoff;
  std::string inputs_digest;
};

/// KnownZeroMean: X'X / n. CenterByColumnMean: centered cross products / (n - 1).
Matrix sample_covariance(const SampleMatrix& x);
CovarianceModel empirical_cov(const SampleMatrix& x);

/// tau = 2 c0 sqrt(gamma log p / n) for Rule, tau for Explicit. CrossValidated
/// needs the data; use the SampleMatrix overload in cvselect.hpp.
ResolvedThreshold resolve_threshold(const ThresholdSpec& spec, int p, int n);

/// 2 c0 sqrt(gamma log_p / n).
double rule_tau(double c0, double gamma, double log_p, int n);

ThresholdedEstimate threshold(const Matrix& sigma_hat, double tau);
ThresholdedEstimate threshold(const CovarianceModel& sigma_hat, double tau);

/// sum_{i != j} s_ij^2 1{|s_ij| > tau}, straight from a covariance matrix.
double q_offdiag_at(const Matrix& sigma_hat, double tau);

FunctionalEstimate q_offdiag(const ThresholdedEstimate& est);

/// Unbiased estimate of sum_i sigma_ii^2. Under KnownZeroMean this is
/// sum_i sum_{k != j} X_ki^2 X_ji^2 / (n (n - 1)); otherwise the
/// location-invariant U-statistic (n >= 4).
FunctionalEstimate d_diag(const SampleMatrix& x);

/// q_offdiag + d_diag. With known_unit_diagonal the diagonal part is p exactly.
FunctionalEstimate frobenius_sq(const ThresholdedEstimate& est, const SampleMatrix& x,
                                bool known_unit_diagonal = false);

/// max_i sum_j |s~_ij|^r, diagonal included.
FunctionalEstimate lr_functional(const ThresholdedEstimate& est, double r);
double lr_functional_at(const Matrix& sigma_hat, double tau, double r);

/// n^2 / ((n + 2)(n - 1)) [ ||S||_F^2 - (tr S)^2 / n ], S the scatter matrix over n.
FunctionalEstimate bs_b2(const SampleMatrix& x);
double bs_b2_closed_form(double frob_sq, double trace, double n);
/// Same with S the pooled within-group scatter over n = n1 + n2.
FunctionalEstimate bs_b2(const SampleMatrix& x1, const SampleMatrix& x2);

struct CqFunctionals {
  FunctionalEstimate tr_sigma1_sq;
  FunctionalEstimate tr_sigma2_sq;
  FunctionalEstimate tr_sigma12;
};

/// Location-invariant U-statistics of tr(S1^2), tr(S2^2), tr(S1 S2).
CqFunctionals cq_functionals(const SampleMatrix& x1, const SampleMatrix& x2);

}  // namespace covfunc
