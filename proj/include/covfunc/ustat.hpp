#pragma once

#include "covfunc/types.hpp"

// Location-invariant U-statistics for second-order covariance functionals.
// All of them are unchanged when a constant vector is added to every row.

namespace covfunc::ustat {

/// Unbiased for tr(Sigma^2); kernel (1/4)((x_i - x_j)'(x_k - x_l))^2 over
/// ordered distinct quadruples. Needs n >= 4.
double trace_sq(const Matrix& x);

/// Per-coordinate version of trace_sq: entry a is unbiased for sigma_aa^2.
Vector diag_sq(const Matrix& x);

/// Unbiased for sum_{a != b} sigma_ab^2.
double offdiag_sq(const Matrix& x);

/// Unbiased for tr(Sigma1 Sigma2) from independent samples (n1, n2 >= 2).
double trace_cross(const Matrix& x1, const Matrix& x2);

/// Column-centered copy.
Matrix centered(const Matrix& x);

}  // namespace covfunc::ustat
