#pragma once

#include "covfunc/estimators.hpp"
#include "covfunc/threshold.hpp"

namespace covfunc {

/// Training size for a split of n observations.
int cv_training_size(int n, const CvConfig& cfg);

/// Random-split cross-validation over the grid tau_j = j * M / J, where M is
/// the largest diagonal entry of the full-sample covariance (1 for RhoBarSq).
/// The selected grid value is rescaled to the full sample by sqrt(n1 / n).
CvTrace cv_threshold(const SampleMatrix& x, const CvConfig& cfg);

/// Non-thresholded estimate of the CV target on a held-out sample.
///   QFunctional:  off-diagonal U-statistic of sum_{i != j} sigma_ij^2
///   RhoBarSq:     the same on column-standardized data, divided by p (p - 1)
///   LrFunctional: plug-in l_r of the sample covariance (tau = 0)
/// Not scale-consistent under row duplication: (X; X) is treated as 2n draws.
double reference_estimate(const SampleMatrix& x_test, const CvConfig& cfg);

/// Values of the training functional on each grid point, in O(p^2 + p J).
std::vector<double> functional_on_grid(const Matrix& sigma_hat, const std::vector<double>& grid,
                                       const CvConfig& cfg);

/// Resolves any mode, running CV when requested.
ResolvedThreshold resolve_threshold(const ThresholdSpec& spec, const SampleMatrix& x);

/// Column-standardized correlation matrix of a sample.
Matrix sample_correlation(const SampleMatrix& x);

}  // namespace covfunc
