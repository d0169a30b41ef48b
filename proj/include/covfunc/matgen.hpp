#pragma once

#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "covfunc/rng.hpp"
#include "covfunc/types.hpp"

namespace covfunc {

// Structured covariance kinds. All built-ins are correlation matrices.
namespace kind {
/// sigma_ij = rho^|i-j|  (M1 uses rho = 0.25)
struct AR1 {
  double rho = 0.25;
};
/// sigma_ij = rho if |i-j| = 1  (M2 uses rho = 0.3)
struct Banded1 {
  double rho = 0.3;
};
/// Leading floor(p*block_frac) square block of correlation rho (M3: 0.3, 1/20).
struct BlockCorner {
  double rho = 0.3;
  double block_frac = 1.0 / 20.0;
};
struct Identity {};
/// First n_blocks 2x2 diagonal blocks carry correlation rho, the rest is identity.
struct TwoByTwoBlocks {
  double rho = 0.3;
  int n_blocks = 0;
};
/// sigma_ij = rho for i != j both in support. Use draw_planted_block to pick
/// a uniformly random support.
struct PlantedBlock {
  double rho = 0.8;
  int support_size = 0;
  std::vector<int> support;
};
/// First row/column equal to a on support (indices in 1..p-1), identity elsewhere.
struct PlantedRow {
  double a = 0.0;
  std::vector<int> support;
};
struct Custom {};
/// Produced by an estimator rather than a generator.
struct Estimated {};
}  // namespace kind

using ModelKind = std::variant<kind::AR1, kind::Banded1, kind::BlockCorner, kind::Identity,
                               kind::TwoByTwoBlocks, kind::PlantedBlock, kind::PlantedRow,
                               kind::Custom, kind::Estimated>;

std::string kind_name(const ModelKind& k);

/// A p x p symmetric PSD matrix plus the generator that produced it.
struct CovarianceModel {
  ModelKind kind = kind::Custom{};
  Matrix entries;

  [[nodiscard]] int dim() const { return static_cast<int>(entries.rows()); }
};

enum class Centering { KnownZeroMean, CenterByColumnMean };

/// n x p observations, rows are samples.
class SampleMatrix {
 public:
  SampleMatrix() = default;
  SampleMatrix(Matrix data, Centering centering = Centering::CenterByColumnMean);

  [[nodiscard]] int n() const { return static_cast<int>(data_.rows()); }
  [[nodiscard]] int p() const { return static_cast<int>(data_.cols()); }
  [[nodiscard]] const Matrix& data() const { return data_; }
  [[nodiscard]] Centering centering() const { return centering_; }

  /// Rows selected by index, same centering policy.
  [[nodiscard]] SampleMatrix rows(const std::vector<int>& idx) const;

 private:
  Matrix data_;
  Centering centering_ = Centering::CenterByColumnMean;
};

/// Builds a built-in model. Throws ConfigError for parameterizations that are
/// not positive semi-definite or otherwise out of domain. BlockCorner sizes are
/// floor(p * block_frac), clipped to [1, p].
CovarianceModel make_model(const ModelKind& k, int p);

/// M1..M4 by name ("M1", "M2", "M3", "M4").
CovarianceModel named_model(const std::string& name, int p);

/// Wraps a user matrix; checks symmetry and PSD (smallest eigenvalue >= -1e-10 p).
CovarianceModel custom_model(Matrix entries);

/// PlantedBlock with a uniformly drawn support of the requested size.
kind::PlantedBlock draw_planted_block(double rho, int support_size, int p, Rng& rng);

/// Smallest eigenvalue >= -tol_per_dim * p.
bool is_psd(const Matrix& m, double tol_per_dim = 1e-10);

/// Holds a symmetric factor of a model so repeated draws reuse it.
class GaussianSampler {
 public:
  explicit GaussianSampler(const CovarianceModel& model);

  /// n rows i.i.d. N(mean, Sigma). An empty mean means zero.
  [[nodiscard]] Matrix draw(int n, const Vector& mean, Rng& rng) const;
  [[nodiscard]] int dim() const { return dim_; }

 private:
  int dim_ = 0;
  bool identity_ = false;
  Matrix factor_;  // lower triangular L with L L^T = Sigma (+ jitter)
};

SampleMatrix sample_gaussian(const CovarianceModel& model, int n, const Vector& mean, RngSeed seed,
                             Centering centering = Centering::CenterByColumnMean);

/// How eta sets the mean difference in the two-sample design.
enum class SignalScale {
  /// ||mu1 - mu2|| / sqrt(tr Sigma^2) = eta
  NormRatio,
  /// ||mu1 - mu2||^2 / sqrt(tr Sigma^2) = eta; the scaling that reproduces the
  /// published two-sample power table.
  SquaredNormRatio,
};

struct TwoSampleDraw {
  SampleMatrix x1;
  SampleMatrix x2;
  Vector mu2;
};

/// mu1 = 0; mu2 has equal entries on the trailing round((1-prop_equal) p)
/// coordinates, scaled per `scale`.
Vector two_sample_mean_shift(int p, double prop_equal, double eta, const Matrix& sigma,
                             SignalScale scale = SignalScale::SquaredNormRatio);

TwoSampleDraw two_sample_design(int n1, int n2, double prop_equal, double eta,
                                const CovarianceModel& sigma, RngSeed seed,
                                SignalScale scale = SignalScale::SquaredNormRatio);

}  // namespace covfunc
