#include "covfunc/matgen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace covfunc {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

void check_rho(double rho, const char* what) {
  require(std::isfinite(rho) && rho > -1.0 && rho < 1.0,
          std::string(what) + ": correlation must lie in (-1, 1)");
}

Matrix planted_block(double rho, const std::vector<int>& support, int p) {
  const auto k = static_cast<double>(support.size());
  // equicorrelation block is PSD iff -1/(k-1) <= rho <= 1
  require(rho < 1.0 && (support.size() < 2 || rho >= -1.0 / (k - 1.0)),
          "PlantedBlock: rho outside the positive semi-definite range");
  Matrix m = Matrix::Identity(p, p);
  for (int i : support) {
    require(i >= 0 && i < p, "PlantedBlock: support index out of range");
    for (int j : support)
      if (i != j) m(i, j) = rho;
  }
  return m;
}

}  // namespace

std::string kind_name(const ModelKind& k) {
  return std::visit(
      overloaded{
          [](const kind::AR1& a) { return "AR1(" + std::to_string(a.rho) + ")"; },
          [](const kind::Banded1& b) { return "Banded1(" + std::to_string(b.rho) + ")"; },
          [](const kind::BlockCorner& b) {
            return "BlockCorner(" + std::to_string(b.rho) + "," + std::to_string(b.block_frac) + ")";
          },
          [](const kind::Identity&) { return std::string("Identity"); },
          [](const kind::TwoByTwoBlocks& t) {
            return "TwoByTwoBlocks(" + std::to_string(t.rho) + "," + std::to_string(t.n_blocks) + ")";
          },
          [](const kind::PlantedBlock& b) {
            return "PlantedBlock(" + std::to_string(b.rho) + "," + std::to_string(b.support_size) + ")";
          },
          [](const kind::PlantedRow& r) {
            return "PlantedRow(" + std::to_string(r.a) + "," + std::to_string(r.support.size()) + ")";
          },
          [](const kind::Custom&) { return std::string("Custom"); },
          [](const kind::Estimated&) { return std::string("Estimated"); },
      },
      k);
}

SampleMatrix::SampleMatrix(Matrix data, Centering centering)
    : data_(std::move(data)), centering_(centering) {
  require(data_.rows() >= 1 && data_.cols() >= 1, "SampleMatrix: need n >= 1 and p >= 1");
  require(data_.allFinite(), "SampleMatrix: non-finite entry");
}

SampleMatrix SampleMatrix::rows(const std::vector<int>& idx) const {
  Matrix sub(static_cast<Eigen::Index>(idx.size()), data_.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) sub.row(static_cast<Eigen::Index>(r)) = data_.row(idx[r]);
  return SampleMatrix(std::move(sub), centering_);
}

CovarianceModel make_model(const ModelKind& k, int p) {
  require(p >= 2, "make_model: p must be at least 2");
  Matrix m = std::visit(
      overloaded{
          [p](const kind::AR1& a) -> Matrix {
            check_rho(a.rho, "AR1");
            Matrix r(p, p);
            for (int i = 0; i < p; ++i)
              for (int j = 0; j < p; ++j) r(i, j) = std::pow(a.rho, std::abs(i - j));
            return r;
          },
          [p](const kind::Banded1& b) -> Matrix {
            // tridiagonal Toeplitz: eigenvalues 1 + 2 rho cos(k pi / (p + 1))
            const double bound = 1.0 / (2.0 * std::cos(std::numbers::pi / (p + 1)));
            require(std::abs(b.rho) <= bound, "Banded1: |rho| too large for positive semi-definiteness");
            Matrix r = Matrix::Identity(p, p);
            for (int i = 0; i + 1 < p; ++i) r(i, i + 1) = r(i + 1, i) = b.rho;
            return r;
          },
          [p](const kind::BlockCorner& b) -> Matrix {
            require(b.block_frac > 0.0 && b.block_frac <= 1.0, "BlockCorner: block_frac must be in (0, 1]");
            const int size = std::clamp(static_cast<int>(std::floor(p * b.block_frac)), 1, p);
            std::vector<int> support(static_cast<std::size_t>(size));
            for (int i = 0; i < size; ++i) support[static_cast<std::size_t>(i)] = i;
            return planted_block(b.rho, support, p);
          },
          [p](const kind::Identity&) -> Matrix { return Matrix::Identity(p, p); },
          [p](const kind::TwoByTwoBlocks& t) -> Matrix {
            check_rho(t.rho, "TwoByTwoBlocks");
            require(t.n_blocks >= 0 && 2 * t.n_blocks <= p, "TwoByTwoBlocks: too many blocks for p");
            Matrix r = Matrix::Identity(p, p);
            for (int b = 0; b < t.n_blocks; ++b) r(2 * b, 2 * b + 1) = r(2 * b + 1, 2 * b) = t.rho;
            return r;
          },
          [p](const kind::PlantedBlock& b) -> Matrix {
            require(static_cast<int>(b.support.size()) == b.support_size,
                    "PlantedBlock: support not drawn (use draw_planted_block)");
            return planted_block(b.rho, b.support, p);
          },
          [p](const kind::PlantedRow& r) -> Matrix {
            const auto k = static_cast<double>(r.support.size());
            // Schur complement of I_{p-1}: 1 - k a^2 must stay positive
            require(k * r.a * r.a < 1.0, "PlantedRow: k * a^2 >= 1 is not positive definite");
            Matrix out = Matrix::Identity(p, p);
            for (int j : r.support) {
              require(j >= 1 && j < p, "PlantedRow: support must lie in 1..p-1");
              out(0, j) = out(j, 0) = r.a;
            }
            return out;
          },
          [](const auto&) -> Matrix {
            throw ConfigError("make_model: use custom_model for user-supplied matrices");
          },
      },
      k);
  return CovarianceModel{k, std::move(m)};
}

CovarianceModel named_model(const std::string& name, int p) {
  if (name == "M1") return make_model(kind::AR1{0.25}, p);
  if (name == "M2") return make_model(kind::Banded1{0.3}, p);
  if (name == "M3") return make_model(kind::BlockCorner{0.3, 1.0 / 20.0}, p);
  if (name == "M4") return make_model(kind::Identity{}, p);
  throw ConfigError("unknown model name '" + name + "' (expected M1..M4)");
}

bool is_psd(const Matrix& m, double tol_per_dim) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) return false;
  return es.eigenvalues().minCoeff() >= -tol_per_dim * static_cast<double>(m.rows());
}

CovarianceModel custom_model(Matrix entries) {
  require(entries.rows() == entries.cols() && entries.rows() >= 1, "custom_model: matrix must be square");
  require(entries.allFinite(), "custom_model: non-finite entry");
  require(entries == entries.transpose(), "custom_model: matrix is not symmetric");
  require(is_psd(entries), "custom_model: matrix is not positive semi-definite");
  return CovarianceModel{kind::Custom{}, std::move(entries)};
}

kind::PlantedBlock draw_planted_block(double rho, int support_size, int p, Rng& rng) {
  require(support_size >= 1 && support_size <= p, "draw_planted_block: support size out of range");
  return kind::PlantedBlock{rho, support_size, rng.subset(p, support_size)};
}

GaussianSampler::GaussianSampler(const CovarianceModel& model) : dim_(model.dim()) {
  const Matrix& s = model.entries;
  identity_ = s.isIdentity(0.0);
  if (identity_) return;
  Eigen::LLT<Matrix> llt(s);
  if (llt.info() != Eigen::Success) {
    Matrix jittered = s;
    jittered.diagonal().array() += 1e-10;
    llt.compute(jittered);
    if (llt.info() != Eigen::Success)
      throw NumericalError("GaussianSampler: covariance is not positive semi-definite");
  }
  factor_ = llt.matrixL();
}

Matrix GaussianSampler::draw(int n, const Vector& mean, Rng& rng) const {
  require(n >= 1, "sample_gaussian: n must be positive");
  require(mean.size() == 0 || mean.size() == dim_, "sample_gaussian: mean has wrong length");
  Matrix z(n, dim_);
  // fill row by row so that the stream order is independent of storage order
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < dim_; ++j) z(i, j) = rng.normal();
  Matrix x = identity_ ? std::move(z) : Matrix(z * factor_.transpose());
  if (mean.size() > 0) x.rowwise() += mean.transpose();
  return x;
}

SampleMatrix sample_gaussian(const CovarianceModel& model, int n, const Vector& mean, RngSeed seed,
                             Centering centering) {
  GaussianSampler sampler(model);
  Rng rng(seed);
  return SampleMatrix(sampler.draw(n, mean, rng), centering);
}

Vector two_sample_mean_shift(int p, double prop_equal, double eta, const Matrix& sigma,
                             SignalScale scale) {
  require(prop_equal >= 0.0 && prop_equal <= 1.0, "two_sample_design: prop_equal must be in [0, 1]");
  require(eta >= 0.0, "two_sample_design: eta must be nonnegative");
  const int k = static_cast<int>(std::lround((1.0 - prop_equal) * p));
  Vector mu = Vector::Zero(p);
  if (eta == 0.0) return mu;
  require(k > 0, "two_sample_design: prop_equal leaves no coordinate to shift but eta > 0");
  const double tr2 = sigma.squaredNorm();
  const double norm_sq = scale == SignalScale::NormRatio ? eta * eta * tr2 : eta * std::sqrt(tr2);
  mu.tail(k).setConstant(std::sqrt(norm_sq / k));
  return mu;
}

TwoSampleDraw two_sample_design(int n1, int n2, double prop_equal, double eta,
                                const CovarianceModel& sigma, RngSeed seed, SignalScale scale) {
  require(n1 >= 2 && n2 >= 2, "two_sample_design: each sample needs at least 2 rows");
  Vector mu2 = two_sample_mean_shift(sigma.dim(), prop_equal, eta, sigma.entries, scale);
  GaussianSampler sampler(sigma);
  Rng rng(seed);
  Matrix a = sampler.draw(n1, Vector(), rng);
  Matrix b = sampler.draw(n2, mu2, rng);
  return TwoSampleDraw{SampleMatrix(std::move(a)), SampleMatrix(std::move(b)), std::move(mu2)};
}

}  // namespace covfunc
