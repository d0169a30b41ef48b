#include "covfunc/ustat.hpp"

namespace covfunc::ustat {

namespace {

// ||Z'Z||_F^2 through whichever Gram matrix is smaller.
double gram_sq(const Matrix& z) {
  if (z.rows() < z.cols()) {
    Matrix k = z * z.transpose();
    return k.squaredNorm();
  }
  Matrix s = z.transpose() * z;
  return s.squaredNorm();
}

double order4(double n, double tr_s2, double tr_s, double q) {
  return (n - 1.0) / (n * (n - 2.0) * (n - 3.0)) *
         ((n - 1.0) * (n - 2.0) * tr_s2 + tr_s * tr_s - n * q);
}

}  // namespace

Matrix centered(const Matrix& x) { return x.rowwise() - x.colwise().mean(); }

double trace_sq(const Matrix& x) {
  require(x.rows() >= 4, "U-statistic of tr(Sigma^2) needs at least 4 observations");
  const double n = static_cast<double>(x.rows());
  const Matrix z = centered(x);
  const double tr_s2 = gram_sq(z) / ((n - 1.0) * (n - 1.0));
  const double tr_s = z.squaredNorm() / (n - 1.0);
  const double q = z.rowwise().squaredNorm().squaredNorm() / (n - 1.0);
  return order4(n, tr_s2, tr_s, q);
}

Vector diag_sq(const Matrix& x) {
  require(x.rows() >= 4, "U-statistic of sigma_aa^2 needs at least 4 observations");
  const double n = static_cast<double>(x.rows());
  const Matrix z = centered(x);
  const Eigen::ArrayXd s = z.colwise().squaredNorm().transpose().array() / (n - 1.0);
  const Eigen::ArrayXd q = z.array().square().square().colwise().sum().transpose() / (n - 1.0);
  const double c = (n - 1.0) / (n * (n - 2.0) * (n - 3.0));
  return (c * ((n - 1.0) * (n - 2.0) * s.square() + s.square() - n * q)).matrix();
}

double offdiag_sq(const Matrix& x) { return trace_sq(x) - diag_sq(x).sum(); }

double trace_cross(const Matrix& x1, const Matrix& x2) {
  require(x1.cols() == x2.cols(), "trace_cross: samples have different dimensions");
  require(x1.rows() >= 2 && x2.rows() >= 2, "trace_cross: each sample needs at least 2 observations");
  const double n1 = static_cast<double>(x1.rows());
  const double n2 = static_cast<double>(x2.rows());
  const double p = static_cast<double>(x1.cols());
  const Matrix z1 = centered(x1);
  const Matrix z2 = centered(x2);
  double sq;
  if (n1 * n2 < p * (n1 + n2)) {
    // tr(Z1'Z1 Z2'Z2) = ||Z1 Z2'||_F^2
    sq = (z1 * z2.transpose()).squaredNorm();
  } else {
    Matrix s1 = z1.transpose() * z1;
    Matrix s2 = z2.transpose() * z2;
    sq = s1.cwiseProduct(s2).sum();
  }
  return sq / ((n1 - 1.0) * (n2 - 1.0));
}

}  // namespace covfunc::ustat
