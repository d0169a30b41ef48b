#include "covfunc/rates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace covfunc {

namespace {

void check(const RateQuery& rq) {
  require(rq.n >= 1 && rq.p >= 2, "rates: need n >= 1 and p >= 2");
  require(rq.R >= 0.0, "rates: R must be nonnegative");
  require(rq.q >= 0.0, "rates: q must be nonnegative");
}

double log_p(const RateQuery& rq) { return std::log(static_cast<double>(rq.p)); }

// R^2 (log((p-1)/(R^2 n^q) + 1) / (2n))^e  ^  R^{cap_exp/q}  ^  1
double capped_branch(const RateQuery& rq, double e, double cap_exp) {
  const double r2 = rq.R * rq.R;
  const double inner = std::log((rq.p - 1.0) / (r2 * std::pow(rq.n, rq.q)) + 1.0) / (2.0 * rq.n);
  const double cap = rq.q == 0.0 ? std::numeric_limits<double>::infinity() : std::pow(rq.R, cap_exp / rq.q);
  return std::min({r2 * std::pow(inner, e), cap, 1.0});
}

}  // namespace

double psi_quad(const RateQuery& rq) {
  check(rq);
  require(rq.q < 2.0, "psi_quad: q must lie in [0, 2)");
  const double r2 = rq.R * rq.R;
  return std::max(r2 / rq.n, r2 * std::pow(log_p(rq) / rq.n, 2.0 - rq.q));
}

bool phi_in_regime(const RateQuery& rq) {
  return rq.R * rq.R < (rq.p - 1.0) * std::pow(rq.n, -rq.q) / 2.0 && 2.0 * log_p(rq) < rq.n;
}

double phi_quad(const RateQuery& rq) {
  check(rq);
  require(rq.q < 2.0, "phi_quad: q must lie in [0, 2)");
  if (rq.R == 0.0) return 0.0;
  return std::max(rq.R * rq.R / rq.n, capped_branch(rq, 2.0 - rq.q, 4.0));
}

double psi_lr(const RateQuery& rq) {
  check(rq);
  require(rq.r > 0.0 && rq.q < rq.r, "psi_lr: need 0 <= q < r");
  const double r2 = rq.R * rq.R;
  if (rq.q < std::max(rq.r - 1.0, 0.0)) return r2 * log_p(rq) / rq.n;
  return r2 * std::pow(rq.gamma * log_p(rq) / rq.n, rq.r - rq.q);
}

double phi_lr(const RateQuery& rq) {
  check(rq);
  require(rq.r > 0.0 && rq.q < rq.r, "phi_lr: need 0 <= q < r");
  if (rq.R == 0.0) return 0.0;
  return std::max(rq.R * rq.R * log_p(rq) / rq.n, capped_branch(rq, rq.r - rq.q, 2.0 * rq.r));
}

double kappa_bar(const RateQuery& rq, double delta, double C) {
  check(rq);
  require(rq.r > 0.0 && rq.q < rq.r, "kappa_bar: need 0 <= q < r");
  require(delta > 0.0 && delta < 1.0, "kappa_bar: delta must lie in (0, 1)");
  const double x = (2.0 * log_p(rq) + std::log(4.0 / delta)) / rq.n;
  return 2.0 * C * std::pow(rq.R, 1.0 / rq.r) * std::pow(x, (rq.r - rq.q) / (2.0 * rq.r));
}

double kappa_lower(const RateQuery& rq) {
  check(rq);
  require(rq.r > 0.0 && rq.q < rq.r, "kappa_lower: need 0 <= q < r");
  const double arg = rq.nu_const * rq.p / (rq.R * rq.R * std::pow(rq.n, rq.q));
  require(arg > 1.0, "kappa_lower: need nu p > R^2 n^q");
  return std::pow(rq.R, 1.0 / rq.r) * std::pow(std::log(arg) / (2.0 * rq.n), (rq.r - rq.q) / (2.0 * rq.r));
}

}  // namespace covfunc
