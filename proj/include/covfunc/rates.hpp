#pragma once

#include "covfunc/types.hpp"

// Reference rate and threshold formulas. Natural logarithms throughout.

namespace covfunc {

struct RateQuery {
  int n = 100;
  int p = 500;
  double q = 0.0;
  double R = 1.0;
  double r = 1.0;
  double gamma = 1.0;
  double C0 = 1.0;
  double nu_const = 1.0;
};

/// R^2 / n  v  R^2 (log p / n)^{2-q}, q in [0, 2).
double psi_quad(const RateQuery& rq);

/// R^2 / n  v  { R^2 (log((p-1)/(R^2 n^q) + 1) / (2n))^{2-q}  ^  R^{4/q}  ^  1 };
/// R^{4/q} is +inf at q = 0.
double phi_quad(const RateQuery& rq);
/// R^2 < (p - 1) n^{-q} / 2 and 2 log p < n.
bool phi_in_regime(const RateQuery& rq);

/// R^2 log p / n if q < max(r - 1, 0), else R^2 (gamma log p / n)^{r-q}.
double psi_lr(const RateQuery& rq);

/// R^2 log p / n  v  { R^2 (log((p-1)/(R^2 n^q) + 1) / (2n))^{r-q}  ^  R^{2r/q}  ^  1 }.
double phi_lr(const RateQuery& rq);

/// 2 C R^{1/r} ((2 log p + log(4/delta)) / n)^{(r-q)/(2r)}.
double kappa_bar(const RateQuery& rq, double delta, double C = 1.0);

/// R^{1/r} (log(nu p / (R^2 n^q)) / (2n))^{(r-q)/(2r)}; requires nu p > R^2 n^q.
double kappa_lower(const RateQuery& rq);

}  // namespace covfunc
