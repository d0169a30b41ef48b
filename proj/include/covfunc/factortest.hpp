#pragma once

#include <string>
#include <vector>

#include "covfunc/threshold.hpp"
#include "covfunc/types.hpp"

namespace covfunc {

/// T x N excess returns and T x K factors, rows aligned by date.
struct FactorPanel {
  Matrix returns;
  Matrix factors;  // may have zero columns
  std::vector<std::string> asset_ids;
  std::vector<std::string> dates;

  [[nodiscard]] int T() const { return static_cast<int>(returns.rows()); }
  [[nodiscard]] int N() const { return static_cast<int>(returns.cols()); }
  [[nodiscard]] int K() const { return static_cast<int>(factors.cols()); }
};

struct FactorFit {
  Vector alpha;      // N
  Matrix beta;       // N x K
  Matrix residuals;  // T x N
  Matrix resid_cov;  // residual cross products / (T - K - 1)
  int nu = 0;
};

FactorFit ols_factor_fit(const FactorPanel& panel);

struct WdResult {
  double wd = 0.0;
  int nu = 0;
};

/// W_d = (1' M_F 1) alpha' D^{-1} alpha with D the diagonal of the residual
/// covariance and M_F the projection off the columns of F.
WdResult wd_statistic(const FactorPanel& panel);
WdResult wd_statistic(const FactorPanel& panel, const FactorFit& fit);

/// Average squared off-diagonal residual correlation, entries with |rho| <= tau
/// dropped. CrossValidated specs run CV on the residuals with the RhoBarSq target.
double rho_bar_sq(const Matrix& residuals, const ThresholdSpec& spec, double* tau_used = nullptr);
/// Same from a residual covariance at a fixed threshold.
double rho_bar_sq_at(const Matrix& resid_cov, double tau);

struct AlphaTestReport {
  double wd = 0.0;
  double e_wd = 0.0;
  double var_wd = 0.0;
  double rho_bar_sq_hat = 0.0;
  double j_alpha = 0.0;
  double p_value = 1.0;
  bool reject = false;
  int nu = 0;
  double tau_used = 0.0;
  std::string window_end;
  std::string note = "O(nu^-1/2) variance remainder dropped";
};

/// J = (W_d - nu N / (nu - 2)) / sqrt(var W_d), upper-tail normal p-value.
AlphaTestReport j_alpha_test(const FactorPanel& panel, const ThresholdSpec& spec, double alpha_level);

/// One report per window of window_t consecutive rows. Assets with a missing
/// (non-finite) return inside a window are dropped from that window; windows
/// with missing factors or too few assets are skipped and listed in `gaps`.
std::vector<AlphaTestReport> rolling_alpha_tests(const FactorPanel& panel, int window_t,
                                                 const ThresholdSpec& spec, double alpha_level,
                                                 std::vector<std::string>* gaps = nullptr);

}  // namespace covfunc

#include "covfunc/rng.hpp"

namespace covfunc {

/// Gaussian factor panel: f_t ~ N(0, I_K), beta_ik ~ N(0, 1), eps ~ N(0, sigma^2)
/// independent across assets. The first round(alpha_fraction N) assets carry
/// alpha = alpha_scale sigma / sqrt(alpha_ref_t) from row switch_at on.
struct SyntheticPanelConfig {
  int T = 60;
  int N = 200;
  int K = 3;
  double sigma = 1.0;
  double alpha_fraction = 0.0;
  double alpha_scale = 3.0;
  int alpha_ref_t = 60;
  int switch_at = 0;
};

FactorPanel synthetic_factor_panel(const SyntheticPanelConfig& cfg, RngSeed seed);

}  // namespace covfunc
