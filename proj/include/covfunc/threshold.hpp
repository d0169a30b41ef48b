#pragma once

#include <optional>
#include <string>
#include <vector>

#include "covfunc/rng.hpp"

namespace covfunc {

enum class SplitRule { NOverLogN, Fraction };

/// Functional whose plug-in the cross-validation loss targets.
enum class CvTarget { QFunctional, LrFunctional, RhoBarSq };

struct CvConfig {
  int m = 10;   // random splits
  int J = 50;   // grid size
  SplitRule split_rule = SplitRule::NOverLogN;
  double fraction = 0.5;  // training share under SplitRule::Fraction
  CvTarget target = CvTarget::QFunctional;
  double r = 1.0;  // exponent for CvTarget::LrFunctional
  RngSeed seed{};
};

struct CvTrace {
  std::vector<double> grid;    // tau_1..tau_J on the training scale
  std::vector<double> losses;  // mean absolute deviation across splits
  int j_star = 1;              // 1-based
  double delta = 0.0;
  double m_hat = 0.0;
  int n1 = 0;
  double tau_final = 0.0;
};

struct ThresholdSpec {
  enum class Mode { Explicit, Rule, CrossValidated };

  Mode mode = Mode::CrossValidated;
  double tau = 0.0;     // Explicit
  double c0 = 0.75;     // Rule: tau = 2 c0 sqrt(gamma log p / n)
  double gamma = 1.0;
  bool theory_faithful = false;
  CvConfig cv{};

  static ThresholdSpec explicit_tau(double tau);
  static ThresholdSpec rule(double c0, double gamma, bool theory_faithful = false);
  /// tau = C sqrt(log p / n), the form used in practice with C around 1.5.
  static ThresholdSpec practical(double C);
  static ThresholdSpec cross_validated(CvConfig cfg = {});
};

struct ResolvedThreshold {
  double tau = 0.0;
  std::vector<std::string> warnings;
  std::optional<CvTrace> trace;
};

std::string to_string(ThresholdSpec::Mode m);
std::string to_string(CvTarget t);

}  // namespace covfunc
