#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "covfunc/matgen.hpp"
#include "covfunc/threshold.hpp"
#include "covfunc/twosample.hpp"

namespace covfunc {

enum class Experiment { FunctionalError, TwoSamplePowerSize, RelativeError, DetectionHist, RollingAlpha };

std::string to_string(Experiment e);
Experiment parse_experiment(const std::string& s);

struct ExperimentConfig {
  Experiment experiment = Experiment::FunctionalError;
  int p = 500;
  std::vector<int> n_grid{100};
  std::vector<std::string> models{"M1", "M2", "M3", "M4"};
  int replications = 500;

  // two-sample design (block-diagonal 2x2 covariance, n1 = n2 = n / 2)
  double eta = 0.1;
  double alpha = 0.05;
  std::vector<double> prop_equal{0.0, 0.5, 0.95, 1.0};
  int n_blocks = 250;
  double block_rho = 0.3;
  SignalScale scale = SignalScale::SquaredNormRatio;
  Sidedness sided = Sidedness::TwoSided;

  // detection
  double rho = 0.8;
  int support_size = 25;
  double r = 1.0;

  // rolling factor test
  int window = 60;
  int panel_t = 120;
  int panel_n = 200;
  int panel_k = 3;
  double alpha_fraction = 0.0;
  int switch_at = 0;
  std::string returns_csv;
  std::string factors_csv;

  ThresholdSpec spec = ThresholdSpec::cross_validated();
  std::uint64_t seed = 20240601;
  int threads = 1;

  void validate() const;
};

struct ResultRow {
  std::string experiment;
  std::string method;
  int p = 0;
  int n = 0;
  std::string model;
  std::string metric;
  double value = 0.0;
  double mc_se = 0.0;
};

class ResultTable {
 public:
  void add(ResultRow row) { rows_.push_back(std::move(row)); }
  void append(const ResultTable& other);
  /// Orders rows by (experiment, model, n, method, metric).
  void sort();
  void write_csv(std::ostream& out) const;

  [[nodiscard]] const std::vector<ResultRow>& rows() const { return rows_; }
  /// First row matching all given fields; empty model / n < 0 match anything.
  [[nodiscard]] std::optional<ResultRow> find(const std::string& method, const std::string& metric,
                                              const std::string& model = "", int n = -1) const;

 private:
  std::vector<ResultRow> rows_;
};

/// Mean absolute error of the total and off-diagonal quadratic functional for
/// the thresholded plug-in, the CQ U-statistic and B^2, per (model, n).
ResultTable run_functional_error(const ExperimentConfig& cfg);

/// Rejection rates (power / size) and relative errors from one shared simulation.
struct TwoSampleStudy {
  ResultTable power;
  ResultTable relative_error;
};
TwoSampleStudy run_two_sample_study(const ExperimentConfig& cfg);
ResultTable run_two_sample(const ExperimentConfig& cfg);
ResultTable run_relative_error(const ExperimentConfig& cfg);

/// Per-replicate l_r values: thresholded and raw, under identity and planted block.
struct DetectionSeries {
  std::vector<double> h0_thresholded, h0_raw, h1_thresholded, h1_raw;
};
DetectionSeries detection_series(const ExperimentConfig& cfg);
ResultTable summarize_detection(const ExperimentConfig& cfg, const DetectionSeries& s);
ResultTable run_detection_hist(const ExperimentConfig& cfg);
void write_detection_series(std::ostream& out, const DetectionSeries& s);

/// Rolling J_alpha p-values for CAPM (first factor) and the full factor set,
/// on the CSV panel when given, otherwise on a synthetic panel.
ResultTable run_rolling_alpha(const ExperimentConfig& cfg);

ResultTable run_experiment(const ExperimentConfig& cfg);

}  // namespace covfunc
