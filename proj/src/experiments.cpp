#include "covfunc/experiments.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <ostream>
#include <tuple>

#include "covfunc/csv.hpp"
#include "covfunc/cvselect.hpp"
#include "covfunc/detect.hpp"
#include "covfunc/estimators.hpp"
#include "covfunc/factortest.hpp"
#include "covfunc/parallel.hpp"
#include "covfunc/ustat.hpp"

namespace covfunc {

namespace {

struct Summary {
  double mean = 0.0;
  double sd = 0.0;
  double se = 0.0;
};

// Sequential accumulation so results do not depend on the thread schedule.
Summary summarize(const std::vector<double>& v) {
  Summary s;
  if (v.empty()) return s;
  for (double x : v) s.mean += x;
  s.mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  s.sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
  s.se = s.sd / std::sqrt(static_cast<double>(v.size()));
  return s;
}

std::string prop_label(double prop) { return "prop_equal=" + csv::fmt(prop); }

ThresholdSpec seeded(ThresholdSpec spec, RngSeed s) {
  spec.cv.seed = s;
  return spec;
}

}  // namespace

std::string to_string(Experiment e) {
  switch (e) {
    case Experiment::FunctionalError: return "functional-error";
    case Experiment::TwoSamplePowerSize: return "two-sample";
    case Experiment::RelativeError: return "relative-error";
    case Experiment::DetectionHist: return "detection";
    case Experiment::RollingAlpha: return "rolling-alpha";
  }
  return "?";
}

Experiment parse_experiment(const std::string& s) {
  for (auto e : {Experiment::FunctionalError, Experiment::TwoSamplePowerSize, Experiment::RelativeError,
                 Experiment::DetectionHist, Experiment::RollingAlpha})
    if (s == to_string(e)) return e;
  throw ConfigError("unknown experiment '" + s +
                    "' (functional-error, two-sample, relative-error, detection, rolling-alpha)");
}

void ExperimentConfig::validate() const {
  require(replications >= 1, "replications must be at least 1");
  require(!n_grid.empty(), "n grid is empty");
  require(p >= 2, "p must be at least 2");
  for (int n : n_grid) require(n >= 8, "every n in the grid must be at least 8");
  require(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
  require(threads >= 0, "threads must be nonnegative");
  switch (experiment) {
    case Experiment::FunctionalError:
      require(!models.empty(), "model list is empty");
      for (const auto& m : models)
        require(m == "M1" || m == "M2" || m == "M3" || m == "M4", "unknown model '" + m + "'");
      break;
    case Experiment::TwoSamplePowerSize:
    case Experiment::RelativeError:
      require(!prop_equal.empty(), "prop_equal list is empty");
      require(eta >= 0.0, "eta must be nonnegative");
      break;
    case Experiment::DetectionHist:
      require(support_size >= 1 && support_size <= p, "support size must lie in [1, p]");
      require(r > 0.0, "r must be positive");
      break;
    case Experiment::RollingAlpha:
      require(window >= 8, "window must be at least 8");
      require(returns_csv.empty() == factors_csv.empty(), "give both returns and factors CSV files or neither");
      break;
  }
}

void ResultTable::append(const ResultTable& other) {
  rows_.insert(rows_.end(), other.rows_.begin(), other.rows_.end());
}

void ResultTable::sort() {
  std::stable_sort(rows_.begin(), rows_.end(), [](const ResultRow& a, const ResultRow& b) {
    return std::tie(a.experiment, a.model, a.p, a.n, a.method, a.metric) <
           std::tie(b.experiment, b.model, b.p, b.n, b.method, b.metric);
  });
}

void ResultTable::write_csv(std::ostream& out) const {
  csv::write_row(out, {"experiment", "method", "p", "n", "model", "metric", "value", "mc_se"});
  for (const auto& r : rows_)
    csv::write_row(out, {r.experiment, r.method, std::to_string(r.p), std::to_string(r.n), r.model, r.metric,
                         csv::fmt(r.value), csv::fmt(r.mc_se)});
}

std::optional<ResultRow> ResultTable::find(const std::string& method, const std::string& metric,
                                           const std::string& model, int n) const {
  for (const auto& r : rows_)
    if (r.method == method && r.metric == metric && (model.empty() || r.model == model) && (n < 0 || r.n == n))
      return r;
  return std::nullopt;
}

ResultTable run_functional_error(const ExperimentConfig& cfg) {
  cfg.validate();
  const std::string exp = to_string(Experiment::FunctionalError);
  ResultTable table;
  for (std::size_t mi = 0; mi < cfg.models.size(); ++mi) {
    const CovarianceModel model = named_model(cfg.models[mi], cfg.p);
    const GaussianSampler sampler(model);
    const double total = model.entries.squaredNorm();
    const double diag = model.entries.diagonal().squaredNorm();
    const double offdiag = total - diag;
    for (int n : cfg.n_grid) {
      const auto cell = static_cast<std::uint64_t>(mi * 100000 + static_cast<std::size_t>(n));
      // errors[method][0 = total, 1 = off-diagonal][replicate]
      std::vector<std::array<std::array<double, 2>, 3>> err(static_cast<std::size_t>(cfg.replications));
      parallel_for(cfg.replications, cfg.threads, [&](int rep) {
        const RngSeed rs = RngSeed{cfg.seed, static_cast<std::uint64_t>(rep)}.derive(cell);
        Rng rng(rs);
        const Matrix data = sampler.draw(n, Vector(), rng);
        const SampleMatrix x(data, Centering::KnownZeroMean);
        const double tau = resolve_threshold(seeded(cfg.spec, rs.derive(1)), x).tau;
        const double q_hat = q_offdiag_at(sample_covariance(x), tau);
        const double d_hat = d_diag(x).value;
        const double cq = ustat::trace_sq(data);
        const double bs = bs_b2(SampleMatrix(data)).value;
        auto& e = err[static_cast<std::size_t>(rep)];
        e[0] = {std::abs(q_hat + d_hat - total), std::abs(q_hat - offdiag)};
        e[1] = {std::abs(cq - total), std::abs(cq - d_hat - offdiag)};
        e[2] = {std::abs(bs - total), std::abs(bs - d_hat - offdiag)};
      });
      const char* names[3] = {"thresholded", "CQ", "BS"};
      const char* parts[2] = {"total", "offdiag"};
      for (int m = 0; m < 3; ++m)
        for (int k = 0; k < 2; ++k) {
          std::vector<double> v;
          v.reserve(err.size());
          for (const auto& e : err) v.push_back(e[static_cast<std::size_t>(m)][static_cast<std::size_t>(k)]);
          const Summary s = summarize(v);
          const std::string part = parts[k];
          table.add({exp, names[m], cfg.p, n, cfg.models[mi], "mae_" + part, s.mean, s.se});
          table.add({exp, names[m], cfg.p, n, cfg.models[mi], "log2_mae_" + part, std::log2(s.mean),
                     s.se / (s.mean * std::numbers::ln2)});
        }
    }
  }
  table.sort();
  return table;
}

TwoSampleStudy run_two_sample_study(const ExperimentConfig& cfg) {
  cfg.validate();
  const int n = cfg.n_grid.front();
  const int n1 = n / 2, n2 = n - n / 2;
  require(n1 >= 8, "two-sample study needs n >= 16");
  const int blocks = std::min(cfg.n_blocks, cfg.p / 2);
  const CovarianceModel sigma = make_model(kind::TwoByTwoBlocks{cfg.block_rho, blocks}, cfg.p);
  const double truth = sigma.entries.squaredNorm();
  const GaussianSampler sampler(sigma);
  const WaldOptions wald{cfg.alpha, cfg.sided};
  const std::string model_name = kind_name(sigma.kind);

  constexpr int kMethods = 6;
  constexpr int kRel = 4;  // BS, newBS, CQ, newCQ
  const TwoSampleMethod methods[kMethods] = {TwoSampleMethod::BS, TwoSampleMethod::NewBS,
                                             TwoSampleMethod::CQ, TwoSampleMethod::NewCQ,
                                             TwoSampleMethod::Bonferroni, TwoSampleMethod::BH};
  struct Rep {
    std::array<bool, kMethods> reject{};
    std::array<std::vector<double>, kRel> rel;
  };

  TwoSampleStudy study;
  std::array<std::vector<double>, kRel> rel_all;
  for (std::size_t k = 0; k < cfg.prop_equal.size(); ++k) {
    const double prop = cfg.prop_equal[k];
    const double eta = prop >= 1.0 ? 0.0 : cfg.eta;
    const Vector mu2 = two_sample_mean_shift(cfg.p, prop, eta, sigma.entries, cfg.scale);
    std::vector<Rep> reps(static_cast<std::size_t>(cfg.replications));
    parallel_for(cfg.replications, cfg.threads, [&](int r) {
      const RngSeed rs = RngSeed{cfg.seed, static_cast<std::uint64_t>(r)}.derive(1000 + k);
      Rng rng(rs);
      const SampleMatrix x1(sampler.draw(n1, Vector(), rng));
      const SampleMatrix x2(sampler.draw(n2, mu2, rng));
      const ThresholdSpec spec = seeded(cfg.spec, rs.derive(7));
      const auto bs = bs_test(x1, x2, wald, false);
      const auto nbs = bs_test(x1, x2, wald, true, spec);
      const auto cq = cq_test(x1, x2, wald, false);
      const auto ncq = cq_test(x1, x2, wald, true, spec);
      const auto bonf = marginal_tests(x1, x2, cfg.alpha, TwoSampleMethod::Bonferroni);
      const auto bh = marginal_tests(x1, x2, cfg.alpha, TwoSampleMethod::BH);
      Rep& out = reps[static_cast<std::size_t>(r)];
      out.reject = {bs.reject, nbs.reject, cq.reject, ncq.reject, bonf.reject, bh.reject};
      auto rel = [&](double v) { return 100.0 * std::abs(v - truth) / truth; };
      out.rel[0] = {rel(bs.functional_used.value)};
      out.rel[1] = {rel(nbs.functional_used.value)};
      out.rel[2] = {rel(cq.traces[0]), rel(cq.traces[1])};
      out.rel[3] = {rel(ncq.traces[0]), rel(ncq.traces[1])};
    });
    for (int m = 0; m < kMethods; ++m) {
      double hits = 0.0;
      for (const auto& rp : reps) hits += rp.reject[static_cast<std::size_t>(m)] ? 1.0 : 0.0;
      const double rate = hits / cfg.replications;
      study.power.add({to_string(Experiment::TwoSamplePowerSize), to_string(methods[m]), cfg.p, n,
                       prop_label(prop), prop >= 1.0 ? "size" : "power", rate,
                       std::sqrt(rate * (1.0 - rate) / cfg.replications)});
    }
    for (int m = 0; m < kRel; ++m)
      for (const auto& rp : reps)
        for (double v : rp.rel[static_cast<std::size_t>(m)]) rel_all[static_cast<std::size_t>(m)].push_back(v);
  }
  for (int m = 0; m < kRel; ++m) {
    const Summary s = summarize(rel_all[static_cast<std::size_t>(m)]);
    const std::string exp = to_string(Experiment::RelativeError);
    study.relative_error.add({exp, to_string(methods[m]), cfg.p, n, model_name, "rel_err_pct_mean", s.mean, s.se});
    study.relative_error.add({exp, to_string(methods[m]), cfg.p, n, model_name, "rel_err_pct_sd", s.sd,
                              s.sd / std::sqrt(2.0 * (static_cast<double>(rel_all[0].size()) - 1.0))});
  }
  study.power.sort();
  study.relative_error.sort();
  return study;
}

ResultTable run_two_sample(const ExperimentConfig& cfg) { return run_two_sample_study(cfg).power; }
ResultTable run_relative_error(const ExperimentConfig& cfg) { return run_two_sample_study(cfg).relative_error; }

DetectionSeries detection_series(const ExperimentConfig& cfg) {
  cfg.validate();
  const int n = cfg.n_grid.front();
  const GaussianSampler null_sampler(make_model(kind::Identity{}, cfg.p));
  DetectionSeries s;
  const auto reps = static_cast<std::size_t>(cfg.replications);
  s.h0_thresholded.resize(reps);
  s.h0_raw.resize(reps);
  s.h1_thresholded.resize(reps);
  s.h1_raw.resize(reps);
  parallel_for(cfg.replications, cfg.threads, [&](int r) {
    const RngSeed rs{cfg.seed, static_cast<std::uint64_t>(r)};
    const auto i = static_cast<std::size_t>(r);
    {
      Rng rng(rs.derive(1));
      const SampleMatrix x(null_sampler.draw(n, Vector(), rng), Centering::KnownZeroMean);
      const double tau = resolve_threshold(seeded(cfg.spec, rs.derive(2)), x).tau;
      const Matrix sh = sample_covariance(x);
      s.h0_thresholded[i] = lr_functional_at(sh, tau, cfg.r);
      s.h0_raw[i] = lr_functional_at(sh, -1.0, cfg.r);
    }
    {
      Rng rng(rs.derive(3));
      const auto block = draw_planted_block(cfg.rho, cfg.support_size, cfg.p, rng);
      const GaussianSampler alt(make_model(block, cfg.p));
      const SampleMatrix x(alt.draw(n, Vector(), rng), Centering::KnownZeroMean);
      const double tau = resolve_threshold(seeded(cfg.spec, rs.derive(4)), x).tau;
      const Matrix sh = sample_covariance(x);
      s.h1_thresholded[i] = lr_functional_at(sh, tau, cfg.r);
      s.h1_raw[i] = lr_functional_at(sh, -1.0, cfg.r);
    }
  });
  return s;
}

ResultTable summarize_detection(const ExperimentConfig& cfg, const DetectionSeries& s) {
  const std::string exp = to_string(Experiment::DetectionHist);
  const int n = cfg.n_grid.front();
  ResultTable t;
  auto series = [&](const std::string& method, const std::string& hyp, const std::vector<double>& v) {
    const Summary sm = summarize(v);
    t.add({exp, method, cfg.p, n, hyp, "mean", sm.mean, sm.se});
    t.add({exp, method, cfg.p, n, hyp, "min", *std::min_element(v.begin(), v.end()), 0.0});
    t.add({exp, method, cfg.p, n, hyp, "max", *std::max_element(v.begin(), v.end()), 0.0});
  };
  series("thresholded", "H0", s.h0_thresholded);
  series("thresholded", "H1", s.h1_thresholded);
  series("raw", "H0", s.h0_raw);
  series("raw", "H1", s.h1_raw);
  // gap between supports: positive means disjoint
  auto gap = [](const std::vector<double>& h0, const std::vector<double>& h1) {
    return *std::min_element(h1.begin(), h1.end()) - *std::max_element(h0.begin(), h0.end());
  };
  t.add({exp, "thresholded", cfg.p, n, "H1-H0", "support_gap", gap(s.h0_thresholded, s.h1_thresholded), 0.0});
  t.add({exp, "raw", cfg.p, n, "H1-H0", "support_gap", gap(s.h0_raw, s.h1_raw), 0.0});
  t.sort();
  return t;
}

ResultTable run_detection_hist(const ExperimentConfig& cfg) { return summarize_detection(cfg, detection_series(cfg)); }

void write_detection_series(std::ostream& out, const DetectionSeries& s) {
  csv::write_row(out, {"replicate", "series", "value"});
  auto dump = [&](const char* name, const std::vector<double>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) csv::write_row(out, {std::to_string(i), name, csv::fmt(v[i])});
  };
  dump("thresholded_H0", s.h0_thresholded);
  dump("thresholded_H1", s.h1_thresholded);
  dump("raw_H0", s.h0_raw);
  dump("raw_H1", s.h1_raw);
}

namespace {

FactorPanel load_panel(const std::string& returns_csv, const std::string& factors_csv) {
  const auto ret = csv::read_labeled(returns_csv);
  const auto fac = csv::read_labeled(factors_csv);
  FactorPanel panel;
  panel.asset_ids = ret.names;
  std::vector<Eigen::Index> fac_row;
  std::vector<Eigen::Index> ret_row;
  for (std::size_t i = 0; i < ret.labels.size(); ++i) {
    const auto it = std::find(fac.labels.begin(), fac.labels.end(), ret.labels[i]);
    if (it == fac.labels.end()) continue;
    ret_row.push_back(static_cast<Eigen::Index>(i));
    fac_row.push_back(static_cast<Eigen::Index>(it - fac.labels.begin()));
    panel.dates.push_back(ret.labels[i]);
  }
  require(!ret_row.empty(), "returns and factors share no dates");
  panel.returns.resize(static_cast<Eigen::Index>(ret_row.size()), ret.values.cols());
  panel.factors.resize(static_cast<Eigen::Index>(ret_row.size()), fac.values.cols());
  for (std::size_t t = 0; t < ret_row.size(); ++t) {
    panel.returns.row(static_cast<Eigen::Index>(t)) = ret.values.row(ret_row[t]);
    panel.factors.row(static_cast<Eigen::Index>(t)) = fac.values.row(fac_row[t]);
  }
  return panel;
}

}  // namespace

ResultTable run_rolling_alpha(const ExperimentConfig& cfg) {
  cfg.validate();
  FactorPanel panel;
  if (!cfg.returns_csv.empty()) {
    panel = load_panel(cfg.returns_csv, cfg.factors_csv);
  } else {
    SyntheticPanelConfig sc;
    sc.T = cfg.panel_t;
    sc.N = cfg.panel_n;
    sc.K = cfg.panel_k;
    sc.alpha_fraction = cfg.alpha_fraction;
    sc.alpha_ref_t = cfg.window;
    sc.switch_at = cfg.switch_at;
    panel = synthetic_factor_panel(sc, RngSeed{cfg.seed, 0});
  }
  require(panel.K() >= 1, "rolling test needs at least one factor");
  const std::string exp = to_string(Experiment::RollingAlpha);
  ResultTable t;
  std::vector<int> ks{1};
  if (panel.K() > 1) ks.push_back(panel.K());
  for (int k : ks) {
    FactorPanel sub = panel;
    sub.factors = panel.factors.leftCols(k);
    const auto reports = rolling_alpha_tests(sub, cfg.window, seeded(cfg.spec, RngSeed{cfg.seed, 1}), cfg.alpha);
    const std::string model = "K=" + std::to_string(k);
    int below = 0;
    for (std::size_t w = 0; w < reports.size(); ++w) {
      const auto& r = reports[w];
      const int idx = static_cast<int>(w) + 1;
      t.add({exp, "J_alpha", panel.N(), idx, model, "p_value", r.p_value, 0.0});
      t.add({exp, "J_alpha", panel.N(), idx, model, "J_alpha", r.j_alpha, 0.0});
      t.add({exp, "J_alpha", panel.N(), idx, model, "rho_bar_sq", r.rho_bar_sq_hat, 0.0});
      below += r.p_value < cfg.alpha ? 1 : 0;
    }
    const double frac = reports.empty() ? 0.0 : static_cast<double>(below) / static_cast<double>(reports.size());
    t.add({exp, "J_alpha", panel.N(), 0, model, "frac_p_below_alpha", frac, 0.0});
  }
  return t;
}

ResultTable run_experiment(const ExperimentConfig& cfg) {
  switch (cfg.experiment) {
    case Experiment::FunctionalError: return run_functional_error(cfg);
    case Experiment::TwoSamplePowerSize: return run_two_sample(cfg);
    case Experiment::RelativeError: return run_relative_error(cfg);
    case Experiment::DetectionHist: return run_detection_hist(cfg);
    case Experiment::RollingAlpha: return run_rolling_alpha(cfg);
  }
  return {};
}

}  // namespace covfunc
