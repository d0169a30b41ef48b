#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "config.hpp"
#include "covfunc/csv.hpp"
#include "covfunc/cvselect.hpp"
#include "covfunc/detect.hpp"
#include "covfunc/estimators.hpp"
#include "covfunc/experiments.hpp"
#include "covfunc/factortest.hpp"
#include "covfunc/rates.hpp"
#include "covfunc/twosample.hpp"
#include "covfunc/ustat.hpp"

using namespace covfunc;

namespace {

struct Global {
  std::uint64_t seed = 20240601;
  int threads = 1;
  std::string out = "-";
  std::string config;
};

struct ThresholdFlags {
  std::string mode = "cv";
  double tau = 0.0;
  double c0 = 0.75;
  double gamma = 1.0;
  double C = 1.5;
  bool theory_faithful = false;
  int cv_m = 10;
  int cv_j = 50;

  void add_to(CLI::App& app) {
    app.add_option("--threshold-mode", mode, "cv, explicit, rule or practical")
        ->check(CLI::IsMember({"cv", "explicit", "rule", "practical"}));
    app.add_option("--tau", tau, "explicit threshold");
    app.add_option("--c0", c0, "rule: tau = 2 c0 sqrt(gamma log p / n)");
    app.add_option("--gamma", gamma, "rule constant gamma");
    app.add_option("--C", C, "practical: tau = C sqrt(log p / n)");
    app.add_flag("--theory-faithful", theory_faithful, "enforce c0 >= 4, gamma > 8 and report violations");
    app.add_option("--cv-m", cv_m, "cross-validation splits");
    app.add_option("--cv-J", cv_j, "cross-validation grid size");
  }

  [[nodiscard]] ThresholdSpec spec(std::uint64_t seed, CvTarget target = CvTarget::QFunctional, double r = 1.0) const {
    if (mode == "explicit") return ThresholdSpec::explicit_tau(tau);
    if (mode == "rule") return ThresholdSpec::rule(c0, gamma, theory_faithful);
    if (mode == "practical") return ThresholdSpec::practical(C);
    CvConfig cfg;
    cfg.m = cv_m;
    cfg.J = cv_j;
    cfg.target = target;
    cfg.r = r;
    cfg.seed = RngSeed{seed, 0};
    return ThresholdSpec::cross_validated(cfg);
  }
};

class Output {
 public:
  explicit Output(const std::string& path) {
    if (path != "-" && !path.empty()) {
      file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
      if (!*file_) throw ConfigError("cannot open output '" + path + "'");
    }
  }
  std::ostream& os() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

SampleMatrix load_sample(const std::string& path, const std::string& centering) {
  require(!path.empty(), "an --input sample CSV is required");
  return SampleMatrix(csv::read_matrix(path),
                      centering == "zero" ? Centering::KnownZeroMean : Centering::CenterByColumnMean);
}

void warn_all(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

std::string b(bool v) { return v ? "true" : "false"; }

// ---- estimate -------------------------------------------------------------

struct EstimateCmd {
  std::string input;
  std::string centering = "center";
  double r = 1.0;
  bool known_diag = false;
  ThresholdFlags th;

  void add(CLI::App& app) {
    app.add_option("--input", input, "sample CSV (n rows of p values)");
    app.add_option("--centering", centering, "center (unknown mean) or zero (known zero mean)")
        ->check(CLI::IsMember({"center", "zero"}));
    app.add_option("--r", r, "exponent of the row functional");
    app.add_flag("--known-diag", known_diag, "diagonal known to be 1: use D = p");
    th.add_to(app);
  }

  void run(const Global& g) {
    const SampleMatrix x = load_sample(input, centering);
    const auto res = resolve_threshold(th.spec(g.seed), x);
    warn_all(res.warnings);
    const auto est = threshold(sample_covariance(x), res.tau);
    Output out(g.out);
    csv::write_row(out.os(), {"kind", "value", "tau", "p", "n", "seed"});
    auto emit = [&](const FunctionalEstimate& f, const std::string& label, double tau) {
      csv::write_row(out.os(), {label, csv::fmt(f.value), tau < 0 ? "" : csv::fmt(tau), std::to_string(x.p()),
                                std::to_string(x.n()), std::to_string(g.seed)});
    };
    emit(q_offdiag(est), "Qoff", res.tau);
    emit(d_diag(x), "Ddiag", -1);
    emit(frobenius_sq(est, x, known_diag), "TotalFrobSq", res.tau);
    emit(lr_functional(est, r), "Lr(" + csv::fmt(r) + ")", res.tau);
    emit(bs_b2(x), "BS_B2", -1);
    if (x.n() >= 4)
      emit({ustat::trace_sq(x.data()), FunctionalKind::CqTrSigmaSq, ""}, "CQ_TrSigmaSq", -1);
  }
};

// ---- cv -------------------------------------------------------------------

struct CvCmd {
  std::string input;
  std::string centering = "center";
  std::string target = "q";
  std::string split = "nlogn";
  double fraction = 0.5;
  double r = 1.0;
  int m = 10;
  int J = 50;

  void add(CLI::App& app) {
    app.add_option("--input", input, "sample CSV");
    app.add_option("--centering", centering)->check(CLI::IsMember({"center", "zero"}));
    app.add_option("--target", target, "q, lr or rhobar2")->check(CLI::IsMember({"q", "lr", "rhobar2"}));
    app.add_option("--split", split, "nlogn or fraction")->check(CLI::IsMember({"nlogn", "fraction"}));
    app.add_option("--fraction", fraction, "training share for --split fraction");
    app.add_option("--r", r, "exponent for --target lr");
    app.add_option("--m", m, "random splits");
    app.add_option("--J", J, "grid size");
  }

  void run(const Global& g) {
    const SampleMatrix x = load_sample(input, centering);
    CvConfig cfg;
    cfg.m = m;
    cfg.J = J;
    cfg.r = r;
    cfg.fraction = fraction;
    cfg.split_rule = split == "nlogn" ? SplitRule::NOverLogN : SplitRule::Fraction;
    cfg.target = target == "q" ? CvTarget::QFunctional : target == "lr" ? CvTarget::LrFunctional : CvTarget::RhoBarSq;
    cfg.seed = RngSeed{g.seed, 0};
    const CvTrace tr = cv_threshold(x, cfg);
    Output out(g.out);
    csv::write_row(out.os(), {"j", "tau_j", "loss_j"});
    for (std::size_t j = 0; j < tr.grid.size(); ++j)
      csv::write_row(out.os(), {std::to_string(j + 1), csv::fmt(tr.grid[j]), csv::fmt(tr.losses[j])});
    csv::write_row(out.os(), {"selected j=" + std::to_string(tr.j_star), csv::fmt(tr.tau_final),
                              csv::fmt(tr.losses[static_cast<std::size_t>(tr.j_star - 1)])});
  }
};

// ---- twosample ------------------------------------------------------------

struct TwoSampleCmd {
  std::string x1, x2;
  std::vector<std::string> methods{"BS", "newBS", "CQ", "newCQ", "Bonf", "BH"};
  double alpha = 0.05;
  std::string sided = "two";
  std::string marginal = "pooled";
  ThresholdFlags th;

  void add(CLI::App& app) {
    app.add_option("--x1", x1, "first sample CSV");
    app.add_option("--x2", x2, "second sample CSV");
    app.add_option("--method", methods, "BS, newBS, CQ, newCQ, Bonf, BH")->delimiter(',');
    app.add_option("--alpha", alpha, "significance level");
    app.add_option("--sided", sided, "two or upper")->check(CLI::IsMember({"two", "upper"}));
    app.add_option("--marginal", marginal, "pooled or welch t-tests")->check(CLI::IsMember({"pooled", "welch"}));
    th.add_to(app);
  }

  void run(const Global& g) {
    require(!x1.empty() && !x2.empty(), "--x1 and --x2 sample CSVs are required");
    const SampleMatrix a(csv::read_matrix(x1)), bm(csv::read_matrix(x2));
    const WaldOptions w{alpha, sided == "two" ? Sidedness::TwoSided : Sidedness::Upper};
    const auto kind = marginal == "pooled" ? MarginalTest::Pooled : MarginalTest::Welch;
    const ThresholdSpec spec = th.spec(g.seed);
    Output out(g.out);
    csv::write_row(out.os(), {"method", "statistic", "z", "p_value", "reject", "functional", "tau"});
    for (const auto& name : methods) {
      const auto m = parse_two_sample_method(name);
      TwoSampleReport rep;
      switch (m) {
        case TwoSampleMethod::BS: rep = bs_test(a, bm, w, false); break;
        case TwoSampleMethod::NewBS: rep = bs_test(a, bm, w, true, spec); break;
        case TwoSampleMethod::CQ: rep = cq_test(a, bm, w, false); break;
        case TwoSampleMethod::NewCQ: rep = cq_test(a, bm, w, true, spec); break;
        default: rep = marginal_tests(a, bm, alpha, m, kind); break;
      }
      warn_all(rep.warnings);
      const bool wald = m != TwoSampleMethod::Bonferroni && m != TwoSampleMethod::BH;
      csv::write_row(out.os(), {to_string(m), csv::fmt(rep.statistic), wald ? csv::fmt(rep.z) : "",
                                csv::fmt(rep.p_value), b(rep.reject), wald ? csv::fmt(rep.functional_used.value) : "",
                                rep.tau < 0 ? "" : csv::fmt(rep.tau)});
    }
  }
};

// ---- factor-test ----------------------------------------------------------

struct FactorCmd {
  std::string returns, factors;
  int window = 60;
  int use_factors = 0;
  double alpha = 0.05;
  ThresholdFlags th;

  void add(CLI::App& app) {
    app.add_option("--returns", returns, "CSV: date column plus one column per asset");
    app.add_option("--factors", factors, "CSV: date column plus one column per factor");
    app.add_option("--window", window, "rolling window length (0 = whole panel)");
    app.add_option("--use-factors", use_factors, "use only the first k factor columns (1 = CAPM; 0 = all)");
    app.add_option("--alpha", alpha, "significance level");
    th.add_to(app);
  }

  void run(const Global& g) {
    require(!returns.empty() && !factors.empty(), "--returns and --factors are required");
    const auto ret = csv::read_labeled(returns);
    const auto fac = csv::read_labeled(factors);
    FactorPanel panel;
    panel.asset_ids = ret.names;
    std::vector<Eigen::Index> rr, fr;
    for (std::size_t i = 0; i < ret.labels.size(); ++i)
      for (std::size_t j = 0; j < fac.labels.size(); ++j)
        if (ret.labels[i] == fac.labels[j]) {
          rr.push_back(static_cast<Eigen::Index>(i));
          fr.push_back(static_cast<Eigen::Index>(j));
          panel.dates.push_back(ret.labels[i]);
          break;
        }
    require(!rr.empty(), "returns and factors share no dates");
    const Eigen::Index k = use_factors > 0 ? std::min<Eigen::Index>(use_factors, fac.values.cols()) : fac.values.cols();
    panel.returns.resize(static_cast<Eigen::Index>(rr.size()), ret.values.cols());
    panel.factors.resize(static_cast<Eigen::Index>(rr.size()), k);
    for (std::size_t t = 0; t < rr.size(); ++t) {
      panel.returns.row(static_cast<Eigen::Index>(t)) = ret.values.row(rr[t]);
      panel.factors.row(static_cast<Eigen::Index>(t)) = fac.values.row(fr[t]).head(k);
    }
    const int w = window > 0 ? window : panel.T();
    std::vector<std::string> gaps;
    const auto reports = rolling_alpha_tests(panel, w, th.spec(g.seed, CvTarget::RhoBarSq), alpha, &gaps);
    for (const auto& gap : gaps) std::cerr << "skipped window " << gap << '\n';
    Output out(g.out);
    csv::write_row(out.os(), {"window_end", "W_d", "E_Wd", "var_Wd", "J_alpha", "p_value", "rho_bar_sq_hat", "tau", "nu"});
    for (const auto& r : reports)
      csv::write_row(out.os(), {r.window_end, csv::fmt(r.wd), csv::fmt(r.e_wd), csv::fmt(r.var_wd), csv::fmt(r.j_alpha),
                                csv::fmt(r.p_value), csv::fmt(r.rho_bar_sq_hat), csv::fmt(r.tau_used),
                                std::to_string(r.nu)});
  }
};

// ---- detect ---------------------------------------------------------------

struct DetectCmd {
  std::string input;
  std::string centering = "zero";
  double r = 1.0;
  double cutoff = 0.0;
  int calibrate = 0;
  double alpha = 0.05;
  double q = 0.0, R = 1.0, delta = 0.05, C = 1.0, kappa = -1.0;
  ThresholdFlags th;

  void add(CLI::App& app) {
    app.add_option("--input", input, "sample CSV");
    app.add_option("--centering", centering)->check(CLI::IsMember({"center", "zero"}));
    app.add_option("--r", r, "exponent of the row functional");
    app.add_option("--cutoff", cutoff, "rejection cutoff s");
    app.add_option("--calibrate", calibrate, "null draws for an empirical cutoff (>= 100)");
    app.add_option("--alpha", alpha, "level for --calibrate");
    app.add_option("--q", q, "envelope sparsity index");
    app.add_option("--R", R, "envelope radius");
    app.add_option("--delta", delta, "envelope accuracy");
    app.add_option("--envelope-C", C, "envelope constant");
    app.add_option("--kappa", kappa, "signal strength; when given the s0/s1/kappa_bar envelope is reported");
    th.add_to(app);
  }

  void run(const Global& g) {
    const SampleMatrix x = load_sample(input, centering);
    const CvTarget target = CvTarget::QFunctional;
    const ThresholdSpec spec = th.spec(g.seed, target, r);
    double s = cutoff;
    if (calibrate > 0) {
      s = calibrate_cutoff(calibrate, x.p(), x.n(), r, spec, alpha, g.seed, g.threads);
    }
    require(s > 0.0, "give --cutoff s > 0 or --calibrate N");
    auto rep = detect_test(x, r, spec, s);
    if (kappa >= 0.0) {
      DetectionConfig dc;
      dc.r = r, dc.q = q, dc.R = R, dc.delta = delta, dc.C = C;
      rep.envelope = envelope(dc, x.n(), x.p(), kappa);
      if (!rep.envelope->separated()) std::cerr << "warning: s0 >= s1, no valid separation (kappa below kappa_bar)\n";
    }
    Output out(g.out);
    csv::write_row(out.os(), {"l_r", "cutoff", "reject", "tau", "s0", "s1", "kappa_bar"});
    const auto& e = rep.envelope;
    csv::write_row(out.os(), {csv::fmt(rep.l_r_value), csv::fmt(rep.cutoff_s), b(rep.reject), csv::fmt(rep.tau),
                              e ? csv::fmt(e->s0) : "", e ? csv::fmt(e->s1) : "", e ? csv::fmt(e->kappa_bar) : ""});
  }
};

// ---- rates ----------------------------------------------------------------

struct RatesCmd {
  std::vector<int> n{50, 100, 200, 400, 800};
  std::vector<int> p{500};
  std::vector<double> q{0.0, 0.5, 1.0, 1.5};
  double R = 1.0, r = 1.0, gamma = 1.0, delta = 0.05, C = 1.0, nu = 1.0;

  void add(CLI::App& app) {
    app.add_option("--n", n, "sample sizes")->delimiter(',');
    app.add_option("--p", p, "dimensions")->delimiter(',');
    app.add_option("--q", q, "sparsity indices")->delimiter(',');
    app.add_option("--R", R, "radius");
    app.add_option("--r", r, "row functional exponent");
    app.add_option("--gamma", gamma, "threshold constant gamma");
    app.add_option("--delta", delta, "detection accuracy");
    app.add_option("--C", C, "detection constant");
    app.add_option("--nu", nu, "lower-bound tuning constant");
  }

  void run(const Global& g) {
    Output out(g.out);
    csv::write_row(out.os(), {"n", "p", "q", "R", "r", "psi_quad", "phi_quad", "psi_lr", "phi_lr", "kappa_bar",
                              "kappa_lower", "phi_in_regime"});
    auto opt = [](auto f) {
      try {
        return csv::fmt(f());
      } catch (const ConfigError&) {
        return std::string();
      }
    };
    for (int pp : p)
      for (int nn : n)
        for (double qq : q) {
          RateQuery rq{nn, pp, qq, R, r, gamma, 1.0, nu};
          csv::write_row(out.os(), {std::to_string(nn), std::to_string(pp), csv::fmt(qq), csv::fmt(R), csv::fmt(r),
                                    opt([&] { return psi_quad(rq); }), opt([&] { return phi_quad(rq); }),
                                    opt([&] { return psi_lr(rq); }), opt([&] { return phi_lr(rq); }),
                                    opt([&] { return kappa_bar(rq, delta, C); }),
                                    opt([&] { return kappa_lower(rq); }), b(phi_in_regime(rq))});
        }
  }
};

// ---- simulate -------------------------------------------------------------

struct SimulateCmd {
  std::string experiment;
  ExperimentConfig cfg;
  std::string scale = "squared";
  std::string sided = "two";
  std::string hist;
  std::vector<int> n_grid;
  ThresholdFlags th;

  void add(CLI::App& app) {
    app.add_option("experiment", experiment,
                   "functional-error, two-sample, relative-error, detection or rolling-alpha");
    app.add_option("--p", cfg.p, "dimension");
    app.add_option("--n", n_grid, "sample size(s); total n for two-sample")->delimiter(',');
    app.add_option("--models", cfg.models, "M1..M4")->delimiter(',');
    app.add_option("--reps", cfg.replications, "Monte Carlo replications");
    app.add_option("--eta", cfg.eta, "signal-to-noise ratio");
    app.add_option("--alpha", cfg.alpha, "significance level");
    app.add_option("--props", cfg.prop_equal, "proportions of equal means")->delimiter(',');
    app.add_option("--blocks", cfg.n_blocks, "number of correlated 2x2 blocks");
    app.add_option("--block-rho", cfg.block_rho, "2x2 block correlation");
    app.add_option("--scale", scale, "squared (||d||^2 / sqrt(tr S^2) = eta) or norm (||d|| / sqrt(tr S^2) = eta)")
        ->check(CLI::IsMember({"squared", "norm"}));
    app.add_option("--sided", sided, "two or upper")->check(CLI::IsMember({"two", "upper"}));
    app.add_option("--rho", cfg.rho, "planted block correlation");
    app.add_option("--support", cfg.support_size, "planted block size");
    app.add_option("--r", cfg.r, "row functional exponent");
    app.add_option("--window", cfg.window, "rolling window");
    app.add_option("--panel-t", cfg.panel_t, "synthetic panel length");
    app.add_option("--panel-n", cfg.panel_n, "synthetic panel assets");
    app.add_option("--panel-k", cfg.panel_k, "synthetic panel factors");
    app.add_option("--alpha-fraction", cfg.alpha_fraction, "share of assets with nonzero alpha");
    app.add_option("--switch-at", cfg.switch_at, "row where alpha switches on");
    app.add_option("--returns", cfg.returns_csv, "returns CSV for rolling-alpha");
    app.add_option("--factors", cfg.factors_csv, "factors CSV for rolling-alpha");
    app.add_option("--hist", hist, "detection: write per-replicate values to this CSV");
    th.add_to(app);
  }

  void run(const Global& g) {
    require(!experiment.empty(), "simulate needs an experiment name");
    cfg.experiment = parse_experiment(experiment);
    if (!n_grid.empty()) {
      cfg.n_grid = n_grid;
    } else if (cfg.experiment == Experiment::FunctionalError) {
      cfg.n_grid = {30, 40, 50, 60, 70, 80, 90, 100};
    }
    if (cfg.experiment == Experiment::DetectionHist && !n_grid.empty()) cfg.n_grid = {n_grid.front()};
    cfg.scale = scale == "squared" ? SignalScale::SquaredNormRatio : SignalScale::NormRatio;
    cfg.sided = sided == "two" ? Sidedness::TwoSided : Sidedness::Upper;
    cfg.seed = g.seed;
    cfg.threads = g.threads;
    cfg.spec = th.spec(g.seed, cfg.experiment == Experiment::RollingAlpha ? CvTarget::RhoBarSq : CvTarget::QFunctional,
                       cfg.r);
    ResultTable table;
    if (cfg.experiment == Experiment::DetectionHist) {
      const auto series = detection_series(cfg);
      table = summarize_detection(cfg, series);
      if (!hist.empty()) {
        Output h(hist);
        write_detection_series(h.os(), series);
      }
    } else {
      table = run_experiment(cfg);
    }
    Output out(g.out);
    table.write_csv(out.os());
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Thresholded estimation of covariance functionals and the tests built on them"};
  app.require_subcommand(1);
  Global g;
  app.add_option("--seed", g.seed, "master random seed");
  app.add_option("--threads", g.threads, "worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
  app.add_option("--out", g.out, "output CSV path ('-' = stdout)");
  app.add_option("--config", g.config, "flat key = value file; command-line flags win");

  EstimateCmd estimate;
  CvCmd cv;
  TwoSampleCmd two;
  FactorCmd factor;
  DetectCmd detect;
  RatesCmd rates;
  SimulateCmd simulate;
  auto* s_est = app.add_subcommand("estimate", "functional estimates for one sample");
  auto* s_cv = app.add_subcommand("cv", "cross-validated threshold with its loss curve");
  auto* s_two = app.add_subcommand("twosample", "two-sample mean tests");
  auto* s_fac = app.add_subcommand("factor-test", "factor-pricing alpha test, optionally rolling");
  auto* s_det = app.add_subcommand("detect", "correlation detection by the thresholded row functional");
  auto* s_rat = app.add_subcommand("rates", "rate and threshold formulas over a grid");
  auto* s_sim = app.add_subcommand("simulate", "Monte Carlo experiments");
  estimate.add(*s_est);
  cv.add(*s_cv);
  two.add(*s_two);
  factor.add(*s_fac);
  detect.add(*s_det);
  rates.add(*s_rat);
  simulate.add(*s_sim);
  for (auto* s : {s_est, s_cv, s_two, s_fac, s_det, s_rat, s_sim}) s->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    if (!g.config.empty()) cli::apply_config(cli::read_config(g.config), app, *sub);
    if (sub == s_est) estimate.run(g);
    else if (sub == s_cv) cv.run(g);
    else if (sub == s_two) two.run(g);
    else if (sub == s_fac) factor.run(g);
    else if (sub == s_det) detect.run(g);
    else if (sub == s_rat) rates.run(g);
    else simulate.run(g);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
