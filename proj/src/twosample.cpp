#include "covfunc/twosample.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "covfunc/cvselect.hpp"
#include "covfunc/ustat.hpp"

namespace covfunc {

namespace {

void check_pair(const SampleMatrix& x1, const SampleMatrix& x2, int min_n) {
  require(x1.p() == x2.p(), "two-sample test: samples have different dimensions");
  require(x1.n() >= min_n && x2.n() >= min_n,
          "two-sample test: each sample needs at least " + std::to_string(min_n) + " observations");
}

void finish_wald(TwoSampleReport& rep, double variance, const WaldOptions& opt) {
  if (!(variance > 0.0) || !std::isfinite(variance))
    throw NumericalError(to_string(rep.method) + ": null variance estimate is not positive");
  rep.z = rep.statistic / std::sqrt(variance);
  rep.p_value = wald_p_value(rep.z, opt.sided);
  rep.reject = rep.p_value < opt.alpha;
}

ThresholdSpec with_seed(ThresholdSpec spec, std::uint64_t salt) {
  spec.cv.seed = spec.cv.seed.derive(salt);
  return spec;
}

}  // namespace

std::string to_string(TwoSampleMethod m) {
  switch (m) {
    case TwoSampleMethod::BS: return "BS";
    case TwoSampleMethod::NewBS: return "newBS";
    case TwoSampleMethod::CQ: return "CQ";
    case TwoSampleMethod::NewCQ: return "newCQ";
    case TwoSampleMethod::Bonferroni: return "Bonf";
    case TwoSampleMethod::BH: return "BH";
  }
  return "?";
}

TwoSampleMethod parse_two_sample_method(const std::string& s) {
  for (auto m : {TwoSampleMethod::BS, TwoSampleMethod::NewBS, TwoSampleMethod::CQ, TwoSampleMethod::NewCQ,
                 TwoSampleMethod::Bonferroni, TwoSampleMethod::BH})
    if (s == to_string(m)) return m;
  throw ConfigError("unknown two-sample method '" + s + "' (BS, newBS, CQ, newCQ, Bonf, BH)");
}

double wald_p_value(double z, Sidedness sided) {
  const boost::math::normal_distribution<> nd;
  if (sided == Sidedness::Upper) return boost::math::cdf(boost::math::complement(nd, z));
  return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(nd, std::abs(z))));
}

std::pair<double, double> pooled_thresholded_frobenius(const SampleMatrix& x1, const SampleMatrix& x2,
                                                       const ThresholdSpec& spec) {
  check_pair(x1, x2, 4);
  const int n1 = x1.n(), n2 = x2.n(), n = n1 + n2;
  Matrix z(n, x1.p());
  z.topRows(n1) = ustat::centered(x1.data());
  z.bottomRows(n2) = ustat::centered(x2.data());
  const SampleMatrix stacked(z);
  const double tau = resolve_threshold(spec, stacked).tau;
  Matrix pooled = z.transpose() * z / static_cast<double>(n - 2);
  const double q = q_offdiag_at(pooled, tau);
  const double d = ((n1 - 1) * ustat::diag_sq(x1.data()).sum() + (n2 - 1) * ustat::diag_sq(x2.data()).sum()) /
                   static_cast<double>(n - 2);
  return {q + d, tau};
}

ThresholdedTraces thresholded_traces(const SampleMatrix& x1, const SampleMatrix& x2,
                                     const ThresholdSpec& spec) {
  check_pair(x1, x2, 4);
  ThresholdedTraces t;
  t.tau1 = resolve_threshold(with_seed(spec, 1), x1).tau;
  t.tau2 = resolve_threshold(with_seed(spec, 2), x2).tau;
  const Matrix s1 = sample_covariance(SampleMatrix(x1.data()));
  const Matrix s2 = sample_covariance(SampleMatrix(x2.data()));
  t.tr1 = q_offdiag_at(s1, t.tau1) + ustat::diag_sq(x1.data()).sum();
  t.tr2 = q_offdiag_at(s2, t.tau2) + ustat::diag_sq(x2.data()).sum();
  const Eigen::Index p = s1.rows();
  double cross = 0.0;
  for (Eigen::Index j = 0; j < p; ++j)
    for (Eigen::Index i = 0; i < p; ++i) {
      const double a = s1(i, j), b = s2(i, j);
      if (i == j || (std::abs(a) > t.tau1 && std::abs(b) > t.tau2)) cross += a * b;
    }
  t.tr12 = cross;
  return t;
}

TwoSampleReport bs_test(const SampleMatrix& x1, const SampleMatrix& x2, const WaldOptions& opt,
                        bool use_threshold, const ThresholdSpec& spec) {
  check_pair(x1, x2, use_threshold ? 4 : 2);
  const double n1 = x1.n(), n2 = x2.n(), n = n1 + n2;
  const Vector d = x1.data().colwise().mean() - x2.data().colwise().mean();
  const double trace_pooled =
      (ustat::centered(x1.data()).squaredNorm() + ustat::centered(x2.data()).squaredNorm()) / (n - 2.0);

  TwoSampleReport rep;
  rep.method = use_threshold ? TwoSampleMethod::NewBS : TwoSampleMethod::BS;
  rep.statistic = d.squaredNorm() - n / (n1 * n2) * trace_pooled;
  if (use_threshold) {
    const auto [value, tau] = pooled_thresholded_frobenius(x1, x2, spec);
    rep.functional_used = {value, FunctionalKind::TotalFrobSq, "pooled thresholded Q + D"};
    rep.tau = tau;
  } else {
    rep.functional_used = bs_b2(x1, x2);
  }
  finish_wald(rep, 2.0 * n * (n - 1.0) / (n1 * n1 * n2 * n2) * rep.functional_used.value, opt);
  return rep;
}

TwoSampleReport cq_test(const SampleMatrix& x1, const SampleMatrix& x2, const WaldOptions& opt,
                        bool use_threshold, const ThresholdSpec& spec) {
  check_pair(x1, x2, 4);
  const double n1 = x1.n(), n2 = x2.n();
  const Matrix& a = x1.data();
  const Matrix& b = x2.data();
  const Vector sa = a.colwise().sum(), sb = b.colwise().sum();
  const double within1 = (sa.squaredNorm() - a.squaredNorm()) / (n1 * (n1 - 1.0));
  const double within2 = (sb.squaredNorm() - b.squaredNorm()) / (n2 * (n2 - 1.0));

  TwoSampleReport rep;
  rep.method = use_threshold ? TwoSampleMethod::NewCQ : TwoSampleMethod::CQ;
  rep.statistic = within1 + within2 - 2.0 * sa.dot(sb) / (n1 * n2);

  double t1, t2, t12;
  if (use_threshold) {
    const auto t = thresholded_traces(x1, x2, spec);
    t1 = t.tr1, t2 = t.tr2, t12 = t.tr12;
    rep.tau = std::max(t.tau1, t.tau2);
  } else {
    const auto f = cq_functionals(x1, x2);
    t1 = f.tr_sigma1_sq.value, t2 = f.tr_sigma2_sq.value, t12 = f.tr_sigma12.value;
  }
  rep.traces = {t1, t2, t12};
  const double var = 2.0 * t1 / (n1 * (n1 - 1.0)) + 2.0 * t2 / (n2 * (n2 - 1.0)) + 4.0 * t12 / (n1 * n2);
  rep.functional_used = {var, FunctionalKind::CqTrSigmaSq,
                         use_threshold ? "thresholded null variance" : "U-statistic null variance"};
  finish_wald(rep, var, opt);
  return rep;
}

std::vector<double> marginal_p_values(const SampleMatrix& x1, const SampleMatrix& x2, MarginalTest kind,
                                      int* zero_variance) {
  check_pair(x1, x2, 2);
  const double n1 = x1.n(), n2 = x2.n();
  const Vector d = x1.data().colwise().mean() - x2.data().colwise().mean();
  const Vector v1 = ustat::centered(x1.data()).colwise().squaredNorm() / (n1 - 1.0);
  const Vector v2 = ustat::centered(x2.data()).colwise().squaredNorm() / (n2 - 1.0);
  std::vector<double> out(static_cast<std::size_t>(x1.p()), 1.0);
  int zeros = 0;
  for (Eigen::Index a = 0; a < d.size(); ++a) {
    double se2, df;
    if (kind == MarginalTest::Pooled) {
      const double sp = ((n1 - 1.0) * v1(a) + (n2 - 1.0) * v2(a)) / (n1 + n2 - 2.0);
      se2 = sp * (1.0 / n1 + 1.0 / n2);
      df = n1 + n2 - 2.0;
    } else {
      const double u1 = v1(a) / n1, u2 = v2(a) / n2;
      se2 = u1 + u2;
      df = se2 * se2 / (u1 * u1 / (n1 - 1.0) + u2 * u2 / (n2 - 1.0));
    }
    if (!(se2 > 0.0)) {
      ++zeros;
      continue;
    }
    const boost::math::students_t_distribution<> td(df);
    const double t = std::abs(d(a)) / std::sqrt(se2);
    out[static_cast<std::size_t>(a)] = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(td, t)));
  }
  if (zero_variance) *zero_variance = zeros;
  return out;
}

bool bh_any_rejection(std::vector<double> pv, double alpha) {
  std::sort(pv.begin(), pv.end());
  const double m = static_cast<double>(pv.size());
  for (std::size_t k = 0; k < pv.size(); ++k)
    if (pv[k] <= alpha * static_cast<double>(k + 1) / m) return true;
  return false;
}

TwoSampleReport marginal_tests(const SampleMatrix& x1, const SampleMatrix& x2, double alpha,
                               TwoSampleMethod correction, MarginalTest kind) {
  require(correction == TwoSampleMethod::Bonferroni || correction == TwoSampleMethod::BH,
          "marginal_tests: correction must be Bonferroni or BH");
  int zeros = 0;
  auto pv = marginal_p_values(x1, x2, kind, &zeros);
  const double m = static_cast<double>(pv.size());
  TwoSampleReport rep;
  rep.method = correction;
  if (zeros > 0)
    rep.warnings.push_back(std::to_string(zeros) + " zero-variance coordinate(s) given p-value 1");
  std::sort(pv.begin(), pv.end());
  rep.statistic = pv.front();
  if (correction == TwoSampleMethod::Bonferroni) {
    rep.p_value = std::min(1.0, m * pv.front());
    rep.reject = pv.front() < alpha / m;
  } else {
    // smallest BH-adjusted p-value
    double best = 1.0;
    for (std::size_t k = 0; k < pv.size(); ++k) best = std::min(best, m * pv[k] / static_cast<double>(k + 1));
    rep.p_value = best;
    rep.reject = bh_any_rejection(pv, alpha);
  }
  return rep;
}

}  // namespace covfunc
