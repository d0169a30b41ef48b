#include <gtest/gtest.h>

#include "covfunc/twosample.hpp"
#include "covfunc/ustat.hpp"
#include "test_util.hpp"

using namespace covfunc;

namespace {

ThresholdSpec cv_spec(std::uint64_t seed) {
  CvConfig c;
  c.seed = RngSeed{seed, 0};
  return ThresholdSpec::cross_validated(c);
}

TwoSampleReport run(TwoSampleMethod m, const SampleMatrix& a, const SampleMatrix& b, std::uint64_t seed = 1) {
  switch (m) {
    case TwoSampleMethod::BS: return bs_test(a, b, {}, false);
    case TwoSampleMethod::NewBS: return bs_test(a, b, {}, true, cv_spec(seed));
    case TwoSampleMethod::CQ: return cq_test(a, b, {}, false);
    case TwoSampleMethod::NewCQ: return cq_test(a, b, {}, true, cv_spec(seed));
    default: return marginal_tests(a, b, 0.05, m);
  }
}

constexpr TwoSampleMethod kAll[] = {TwoSampleMethod::BS, TwoSampleMethod::NewBS, TwoSampleMethod::CQ,
                                    TwoSampleMethod::NewCQ, TwoSampleMethod::Bonferroni, TwoSampleMethod::BH};

}  // namespace

TEST(TwoSample, ParseMethodNames) {
  EXPECT_EQ(parse_two_sample_method("newBS"), TwoSampleMethod::NewBS);
  EXPECT_EQ(parse_two_sample_method("BH"), TwoSampleMethod::BH);
  EXPECT_EQ(to_string(TwoSampleMethod::Bonferroni), "Bonf");
  EXPECT_THROW(parse_two_sample_method("KS"), ConfigError);
}

TEST(TwoSample, IdenticalSamplesBs) {
  const auto x = sample_gaussian(named_model("M1", 40), 20, Vector(), RngSeed{71, 0});
  const auto r = bs_test(x, x, {0.05, Sidedness::Upper}, false);
  const double n = 40.0;
  // pooled covariance of two identical samples: 2 * scatter / (n - 2)
  const Matrix z = ustat::centered(x.data());
  const double tr_pooled = 2.0 * z.squaredNorm() / (n - 2.0);
  EXPECT_NEAR(r.statistic, -n / 400.0 * tr_pooled, 1e-10);
  EXPECT_LT(r.z, 0.0);
  EXPECT_FALSE(r.reject);
}

TEST(TwoSample, IdenticalSamplesNoRejectionUpperTail) {
  const auto x = sample_gaussian(named_model("M2", 30), 20, Vector(), RngSeed{72, 0});
  const WaldOptions upper{0.05, Sidedness::Upper};
  const auto spec = ThresholdSpec::explicit_tau(0.3);
  for (const auto& r : {bs_test(x, x, upper, false), bs_test(x, x, upper, true, spec), cq_test(x, x, upper, false),
                        cq_test(x, x, upper, true, spec), marginal_tests(x, x, 0.05, TwoSampleMethod::Bonferroni),
                        marginal_tests(x, x, 0.05, TwoSampleMethod::BH)}) {
    EXPECT_FALSE(r.reject) << to_string(r.method);
    EXPECT_GE(r.p_value, 0.0);
    EXPECT_LE(r.p_value, 1.0);
  }
}

TEST(TwoSample, IdenticalSamplesTwoSidedSeesNegativeZ) {
  // M = -(n / (n1 n2)) tr S, so z is about -sqrt(p / 2): far in the lower tail.
  const auto x = sample_gaussian(named_model("M4", 100), 20, Vector(), RngSeed{72, 1});
  const auto r = bs_test(x, x, {}, false);
  EXPECT_LT(r.z, -3.0);
  EXPECT_TRUE(r.reject);
}

TEST(TwoSample, RejectMatchesPValue) {
  const auto d = two_sample_design(15, 15, 0.0, 0.5, named_model("M1", 30), RngSeed{73, 0});
  for (auto m : {TwoSampleMethod::BS, TwoSampleMethod::NewBS, TwoSampleMethod::CQ, TwoSampleMethod::NewCQ}) {
    const auto r = run(m, d.x1, d.x2);
    EXPECT_EQ(r.reject, r.p_value < 0.05) << to_string(m);
  }
}

TEST(TwoSample, LocationInvariance) {
  const auto d = two_sample_design(12, 14, 0.5, 0.3, named_model("M1", 20), RngSeed{74, 0});
  const Eigen::RowVectorXd shift = Eigen::RowVectorXd::LinSpaced(20, -3, 5);
  const SampleMatrix a(d.x1.data().rowwise() + shift), b(d.x2.data().rowwise() + shift);
  for (auto m : {TwoSampleMethod::BS, TwoSampleMethod::NewBS, TwoSampleMethod::CQ, TwoSampleMethod::NewCQ}) {
    const auto r0 = run(m, d.x1, d.x2), r1 = run(m, a, b);
    EXPECT_NEAR(r0.statistic, r1.statistic, 1e-9 * (1 + std::abs(r0.statistic))) << to_string(m);
    EXPECT_NEAR(r0.z, r1.z, 1e-8) << to_string(m);
  }
}

TEST(TwoSample, PermutationInvariance) {
  const auto d = two_sample_design(12, 14, 0.5, 0.3, named_model("M2", 20), RngSeed{75, 0});
  Rng rng(RngSeed{75, 1});
  const auto perm = rng.permutation(20);
  Matrix a(12, 20), b(14, 20);
  for (int j = 0; j < 20; ++j) {
    a.col(j) = d.x1.data().col(perm[j]);
    b.col(j) = d.x2.data().col(perm[j]);
  }
  for (auto m : {TwoSampleMethod::BS, TwoSampleMethod::CQ}) {
    const auto r0 = run(m, d.x1, d.x2), r1 = run(m, SampleMatrix(a), SampleMatrix(b));
    EXPECT_NEAR(r0.z, r1.z, 1e-9) << to_string(m);
  }
  // Explicit thresholds avoid the CV split randomness being tied to column order.
  const auto spec = ThresholdSpec::explicit_tau(0.2);
  EXPECT_NEAR(bs_test(d.x1, d.x2, {}, true, spec).z, bs_test(SampleMatrix(a), SampleMatrix(b), {}, true, spec).z, 1e-9);
  EXPECT_NEAR(cq_test(d.x1, d.x2, {}, true, spec).z, cq_test(SampleMatrix(a), SampleMatrix(b), {}, true, spec).z, 1e-9);
}

TEST(TwoSample, NewBsSharesStatisticWithBs) {
  const auto d = two_sample_design(20, 25, 0.0, 0.2, named_model("M1", 30), RngSeed{76, 0});
  EXPECT_EQ(bs_test(d.x1, d.x2, {}, false).statistic, bs_test(d.x1, d.x2, {}, true, cv_spec(3)).statistic);
  EXPECT_EQ(cq_test(d.x1, d.x2, {}, false).statistic, cq_test(d.x1, d.x2, {}, true, cv_spec(3)).statistic);
}

TEST(TwoSample, DimensionMismatch) {
  const auto a = sample_gaussian(named_model("M1", 10), 10, Vector(), RngSeed{77, 0});
  const auto b = sample_gaussian(named_model("M1", 11), 10, Vector(), RngSeed{77, 1});
  EXPECT_THROW(bs_test(a, b, {}, false), ConfigError);
  EXPECT_THROW(cq_test(a, b, {}, false), ConfigError);
  EXPECT_THROW(cq_test(a, a.rows({0, 1, 2}), {}, false), ConfigError);
}

TEST(TwoSample, WaldPValue) {
  EXPECT_NEAR(wald_p_value(1.959963984540054, Sidedness::TwoSided), 0.05, 1e-12);
  EXPECT_NEAR(wald_p_value(1.6448536269514722, Sidedness::Upper), 0.05, 1e-12);
  EXPECT_NEAR(wald_p_value(-1.0, Sidedness::Upper), 0.8413447460685429, 1e-12);
}

TEST(Marginal, BhStepUp) {
  EXPECT_TRUE(bh_any_rejection({0.01, 0.5, 0.6}, 0.05));       // 0.01 <= 0.05/3
  EXPECT_TRUE(bh_any_rejection({0.03, 0.032, 0.9}, 0.05));     // 0.032 <= 2*0.05/3
  EXPECT_FALSE(bh_any_rejection({0.02, 0.04, 0.9}, 0.05));     // 0.02 > 0.0167, 0.04 > 0.0333
  EXPECT_FALSE(bh_any_rejection({}, 0.05));
}

TEST(Marginal, ZeroVarianceCoordinateWarns) {
  Matrix a = sample_gaussian(named_model("M4", 5), 10, Vector(), RngSeed{78, 0}).data();
  Matrix b = sample_gaussian(named_model("M4", 5), 10, Vector(), RngSeed{78, 1}).data();
  a.col(2).setConstant(1.0);
  b.col(2).setConstant(1.0);
  int zeros = 0;
  const auto p = marginal_p_values(SampleMatrix(a), SampleMatrix(b), MarginalTest::Pooled, &zeros);
  EXPECT_EQ(zeros, 1);
  EXPECT_EQ(p[2], 1.0);
  const auto r = marginal_tests(SampleMatrix(a), SampleMatrix(b), 0.05, TwoSampleMethod::Bonferroni);
  EXPECT_FALSE(r.warnings.empty());
}

TEST(Marginal, PooledTMatchesHandComputation) {
  Matrix a(3, 1), b(3, 1);
  a << 1, 2, 3;
  b << 4, 5, 6;
  // pooled sd 1, t = -3 / sqrt(2/3), df 4; equal variances make Welch coincide
  const auto p = marginal_p_values(SampleMatrix(a), SampleMatrix(b), MarginalTest::Pooled);
  EXPECT_NEAR(p[0], 0.021311641128756727, 1e-12);
  const auto w = marginal_p_values(SampleMatrix(a), SampleMatrix(b), MarginalTest::Welch);
  EXPECT_NEAR(w[0], 0.021311641128756727, 1e-12);
}

TEST(TwoSample, SizesAtDeskScale) {
  const auto sigma = make_model(kind::TwoByTwoBlocks{0.3, 50}, 100);
  const int reps = 500;
  std::array<int, 6> rejections{};
  for (int r = 0; r < reps; ++r) {
    const auto d = two_sample_design(30, 30, 1.0, 0.0, sigma, RngSeed{79, static_cast<std::uint64_t>(r)});
    for (std::size_t k = 0; k < 6; ++k) rejections[k] += run(kAll[k], d.x1, d.x2, r).reject;
  }
  for (std::size_t k = 0; k < 6; ++k) {
    const double size = rejections[k] / double(reps);
    EXPECT_GE(size, 0.02) << to_string(kAll[k]);
    EXPECT_LE(size, 0.09) << to_string(kAll[k]);
  }
}

TEST(TwoSample, NewCqPowerNondecreasingInEta) {
  const auto sigma = make_model(kind::TwoByTwoBlocks{0.3, 50}, 100);
  const int reps = 300;
  std::vector<double> power;
  for (double eta : {0.05, 0.1, 0.2}) {
    int rej = 0;
    for (int r = 0; r < reps; ++r) {
      const auto d = two_sample_design(30, 30, 0.0, eta, sigma, RngSeed{80, static_cast<std::uint64_t>(r)});
      rej += cq_test(d.x1, d.x2, {}, true, cv_spec(r)).reject;
    }
    power.push_back(rej / double(reps));
  }
  for (std::size_t k = 1; k < power.size(); ++k) {
    const double se = std::sqrt(power[k] * (1 - power[k]) / reps);
    EXPECT_GE(power[k], power[k - 1] - 2 * se);
  }
}

TEST(TwoSample, ThresholdedTracesAtZeroThresholdArePlugIns) {
  const auto d = two_sample_design(10, 12, 1.0, 0.0, named_model("M1", 8), RngSeed{81, 0});
  const auto t = thresholded_traces(d.x1, d.x2, ThresholdSpec::explicit_tau(0.0));
  const Matrix s1 = sample_covariance(d.x1), s2 = sample_covariance(d.x2);
  EXPECT_NEAR(t.tr12, (s1.array() * s2.array()).sum(), 1e-10);
  EXPECT_NEAR(t.tr1, q_offdiag_at(s1, 0.0) + d_diag(d.x1).value, 1e-10);
}
