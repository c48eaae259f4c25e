#include <gtest/gtest.h>

#include <cmath>

#include "cotctl/error.hpp"
#include "cotctl/reward.hpp"
#include "cotctl/rng.hpp"
#include "fixtures.hpp"
#include "reference.hpp"

namespace cotctl::reward {
namespace {

constexpr RootLabel L(ServiceId s, ResourceType r) { return RootLabel{s, r}; }
const auto Cpu = ResourceType::Cpu;
const auto Mem = ResourceType::Memory;
const auto Net = ResourceType::Network;

MatchCounts counts(int tp, int fp, int fn, int pm = 0, int pn = 0) {
  return MatchCounts{tp, fp, fn, pm, pn};
}

TEST(MatchCounts, Examples) {
  EXPECT_EQ(match_counts({}, {}), MatchCounts{});
  EXPECT_EQ(match_counts({L(4, Cpu)}, {L(4, Mem)}), counts(0, 1, 1, 1, 0));
  const LabelSet both = {L(2, Cpu), L(7, Net)};
  EXPECT_EQ(match_counts(both, both), counts(2, 0, 0, 2, 0));
  EXPECT_EQ(match_counts({L(1, Cpu), L(1, Mem), L(3, Net)}, {L(1, Cpu), L(5, Mem)}),
            counts(1, 2, 1, 1, 1));
}

TEST(MatchCounts, AgreesWithNaiveCounter) {
  Rng rng(2024);
  for (int i = 0; i < 1000; ++i) {
    const auto p = reference::random_labels(rng, 8, 6);
    const auto t = reference::random_labels(rng, 8, 6);
    const auto got = match_counts(LabelSet(p.begin(), p.end()), LabelSet(t.begin(), t.end()));
    const auto want = reference::naive_counts(p, t);
    ASSERT_EQ(got.tp, want.tp);
    ASSERT_EQ(got.fp, want.fp);
    ASSERT_EQ(got.fn, want.fn);
    ASSERT_EQ(got.pod_match, want.pod_match);
    ASSERT_EQ(got.pod_not, want.pod_not);
  }
}

TEST(SPod, Examples) {
  const RewardConfig cfg;
  EXPECT_EQ(s_pod(counts(0, 0, 0, 0, 0), cfg), 0.0);
  EXPECT_NEAR(s_pod(counts(0, 0, 0, 3, 1), cfg), 3.0 / (4.0 + 1e-8), 1e-15);
  EXPECT_NEAR(s_pod(counts(0, 0, 0, 3, 1), cfg), 0.7499999981, 1e-10);
  const double five = s_pod(counts(0, 0, 0, 5, 0), cfg);
  EXPECT_LT(five, 1.0);
  EXPECT_GT(five, 1.0 - 1e-8);
}

TEST(FBeta, Examples) {
  RewardConfig cfg;
  EXPECT_EQ(f_beta(counts(0, 3, 2), cfg), 0.0);
  cfg.epsilon = 0.0;
  EXPECT_NEAR(f_beta(counts(2, 1, 1), cfg), 10.0 / 15.0, 1e-15);
  EXPECT_LT(f_beta(counts(2, 0, 1), cfg), f_beta(counts(2, 1, 0), cfg));
}

TEST(RResult, Examples) {
  RewardConfig cfg;
  EXPECT_EQ(r_result(MatchCounts{}, cfg), 0.0);
  const auto at_threshold = counts(1, 0, 2, 1, 0);
  EXPECT_EQ(r_result(at_threshold, cfg), r_base(at_threshold, cfg));
  const auto above = counts(1, 0, 3, 1, 0);
  EXPECT_NEAR(r_result(above, cfg), r_base(above, cfg) - 0.25, 1e-15);

  cfg.epsilon = 0.0;
  const double expected = 0.05 * 1.0 + 0.95 * (10.0 / 15.0) + 0.1;
  EXPECT_NEAR(r_result(counts(2, 1, 1, 2, 0), cfg), expected, 1e-15);
  EXPECT_NEAR(expected, 0.7833, 1e-4);
}

TEST(RResult, ReducesToBaseWhenFewMisses) {
  const RewardConfig cfg;
  for (int tp = 0; tp <= 10; ++tp)
    for (int fp = 0; fp <= 10; ++fp)
      for (int fn = 0; fn <= 2; ++fn)
        for (int pm = 0; pm <= 3; ++pm)
          for (int pn = 0; pn <= 3; ++pn) {
            const auto c = counts(tp, fp, fn, pm, pn);
            ASSERT_EQ(r_result(c, cfg), r_base(c, cfg));
          }
}

TEST(RResult, MonotoneInCounts) {
  const RewardConfig cfg;
  for (int tp = 0; tp <= 10; ++tp)
    for (int fp = 0; fp <= 10; ++fp)
      for (int fn = 0; fn <= 10; ++fn) {
        const auto c = counts(tp, fp, fn, 2, 1);
        const double r = r_result(c, cfg);
        if (tp < 10) {
          ASSERT_LE(r, r_result(counts(tp + 1, fp, fn, 2, 1), cfg));
        }
        if (fp < 10) {
          ASSERT_GE(r, r_result(counts(tp, fp + 1, fn, 2, 1), cfg));
        }
        if (fn < 10) {
          ASSERT_GE(r, r_result(counts(tp, fp, fn + 1, 2, 1), cfg));
        }
      }
}

TEST(RResult, MatchesDirectFormulas) {
  const auto summary = reference::compare_rewards(1000, 77);
  EXPECT_EQ(summary.cases, 1000);
  EXPECT_EQ(summary.count_mismatches, 0);
  EXPECT_LE(summary.max_abs_diff, 1e-12);
}

TEST(RFormat, Examples) {
  EXPECT_EQ(r_format(12, 0), 0.0);
  EXPECT_EQ(r_format(12, 12), -1.0);
  EXPECT_EQ(r_format(12, 3), -0.25);
  EXPECT_THROW(r_format(0, 0), std::invalid_argument);
  EXPECT_THROW(r_format(12, 13), std::invalid_argument);
  EXPECT_THROW(r_format(12, -1), std::invalid_argument);
}

TEST(RLength, Piecewise) {
  const RewardConfig cfg;
  EXPECT_EQ(r_length(0, true, cfg), 0.0);
  EXPECT_EQ(r_length(64, true, cfg), 0.0);
  EXPECT_EQ(r_length(544, true, cfg), -0.5);
  EXPECT_EQ(r_length(1024, true, cfg), -1.0);
  EXPECT_EQ(r_length(5000, true, cfg), -1.0);
  double prev = 0.0;
  for (int len = 0; len <= 1200; ++len) {
    const double v = r_length(len, true, cfg);
    ASSERT_LE(v, prev);
    ASSERT_GE(v, -1.0);
    ASSERT_EQ(r_length(len, false, cfg), 0.0);
    prev = v;
  }
}

TEST(RKl, Examples) {
  RewardConfig cfg;
  const std::vector<double> a = {-1.0, -2.0, -0.5};
  EXPECT_EQ(r_kl(a, a, cfg), 0.0);
  std::vector<double> n(10), o(10);
  for (int i = 0; i < 10; ++i) {
    o[static_cast<std::size_t>(i)] = -1.0 - 0.1 * i;
    n[static_cast<std::size_t>(i)] = o[static_cast<std::size_t>(i)] + 0.1;
  }
  EXPECT_NEAR(r_kl(n, o, cfg), -0.001, 1e-15);
  cfg.beta_kl = 0.0;
  EXPECT_EQ(r_kl(n, o, cfg), 0.0);
  const std::vector<double> shorter = {0.0};
  EXPECT_THROW(r_kl(n, shorter, cfg), std::invalid_argument);
  EXPECT_NEAR(r_kl_exact(0.5, RewardConfig{}), -0.005, 1e-15);
}

TEST(RTotal, ExactSum) {
  RewardConfig cfg;
  cfg.epsilon = 0.0;
  const auto b = r_total(counts(2, 1, 1, 2, 0), cot::FormatChecks{12, 3}, 10, 0.0, cfg);
  EXPECT_NEAR(b.r_result, 0.78333333333, 1e-10);
  EXPECT_EQ(b.r_format, -0.25);
  EXPECT_EQ(b.r_length, 0.0);
  EXPECT_NEAR(b.r_total, 0.5333, 1e-4);
  EXPECT_EQ(b.r_total, b.r_result + b.r_format + b.r_length + b.r_kl);

  cfg = RewardConfig{};
  const auto zero = r_total(MatchCounts{}, cot::FormatChecks{12, 0}, 0, 0.0, cfg);
  EXPECT_EQ(zero.r_total, 0.0);

  Rng rng(8);
  for (int i = 0; i < 500; ++i) {
    const auto c = counts(static_cast<int>(rng.below(5)), static_cast<int>(rng.below(5)),
                          static_cast<int>(rng.below(5)), static_cast<int>(rng.below(4)),
                          static_cast<int>(rng.below(4)));
    const auto r = r_total(c, cot::FormatChecks{12, static_cast<int>(rng.below(13))},
                           static_cast<int>(rng.below(1500)), -rng.uniform() * 0.01, cfg);
    ASSERT_EQ(r.r_total, r.r_result + r.r_format + r.r_length + r.r_kl);
    ASSERT_GE(r.s_pod, 0.0);
    ASSERT_LE(r.f_beta, 1.0);
    ASSERT_GE(r.r_format, -1.0);
    ASSERT_LE(r.r_format, 0.0);
    ASSERT_GE(r.r_length, -1.0);
    ASSERT_LE(r.r_length, 0.0);
  }
}

TEST(RTotal, LengthPenaltyNeedsCorrectness) {
  const RewardConfig cfg;
  EXPECT_EQ(r_total(counts(0, 1, 1), cot::FormatChecks{}, 2000, 0.0, cfg).r_length, 0.0);
  EXPECT_EQ(r_total(counts(1, 0, 0), cot::FormatChecks{}, 2000, 0.0, cfg).r_length, -1.0);
}

TEST(Score, ExpectedOutputFixture) {
  const auto out = cot::parse_text(testing::read_data("expected_output.txt"));
  const auto b = score(out, {L(4, Cpu)}, 0.0, RewardConfig{});
  EXPECT_EQ(b.r_format, 0.0);
  EXPECT_GT(b.r_result, 1.0);
  EXPECT_EQ(format_and_length(out, RewardConfig{}), b.r_format + b.r_length);
}

TEST(RcaMetrics, Examples) {
  const std::vector<RcaCase> exact = {{{L(4, Cpu)}, L(4, Cpu), {L(4, Cpu)}},
                                      {{L(2, Mem), L(3, Net)}, L(3, Net), {L(2, Mem), L(3, Net)}}};
  const auto a = rca_metrics(exact);
  EXPECT_EQ(a.precision, 1.0);
  EXPECT_EQ(a.recall, 1.0);
  EXPECT_EQ(a.accuracy, 1.0);

  const std::vector<RcaCase> partial = {{{L(4, Cpu)}, L(4, Cpu), {L(4, Cpu), L(2, Mem)}}};
  const auto b = rca_metrics(partial);
  EXPECT_EQ(b.precision, 1.0);
  EXPECT_EQ(b.recall, 0.5);
  EXPECT_EQ(b.accuracy, 1.0);

  const std::vector<RcaCase> empty_pred = {{{}, std::nullopt, {L(1, Cpu)}}};
  const auto c = rca_metrics(empty_pred);
  EXPECT_FALSE(c.precision_defined);
  EXPECT_EQ(c.precision, 0.0);
  EXPECT_EQ(c.recall, 0.0);
  EXPECT_EQ(c.accuracy, 0.0);

  const std::vector<RcaCase> no_truth = {{{}, std::nullopt, {}}, {{L(1, Cpu)}, L(1, Cpu), {}}};
  EXPECT_EQ(rca_metrics(no_truth).accuracy, 0.5);
  EXPECT_THROW(rca_metrics({}), std::invalid_argument);
}

TEST(Config, Validation) {
  EXPECT_NO_THROW(RewardConfig{}.validate());
  RewardConfig bad;
  bad.l_min = 2000;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = RewardConfig{};
  bad.clip_eps = 1.5;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = RewardConfig{};
  bad.group_size = 1;
  EXPECT_THROW(bad.validate(), ConfigError);
}

}  // namespace
}  // namespace cotctl::reward
