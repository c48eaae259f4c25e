#include <gtest/gtest.h>

#include <algorithm>

#include "cotctl/cot.hpp"
#include "cotctl/rng.hpp"
#include "fixtures.hpp"

namespace cotctl::cot {
namespace {

const Vocabulary& V() { return Vocabulary::standard(); }

std::vector<TokenId> toks(std::initializer_list<std::string_view> spellings) {
  std::vector<TokenId> out;
  for (auto s : spellings) out.push_back(V().id(s));
  return out;
}

bool has(const CotOutput& out, ViolationKind k, Tag t) {
  return std::find(out.violations.begin(), out.violations.end(), FormatViolation{k, t}) !=
         out.violations.end();
}

TEST(Parse, ExpectedOutputFixture) {
  const auto out = parse_text(testing::read_data("expected_output.txt"));
  EXPECT_TRUE(out.violations.empty());
  EXPECT_EQ(count_format_checks(out).invalid, 0);
  EXPECT_EQ(out.fault, "CPU saturation on #4 propagates latency to #2 and #1.");
  EXPECT_EQ(out.root, (std::vector<RootLabel>{{4, ResourceType::Cpu}}));
  ASSERT_EQ(out.counterfactual.size(), 3u);
  EXPECT_EQ(out.counterfactual[0].action, (ScalingAction{4, ActionKind::VerticalCpu, 500, false}));
  EXPECT_EQ(out.counterfactual[1].action, (ScalingAction{4, ActionKind::Horizontal, 1, false}));
  EXPECT_EQ(out.counterfactual[2].action, (ScalingAction{2, ActionKind::Horizontal, -1, false}));
  EXPECT_EQ(out.counterfactual[2].predicted, Outcome::Degraded);
  EXPECT_EQ(out.think.rfind("tick 42", 0), 0u);
}

TEST(Parse, ViolationFixtures) {
  const auto empty = parse_text(testing::read_data("violation_empty_content.txt"));
  EXPECT_EQ(empty.violations, (std::vector<FormatViolation>{{ViolationKind::EmptyContent,
                                                             Tag::Think}}));
  const auto order = parse_text(testing::read_data("violation_bad_ordering.txt"));
  EXPECT_EQ(order.violations, (std::vector<FormatViolation>{{ViolationKind::BadOrdering,
                                                             Tag::Think}}));
  const auto nested = parse_text(testing::read_data("violation_nested_tags.txt"));
  EXPECT_EQ(nested.violations, (std::vector<FormatViolation>{{ViolationKind::NestedTags,
                                                              Tag::Fault}}));
  for (const auto* out : {&empty, &order, &nested}) {
    EXPECT_EQ(count_format_checks(*out).total, 12);
    EXPECT_EQ(count_format_checks(*out).invalid, 1);
  }
  // The nested root segment is still readable.
  EXPECT_EQ(nested.root, (std::vector<RootLabel>{{4, ResourceType::Cpu}}));
}

TEST(Parse, CloseBeforeOpen) {
  const auto out = parse_text("</think> x <think> y </think>");
  EXPECT_TRUE(has(out, ViolationKind::BadOrdering, Tag::Think));
}

TEST(Parse, DuplicatePairIsBadOrdering) {
  const auto out = parse_text(
      "<think> a </think> <think> b </think> <Fault> f </Fault> "
      "<Counterfactual> NONE </Counterfactual> <root> NONE </root>");
  EXPECT_EQ(out.violations, (std::vector<FormatViolation>{{ViolationKind::BadOrdering,
                                                           Tag::Think}}));
  EXPECT_EQ(out.think, "a");
}

TEST(Parse, MissingTagsAndEmptyInput) {
  const auto none = parse(std::vector<TokenId>{});
  EXPECT_EQ(none.violations.size(), 4u);
  EXPECT_EQ(count_format_checks(none).invalid, 12);
  EXPECT_TRUE(none.think.empty());
  EXPECT_TRUE(none.root.empty());

  const auto partial = parse_text("<think> only </think>");
  EXPECT_EQ(count_format_checks(partial).invalid, 9);
  EXPECT_TRUE(has(partial, ViolationKind::MissingTag, Tag::Root));
}

TEST(Parse, RootMicroSyntax) {
  const auto out = parse_text(
      "<think> t </think><Fault> f </Fault><Counterfactual> NONE </Counterfactual>"
      "<root> #7 @N #2 @M #7 @N #21 @C #3 @X #5 @d junk </root>");
  EXPECT_EQ(out.root, (std::vector<RootLabel>{{7, ResourceType::Network},
                                              {2, ResourceType::Memory},
                                              {5, ResourceType::Disk}}));
  EXPECT_EQ(out.top1(), (RootLabel{7, ResourceType::Network}));
}

TEST(Parse, ClaimMicroSyntax) {
  const auto out = parse_text(
      "<think> t </think><Fault> f </Fault><Counterfactual>\n"
      "IF SCALE_OUT #2 THEN IMPROVED\n"
      "IF MEM_UP #3 256 THEN NEUTRAL\n"
      "IF SCALE_OUT #2 0 THEN IMPROVED\n"
      "IF FLY #2 THEN IMPROVED\n"
      "IF SCALE_IN #2 THEN MAYBE\n"
      "IF CPU_DOWN #9 250 THEN DEGRADED extra\n"
      "IF SCALE_IN #4 2 THEN DEGRADED\n"
      "</Counterfactual><root> NONE </root>");
  ASSERT_EQ(out.counterfactual.size(), 3u);
  EXPECT_EQ(out.counterfactual[1].action, (ScalingAction{3, ActionKind::VerticalMem, 256, false}));
  EXPECT_EQ(out.counterfactual[1].predicted, Outcome::Neutral);
  EXPECT_EQ(out.counterfactual[2].action, (ScalingAction{4, ActionKind::Horizontal, -2, false}));
  EXPECT_TRUE(out.violations.empty());
}

TEST(Interpret, KeepsImprovedInOrder) {
  const auto out = parse_text(
      "<think> t </think><Fault> f </Fault><Counterfactual>\n"
      "IF SCALE_OUT #2 THEN IMPROVED\nIF SCALE_IN #3 THEN DEGRADED\nIF CPU_UP #1 THEN IMPROVED\n"
      "</Counterfactual><root> NONE </root>");
  const auto kept = interpret(out);
  ASSERT_EQ(kept.size(), 2u);
  EXPECT_EQ(kept[0].action.service_id, 2);
  EXPECT_EQ(kept[1].action.service_id, 1);
  EXPECT_TRUE(interpret(parse_text("<think> no claims </think>")).empty());
}

TEST(ReasoningLength, CountsOnlyInnerTokens) {
  const auto five_three = parse(toks({"<think>", "a", "b", "c", "d", "e", "</think>", "<Fault>",
                                      "x", "y", "z", "</Fault>", "<Counterfactual>",
                                      "</Counterfactual>", "<root>", "</root>"}));
  EXPECT_EQ(reasoning_length(five_three), 8);
  const auto empty = parse(toks({"<think>", "</think>", "<Fault>", "</Fault>", "<Counterfactual>",
                                 "</Counterfactual>", "<root>", "</root>"}));
  EXPECT_EQ(reasoning_length(empty), 0);
  EXPECT_EQ(count_format_checks(empty).invalid, 4);
  const auto outside = parse(toks({"a", "b", "<think>", "</think>", "c"}));
  EXPECT_EQ(reasoning_length(outside), 0);
}

TEST(Compose, RoundTrip) {
  const std::vector<CounterfactualClaim> claims = {
      {make_action(ActionPhrase::CpuUp, 4, 250), Outcome::Improved},
      {make_action(ActionPhrase::ScaleIn, 2), Outcome::Degraded}};
  const std::vector<RootLabel> root = {{4, ResourceType::Cpu}, {9, ResourceType::Disk}};
  const auto text = compose("observed", "cpu hog", claims, root);
  const auto out = parse_text(text);
  EXPECT_TRUE(out.violations.empty());
  EXPECT_EQ(out.counterfactual, claims);
  EXPECT_EQ(out.root, root);
  const auto again = parse_text(serialize(out));
  EXPECT_TRUE(again.segments_equal(out));
  EXPECT_EQ(render_root({}), "NONE");
  EXPECT_EQ(render_claims({}), "NONE");
}

std::string random_words(Rng& rng) {
  static const char* pool[] = {"cpu", "HIGH", "#3", "@C", "lat", "is", "rising", "->", "ok", "1.5",
                               "slo", "VIOLATED", "IF", "x", "(", ")", "NONE"};
  std::string s;
  const auto n = 1 + rng.below(8);
  for (std::size_t i = 0; i < n; ++i) {
    if (i) s += rng.bernoulli(0.2) ? "\n" : " ";
    s += pool[rng.below(std::size(pool))];
  }
  return s;
}

TEST(Compose, RandomRoundTripProperty) {
  Rng rng(21);
  const ActionPhrase phrases[] = {ActionPhrase::ScaleOut, ActionPhrase::ScaleIn,
                                  ActionPhrase::CpuUp,    ActionPhrase::CpuDown,
                                  ActionPhrase::MemUp,    ActionPhrase::MemDown};
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<CounterfactualClaim> claims;
    for (std::size_t i = 0, n = rng.below(4); i < n; ++i) {
      claims.push_back({make_action(phrases[rng.below(6)],
                                    static_cast<ServiceId>(1 + rng.below(20)),
                                    static_cast<int>(rng.below(3)) * 100),
                        static_cast<Outcome>(rng.below(3))});
    }
    std::vector<RootLabel> root;
    for (std::size_t i = 0, n = rng.below(3); i < n; ++i) {
      const RootLabel l{static_cast<ServiceId>(1 + rng.below(20)),
                        static_cast<ResourceType>(rng.below(4))};
      if (std::find(root.begin(), root.end(), l) == root.end()) root.push_back(l);
    }
    const auto out = parse_text(compose(random_words(rng), random_words(rng), claims, root));
    ASSERT_TRUE(out.violations.empty()) << trial;
    ASSERT_EQ(out.counterfactual, claims);
    ASSERT_EQ(out.root, root);
    const auto again = parse_text(serialize(out));
    ASSERT_TRUE(again.violations.empty());
    ASSERT_TRUE(again.segments_equal(out)) << trial;
  }
}

TEST(Parse, TotalOnRandomTokens) {
  Rng rng(99);
  const auto tags = toks({"<think>", "</think>", "<Fault>", "</Fault>", "<Counterfactual>",
                          "</Counterfactual>", "<root>", "</root>"});
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<TokenId> seq(rng.below(40));
    for (auto& t : seq) {
      t = rng.bernoulli(0.3) ? tags[rng.below(tags.size())]
                             : static_cast<TokenId>(rng.below(V().size()));
    }
    const auto out = parse(seq);
    const auto checks = count_format_checks(out);
    ASSERT_EQ(checks.total, 12);
    ASSERT_GE(checks.invalid, 0);
    ASSERT_LE(checks.invalid, 12);
    ASSERT_LE(reasoning_length(out), static_cast<int>(seq.size()));
    for (const auto& c : interpret(out)) {
      ASSERT_EQ(c.predicted, Outcome::Improved);
      ASSERT_NE(std::find(out.counterfactual.begin(), out.counterfactual.end(), c),
                out.counterfactual.end());
    }
    for (const auto& l : out.root) {
      ASSERT_GE(l.service, 1);
      ASSERT_LE(l.service, kMaxServiceId);
    }
  }
}

TEST(ScanSections, FindsHeaders) {
  const auto ids = V().tokenize("[GUIDANCE]\nx [ y ]\n[TASK_RCA]");
  EXPECT_EQ(scan_sections(ids), (std::vector<std::string>{"[GUIDANCE]", "[TASK_RCA]"}));
}

}  // namespace
}  // namespace cotctl::cot
