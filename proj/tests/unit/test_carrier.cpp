#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <limits>
#include <map>
#include <numeric>

#include "cotctl/carrier.hpp"
#include "cotctl/error.hpp"
#include "cotctl/rng.hpp"

namespace cotctl::encoder {
namespace {

DiscretizedState state_from(std::vector<int> levels) {
  // levels = [arrival, cpu1, mem1, lat1, cpu2, mem2, lat2]
  DiscretizedState s;
  s.arrival = static_cast<Level>(levels[0]);
  for (int i = 0; i < 2; ++i) {
    ServiceObservation o;
    o.id = i + 1;
    o.cpu = static_cast<Level>(levels[1 + 3 * i]);
    o.mem = static_cast<Level>(levels[2 + 3 * i]);
    o.latency = static_cast<Level>(levels[3 + 3 * i]);
    o.replicas = 1;
    o.ready = 1;
    s.services.push_back(o);
  }
  return s;
}

HistoryEntry entry(std::vector<int> levels, ActionPhrase p, Outcome o) {
  return HistoryEntry{state_from(std::move(levels)), make_action(p, 1), o};
}

int cost(const std::vector<HistoryEntry>& history, const std::vector<std::vector<int>>& medoids) {
  int total = 0;
  for (const auto& h : history) {
    const auto f = h.state.features();
    int best = std::numeric_limits<int>::max();
    for (const auto& m : medoids) best = std::min(best, hamming(f, m));
    total += best;
  }
  return total;
}

TEST(Carrier, IdenticalHistorySingleCluster) {
  std::vector<HistoryEntry> h(6, entry({1, 1, 0, 0, 0, 0, 0}, ActionPhrase::ScaleOut,
                                       Outcome::Improved));
  const auto c = build_carrier(h, 1);
  ASSERT_EQ(c.clusters.size(), 1u);
  EXPECT_EQ(c.clusters[0].members, 6);
  ASSERT_EQ(c.clusters[0].effects.size(), 1u);
  EXPECT_EQ(c.clusters[0].effects[0].phrase, ActionPhrase::ScaleOut);
  EXPECT_EQ(c.clusters[0].effects[0].effect, Effect::Improves);
  EXPECT_EQ(c.clusters[0].effects[0].support, 6);
}

TEST(Carrier, TieIsNeutral) {
  std::vector<HistoryEntry> h = {
      entry({0, 0, 0, 0, 0, 0, 0}, ActionPhrase::CpuUp, Outcome::Improved),
      entry({0, 0, 0, 0, 0, 0, 0}, ActionPhrase::CpuUp, Outcome::Degraded),
      entry({0, 0, 0, 0, 0, 0, 0}, ActionPhrase::ScaleIn, Outcome::Degraded),
  };
  const auto c = build_carrier(h, 1);
  ASSERT_EQ(c.clusters[0].effects.size(), 2u);
  EXPECT_EQ(c.clusters[0].effects[0].phrase, ActionPhrase::ScaleIn);
  EXPECT_EQ(c.clusters[0].effects[0].effect, Effect::Degrades);
  EXPECT_EQ(c.clusters[0].effects[1].phrase, ActionPhrase::CpuUp);
  EXPECT_EQ(c.clusters[0].effects[1].effect, Effect::Neutral);
  EXPECT_EQ(c.clusters[0].effects[1].support, 2);
}

TEST(Carrier, NoOpActionsCarryNoEffect) {
  std::vector<HistoryEntry> h = {
      HistoryEntry{state_from({0, 0, 0, 0, 0, 0, 0}), ScalingAction::noop(1), Outcome::Improved}};
  const auto c = build_carrier(h, 1);
  EXPECT_TRUE(c.clusters[0].effects.empty());
  EXPECT_EQ(c.clusters[0].members, 1);
}

TEST(Carrier, SeparatedGroupsMatchBruteForce) {
  std::vector<HistoryEntry> h = {
      entry({0, 0, 0, 0, 0, 0, 0}, ActionPhrase::ScaleIn, Outcome::Neutral),
      entry({0, 0, 0, 0, 0, 0, 1}, ActionPhrase::ScaleIn, Outcome::Neutral),
      entry({0, 1, 0, 0, 0, 0, 0}, ActionPhrase::ScaleIn, Outcome::Neutral),
      entry({0, 0, 0, 0, 0, 0, 0}, ActionPhrase::ScaleIn, Outcome::Neutral),
      entry({2, 2, 2, 2, 2, 2, 2}, ActionPhrase::ScaleOut, Outcome::Improved),
      entry({2, 2, 2, 2, 2, 2, 1}, ActionPhrase::ScaleOut, Outcome::Improved),
      entry({2, 2, 1, 2, 2, 2, 2}, ActionPhrase::ScaleOut, Outcome::Improved),
      entry({2, 2, 2, 2, 2, 2, 2}, ActionPhrase::ScaleOut, Outcome::Improved),
      entry({1, 0, 1, 2, 2, 1, 0}, ActionPhrase::MemUp, Outcome::Degraded),
      entry({1, 0, 1, 2, 2, 1, 1}, ActionPhrase::MemUp, Outcome::Degraded),
      entry({1, 0, 1, 2, 2, 1, 0}, ActionPhrase::MemUp, Outcome::Degraded),
      entry({1, 0, 1, 1, 2, 1, 0}, ActionPhrase::MemUp, Outcome::Degraded),
  };
  const auto c = build_carrier(h, 3);
  ASSERT_EQ(c.clusters.size(), 3u);

  // Exhaustive search over medoid triples drawn from the history's states.
  std::vector<std::vector<int>> points;
  for (const auto& e : h) points.push_back(e.state.features());
  int best = std::numeric_limits<int>::max();
  for (std::size_t a = 0; a < points.size(); ++a)
    for (std::size_t b = a + 1; b < points.size(); ++b)
      for (std::size_t d = b + 1; d < points.size(); ++d)
        best = std::min(best, cost(h, {points[a], points[b], points[d]}));
  std::vector<std::vector<int>> medoids;
  for (const auto& cl : c.clusters) medoids.push_back(cl.centroid);
  EXPECT_EQ(cost(h, medoids), best);

  for (int g = 0; g < 3; ++g) {
    for (int i = 1; i < 4; ++i) {
      EXPECT_EQ(c.assignment[4 * g + i], c.assignment[4 * g]) << "group " << g;
    }
  }
  EXPECT_NE(c.assignment[0], c.assignment[4]);
  EXPECT_NE(c.assignment[0], c.assignment[8]);
  EXPECT_NE(c.assignment[4], c.assignment[8]);
  EXPECT_EQ(c.clusters[static_cast<std::size_t>(c.assignment[4])].effects[0].effect,
            Effect::Improves);
}

TEST(Carrier, PartitionsHistory) {
  Rng rng(4);
  std::vector<HistoryEntry> h;
  for (int i = 0; i < 60; ++i) {
    std::vector<int> levels(7);
    for (int& l : levels) l = static_cast<int>(rng.below(3));
    h.push_back(entry(levels, static_cast<ActionPhrase>(rng.below(6)),
                      static_cast<Outcome>(rng.below(3))));
  }
  for (int k : {1, 2, 4, 7}) {
    const auto c = build_carrier(h, k);
    ASSERT_LE(c.clusters.size(), static_cast<std::size_t>(k));
    ASSERT_EQ(c.assignment.size(), h.size());
    std::vector<int> counts(c.clusters.size(), 0);
    for (int a : c.assignment) {
      ASSERT_GE(a, 0);
      ASSERT_LT(a, static_cast<int>(c.clusters.size()));
      ++counts[static_cast<std::size_t>(a)];
    }
    for (std::size_t i = 0; i < counts.size(); ++i) {
      EXPECT_EQ(counts[i], c.clusters[i].members);
      EXPECT_GE(c.clusters[i].members, 1);
      for (const auto& e : c.clusters[i].effects) EXPECT_GE(e.support, 1);
    }
    for (std::size_t i = 0; i < h.size(); ++i) {
      EXPECT_EQ(c.nearest(h[i].state.features()), static_cast<std::size_t>(c.assignment[i]));
    }
  }
}

TEST(Carrier, KReducedToDistinctStates) {
  std::vector<HistoryEntry> h = {
      entry({0, 0, 0, 0, 0, 0, 0}, ActionPhrase::ScaleIn, Outcome::Neutral),
      entry({2, 2, 2, 2, 2, 2, 2}, ActionPhrase::ScaleOut, Outcome::Improved),
      entry({0, 0, 0, 0, 0, 0, 0}, ActionPhrase::ScaleIn, Outcome::Neutral),
  };
  EXPECT_EQ(build_carrier(h, 5).clusters.size(), 2u);
}

TEST(Carrier, RejectsBadInput) {
  std::vector<HistoryEntry> h = {entry({0, 0, 0, 0, 0, 0, 0}, ActionPhrase::ScaleIn,
                                       Outcome::Neutral)};
  EXPECT_THROW(build_carrier({}, 1), std::invalid_argument);
  EXPECT_THROW(build_carrier(h, 0), std::invalid_argument);
  const std::vector<int> a = {1, 2}, b = {1};
  EXPECT_THROW(hamming(a, b), std::invalid_argument);
}

TEST(Carrier, JsonRoundTrip) {
  std::vector<HistoryEntry> h = {
      entry({0, 0, 0, 0, 0, 0, 0}, ActionPhrase::ScaleIn, Outcome::Neutral),
      entry({2, 2, 2, 2, 2, 2, 2}, ActionPhrase::ScaleOut, Outcome::Improved),
      entry({2, 2, 2, 2, 2, 1, 2}, ActionPhrase::CpuUp, Outcome::Degraded),
  };
  const auto c = build_carrier(h, 2);
  EXPECT_EQ(carrier_from_json(carrier_to_json(c)), c);

  const auto path = std::filesystem::temp_directory_path() / "cotctl_carrier_test.json";
  save_carrier(c, path);
  EXPECT_EQ(load_carrier(path), c);
  std::filesystem::remove(path);

  EXPECT_THROW(carrier_from_json("{\"format\": \"other\"}"), ConfigError);
  EXPECT_THROW(carrier_from_json("not json"), ConfigError);
  EXPECT_THROW(load_carrier("/nonexistent/dir/carrier.json"), IoError);
}

TEST(Carrier, TextRendering) {
  std::vector<HistoryEntry> h(2, entry({2, 2, 0, 1, 0, 0, 0}, ActionPhrase::ScaleOut,
                                       Outcome::Improved));
  const auto text = build_carrier(h, 1).to_text();
  EXPECT_NE(text.find("cluster 1 support 2 arrival HIGH #1 HIGH LOW MEDIUM #2 LOW LOW LOW"), std::string::npos);
  EXPECT_NE(text.find("SCALE_OUT IMPROVES support 2"), std::string::npos) << text;
  EXPECT_EQ(Carrier{}.to_text(), "NONE");
}

}  // namespace
}  // namespace cotctl::encoder
