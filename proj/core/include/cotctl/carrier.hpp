#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cotctl/encoder.hpp"
#include "cotctl/types.hpp"

namespace cotctl::encoder {

enum class Effect { Improves, Neutral, Degrades };

std::string_view to_string(Effect e);

struct EffectStat {
  ActionPhrase phrase = ActionPhrase::ScaleOut;
  Effect effect = Effect::Neutral;
  int support = 0;

  friend bool operator==(const EffectStat&, const EffectStat&) = default;
};

struct CarrierCluster {
  std::vector<int> centroid;  // medoid feature vector
  int members = 0;
  std::vector<EffectStat> effects;  // ordered by ActionPhrase

  friend bool operator==(const CarrierCluster&, const CarrierCluster&) = default;
};

/// Clustered summary of (state, action, outcome) history.
struct Carrier {
  std::vector<ServiceId> services;  // feature layout, ascending
  std::vector<CarrierCluster> clusters;
  std::vector<int> assignment;  // history index -> cluster index

  bool empty() const { return clusters.empty(); }
  std::string to_text() const;
  /// Index of the cluster whose centroid is nearest (Hamming) to `features`.
  std::size_t nearest(std::span<const int> features) const;

  friend bool operator==(const Carrier&, const Carrier&) = default;
};

struct HistoryEntry {
  DiscretizedState state;
  ScalingAction action;
  Outcome outcome = Outcome::Neutral;
};

int hamming(std::span<const int> a, std::span<const int> b);

/// k-medoids (greedy build + swap) over the discretized feature vectors with
/// Hamming distance. k is reduced to the number of distinct states. Each
/// cluster reports, per directional action, the majority outcome of its
/// members (ties are Neutral). Throws std::invalid_argument on empty history
/// or k < 1.
Carrier build_carrier(std::span<const HistoryEntry> history, int k);

std::string carrier_to_json(const Carrier& carrier);
Carrier carrier_from_json(std::string_view json);
void save_carrier(const Carrier& carrier, const std::filesystem::path& path);
Carrier load_carrier(const std::filesystem::path& path);

}  // namespace cotctl::encoder
