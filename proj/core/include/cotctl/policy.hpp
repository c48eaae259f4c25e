#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cotctl/cot.hpp"
#include "cotctl/encoder.hpp"
#include "cotctl/prompt.hpp"
#include "cotctl/thresholds.hpp"
#include "cotctl/types.hpp"
#include "cotctl/vocabulary.hpp"

namespace cotctl::policy {

struct Sample {
  std::vector<TokenId> tokens;
  std::optional<std::vector<double>> logprobs;  // per token, when the backend exposes them
  std::string text;
};

/// Prompt in, G token sequences out. Implementations must be deterministic
/// for a fixed seed.
class PolicyBackend {
 public:
  virtual ~PolicyBackend() = default;
  virtual std::vector<Sample> generate(const encoder::Prompt& prompt, int count,
                                       std::uint64_t seed) const = 0;
  virtual bool trainable() const { return false; }
  virtual std::string_view name() const = 0;
};

/// Supplies the ground-truth root causes behind a prompt (test and
/// evaluation wiring only).
using TruthChannel = std::function<LabelSet(const encoder::Prompt&)>;

/// Emits a violation-free output whose root segment equals the truth and
/// whose counterfactuals follow a fixed remedy map, all predicted IMPROVED.
class ScriptedOracle final : public PolicyBackend {
 public:
  explicit ScriptedOracle(TruthChannel truth);
  std::vector<Sample> generate(const encoder::Prompt& prompt, int count,
                               std::uint64_t seed) const override;
  std::string_view name() const override { return "oracle"; }

  /// The output text the oracle produces for a truth set.
  static std::string respond(const LabelSet& truth);

 private:
  TruthChannel truth_;
};

/// Remedies the oracle proposes for one root-cause label.
std::vector<ScalingAction> remedies(const RootLabel& label);

/// Scale out services whose CPU level is High, scale in services at Low with
/// more than one replica.
std::vector<ScalingAction> threshold_baseline(const encoder::DiscretizedState& state);

/// Threshold autoscaler expressed as counterfactual claims. CPU levels are
/// recomputed from the prompt's observed cluster state with the policy's
/// own cuts when available (default upper cut 0.75).
class ThresholdPolicy final : public PolicyBackend {
 public:
  explicit ThresholdPolicy(Cuts cpu_cuts = Cuts{0.5, 0.75});
  std::vector<ScalingAction> decide(const encoder::Prompt& prompt) const;
  std::vector<Sample> generate(const encoder::Prompt& prompt, int count,
                               std::uint64_t seed) const override;
  std::string_view name() const override { return "threshold"; }

 private:
  Cuts cpu_cuts_;
};

/// Never proposes anything.
class NoopPolicy final : public PolicyBackend {
 public:
  std::vector<Sample> generate(const encoder::Prompt& prompt, int count,
                               std::uint64_t seed) const override;
  std::string_view name() const override { return "noop"; }
};

/// Wraps output text into a sample tokenized with the standard vocabulary.
Sample text_sample(std::string text);

/// Parses a sample through its text when present, its tokens otherwise.
cot::CotOutput parse_sample(const Sample& sample);

/// Truth channel reading active faults off the prompt's observed state.
TruthChannel observed_truth();

}  // namespace cotctl::policy
