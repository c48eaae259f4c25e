#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>

namespace cotctl {

using ServiceId = int;
using MachineId = int;
using Tick = std::int64_t;

// Service identifiers are rendered as the `#1`..`#20` tokens.
inline constexpr ServiceId kMaxServiceId = 20;

enum class ResourceType { Cpu, Disk, Memory, Network };

std::string_view to_string(ResourceType r);
std::optional<ResourceType> parse_resource(std::string_view s);

// 'C', 'D', 'M', 'N'; lowercase when `upstream` is set.
char profile_letter(ResourceType r, bool upstream = false);
std::optional<ResourceType> resource_from_letter(char c);

enum class ActionKind { Horizontal, VerticalCpu, VerticalMem };

std::string_view to_string(ActionKind k);

struct ScalingAction {
  ServiceId service_id = 0;
  ActionKind kind = ActionKind::Horizontal;
  // Replicas for Horizontal, millicores for VerticalCpu, MiB for VerticalMem.
  int delta = 0;
  bool no_op = false;

  static ScalingAction noop(ServiceId service) {
    return ScalingAction{service, ActionKind::Horizontal, 0, true};
  }

  bool well_formed() const { return no_op ? delta == 0 : delta != 0; }

  friend auto operator<=>(const ScalingAction&, const ScalingAction&) = default;
};

// Directional action vocabulary used by the counterfactual micro-syntax.
enum class ActionPhrase { ScaleOut, ScaleIn, CpuUp, CpuDown, MemUp, MemDown };

std::string_view to_string(ActionPhrase p);
std::optional<ActionPhrase> parse_action_phrase(std::string_view s);
std::optional<ActionPhrase> phrase_of(const ScalingAction& a);
// `magnitude` <= 0 selects the default step for the phrase's kind.
ScalingAction make_action(ActionPhrase p, ServiceId service, int magnitude = 0);
int default_step(ActionKind k);

std::string describe(const ScalingAction& a);

enum class Outcome { Improved, Neutral, Degraded };

std::string_view to_string(Outcome o);
std::optional<Outcome> parse_outcome(std::string_view s);

struct RootLabel {
  ServiceId service = 0;
  ResourceType resource = ResourceType::Cpu;

  friend auto operator<=>(const RootLabel&, const RootLabel&) = default;
};

using LabelSet = std::set<RootLabel>;

}  // namespace cotctl
