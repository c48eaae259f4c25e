#include "cotctl/types.hpp"

#include <array>
#include <cctype>
#include <cstdlib>
#include <utility>

namespace cotctl {

namespace {

constexpr std::array<std::pair<ResourceType, std::string_view>, 4> kResourceNames{{
    {ResourceType::Cpu, "CPU"},
    {ResourceType::Disk, "Disk"},
    {ResourceType::Memory, "Memory"},
    {ResourceType::Network, "Network"},
}};

constexpr std::array<std::pair<ActionPhrase, std::string_view>, 6> kPhraseNames{{
    {ActionPhrase::ScaleOut, "SCALE_OUT"},
    {ActionPhrase::ScaleIn, "SCALE_IN"},
    {ActionPhrase::CpuUp, "CPU_UP"},
    {ActionPhrase::CpuDown, "CPU_DOWN"},
    {ActionPhrase::MemUp, "MEM_UP"},
    {ActionPhrase::MemDown, "MEM_DOWN"},
}};

constexpr std::array<std::pair<Outcome, std::string_view>, 3> kOutcomeNames{{
    {Outcome::Improved, "IMPROVED"},
    {Outcome::Neutral, "NEUTRAL"},
    {Outcome::Degraded, "DEGRADED"},
}};

bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(a[i])) !=
        std::tolower(static_cast<unsigned char>(b[i]))) {
      return false;
    }
  }
  return true;
}

}  // namespace

std::string_view to_string(ResourceType r) {
  for (const auto& [value, name] : kResourceNames) {
    if (value == r) return name;
  }
  return "?";
}

std::optional<ResourceType> parse_resource(std::string_view s) {
  for (const auto& [value, name] : kResourceNames) {
    if (iequals(name, s)) return value;
  }
  if (iequals(s, "Mem")) return ResourceType::Memory;
  if (iequals(s, "Net")) return ResourceType::Network;
  return std::nullopt;
}

char profile_letter(ResourceType r, bool upstream) {
  char c = 'C';
  switch (r) {
    case ResourceType::Cpu: c = 'C'; break;
    case ResourceType::Disk: c = 'D'; break;
    case ResourceType::Memory: c = 'M'; break;
    case ResourceType::Network: c = 'N'; break;
  }
  return upstream ? static_cast<char>(std::tolower(c)) : c;
}

std::optional<ResourceType> resource_from_letter(char c) {
  switch (std::toupper(static_cast<unsigned char>(c))) {
    case 'C': return ResourceType::Cpu;
    case 'D': return ResourceType::Disk;
    case 'M': return ResourceType::Memory;
    case 'N': return ResourceType::Network;
    default: return std::nullopt;
  }
}

std::string_view to_string(ActionKind k) {
  switch (k) {
    case ActionKind::Horizontal: return "Horizontal";
    case ActionKind::VerticalCpu: return "VerticalCpu";
    case ActionKind::VerticalMem: return "VerticalMem";
  }
  return "?";
}

std::string_view to_string(ActionPhrase p) {
  for (const auto& [value, name] : kPhraseNames) {
    if (value == p) return name;
  }
  return "?";
}

std::optional<ActionPhrase> parse_action_phrase(std::string_view s) {
  for (const auto& [value, name] : kPhraseNames) {
    if (name == s) return value;
  }
  return std::nullopt;
}

std::optional<ActionPhrase> phrase_of(const ScalingAction& a) {
  if (a.no_op || a.delta == 0) return std::nullopt;
  const bool up = a.delta > 0;
  switch (a.kind) {
    case ActionKind::Horizontal: return up ? ActionPhrase::ScaleOut : ActionPhrase::ScaleIn;
    case ActionKind::VerticalCpu: return up ? ActionPhrase::CpuUp : ActionPhrase::CpuDown;
    case ActionKind::VerticalMem: return up ? ActionPhrase::MemUp : ActionPhrase::MemDown;
  }
  return std::nullopt;
}

int default_step(ActionKind k) {
  switch (k) {
    case ActionKind::Horizontal: return 1;
    case ActionKind::VerticalCpu: return 250;
    case ActionKind::VerticalMem: return 256;
  }
  return 1;
}

ScalingAction make_action(ActionPhrase p, ServiceId service, int magnitude) {
  ActionKind kind = ActionKind::Horizontal;
  int sign = 1;
  switch (p) {
    case ActionPhrase::ScaleOut: kind = ActionKind::Horizontal; break;
    case ActionPhrase::ScaleIn: kind = ActionKind::Horizontal; sign = -1; break;
    case ActionPhrase::CpuUp: kind = ActionKind::VerticalCpu; break;
    case ActionPhrase::CpuDown: kind = ActionKind::VerticalCpu; sign = -1; break;
    case ActionPhrase::MemUp: kind = ActionKind::VerticalMem; break;
    case ActionPhrase::MemDown: kind = ActionKind::VerticalMem; sign = -1; break;
  }
  const int size = magnitude > 0 ? magnitude : default_step(kind);
  return ScalingAction{service, kind, sign * size, false};
}

std::string describe(const ScalingAction& a) {
  if (a.no_op) return "NO_OP #" + std::to_string(a.service_id);
  const auto phrase = phrase_of(a);
  return std::string(phrase ? to_string(*phrase) : "INVALID") + " #" +
         std::to_string(a.service_id) + " " + std::to_string(std::abs(a.delta));
}

std::string_view to_string(Outcome o) {
  for (const auto& [value, name] : kOutcomeNames) {
    if (value == o) return name;
  }
  return "?";
}

std::optional<Outcome> parse_outcome(std::string_view s) {
  for (const auto& [value, name] : kOutcomeNames) {
    if (iequals(name, s)) return value;
  }
  return std::nullopt;
}

}  // namespace cotctl
