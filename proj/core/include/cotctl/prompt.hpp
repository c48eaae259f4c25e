#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cotctl/carrier.hpp"
#include "cotctl/encoder.hpp"
#include "cotctl/simulator.hpp"
#include "cotctl/vocabulary.hpp"

namespace cotctl::encoder {

enum class Task { RootCauseIdentification, Allocation };

std::string_view to_string(Task t);

inline constexpr std::string_view kGuidanceHeader = "[GUIDANCE]";
inline constexpr std::string_view kDeploymentsHeader = "[DEPLOYMENTS]";
inline constexpr std::string_view kCallGraphHeader = "[CALL_GRAPH]";
inline constexpr std::string_view kExpectedOutputHeader = "[EXPECTED_OUTPUT]";
inline constexpr std::string_view kClusterStateHeader = "[CLUSTER_STATE]";
inline constexpr std::string_view kCarrierHeader = "[CARRIER]";
inline constexpr std::string_view kRcaTaskToken = "[TASK_RCA]";
inline constexpr std::string_view kAllocateTaskToken = "[TASK_ALLOCATE]";

struct Prompt {
  Task task = Task::RootCauseIdentification;
  std::string guidance;
  std::string deployments;
  std::string call_graph;
  std::string expected_schema;
  std::string cluster_state;
  std::string carrier;  // empty for RCA prompts

  std::string text;
  std::vector<TokenId> tokens;  // standard vocabulary; last token is the task marker

  // Structured side channel for non-language backends (oracle, threshold rule).
  std::optional<DiscretizedState> state;
  std::shared_ptr<const sim::ClusterState> observed;
};

struct PromptInputs {
  const DiscretizedState* state = nullptr;
  std::string_view call_graph;
  const Carrier* carrier = nullptr;  // required for Allocation
  std::optional<WorkloadForecast> forecast;
  std::string_view deployments;
  Task task = Task::RootCauseIdentification;
};

/// Deterministic five-section prompt: Guidance, Deployments, Call Graph,
/// Expected Output, Cluster State, plus Carrier for allocation prompts.
Prompt aggregate_prompt(const PromptInputs& in);

/// Renders a discretized state the way the Cluster State section does.
std::string render_state(const DiscretizedState& state);

}  // namespace cotctl::encoder
