#include "cotctl/prompt.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace cotctl::encoder {

std::string_view to_string(Task t) {
  return t == Task::Allocation ? "allocation" : "rca";
}

namespace {

constexpr std::string_view kRcaGuidance =
    "You are the resource manager of a microservice cluster. Observe the cluster state, "
    "analyze which service and which resource dimension explain any SLO violation, and "
    "name the root causes. Reason only from the sections below.";

constexpr std::string_view kAllocateGuidance =
    "You are the resource manager of a microservice cluster. Observe the cluster state and "
    "the carrier of past action effects, propose counterfactual scaling actions, and predict "
    "whether each one improves the SLO situation. Only actions predicted IMPROVED are executed.";

constexpr std::string_view kExpectedOutput =
    "Answer with exactly four tagged segments in this order:\n"
    "<think> observations and analysis </think>\n"
    "<Fault> suspected faults </Fault>\n"
    "<Counterfactual> one claim per line: IF ACTION #id [amount] THEN IMPROVED|NEUTRAL|DEGRADED, "
    "ACTION one of SCALE_OUT SCALE_IN CPU_UP CPU_DOWN MEM_UP MEM_DOWN, or NONE </Counterfactual>\n"
    "<root> root causes as #id @P pairs with P one of C D M N, or NONE </root>";

std::string format_rate(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

}  // namespace

std::string render_state(const DiscretizedState& state) {
  std::ostringstream os;
  os << "tick " << state.tick << " arrival " << to_string(state.arrival);
  for (const auto& s : state.services) {
    os << "\n#" << s.id << " cpu " << to_string(s.cpu) << " mem " << to_string(s.mem) << " lat "
       << to_string(s.latency) << " replicas " << s.replicas << " ready " << s.ready << " slo "
       << to_string(s.slo);
  }
  return os.str();
}

Prompt aggregate_prompt(const PromptInputs& in) {
  if (in.state == nullptr) throw std::invalid_argument("prompt requires a discretized state");
  if (in.task == Task::Allocation && in.carrier == nullptr) {
    throw std::invalid_argument("allocation prompt requires a carrier");
  }

  Prompt p;
  p.task = in.task;
  p.guidance = std::string(in.task == Task::Allocation ? kAllocateGuidance : kRcaGuidance);
  p.deployments = std::string(in.deployments);
  p.call_graph = std::string(in.call_graph);
  p.expected_schema = std::string(kExpectedOutput);
  p.cluster_state = render_state(*in.state);
  if (in.forecast) {
    p.cluster_state += "\nforecast " + format_rate(in.forecast->rate) + " rps";
    if (in.forecast->confidence) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.2f", *in.forecast->confidence);
      p.cluster_state += std::string(" confidence ") + buf;
    }
  }
  if (in.task == Task::Allocation) p.carrier = in.carrier->to_text();
  p.state = *in.state;

  std::string text;
  auto section = [&text](std::string_view header, const std::string& body) {
    text += header;
    text += '\n';
    text += body;
    text += '\n';
  };
  section(kGuidanceHeader, p.guidance);
  section(kDeploymentsHeader, p.deployments);
  section(kCallGraphHeader, p.call_graph);
  section(kExpectedOutputHeader, p.expected_schema);
  section(kClusterStateHeader, p.cluster_state);
  if (in.task == Task::Allocation) section(kCarrierHeader, p.carrier);
  text += in.task == Task::Allocation ? kAllocateTaskToken : kRcaTaskToken;

  p.text = std::move(text);
  p.tokens = Vocabulary::standard().tokenize(p.text);
  return p;
}

}  // namespace cotctl::encoder
