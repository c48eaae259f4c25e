#include "cotctl/policy.hpp"

#include <algorithm>

#include "cotctl/cot.hpp"

namespace cotctl::policy {

Sample text_sample(std::string text) {
  Sample s;
  s.tokens = Vocabulary::standard().tokenize(text);
  s.text = std::move(text);
  return s;
}

cot::CotOutput parse_sample(const Sample& sample) {
  if (!sample.text.empty()) return cot::parse_text(sample.text);
  return cot::parse(sample.tokens);
}

TruthChannel observed_truth() {
  return [](const encoder::Prompt& prompt) {
    return prompt.observed ? sim::ground_truth_labels(*prompt.observed) : LabelSet{};
  };
}

std::vector<ScalingAction> remedies(const RootLabel& label) {
  switch (label.resource) {
    case ResourceType::Cpu:
      return {make_action(ActionPhrase::CpuUp, label.service),
              make_action(ActionPhrase::ScaleOut, label.service)};
    case ResourceType::Memory:
      return {make_action(ActionPhrase::MemUp, label.service)};
    case ResourceType::Network:
    case ResourceType::Disk:
      return {make_action(ActionPhrase::ScaleOut, label.service)};
  }
  return {};
}

ScriptedOracle::ScriptedOracle(TruthChannel truth) : truth_(std::move(truth)) {}

std::string ScriptedOracle::respond(const LabelSet& truth) {
  std::vector<RootLabel> root(truth.begin(), truth.end());
  std::vector<cot::CounterfactualClaim> claims;
  for (const auto& label : root) {
    for (const auto& a : remedies(label)) claims.push_back({a, Outcome::Improved});
  }
  std::string fault;
  if (root.empty()) {
    fault = "NONE";
  } else {
    for (const auto& label : root) {
      if (!fault.empty()) fault += ' ';
      fault += std::string(to_string(label.resource)) + " #" + std::to_string(label.service);
    }
  }
  const std::string think =
      root.empty() ? "slo OK" : "slo VIOLATED at " + std::to_string(root.size()) + " cause";
  return cot::compose(think, fault, claims, root);
}

std::vector<Sample> ScriptedOracle::generate(const encoder::Prompt& prompt, int count,
                                             std::uint64_t /*seed*/) const {
  const auto text = respond(truth_(prompt));
  return std::vector<Sample>(static_cast<std::size_t>(std::max(count, 1)), text_sample(text));
}

std::vector<ScalingAction> threshold_baseline(const encoder::DiscretizedState& state) {
  std::vector<ScalingAction> out;
  for (const auto& s : state.services) {
    if (s.cpu == encoder::Level::High) {
      out.push_back(make_action(ActionPhrase::ScaleOut, s.id, 1));
    } else if (s.cpu == encoder::Level::Low && s.replicas > 1) {
      out.push_back(make_action(ActionPhrase::ScaleIn, s.id, 1));
    }
  }
  return out;
}

ThresholdPolicy::ThresholdPolicy(Cuts cpu_cuts) : cpu_cuts_(cpu_cuts) {}

std::vector<ScalingAction> ThresholdPolicy::decide(const encoder::Prompt& prompt) const {
  if (prompt.observed) {
    encoder::DiscretizedState view;
    view.tick = prompt.observed->tick;
    for (const auto& svc : prompt.observed->services) {
      encoder::ServiceObservation obs;
      obs.id = svc.id;
      obs.cpu = encoder::bin(svc.cpu_utilization, cpu_cuts_);
      obs.replicas = svc.replica_count();
      obs.ready = svc.ready_count();
      view.services.push_back(obs);
    }
    return threshold_baseline(view);
  }
  if (prompt.state) return threshold_baseline(*prompt.state);
  return {};
}

std::vector<Sample> ThresholdPolicy::generate(const encoder::Prompt& prompt, int count,
                                              std::uint64_t /*seed*/) const {
  std::vector<cot::CounterfactualClaim> claims;
  for (const auto& a : decide(prompt)) claims.push_back({a, Outcome::Improved});
  const auto text = cot::compose("cpu threshold rule", "NONE", claims, {});
  return std::vector<Sample>(static_cast<std::size_t>(std::max(count, 1)), text_sample(text));
}

std::vector<Sample> NoopPolicy::generate(const encoder::Prompt& /*prompt*/, int count,
                                         std::uint64_t /*seed*/) const {
  const auto text = cot::compose("hold", "NONE", {}, {});
  return std::vector<Sample>(static_cast<std::size_t>(std::max(count, 1)), text_sample(text));
}

}  // namespace cotctl::policy
