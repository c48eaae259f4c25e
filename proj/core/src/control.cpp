#include "cotctl/control.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <ostream>
#include <set>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "cotctl/error.hpp"
#include "cotctl/rng.hpp"
#include "cotctl/toy_policy.hpp"

namespace cotctl::control {

void VerifierRules::validate() const {
  if (min_replicas < 1) throw ConfigError("verifier min_replicas must be >= 1");
  if (max_replicas < min_replicas) throw ConfigError("verifier max_replicas below min_replicas");
  if (max_total_millicores <= 0) throw ConfigError("verifier millicore budget must be > 0");
  if (max_replica_step < 1 || max_cpu_step < 1 || max_mem_step < 1) {
    throw ConfigError("verifier step limits must be >= 1");
  }
}

void ControlConfig::validate() const {
  if (!(interval_s > 0.0)) throw ConfigError("interval must be > 0");
  if (horizon < 0) throw ConfigError("horizon must be >= 0");
  if (candidates < 1) throw ConfigError("candidate count must be >= 1");
  if (agents < 1) throw ConfigError("agent count must be >= 1");
  if (carrier_k < 1) throw ConfigError("carrier k must be >= 1");
  if (gathering_ticks < 1) throw ConfigError("gathering duration must be >= 1 tick");
  if (!(perturb_probability >= 0.0 && perturb_probability <= 1.0)) {
    throw ConfigError("perturbation probability must be in [0, 1]");
  }
  if (carrier_refresh_intervals < 0) throw ConfigError("carrier refresh must be >= 0");
  if (forecast_window < 1) throw ConfigError("forecast window must be >= 1");
  if (latency_samples < 1) throw ConfigError("latency sample count must be >= 1");
  rules.validate();
  reward.validate();
}

int ControlConfig::interval_ticks(double dt) const {
  return std::max(1, static_cast<int>(std::llround(interval_s / dt)));
}

std::string_view to_string(RejectReason r) {
  switch (r) {
    case RejectReason::MinReplicas: return "MinReplicas";
    case RejectReason::MaxReplicas: return "MaxReplicas";
    case RejectReason::MachineCapacity: return "MachineCapacity";
    case RejectReason::TotalBudget: return "TotalBudget";
    case RejectReason::StepSize: return "StepSize";
    case RejectReason::Duplicate: return "Duplicate";
    case RejectReason::UnknownService: return "UnknownService";
    case RejectReason::Invalid: return "Invalid";
  }
  return "?";
}

std::int64_t total_millicores(const sim::ClusterState& state) {
  std::int64_t total = 0;
  for (const auto& s : state.services) total += s.replica_count() * s.reserved_cpu();
  return total;
}

namespace {

std::int64_t step_limit(ActionKind k, const VerifierRules& rules) {
  switch (k) {
    case ActionKind::Horizontal: return rules.max_replica_step;
    case ActionKind::VerticalCpu: return rules.max_cpu_step;
    case ActionKind::VerticalMem: return rules.max_mem_step;
  }
  return 0;
}

RejectReason reason_for(sim::Infeasibility i) {
  switch (i) {
    case sim::Infeasibility::UnknownService: return RejectReason::UnknownService;
    case sim::Infeasibility::BelowMinReplicas: return RejectReason::MinReplicas;
    case sim::Infeasibility::MachineCapacity: return RejectReason::MachineCapacity;
    case sim::Infeasibility::InvalidAllocation: return RejectReason::Invalid;
  }
  return RejectReason::Invalid;
}

}  // namespace

Verdict verify_actions(std::span<const ScalingAction> actions, const sim::ClusterState& state,
                       const sim::Simulator& simulator, const VerifierRules& rules) {
  Verdict verdict;
  // Actions land on the next tick's state, after pending resizes commit.
  sim::ClusterState scratch = simulator.begin_tick(state);
  std::set<std::pair<ServiceId, ActionKind>> seen;
  const double dt = simulator.scenario().params.dt_s;

  for (const auto& a : actions) {
    if (a.no_op) continue;
    auto reject = [&](RejectReason r) { verdict.rejected.push_back({a, r}); };
    if (!a.well_formed()) {
      reject(RejectReason::Invalid);
      continue;
    }
    if (!simulator.topology().has_service(a.service_id)) {
      reject(RejectReason::UnknownService);
      continue;
    }
    if (!seen.insert({a.service_id, a.kind}).second) {
      reject(RejectReason::Duplicate);
      continue;
    }
    if (std::abs(static_cast<std::int64_t>(a.delta)) > step_limit(a.kind, rules)) {
      reject(RejectReason::StepSize);
      continue;
    }
    const auto& svc = scratch.service(a.service_id);
    if (a.kind == ActionKind::Horizontal) {
      const int target = svc.replica_count() + a.delta;
      if (target < rules.min_replicas) {
        reject(RejectReason::MinReplicas);
        continue;
      }
      if (target > rules.max_replicas) {
        reject(RejectReason::MaxReplicas);
        continue;
      }
    }
    if (auto failure = simulator.check_feasible(scratch, a)) {
      reject(reason_for(*failure));
      continue;
    }
    sim::ClusterState trial = scratch;
    simulator.apply_action(trial, a, dt);
    const auto after = total_millicores(trial);
    if (after > rules.max_total_millicores && after > total_millicores(scratch)) {
      reject(RejectReason::TotalBudget);
      continue;
    }
    scratch = std::move(trial);
    verdict.accepted.push_back(a);
  }
  return verdict;
}

std::vector<ScalingAction> resolve_conflicts(std::span<const std::vector<ScalingAction>> proposals) {
  std::vector<ScalingAction> merged;
  std::map<std::pair<ServiceId, ActionKind>, std::size_t> slot;
  for (const auto& agent : proposals) {
    for (const auto& a : agent) {
      if (a.no_op) continue;
      const auto key = std::make_pair(a.service_id, a.kind);
      auto it = slot.find(key);
      if (it == slot.end()) {
        slot.emplace(key, merged.size());
        merged.push_back(a);
      } else if (a.delta > merged[it->second].delta) {
        merged[it->second] = a;
      }
    }
  }
  return merged;
}

namespace {

std::vector<ServiceSummary> summarize(const sim::ClusterState& state) {
  std::vector<ServiceSummary> out;
  for (const auto& s : state.services) {
    out.push_back(ServiceSummary{s.id, s.replica_count(), s.cpu_alloc, s.mem_alloc,
                                 s.replica_count() * s.reserved_cpu()});
  }
  return out;
}

TickMetrics metrics_of(const sim::Simulator& simulator, const sim::ClusterState& state) {
  const auto& scenario = simulator.scenario();
  const double slo = scenario.thresholds.slo_for(simulator.topology().entry());
  return TickMetrics{state.tick, state.arrival_rate, state.throughput_rps, state.latency_ms,
                     state.latency_ms > slo};
}

nlohmann::json action_json(const ScalingAction& a) {
  return {{"service", a.service_id},
          {"kind", std::string(to_string(a.kind))},
          {"delta", a.delta},
          {"text", describe(a)}};
}

struct Choice {
  std::size_t index = 0;
  cot::CotOutput output;
};

Choice choose_candidate(std::span<const policy::Sample> samples, const reward::RewardConfig& cfg) {
  Choice best;
  double best_score = -1e300;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    auto out = policy::parse_sample(samples[i]);
    const double score = reward::format_and_length(out, cfg);
    if (score > best_score) {
      best_score = score;
      best.index = i;
      best.output = std::move(out);
    }
  }
  return best;
}

}  // namespace

void write_episode_jsonl(std::ostream& out, const EpisodeRecord& r) {
  nlohmann::json doc;
  doc["tick"] = r.tick;
  doc["task"] = std::string(encoder::to_string(r.task));
  doc["pre_digest"] = r.pre_digest;
  doc["post_digest"] = r.post_digest;
  doc["format_failures"] = r.format_failures;
  doc["output"] = r.output;
  doc["claims"] = nlohmann::json::array();
  for (const auto& c : r.claims) {
    doc["claims"].push_back({{"action", action_json(c.action)},
                             {"predicted", std::string(to_string(c.predicted))}});
  }
  doc["executed"] = nlohmann::json::array();
  for (const auto& a : r.executed) doc["executed"].push_back(action_json(a));
  doc["rejected"] = nlohmann::json::array();
  for (const auto& rej : r.rejected) {
    doc["rejected"].push_back(
        {{"action", action_json(rej.action)}, {"reason", std::string(to_string(rej.reason))}});
  }
  doc["before"] = nlohmann::json::array();
  for (const auto& s : r.before) {
    doc["before"].push_back({{"service", s.id},
                             {"replicas", s.replicas},
                             {"cpu", s.cpu_alloc},
                             {"mem", s.mem_alloc},
                             {"reserved_cpu", s.reserved_cpu}});
  }
  if (r.reward) {
    doc["reward"] = {{"r_result", r.reward->r_result}, {"r_format", r.reward->r_format},
                     {"r_length", r.reward->r_length}, {"r_kl", r.reward->r_kl},
                     {"r_total", r.reward->r_total}};
  }
  if (r.outcome) doc["outcome"] = std::string(to_string(*r.outcome));
  doc["online_update"] = r.online_update;
  if (!r.error.empty()) doc["error"] = r.error;
  doc["prompt"] = r.prompt;
  out << doc.dump() << '\n';
}

std::vector<std::string> audit(std::span<const EpisodeRecord> records, const VerifierRules& rules) {
  std::vector<std::string> problems;
  for (const auto& r : records) {
    const std::string where = "tick " + std::to_string(r.tick) + ": ";
    std::map<ServiceId, ServiceSummary> svc;
    std::int64_t before_total = 0;
    for (const auto& s : r.before) {
      svc[s.id] = s;
      before_total += s.reserved_cpu;
    }
    std::set<std::pair<ServiceId, ActionKind>> seen;
    for (const auto& a : r.executed) {
      const std::string what = where + describe(a);
      if (!a.well_formed() || a.no_op) problems.push_back(what + " is not an executable action");
      if (!seen.insert({a.service_id, a.kind}).second) problems.push_back(what + " duplicated");
      if (std::abs(static_cast<std::int64_t>(a.delta)) > step_limit(a.kind, rules)) {
        problems.push_back(what + " exceeds the step limit");
      }
      auto it = svc.find(a.service_id);
      if (it == svc.end()) {
        problems.push_back(what + " targets an unknown service");
        continue;
      }
      auto& s = it->second;
      const std::int64_t per_replica = s.replicas > 0 ? s.reserved_cpu / s.replicas : 0;
      switch (a.kind) {
        case ActionKind::Horizontal:
          s.replicas += a.delta;
          if (s.replicas < rules.min_replicas) problems.push_back(what + " drops below min replicas");
          if (s.replicas > rules.max_replicas) problems.push_back(what + " exceeds max replicas");
          s.reserved_cpu = per_replica * s.replicas;
          break;
        case ActionKind::VerticalCpu:
          s.cpu_alloc += a.delta;
          if (s.cpu_alloc <= 0) problems.push_back(what + " leaves no CPU");
          s.reserved_cpu = std::max(per_replica, s.cpu_alloc) * s.replicas;
          break;
        case ActionKind::VerticalMem:
          s.mem_alloc += a.delta;
          if (s.mem_alloc <= 0) problems.push_back(what + " leaves no memory");
          break;
      }
    }
    std::int64_t after_total = 0;
    for (const auto& [id, s] : svc) after_total += s.reserved_cpu;
    if (after_total > rules.max_total_millicores && after_total > before_total) {
      problems.push_back(where + "executed actions exceed the millicore budget");
    }
  }
  return problems;
}

encoder::Prompt build_prompt(const sim::Simulator& simulator, const sim::ClusterState& state,
                             encoder::Task task, const encoder::Carrier* carrier,
                             std::span<const double> recent_arrivals, int forecast_window) {
  const auto& topology = simulator.topology();
  const auto disc = encoder::discretize(state, topology, simulator.scenario().thresholds);
  const auto graph = encoder::encode_call_graph(topology);
  const auto deployments = encoder::describe_deployments(topology, state);
  encoder::PromptInputs in;
  in.state = &disc;
  in.call_graph = graph;
  in.carrier = carrier;
  in.deployments = deployments;
  in.task = task;
  if (!recent_arrivals.empty()) {
    const auto window = std::min<std::size_t>(recent_arrivals.size(),
                                              static_cast<std::size_t>(forecast_window));
    in.forecast = encoder::predict_workload(recent_arrivals.last(window), 1);
  }
  auto prompt = encoder::aggregate_prompt(in);
  prompt.observed = std::make_shared<const sim::ClusterState>(state);
  return prompt;
}

GatheringResult state_gathering_phase(const sim::Simulator& simulator,
                                      const ControlConfig& config) {
  if (config.gathering_ticks < 1) throw std::invalid_argument("gathering needs >= 1 tick");
  const auto& topology = simulator.topology();
  const auto& thresholds = simulator.scenario().thresholds;
  const int interval = config.interval_ticks(simulator.scenario().params.dt_s);
  const Tick iterations = std::max<Tick>(1, config.gathering_ticks / interval);

  Rng rng(Rng::derive(config.seed, 0x6a7e));
  const policy::ThresholdPolicy baseline;
  GatheringResult result;
  auto state = simulator.initial_state();
  for (Tick it = 0; it < iterations; ++it) {
    const auto before = encoder::discretize(state, topology, thresholds);
    encoder::Prompt view;
    view.state = before;
    view.observed = std::make_shared<const sim::ClusterState>(state);
    auto actions = baseline.decide(view);
    if (rng.bernoulli(config.perturb_probability)) {
      const auto& spec = topology.services()[rng.below(topology.services().size())];
      const auto phrase = rng.bernoulli(0.5) ? ActionPhrase::ScaleOut : ActionPhrase::ScaleIn;
      actions.push_back(make_action(phrase, spec.id, 1));
    }
    const auto verdict = verify_actions(actions, state, simulator, config.rules);
    auto next = simulator.step(state, verdict.accepted);
    for (int k = 1; k < interval; ++k) next = simulator.step(next, {});
    const auto after = encoder::discretize(next, topology, thresholds);
    const auto outcome = encoder::classify_outcome(before, after);
    if (verdict.accepted.empty()) {
      result.history.push_back({before, ScalingAction::noop(topology.entry()), outcome});
    }
    for (const auto& a : verdict.accepted) result.history.push_back({before, a, outcome});
    state = std::move(next);
  }
  result.carrier = encoder::build_carrier(result.history, config.carrier_k);
  return result;
}

IterationResult scheduling_iteration(const sim::ClusterState& state, LoopContext& ctx,
                                     policy::PolicyBackend& policy, const ControlConfig& config) {
  if (ctx.simulator == nullptr || ctx.carrier == nullptr) {
    throw std::invalid_argument("scheduling iteration needs a simulator and a carrier");
  }
  const auto& simulator = *ctx.simulator;
  const auto& topology = simulator.topology();
  const auto& thresholds = simulator.scenario().thresholds;
  const double dt = simulator.scenario().params.dt_s;

  IterationResult result;
  auto& record = result.record;
  record.tick = state.tick;
  record.task = encoder::Task::Allocation;
  record.before = summarize(simulator.begin_tick(state));
  record.pre_digest = sim::digest(state);

  const auto prompt = build_prompt(simulator, state, encoder::Task::Allocation, ctx.carrier,
                                   ctx.recent_arrivals, config.forecast_window);
  record.prompt = prompt.text;

  std::vector<std::vector<ScalingAction>> proposals;
  std::vector<policy::Sample> chosen_samples;
  std::vector<cot::CotOutput> chosen_outputs;
  for (int agent = 0; agent < config.agents; ++agent) {
    const auto seed = Rng::derive(config.seed, (static_cast<std::uint64_t>(ctx.iteration) << 8) |
                                                   static_cast<std::uint64_t>(agent));
    std::vector<policy::Sample> samples;
    try {
      samples = policy.generate(prompt, config.candidates, seed);
    } catch (const std::exception& e) {
      spdlog::warn("tick {}: policy '{}' failed: {}", state.tick, policy.name(), e.what());
      if (!record.error.empty()) record.error += "; ";
      record.error += e.what();
      continue;
    }
    if (samples.empty()) continue;
    auto choice = choose_candidate(samples, config.reward);
    std::vector<ScalingAction> actions;
    for (const auto& claim : cot::interpret(choice.output)) actions.push_back(claim.action);
    auto verdict = verify_actions(actions, state, simulator, config.rules);
    for (auto& r : verdict.rejected) record.rejected.push_back(r);
    proposals.push_back(std::move(verdict.accepted));
    chosen_samples.push_back(samples[choice.index]);
    chosen_outputs.push_back(std::move(choice.output));
  }

  if (!chosen_outputs.empty()) {
    const auto& out = chosen_outputs.front();
    record.output = chosen_samples.front().text;
    record.claims = out.counterfactual;
    record.format_failures = cot::count_format_checks(out).invalid;
    record.reward =
        reward::score(out, sim::ground_truth_labels(state), 0.0, config.reward);
  }

  const auto merged = proposals.size() > 1 ? resolve_conflicts(proposals)
                                           : (proposals.empty() ? std::vector<ScalingAction>{}
                                                                : proposals.front());
  auto final_verdict = verify_actions(merged, state, simulator, config.rules);
  for (auto& r : final_verdict.rejected) record.rejected.push_back(r);
  for (const auto& r : record.rejected) {
    spdlog::debug("tick {}: rejected {} ({})", state.tick, describe(r.action), to_string(r.reason));
  }
  result.actions = final_verdict.accepted;
  record.executed = result.actions;

  const int interval = config.interval_ticks(dt);
  auto next = simulator.step(state, result.actions);
  for (int k = 0;; ++k) {
    ctx.ticks.push_back(metrics_of(simulator, next));
    ctx.recent_arrivals.push_back(next.arrival_rate);
    if (k + 1 >= interval) break;
    next = simulator.step(next, {});
  }
  const auto samples = simulator.sample_latency_distribution(
      next, static_cast<std::size_t>(config.latency_samples),
      Rng::derive(config.seed, 0x1a7e0000ULL + static_cast<std::uint64_t>(ctx.iteration)));
  ctx.latency_samples.insert(ctx.latency_samples.end(), samples.begin(), samples.end());

  const auto before = encoder::discretize(state, topology, thresholds);
  const auto after = encoder::discretize(next, topology, thresholds);
  const auto outcome = encoder::classify_outcome(before, after);
  record.outcome = outcome;
  record.post_digest = sim::digest(next);

  if (config.online_training && !result.actions.empty() && !chosen_samples.empty()) {
    Outcome predicted = Outcome::Improved;
    for (const auto& c : record.claims) {
      if (c.action == result.actions.front()) {
        predicted = c.predicted;
        break;
      }
    }
    TokenId start = prompt.tokens.back();
    if (const auto* toy = dynamic_cast<const policy::TokenSequencePolicy*>(&policy)) {
      start = toy->start_token(prompt);
    }
    record.online_update =
        training::online_step(policy, start, chosen_samples.front().tokens, predicted, outcome,
                              config.online_learning_rate, config.reward);
  }

  result.next = std::move(next);
  ++ctx.iteration;
  return result;
}

SystemOutput run_system(const ControlConfig& config, const sim::Scenario& scenario,
                        policy::PolicyBackend& policy,
                        std::span<const training::AnnotatedSample> dataset) {
  config.validate();
  const sim::Simulator simulator(scenario);
  SystemOutput out;

  if (config.offline_training) {
    auto* toy = dynamic_cast<policy::TokenSequencePolicy*>(&policy);
    if (toy == nullptr) {
      spdlog::info("offline training skipped: backend '{}' is not trainable", policy.name());
    } else if (dataset.size() < 2) {
      spdlog::info("offline training skipped: need at least two annotated samples");
    } else {
      auto [sft_part, gspo_part] = training::split_dataset(
          dataset, config.training.partition_ratio, config.training.seed);
      training::run_sft(*toy, sft_part, config.training);
      training::run_gspo(*toy, gspo_part, config.training,
                         training::default_scorer(config.training.reward));
      out.trained_offline = true;
    }
  }

  if (config.task == encoder::Task::RootCauseIdentification) {
    auto state = simulator.initial_state();
    while (state.tick < config.rca_observe_tick) state = simulator.step(state, {});
    const auto prompt = build_prompt(simulator, state, encoder::Task::RootCauseIdentification,
                                     nullptr, {}, config.forecast_window);
    RcaResult rca;
    rca.truth = sim::ground_truth_labels(state);
    EpisodeRecord record;
    record.tick = state.tick;
    record.task = encoder::Task::RootCauseIdentification;
    record.prompt = prompt.text;
    record.before = summarize(state);
    record.pre_digest = record.post_digest = sim::digest(state);
    try {
      const auto samples = policy.generate(prompt, config.candidates, Rng::derive(config.seed, 0));
      if (!samples.empty()) {
        auto choice = choose_candidate(samples, config.reward);
        record.output = samples[choice.index].text;
        rca.output = std::move(choice.output);
      }
    } catch (const std::exception& e) {
      spdlog::warn("root-cause query failed: {}", e.what());
      record.error = e.what();
      rca.output = cot::parse(std::vector<TokenId>{});
    }
    rca.ranked = rca.output.root;
    rca.predicted = rca.output.root_set();
    record.claims = rca.output.counterfactual;
    record.format_failures = cot::count_format_checks(rca.output).invalid;
    record.reward = reward::score(rca.output, rca.truth, 0.0, config.reward);
    out.episodes.push_back(std::move(record));
    out.rca = std::move(rca);
    return out;
  }

  auto gathered = state_gathering_phase(simulator, config);
  out.carrier = gathered.carrier;
  auto history = std::move(gathered.history);

  const int interval = config.interval_ticks(scenario.params.dt_s);
  const Tick iterations = config.horizon / interval;
  LoopContext ctx;
  ctx.simulator = &simulator;
  ctx.carrier = &*out.carrier;
  auto state = simulator.initial_state();
  for (Tick i = 0; i < iterations; ++i) {
    if (config.carrier_refresh_intervals > 0 && i > 0 && i % config.carrier_refresh_intervals == 0) {
      out.carrier = encoder::build_carrier(history, config.carrier_k);
      ctx.carrier = &*out.carrier;
    }
    auto step = scheduling_iteration(state, ctx, policy, config);
    const auto before = encoder::discretize(state, simulator.topology(), scenario.thresholds);
    const auto outcome = step.record.outcome.value_or(Outcome::Neutral);
    if (step.actions.empty()) {
      history.push_back({before, ScalingAction::noop(simulator.topology().entry()), outcome});
    }
    for (const auto& a : step.actions) history.push_back({before, a, outcome});
    out.episodes.push_back(std::move(step.record));
    state = std::move(step.next);
  }
  out.iterations = static_cast<int>(iterations);
  out.ticks = std::move(ctx.ticks);
  out.latency_samples = std::move(ctx.latency_samples);
  return out;
}

}  // namespace cotctl::control
