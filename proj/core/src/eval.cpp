#include "cotctl/eval.hpp"

#include <algorithm>
#include <cmath>

#include "cotctl/error.hpp"
#include "cotctl/rng.hpp"

namespace cotctl::eval {

std::vector<sim::Scenario> fault_scenarios(const sim::Scenario& base, int count,
                                           std::uint64_t seed) {
  const auto& services = base.topology.services();
  if (services.empty()) throw ConfigError("fault scenarios need at least one service");
  constexpr std::array<sim::FaultType, 3> kTypes = {sim::FaultType::CpuHog, sim::FaultType::MemLeak,
                                                    sim::FaultType::NetDelay};
  std::vector<sim::Scenario> out;
  for (int i = 0; i < count; ++i) {
    Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(i)));
    sim::Scenario s = base;
    s.name = base.name + "-fault-" + std::to_string(i);
    s.seed = Rng::derive(seed, 0x10000ULL + static_cast<std::uint64_t>(i));
    s.faults.clear();
    const int faults = services.size() > 1 && rng.bernoulli(0.5) ? 2 : 1;
    std::vector<std::size_t> picks(services.size());
    for (std::size_t k = 0; k < picks.size(); ++k) picks[k] = k;
    rng.shuffle(std::span(picks));
    for (int f = 0; f < faults; ++f) {
      sim::FaultInjection fault;
      fault.service_id = services[picks[static_cast<std::size_t>(f)]].id;
      fault.type = kTypes[rng.below(kTypes.size())];
      fault.magnitude = 0.2 + 0.6 * rng.uniform();
      fault.start_tick = 0;
      fault.end_tick = 1'000'000'000;
      s.faults.push_back(fault);
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<training::AnnotatedSample> annotated_dataset(const sim::Scenario& base, int count,
                                                         std::uint64_t seed) {
  std::vector<training::AnnotatedSample> out;
  for (const auto& scenario : fault_scenarios(base, count, seed)) {
    const sim::Simulator simulator(scenario);
    const auto state = simulator.initial_state();
    training::AnnotatedSample sample;
    sample.prompt = control::build_prompt(simulator, state, encoder::Task::RootCauseIdentification,
                                          nullptr, {}, 1);
    sample.truth = sim::ground_truth_labels(state);
    auto response = Vocabulary::standard().tokenize(policy::ScriptedOracle::respond(sample.truth));
    if (auto eos = Vocabulary::standard().eos()) response.push_back(*eos);
    sample.response = std::move(response);
    out.push_back(std::move(sample));
  }
  return out;
}

RcaReport run_rca_eval(std::span<const sim::Scenario> scenarios, policy::PolicyBackend& policy,
                       const control::ControlConfig& config) {
  if (scenarios.empty()) throw ConfigError("RCA evaluation needs at least one scenario");
  control::ControlConfig cfg = config;
  cfg.task = encoder::Task::RootCauseIdentification;
  cfg.offline_training = false;

  RcaReport report;
  std::vector<reward::RcaCase> cases;
  for (const auto& scenario : scenarios) {
    const auto out = control::run_system(cfg, scenario, policy);
    const auto& rca = *out.rca;
    if (rca.truth.empty()) {
      throw ConfigError("scenario '" + scenario.name + "' has no active fault to diagnose");
    }
    reward::RcaCase c{rca.predicted, rca.output.top1(), rca.truth};
    RcaCaseRow row;
    row.scenario = scenario.name;
    row.truth = rca.truth;
    row.predicted = rca.ranked;
    row.top1_correct = c.top1 && c.truth.contains(*c.top1);
    row.format_failures = cot::count_format_checks(rca.output).invalid;
    report.cases.push_back(std::move(row));
    cases.push_back(std::move(c));
  }
  const auto m = reward::rca_metrics(cases);
  report.precision = m.precision;
  report.recall = m.recall;
  report.accuracy = m.accuracy;
  report.precision_defined = m.precision_defined;
  report.recall_defined = m.recall_defined;
  return report;
}

double nearest_rank(std::span<const double> sorted, double p) {
  if (sorted.empty()) return 0.0;
  const double n = static_cast<double>(sorted.size());
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * n - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

SchedulingReport summarize(std::span<const control::TickMetrics> ticks,
                           std::span<const double> latency_samples) {
  SchedulingReport r;
  if (!ticks.empty()) {
    const std::size_t n = ticks.size();
    for (int p = 0; p < kPeriods; ++p) {
      const std::size_t lo = n * static_cast<std::size_t>(p) / kPeriods;
      const std::size_t hi = n * static_cast<std::size_t>(p + 1) / kPeriods;
      PeriodStats s;
      if (hi > lo) {
        s.first_tick = ticks[lo].tick;
        s.last_tick = ticks[hi - 1].tick;
        for (std::size_t i = lo; i < hi; ++i) {
          s.mean_rps += ticks[i].throughput_rps;
          s.mean_latency_ms += ticks[i].latency_ms;
        }
        s.mean_rps /= static_cast<double>(hi - lo);
        s.mean_latency_ms /= static_cast<double>(hi - lo);
      }
      r.periods.push_back(s);
    }
    const auto violated = std::count_if(ticks.begin(), ticks.end(),
                                        [](const auto& t) { return t.slo_violated; });
    r.slo_violation_fraction = static_cast<double>(violated) / static_cast<double>(n);
  }

  std::vector<double> sorted(latency_samples.begin(), latency_samples.end());
  std::sort(sorted.begin(), sorted.end());
  for (double p : kPercentiles) r.percentiles.emplace_back(p, nearest_rank(sorted, p));
  if (!sorted.empty()) {
    constexpr int kCdfPoints = 200;
    for (int i = 1; i <= kCdfPoints; ++i) {
      const double fraction = static_cast<double>(i) / kCdfPoints;
      r.cdf.emplace_back(nearest_rank(sorted, fraction * 100.0), fraction);
    }
  }
  return r;
}

SchedulingReport run_sched_eval(const sim::Scenario& scenario, control::ControlConfig config,
                                policy::PolicyBackend& policy, Tick horizon,
                                std::vector<control::EpisodeRecord>* episodes) {
  const int interval = config.interval_ticks(scenario.params.dt_s);
  if (horizon <= 0 || horizon % (static_cast<Tick>(kPeriods) * interval) != 0) {
    throw ConfigError("horizon " + std::to_string(horizon) + " is not a positive multiple of " +
                      std::to_string(kPeriods) + " x " + std::to_string(interval) + " ticks");
  }
  config.task = encoder::Task::Allocation;
  config.horizon = horizon;
  const auto out = control::run_system(config, scenario, policy);
  auto report = summarize(out.ticks, out.latency_samples);
  report.scenario = scenario.name;
  report.policy = std::string(policy.name());
  report.iterations = out.iterations;
  for (const auto& e : out.episodes) {
    report.executed_actions += static_cast<int>(e.executed.size());
    report.rejected_actions += static_cast<int>(e.rejected.size());
  }
  report.audit_violations = static_cast<int>(control::audit(out.episodes, config.rules).size());
  if (episodes != nullptr) *episodes = out.episodes;
  return report;
}

}  // namespace cotctl::eval
