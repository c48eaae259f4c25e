// Command-line front end: simulation, carrier gathering, offline training,
// RCA and scheduling evaluation, reward cross-checks and report rendering.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "cotctl/config.hpp"
#include "cotctl/control.hpp"
#include "cotctl/error.hpp"
#include "cotctl/eval.hpp"
#include "cotctl/http_policy.hpp"
#include "cotctl/report.hpp"
#include "cotctl/toy_policy.hpp"
#include "reference.hpp"

namespace {

using namespace cotctl;

struct Globals {
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::string policy = "threshold";
  std::string config;
  std::string checkpoint;
  bool verbose = false;
};

RunConfig load_config(const Globals& g) {
  RunConfig cfg = g.config.empty() ? RunConfig{} : load_run_config(g.config);
  if (g.seed) {
    cfg.control.seed = *g.seed;
    cfg.control.training.seed = *g.seed;
  }
  if (!g.checkpoint.empty()) cfg.toy.checkpoint = g.checkpoint;
  return cfg;
}

sim::Scenario load_scenario(const Globals& g) {
  if (g.scenario.empty()) throw ConfigError("--scenario is required for this command");
  auto s = sim::load_scenario(g.scenario);
  if (g.seed) s.seed = *g.seed;
  return s;
}

std::unique_ptr<policy::PolicyBackend> make_policy(const Globals& g, const RunConfig& cfg) {
  if (g.policy == "toy") {
    const auto& vocab = Vocabulary::standard();
    if (!cfg.toy.checkpoint.empty()) {
      return std::make_unique<policy::TokenSequencePolicy>(
          policy::TokenSequencePolicy::load(cfg.toy.checkpoint, &vocab));
    }
    return std::make_unique<policy::TokenSequencePolicy>(
        policy::TokenSequencePolicy::over(vocab, cfg.toy.max_len));
  }
  if (g.policy == "oracle") return std::make_unique<policy::ScriptedOracle>(policy::observed_truth());
  if (g.policy == "threshold") return std::make_unique<policy::ThresholdPolicy>();
  if (g.policy == "noop") return std::make_unique<policy::NoopPolicy>();
  if (g.policy == "http") return std::make_unique<policy::HttpPolicy>(cfg.model);
  throw ConfigError("unknown policy " + g.policy);
}

// Writes through `fn` to `path`, or to stdout when the path is empty.
template <typename Fn>
void with_output(const std::string& path, Fn&& fn) {
  if (path.empty()) {
    fn(std::cout);
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  fn(out);
  if (!out) throw IoError("failed writing " + path);
}

eval::ReportFormat format_of(const std::string& s) {
  auto f = eval::parse_report_format(s);
  if (!f) throw ConfigError("unknown report format " + s);
  return *f;
}

int cmd_simulate(const Globals& g, Tick ticks, const std::string& out_path) {
  const auto scenario = load_scenario(g);
  const sim::Simulator simulator(scenario);
  auto state = simulator.initial_state();
  with_output(out_path, [&](std::ostream& out) {
    out << "tick,arrival_rps,throughput_rps,latency_ms,replicas,active_faults\n";
    for (Tick t = 0; t <= ticks; ++t) {
      int replicas = 0;
      for (const auto& s : state.services) replicas += s.replica_count();
      out << state.tick << ',' << eval::format_number(state.arrival_rate) << ','
          << eval::format_number(state.throughput_rps) << ','
          << eval::format_number(state.latency_ms) << ',' << replicas << ','
          << state.active_faults.size() << '\n';
      if (t < ticks) state = simulator.step(state, {});
    }
  });
  return 0;
}

int cmd_gather(const Globals& g, const std::string& out_path) {
  const auto cfg = load_config(g);
  const auto scenario = load_scenario(g);
  const sim::Simulator simulator(scenario);
  const auto result = control::state_gathering_phase(simulator, cfg.control);
  if (out_path.empty()) {
    std::cout << encoder::carrier_to_json(result.carrier) << '\n';
  } else {
    encoder::save_carrier(result.carrier, out_path);
  }
  spdlog::info("carrier: {} clusters from {} history entries", result.carrier.clusters.size(),
               result.history.size());
  return 0;
}

int cmd_train(const Globals& g, int samples, const std::string& out_path,
              const std::string& log_path) {
  const auto cfg = load_config(g);
  const auto scenario = load_scenario(g);
  const auto& tc = cfg.control.training;
  tc.validate();
  auto dataset = eval::annotated_dataset(scenario, samples, tc.seed);
  auto [sft_part, gspo_part] = training::split_dataset(dataset, tc.partition_ratio, tc.seed);

  const auto& vocab = Vocabulary::standard();
  auto policy = cfg.toy.checkpoint.empty()
                    ? policy::TokenSequencePolicy::over(vocab, cfg.toy.max_len)
                    : policy::TokenSequencePolicy::load(cfg.toy.checkpoint, &vocab);
  const auto sft = training::run_sft(policy, sft_part, tc);
  const auto gspo = training::run_gspo(policy, gspo_part, tc, training::default_scorer(tc.reward));
  if (!sft.loss_curve.empty()) {
    spdlog::info("SFT: {} steps, loss {:.4f} -> {:.4f}", sft.loss_curve.size(),
                 sft.loss_curve.front(), sft.loss_curve.back());
  }
  if (!gspo.reward_curve.empty()) {
    spdlog::info("GSPO: {} steps, mean reward {:.4f} -> {:.4f}", gspo.reward_curve.size(),
                 gspo.reward_curve.front(), gspo.reward_curve.back());
  }
  if (!log_path.empty()) {
    with_output(log_path, [&](std::ostream& out) { training::write_gspo_log(out, gspo); });
    with_output(log_path + ".sft.csv", [&](std::ostream& out) { training::write_sft_log(out, sft); });
  }
  if (out_path.empty()) {
    std::cout << policy.to_json() << '\n';
  } else {
    policy.save(out_path);
  }
  return 0;
}

int cmd_rca_eval(const Globals& g, int cases, const std::string& format, const std::string& out_path) {
  const auto cfg = load_config(g);
  const auto scenario = load_scenario(g);
  auto policy = make_policy(g, cfg);
  const auto scenarios = eval::fault_scenarios(scenario, cases, cfg.control.seed);
  const auto report = eval::run_rca_eval(scenarios, *policy, cfg.control);
  with_output(out_path, [&](std::ostream& out) { eval::emit_report(report, format_of(format), out); });
  return 0;
}

int cmd_sched_eval(const Globals& g, Tick horizon, const std::string& format,
                   const std::string& out_path, const std::string& episodes_path) {
  const auto cfg = load_config(g);
  const auto scenario = load_scenario(g);
  auto policy = make_policy(g, cfg);
  std::vector<control::EpisodeRecord> episodes;
  const auto report = eval::run_sched_eval(scenario, cfg.control, *policy, horizon, &episodes);
  with_output(out_path, [&](std::ostream& out) { eval::emit_report(report, format_of(format), out); });
  if (!episodes_path.empty()) {
    with_output(episodes_path, [&](std::ostream& out) {
      for (const auto& e : episodes) control::write_episode_jsonl(out, e);
    });
  }
  return report.audit_violations == 0 ? 0 : static_cast<int>(ErrorCategory::Runtime);
}

int cmd_reward_check(const Globals& g, int cases) {
  const auto seed = g.seed.value_or(1);
  const auto summary = reference::compare_rewards(cases, seed);
  std::printf("cases %d  count mismatches %d  max |diff| %.3e\n", summary.cases,
              summary.count_mismatches, summary.max_abs_diff);
  const bool ok = summary.count_mismatches == 0 && summary.max_abs_diff <= 1e-12;
  std::printf("%s\n", ok ? "reward oracle agreement: PASS" : "reward oracle agreement: FAIL");
  return ok ? 0 : static_cast<int>(ErrorCategory::Runtime);
}

int cmd_report(const std::string& in_path, const std::string& format, const std::string& out_path) {
  std::ifstream in(in_path);
  if (!in) throw IoError("cannot read " + in_path);
  const auto report = eval::scheduling_report_from_csv(in);
  with_output(out_path, [&](std::ostream& out) { eval::emit_report(report, format_of(format), out); });
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cotctl: chain-of-thought resource controller for simulated microservices"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--scenario", g.scenario, "Scenario JSON file");
  app.add_option("--seed", g.seed, "Override the scenario/run seed");
  app.add_option("--policy", g.policy, "Policy backend")
      ->check(CLI::IsMember({"toy", "oracle", "threshold", "http", "noop"}));
  app.add_option("--config", g.config, "Run configuration JSON file");
  app.add_option("--checkpoint", g.checkpoint, "Toy policy checkpoint to load");
  app.add_flag("-v,--verbose", g.verbose, "Debug logging");

  Tick ticks = 100;
  std::string out_path, log_path, format = "table", in_path, episodes_path;
  int samples = 20, cases = 50;
  Tick horizon = 500;

  auto* simulate = app.add_subcommand("simulate", "Run the simulator without a controller");
  simulate->add_option("--ticks", ticks, "Ticks to simulate")->check(CLI::NonNegativeNumber);
  simulate->add_option("-o,--out", out_path, "Output CSV (default stdout)");

  auto* gather = app.add_subcommand("gather", "Run the state-gathering phase and save the carrier");
  gather->add_option("-o,--out", out_path, "Carrier JSON (default stdout)");

  auto* train = app.add_subcommand("train-offline", "SFT then GSPO on the toy policy");
  train->add_option("--samples", samples, "Annotated samples to generate")->check(CLI::Range(2, 100000));
  train->add_option("-o,--out", out_path, "Checkpoint path (default stdout)");
  train->add_option("--log", log_path, "Training log CSV");

  auto* rca = app.add_subcommand("rca-eval", "Root-cause evaluation over generated fault scenarios");
  rca->add_option("--cases", cases, "Fault scenarios")->check(CLI::Range(1, 100000));
  rca->add_option("--format", format, "table|csv|plotdata");
  rca->add_option("-o,--out", out_path, "Report path (default stdout)");

  auto* sched = app.add_subcommand("sched-eval", "Scheduling evaluation under the allocation loop");
  sched->add_option("--horizon", horizon, "Ticks (multiple of 5 intervals)");
  sched->add_option("--format", format, "table|csv|plotdata");
  sched->add_option("-o,--out", out_path, "Report path (default stdout)");
  sched->add_option("--episodes", episodes_path, "Episode log (JSON lines)");

  auto* check = app.add_subcommand("reward-check", "Compare rewards with brute-force references");
  check->add_option("--cases", cases, "Random label-set pairs")->check(CLI::Range(1, 10000000));

  auto* report = app.add_subcommand("report", "Re-render a scheduling report CSV");
  report->add_option("input", in_path, "Report CSV")->required();
  report->add_option("--format", format, "table|csv|plotdata");
  report->add_option("-o,--out", out_path, "Output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  spdlog::set_level(g.verbose ? spdlog::level::debug : spdlog::level::warn);
  try {
    if (*simulate) return cmd_simulate(g, ticks, out_path);
    if (*gather) return cmd_gather(g, out_path);
    if (*train) return cmd_train(g, samples, out_path, log_path);
    if (*rca) return cmd_rca_eval(g, cases, format, out_path);
    if (*sched) return cmd_sched_eval(g, horizon, format, out_path, episodes_path);
    if (*check) return cmd_reward_check(g, cases);
    if (*report) return cmd_report(in_path, format, out_path);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return static_cast<int>(e.category());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
