#include <gtest/gtest.h>

#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cotctl/control.hpp"
#include "cotctl/error.hpp"
#include "cotctl/eval.hpp"
#include "cotctl/rng.hpp"
#include "cotctl/toy_policy.hpp"
#include "fixtures.hpp"

namespace cotctl::control {
namespace {

using testing::chain;
using testing::make_scenario;
using testing::service;
using testing::shipped;
using testing::single_service;

ScalingAction out(ServiceId id, int n = 1) { return make_action(ActionPhrase::ScaleOut, id, n); }

std::vector<RejectReason> reasons(const Verdict& v) {
  std::vector<RejectReason> r;
  for (const auto& x : v.rejected) r.push_back(x.reason);
  return r;
}

TEST(Verifier, BasicVerdicts) {
  const sim::Simulator simulator(single_service(10, 100));
  const auto state = simulator.initial_state();
  const VerifierRules rules;

  const std::vector<ScalingAction> scale_in = {make_action(ActionPhrase::ScaleIn, 1)};
  auto v = verify_actions(scale_in, state, simulator, rules);
  EXPECT_TRUE(v.accepted.empty());
  EXPECT_EQ(reasons(v), std::vector{RejectReason::MinReplicas});

  const std::vector<ScalingAction> twice = {out(1), out(1)};
  v = verify_actions(twice, state, simulator, rules);
  EXPECT_EQ(v.accepted, std::vector{out(1)});
  EXPECT_EQ(reasons(v), std::vector{RejectReason::Duplicate});

  const std::vector<ScalingAction> misc = {ScalingAction::noop(1), out(9), out(1, 4)};
  v = verify_actions(misc, state, simulator, rules);
  EXPECT_TRUE(v.accepted.empty());
  EXPECT_EQ(reasons(v), (std::vector{RejectReason::UnknownService, RejectReason::StepSize}));

  const std::vector<ScalingAction> malformed = {ScalingAction{1, ActionKind::Horizontal, 0, false}};
  EXPECT_EQ(reasons(verify_actions(malformed, state, simulator, rules)),
            std::vector{RejectReason::Invalid});
}

TEST(Verifier, Limits) {
  const sim::Simulator simulator(single_service(10, 100));
  const auto state = simulator.initial_state();
  const std::vector<ScalingAction> one = {out(1)};

  VerifierRules rules;
  rules.max_replicas = 1;
  EXPECT_EQ(reasons(verify_actions(one, state, simulator, rules)),
            std::vector{RejectReason::MaxReplicas});

  rules = VerifierRules{};
  rules.max_total_millicores = 600;
  EXPECT_EQ(reasons(verify_actions(one, state, simulator, rules)),
            std::vector{RejectReason::TotalBudget});

  const sim::Simulator small(make_scenario({service(1, 100)}, 10, 1, 1000));
  const std::vector<ScalingAction> two = {out(1, 2)};
  EXPECT_EQ(reasons(verify_actions(two, small.initial_state(), small, VerifierRules{})),
            std::vector{RejectReason::MachineCapacity});
}

TEST(Verifier, LaterActionsSeeEarlierOnes) {
  const sim::Simulator simulator(chain(10));
  const auto state = simulator.initial_state();
  VerifierRules rules;
  rules.max_total_millicores = total_millicores(state) + 500;
  const std::vector<ScalingAction> both = {out(1), out(2)};
  const auto v = verify_actions(both, state, simulator, rules);
  EXPECT_EQ(v.accepted, std::vector{out(1)});
  EXPECT_EQ(reasons(v), std::vector{RejectReason::TotalBudget});
}

TEST(Verifier, JudgesStateAfterPendingResizesCommit) {
  const sim::Simulator simulator(make_scenario({service(1, 100)}, 10, 1, 1000));
  const std::vector<ScalingAction> up = {make_action(ActionPhrase::CpuUp, 1, 500)};
  const auto pending = simulator.step(simulator.initial_state(), up);
  ASSERT_EQ(pending.service(1).pending_cpu_alloc, 1000);
  // The scale-down only becomes pending next tick, so the committed 1000m
  // replica leaves no room for a second one.
  const std::vector<ScalingAction> both = {make_action(ActionPhrase::CpuDown, 1, 500), out(1)};
  const auto v = verify_actions(both, pending, simulator, VerifierRules{});
  EXPECT_EQ(v.accepted.size(), 1u);
  EXPECT_EQ(reasons(v), std::vector{RejectReason::MachineCapacity});
  EXPECT_NO_THROW(simulator.step(pending, v.accepted));
}

TEST(Verifier, RulesValidation) {
  VerifierRules r;
  r.min_replicas = 0;
  EXPECT_THROW(r.validate(), ConfigError);
  r = VerifierRules{};
  r.max_replicas = 0;
  EXPECT_THROW(r.validate(), ConfigError);
}

TEST(Conflicts, Examples) {
  using V = std::vector<ScalingAction>;
  EXPECT_EQ(resolve_conflicts(std::vector<V>{{out(1, 1)}, {out(1, 3)}}), V{out(1, 3)});
  EXPECT_EQ(resolve_conflicts(std::vector<V>{{out(1, 1)}, {make_action(ActionPhrase::ScaleIn, 1)}}),
            V{out(1, 1)});
  EXPECT_EQ(resolve_conflicts(std::vector<V>{{out(1)}, {out(2)}}), (V{out(1), out(2)}));
  const auto cpu = make_action(ActionPhrase::CpuUp, 1);
  EXPECT_EQ(resolve_conflicts(std::vector<V>{{out(1)}, {cpu}}), (V{out(1), cpu}));
  EXPECT_TRUE(resolve_conflicts(std::vector<V>{{ScalingAction::noop(1)}}).empty());
}

TEST(Conflicts, KeepsLargestDeltaPerKey) {
  Rng rng(21);
  const std::array phrases = {ActionPhrase::ScaleOut, ActionPhrase::ScaleIn, ActionPhrase::CpuUp,
                              ActionPhrase::CpuDown, ActionPhrase::MemUp, ActionPhrase::MemDown};
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<std::vector<ScalingAction>> proposals(1 + rng.below(4));
    std::map<std::pair<ServiceId, ActionKind>, int> best;
    for (auto& p : proposals) {
      const auto n = rng.below(5);
      for (std::size_t i = 0; i < n; ++i) {
        const auto a = make_action(phrases[rng.below(phrases.size())],
                                   static_cast<ServiceId>(1 + rng.below(3)),
                                   static_cast<int>(1 + rng.below(3)));
        p.push_back(a);
        auto [it, fresh] = best.try_emplace({a.service_id, a.kind}, a.delta);
        if (!fresh) it->second = std::max(it->second, a.delta);
      }
    }
    const auto merged = resolve_conflicts(proposals);
    ASSERT_EQ(merged.size(), best.size());
    for (const auto& a : merged) ASSERT_EQ(a.delta, best.at({a.service_id, a.kind}));
  }
}

TEST(Audit, VerifiedActionsPass) {
  const sim::Simulator simulator(chain(50));
  Rng rng(22);
  const VerifierRules rules;
  const std::array phrases = {ActionPhrase::ScaleOut, ActionPhrase::ScaleIn, ActionPhrase::CpuUp,
                              ActionPhrase::CpuDown, ActionPhrase::MemUp, ActionPhrase::MemDown};
  auto state = simulator.initial_state();
  std::vector<EpisodeRecord> records;
  for (int i = 0; i < 100; ++i) {
    std::vector<ScalingAction> proposed;
    for (int k = 0; k < 4; ++k) {
      proposed.push_back(make_action(phrases[rng.below(phrases.size())],
                                     static_cast<ServiceId>(1 + rng.below(4)),
                                     static_cast<int>(rng.below(5)) * 250));
    }
    const auto v = verify_actions(proposed, state, simulator, rules);
    EpisodeRecord r;
    r.tick = state.tick;
    for (const auto& s : simulator.begin_tick(state).services) {
      r.before.push_back({s.id, s.replica_count(), s.cpu_alloc, s.mem_alloc,
                          s.replica_count() * s.reserved_cpu()});
    }
    r.executed = v.accepted;
    records.push_back(r);
    state = simulator.step(state, v.accepted);
  }
  EXPECT_TRUE(audit(records, rules).empty());

  records.back().executed = {out(1, 5), out(1, 5)};
  EXPECT_GE(audit(records, rules).size(), 2u);
}

TEST(Gathering, ConstantIdleLoadGivesOneCluster) {
  const sim::Simulator simulator(single_service(5, 100));
  ControlConfig cfg;
  cfg.perturb_probability = 0.0;
  const auto g = state_gathering_phase(simulator, cfg);
  EXPECT_EQ(g.history.size(), 20u);
  EXPECT_EQ(g.carrier.clusters.size(), 1u);
}

TEST(Gathering, BoundedAndDeterministic) {
  const sim::Simulator simulator(shipped("sockshop"));
  ControlConfig cfg;
  cfg.perturb_probability = 0.5;
  const auto a = state_gathering_phase(simulator, cfg);
  const auto b = state_gathering_phase(simulator, cfg);
  EXPECT_GE(a.carrier.clusters.size(), 1u);
  EXPECT_LE(a.carrier.clusters.size(), 4u);
  EXPECT_EQ(encoder::carrier_to_json(a.carrier), encoder::carrier_to_json(b.carrier));
  EXPECT_EQ(a.carrier.assignment.size(), a.history.size());
}

class FixedText final : public policy::PolicyBackend {
 public:
  explicit FixedText(std::string text) : text_(std::move(text)) {}
  std::vector<policy::Sample> generate(const encoder::Prompt&, int count,
                                       std::uint64_t) const override {
    return std::vector<policy::Sample>(static_cast<std::size_t>(count), policy::text_sample(text_));
  }
  std::string_view name() const override { return "fixed"; }

 private:
  std::string text_;
};

std::string output_with(const std::string& claims) {
  return "<think> load is high </think>\n<Fault> none </Fault>\n<Counterfactual>\n" + claims +
         "</Counterfactual>\n<root> #1 @C </root>";
}

struct IterationFixture : ::testing::Test {
  IterationFixture() : simulator(single_service(60, 100)) {
    ctx.simulator = &simulator;
    ctx.carrier = &carrier;
  }
  sim::Simulator simulator;
  encoder::Carrier carrier;
  LoopContext ctx;
  ControlConfig cfg;
};

TEST_F(IterationFixture, DegradedClaimsExecuteNothing) {
  FixedText policy(output_with("IF SCALE_OUT #1 THEN DEGRADED\nIF CPU_UP #1 THEN DEGRADED\n"));
  const auto state = simulator.initial_state();
  const auto r = scheduling_iteration(state, ctx, policy, cfg);
  EXPECT_TRUE(r.actions.empty());
  EXPECT_EQ(r.record.claims.size(), 2u);
  EXPECT_EQ(r.record.format_failures, 0);
  EXPECT_EQ(r.next.service(1).replica_count(), 1);
  EXPECT_EQ(r.next.tick, 10);
  EXPECT_EQ(ctx.ticks.size(), 10u);
  EXPECT_EQ(ctx.latency_samples.size(), 200u);
  EXPECT_EQ(ctx.iteration, 1);
}

TEST_F(IterationFixture, ImprovedScaleOutAddsReplica) {
  FixedText policy(output_with("IF SCALE_OUT #1 THEN IMPROVED\nIF SCALE_IN #1 THEN DEGRADED\n"));
  const auto state = simulator.initial_state();
  const auto r = scheduling_iteration(state, ctx, policy, cfg);
  EXPECT_EQ(r.actions, std::vector{out(1)});
  EXPECT_EQ(r.record.executed, r.actions);
  EXPECT_EQ(r.next.service(1).replica_count(), 2);
  EXPECT_EQ(r.record.pre_digest, sim::digest(state));
  EXPECT_EQ(r.record.post_digest, sim::digest(r.next));
  EXPECT_FALSE(r.record.online_update);
}

TEST_F(IterationFixture, BrokenOutputIsContained) {
  FixedText policy("no tags at all");
  const auto r = scheduling_iteration(simulator.initial_state(), ctx, policy, cfg);
  EXPECT_TRUE(r.actions.empty());
  EXPECT_EQ(r.record.format_failures, 12);
}

TEST_F(IterationFixture, MultipleAgentsMerge) {
  FixedText policy(output_with("IF SCALE_OUT #1 2 THEN IMPROVED\n"));
  cfg.agents = 3;
  const auto r = scheduling_iteration(simulator.initial_state(), ctx, policy, cfg);
  EXPECT_EQ(r.actions, std::vector{out(1, 2)});
}

TEST_F(IterationFixture, OnlineUpdateChangesToyParameters) {
  const auto prompt =
      build_prompt(simulator, simulator.initial_state(), encoder::Task::Allocation, &carrier, {}, 5);
  const std::string start = Vocabulary::standard().token(prompt.tokens.back());
  const std::string head = "<think> a </think>\n<Fault> b </Fault>\n<Counterfactual>\n";
  const std::string claim = "IF SCALE_OUT #1 THEN IMPROVED\n";
  const std::string tail = "</Counterfactual>\n<root> #1 @C </root>";
  const Vocabulary vocab({"<unk>", "<eos>", start, head, claim, tail});
  policy::TokenSequencePolicy toy(vocab.size(), 6, 1, &vocab);
  toy.logit(2, 3) = 8.0;
  toy.logit(3, 4) = 8.0;
  toy.logit(4, 5) = 8.0;
  toy.logit(5, 1) = 8.0;
  const std::vector<double> before(toy.theta().begin(), toy.theta().end());

  cfg.online_training = true;
  const auto r = scheduling_iteration(simulator.initial_state(), ctx, toy, cfg);
  ASSERT_EQ(r.actions, std::vector{out(1)});
  EXPECT_TRUE(r.record.online_update);
  const std::vector<double> after(toy.theta().begin(), toy.theta().end());
  EXPECT_NE(before, after);
}

TEST_F(IterationFixture, NeedsCarrier) {
  ctx.carrier = nullptr;
  policy::NoopPolicy noop;
  EXPECT_THROW(scheduling_iteration(simulator.initial_state(), ctx, noop, cfg),
               std::invalid_argument);
}

TEST(RunSystem, OracleRcaMatchesTruthWithoutMutation) {
  const auto scenarios = eval::fault_scenarios(shipped("sockshop"), 5, 3);
  policy::ScriptedOracle oracle(policy::observed_truth());
  ControlConfig cfg;
  cfg.task = encoder::Task::RootCauseIdentification;
  for (const auto& s : scenarios) {
    const auto result = run_system(cfg, s, oracle);
    ASSERT_TRUE(result.rca.has_value());
    EXPECT_FALSE(result.rca->truth.empty());
    EXPECT_EQ(result.rca->predicted, result.rca->truth);
    EXPECT_EQ(result.rca->executed_actions, 0);
    ASSERT_EQ(result.episodes.size(), 1u);
    EXPECT_TRUE(result.episodes[0].executed.empty());
    EXPECT_EQ(result.episodes[0].pre_digest, result.episodes[0].post_digest);
    EXPECT_EQ(result.episodes[0].format_failures, 0);
  }
}

TEST(RunSystem, IterationCountFollowsHorizon) {
  policy::NoopPolicy noop;
  ControlConfig cfg;
  cfg.gathering_ticks = 20;
  for (Tick horizon : {0, 9, 10, 95}) {
    cfg.horizon = horizon;
    const auto r = run_system(cfg, shipped("ramp"), noop);
    EXPECT_EQ(r.iterations, horizon / 10);
    EXPECT_EQ(r.episodes.size(), static_cast<std::size_t>(horizon / 10));
    EXPECT_EQ(r.ticks.size(), static_cast<std::size_t>(horizon / 10 * 10));
  }
}

TEST(RunSystem, OfflineTrainingOnlyWhenEnabled) {
  const auto data = eval::annotated_dataset(shipped("sockshop"), 4, 5);
  auto toy = policy::TokenSequencePolicy::over(Vocabulary::standard(), 8);
  ControlConfig cfg;
  cfg.task = encoder::Task::RootCauseIdentification;
  cfg.training.sft_steps = 2;
  cfg.training.gspo_steps = 1;
  cfg.training.reward.group_size = 2;
  const auto scenario = eval::fault_scenarios(shipped("sockshop"), 1, 6).front();

  const std::vector<double> before(toy.theta().begin(), toy.theta().end());
  auto r = run_system(cfg, scenario, toy, data);
  EXPECT_FALSE(r.trained_offline);
  EXPECT_EQ(std::vector<double>(toy.theta().begin(), toy.theta().end()), before);

  cfg.offline_training = true;
  r = run_system(cfg, scenario, toy, data);
  EXPECT_TRUE(r.trained_offline);
  EXPECT_NE(std::vector<double>(toy.theta().begin(), toy.theta().end()), before);

  policy::NoopPolicy noop;
  EXPECT_FALSE(run_system(cfg, scenario, noop, data).trained_offline);
}

TEST(RunSystem, ThresholdRunPassesAudit) {
  policy::ThresholdPolicy threshold;
  ControlConfig cfg;
  cfg.horizon = 200;
  const auto r = run_system(cfg, shipped("ramp"), threshold);
  int executed = 0;
  for (const auto& e : r.episodes) executed += static_cast<int>(e.executed.size());
  EXPECT_GT(executed, 0);
  EXPECT_TRUE(audit(r.episodes, cfg.rules).empty());
}

TEST(RunSystem, EpisodeJsonl) {
  EpisodeRecord r;
  r.tick = 7;
  r.executed = {out(2)};
  r.outcome = Outcome::Improved;
  std::ostringstream os;
  write_episode_jsonl(os, r);
  const auto doc = nlohmann::json::parse(os.str());
  EXPECT_EQ(doc["tick"], 7);
  EXPECT_EQ(doc["executed"][0]["text"], describe(out(2)));
  EXPECT_EQ(doc["outcome"], "IMPROVED");
  EXPECT_EQ(os.str().back(), '\n');
}

TEST(Config, Validation) {
  EXPECT_NO_THROW(ControlConfig{}.validate());
  ControlConfig c;
  c.interval_s = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = ControlConfig{};
  c.perturb_probability = 1.5;
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_EQ(ControlConfig{}.interval_ticks(1.0), 10);
  EXPECT_EQ(ControlConfig{}.interval_ticks(100.0), 1);
}

}  // namespace
}  // namespace cotctl::control
