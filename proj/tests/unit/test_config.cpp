#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "cotctl/config.hpp"
#include "cotctl/error.hpp"

namespace cotctl {
namespace {

TEST(RunConfig, EmptyDocumentKeepsDefaults) {
  const auto cfg = parse_run_config("{}");
  EXPECT_EQ(cfg.control.interval_s, 10.0);
  EXPECT_EQ(cfg.control.reward.clip_eps, 0.2);
  EXPECT_EQ(cfg.control.training.sft_steps, 500);
  EXPECT_EQ(cfg.model.retry_count, 2);
  EXPECT_EQ(cfg.toy.max_len, 256);
}

TEST(RunConfig, ReadsSections) {
  const auto cfg = parse_run_config(R"({
    "reward": {"alpha": 0.1, "group_size": 4},
    "training": {"sft_steps": 20, "learning_rate": 0.5},
    "control": {"agents": 2, "verifier": {"max_replicas": 6}},
    "model": {"endpoint": "http://localhost:8080/complete", "timeout_s": 5},
    "toy": {"max_len": 64}
  })");
  EXPECT_EQ(cfg.control.reward.alpha, 0.1);
  EXPECT_EQ(cfg.control.training.reward.group_size, 4);
  EXPECT_EQ(cfg.control.training.sft_steps, 20);
  EXPECT_EQ(cfg.control.training.learning_rate, 0.5);
  EXPECT_EQ(cfg.control.agents, 2);
  EXPECT_EQ(cfg.control.rules.max_replicas, 6);
  EXPECT_EQ(cfg.model.endpoint, "http://localhost:8080/complete");
  EXPECT_EQ(cfg.model.timeout_s, 5.0);
  EXPECT_EQ(cfg.toy.max_len, 64);
}

TEST(RunConfig, Rejections) {
  EXPECT_THROW(parse_run_config(R"({"rewards": {}})"), ConfigError);
  EXPECT_THROW(parse_run_config(R"({"control": {"intervall_s": 3}})"), ConfigError);
  EXPECT_THROW(parse_run_config(R"({"control": {"verifier": {"min": 1}}})"), ConfigError);
  EXPECT_THROW(parse_run_config(R"({"reward": {"l_min": 2000}})"), ConfigError);
  EXPECT_THROW(parse_run_config(R"({"control": {"agents": 0}})"), ConfigError);
  EXPECT_THROW(parse_run_config(R"({"training": {"sft_steps": "many"}})"), ConfigError);
  EXPECT_THROW(parse_run_config(R"({"toy": {"max_len": 0}})"), ConfigError);
  EXPECT_THROW(parse_run_config("{"), ConfigError);
  EXPECT_THROW(parse_run_config("[]"), ConfigError);
}

TEST(RunConfig, RoundTrip) {
  auto cfg = parse_run_config(R"({"reward": {"beta_kl": 0.02}, "control": {"horizon": 250}})");
  cfg.model.system_prompt = "be terse";
  const auto text = run_config_to_json(cfg);
  const auto again = parse_run_config(text);
  EXPECT_EQ(run_config_to_json(again), text);
  EXPECT_EQ(again.control.reward.beta_kl, 0.02);
  EXPECT_EQ(again.control.horizon, 250);
  EXPECT_EQ(again.model.system_prompt, "be terse");
}

TEST(RunConfig, LoadFromFile) {
  EXPECT_THROW(load_run_config("/nonexistent/run.json"), IoError);
  const auto path = std::filesystem::temp_directory_path() / "cotctl_config_test.json";
  {
    std::ofstream out(path);
    out << R"({"control": {"candidates": 3}})";
  }
  EXPECT_EQ(load_run_config(path).control.candidates, 3);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace cotctl
