#include "cotctl/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cotctl/error.hpp"

namespace cotctl {

namespace {

using nlohmann::json;

void check_keys(const json& obj, std::string_view section, std::set<std::string> allowed) {
  if (!obj.is_object()) throw ConfigError("config section '" + std::string(section) + "' must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.contains(key)) {
      throw ConfigError("unknown config key '" + std::string(section) + "." + key + "'");
    }
  }
}

template <typename T>
void read(const json& obj, const char* key, T& target) {
  if (auto it = obj.find(key); it != obj.end()) target = it->get<T>();
}

}  // namespace

RunConfig parse_run_config(std::string_view text) {
  RunConfig cfg;
  try {
    const json doc = json::parse(text);
    check_keys(doc, "root", {"reward", "training", "control", "model", "toy"});

    auto& reward = cfg.control.reward;
    if (auto it = doc.find("reward"); it != doc.end()) {
      check_keys(*it, "reward", {"epsilon", "alpha", "beta_f", "delta", "d", "tau_fn", "l_min",
                                 "l_max", "beta_kl", "clip_eps", "group_size", "adv_eps"});
      read(*it, "epsilon", reward.epsilon);
      read(*it, "alpha", reward.alpha);
      read(*it, "beta_f", reward.beta_f);
      read(*it, "delta", reward.delta);
      read(*it, "d", reward.d);
      read(*it, "tau_fn", reward.tau_fn);
      read(*it, "l_min", reward.l_min);
      read(*it, "l_max", reward.l_max);
      read(*it, "beta_kl", reward.beta_kl);
      read(*it, "clip_eps", reward.clip_eps);
      read(*it, "group_size", reward.group_size);
      read(*it, "adv_eps", reward.adv_eps);
    }
    cfg.control.training.reward = reward;

    auto& training = cfg.control.training;
    if (auto it = doc.find("training"); it != doc.end()) {
      check_keys(*it, "training", {"sft_steps", "gspo_steps", "learning_rate", "partition_ratio",
                                   "seed", "batch_size"});
      read(*it, "sft_steps", training.sft_steps);
      read(*it, "gspo_steps", training.gspo_steps);
      read(*it, "learning_rate", training.learning_rate);
      read(*it, "partition_ratio", training.partition_ratio);
      read(*it, "seed", training.seed);
      read(*it, "batch_size", training.batch_size);
    }

    auto& control = cfg.control;
    if (auto it = doc.find("control"); it != doc.end()) {
      check_keys(*it, "control",
                 {"interval_s", "horizon", "offline_training", "online_training", "candidates",
                  "agents", "carrier_k", "gathering_ticks", "perturb_probability",
                  "carrier_refresh_intervals", "rca_observe_tick", "forecast_window",
                  "online_learning_rate", "latency_samples", "verifier"});
      read(*it, "interval_s", control.interval_s);
      read(*it, "horizon", control.horizon);
      read(*it, "offline_training", control.offline_training);
      read(*it, "online_training", control.online_training);
      read(*it, "candidates", control.candidates);
      read(*it, "agents", control.agents);
      read(*it, "carrier_k", control.carrier_k);
      read(*it, "gathering_ticks", control.gathering_ticks);
      read(*it, "perturb_probability", control.perturb_probability);
      read(*it, "carrier_refresh_intervals", control.carrier_refresh_intervals);
      read(*it, "rca_observe_tick", control.rca_observe_tick);
      read(*it, "forecast_window", control.forecast_window);
      read(*it, "online_learning_rate", control.online_learning_rate);
      read(*it, "latency_samples", control.latency_samples);
      if (auto v = it->find("verifier"); v != it->end()) {
        check_keys(*v, "control.verifier",
                   {"min_replicas", "max_replicas", "max_total_millicores", "max_replica_step",
                    "max_cpu_step", "max_mem_step"});
        read(*v, "min_replicas", control.rules.min_replicas);
        read(*v, "max_replicas", control.rules.max_replicas);
        read(*v, "max_total_millicores", control.rules.max_total_millicores);
        read(*v, "max_replica_step", control.rules.max_replica_step);
        read(*v, "max_cpu_step", control.rules.max_cpu_step);
        read(*v, "max_mem_step", control.rules.max_mem_step);
      }
    }

    if (auto it = doc.find("model"); it != doc.end()) {
      check_keys(*it, "model", {"endpoint", "timeout_s", "system_prompt", "retry_count", "max_tokens"});
      read(*it, "endpoint", cfg.model.endpoint);
      read(*it, "timeout_s", cfg.model.timeout_s);
      read(*it, "system_prompt", cfg.model.system_prompt);
      read(*it, "retry_count", cfg.model.retry_count);
      read(*it, "max_tokens", cfg.model.max_tokens);
    }

    if (auto it = doc.find("toy"); it != doc.end()) {
      check_keys(*it, "toy", {"max_len", "checkpoint"});
      read(*it, "max_len", cfg.toy.max_len);
      read(*it, "checkpoint", cfg.toy.checkpoint);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  cfg.control.validate();
  cfg.control.training.validate();
  if (cfg.toy.max_len < 1) throw ConfigError("toy.max_len must be >= 1");
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str());
}

std::string run_config_to_json(const RunConfig& cfg) {
  const auto& r = cfg.control.reward;
  const auto& t = cfg.control.training;
  const auto& c = cfg.control;
  json doc;
  doc["reward"] = {{"epsilon", r.epsilon},   {"alpha", r.alpha},       {"beta_f", r.beta_f},
                   {"delta", r.delta},       {"d", r.d},               {"tau_fn", r.tau_fn},
                   {"l_min", r.l_min},       {"l_max", r.l_max},       {"beta_kl", r.beta_kl},
                   {"clip_eps", r.clip_eps}, {"group_size", r.group_size}, {"adv_eps", r.adv_eps}};
  doc["training"] = {{"sft_steps", t.sft_steps},         {"gspo_steps", t.gspo_steps},
                     {"learning_rate", t.learning_rate}, {"partition_ratio", t.partition_ratio},
                     {"seed", t.seed},                   {"batch_size", t.batch_size}};
  doc["control"] = {{"interval_s", c.interval_s},
                    {"horizon", c.horizon},
                    {"offline_training", c.offline_training},
                    {"online_training", c.online_training},
                    {"candidates", c.candidates},
                    {"agents", c.agents},
                    {"carrier_k", c.carrier_k},
                    {"gathering_ticks", c.gathering_ticks},
                    {"perturb_probability", c.perturb_probability},
                    {"carrier_refresh_intervals", c.carrier_refresh_intervals},
                    {"rca_observe_tick", c.rca_observe_tick},
                    {"forecast_window", c.forecast_window},
                    {"online_learning_rate", c.online_learning_rate},
                    {"latency_samples", c.latency_samples},
                    {"verifier",
                     {{"min_replicas", c.rules.min_replicas},
                      {"max_replicas", c.rules.max_replicas},
                      {"max_total_millicores", c.rules.max_total_millicores},
                      {"max_replica_step", c.rules.max_replica_step},
                      {"max_cpu_step", c.rules.max_cpu_step},
                      {"max_mem_step", c.rules.max_mem_step}}}};
  doc["model"] = {{"endpoint", cfg.model.endpoint},
                  {"timeout_s", cfg.model.timeout_s},
                  {"system_prompt", cfg.model.system_prompt},
                  {"retry_count", cfg.model.retry_count},
                  {"max_tokens", cfg.model.max_tokens}};
  doc["toy"] = {{"max_len", cfg.toy.max_len}, {"checkpoint", cfg.toy.checkpoint}};
  return doc.dump(2);
}

}  // namespace cotctl
