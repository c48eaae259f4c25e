#include "cotctl/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include <spdlog/spdlog.h>

#include "cotctl/error.hpp"
#include "cotctl/rng.hpp"

namespace cotctl::training {

TokenId AnnotatedSample::start() const {
  if (prompt.tokens.empty()) throw std::invalid_argument("annotated sample has an empty prompt");
  return prompt.tokens.back();
}

void TrainingConfig::validate() const {
  if (sft_steps < 0 || gspo_steps < 0) throw ConfigError("training step counts must be >= 0");
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be > 0");
  if (!(partition_ratio > 0.0 && partition_ratio < 1.0)) {
    throw ConfigError("partition ratio must be in (0, 1)");
  }
  if (batch_size < 0) throw ConfigError("batch size must be >= 0");
  reward.validate();
}

std::pair<Partition, Partition> split_dataset(std::span<const AnnotatedSample> samples,
                                              double ratio, std::uint64_t seed) {
  if (samples.size() < 2) throw std::invalid_argument("splitting needs at least two samples");
  if (!(ratio > 0.0 && ratio < 1.0)) throw std::invalid_argument("split ratio must be in (0, 1)");
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(std::span(order));
  auto first = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(samples.size())));
  first = std::clamp<std::size_t>(first, 1, samples.size() - 1);
  Partition a, b;
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < first ? a : b).push_back(samples[order[i]]);
  }
  return {std::move(a), std::move(b)};
}

LossAndGradient sft_loss(const policy::TokenSequencePolicy& policy, const AnnotatedSample& sample) {
  LossAndGradient out;
  out.value = -policy.log_likelihood_sum(sample.start(), sample.response);
  out.gradient.assign(policy.theta().size(), 0.0);
  policy.accumulate_gradient(sample.start(), sample.response, -1.0, out.gradient);
  return out;
}

SftResult run_sft(policy::TokenSequencePolicy& policy, std::span<const AnnotatedSample> data,
                  const TrainingConfig& config) {
  SftResult result;
  if (config.sft_steps == 0) return result;
  if (data.empty()) throw std::invalid_argument("SFT needs at least one sample");

  const std::size_t batch =
      config.batch_size > 0 ? std::min<std::size_t>(config.batch_size, data.size()) : data.size();
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(Rng::derive(config.seed, 0x5f7));
  std::size_t cursor = order.size();

  auto theta = policy.theta();
  std::vector<double> grad(theta.size());
  for (int step = 0; step < config.sft_steps; ++step) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double loss = 0.0;
    for (std::size_t k = 0; k < batch; ++k) {
      if (cursor == order.size()) {
        rng.shuffle(std::span(order));
        cursor = 0;
      }
      const auto& sample = data[order[cursor++]];
      loss -= policy.log_likelihood_sum(sample.start(), sample.response);
      policy.accumulate_gradient(sample.start(), sample.response, -1.0, grad);
    }
    loss /= static_cast<double>(batch);
    if (!std::isfinite(loss) || loss > 1e6) {
      throw RuntimeFailure("SFT diverged at step " + std::to_string(step) + " (loss " +
                           std::to_string(loss) + "); lower the learning rate");
    }
    result.loss_curve.push_back(loss);
    const double scale = config.learning_rate / static_cast<double>(batch);
    for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= scale * grad[i];
  }
  return result;
}

std::vector<double> gspo_advantages(std::span<const double> rewards,
                                    const reward::RewardConfig& cfg) {
  if (rewards.size() < 2) throw std::invalid_argument("advantages need a group of at least two");
  const double n = static_cast<double>(rewards.size());
  const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  const double std_dev = std::sqrt(var / n);
  std::vector<double> out;
  out.reserve(rewards.size());
  for (double r : rewards) out.push_back((r - mean) / (std_dev + cfg.adv_eps));
  return out;
}

double gspo_ratio(double loglik_new_sum, double loglik_old_sum, std::size_t len) {
  if (len == 0) throw std::invalid_argument("sequence ratio needs len >= 1");
  return std::exp((loglik_new_sum - loglik_old_sum) / static_cast<double>(len));
}

LossAndGradient gspo_objective(const policy::TokenSequencePolicy& policy, const GspoBatch& batch,
                               const reward::RewardConfig& cfg) {
  const std::size_t g = batch.sequences.size();
  if (g == 0 || batch.loglik_old.size() != g || batch.advantages.size() != g) {
    throw std::invalid_argument("malformed GSPO batch");
  }
  LossAndGradient out;
  out.gradient.assign(policy.theta().size(), 0.0);
  const double lo = 1.0 - cfg.clip_eps;
  const double hi = 1.0 + cfg.clip_eps;
  for (std::size_t i = 0; i < g; ++i) {
    const auto& seq = batch.sequences[i];
    const double len = static_cast<double>(seq.size());
    const double s = gspo_ratio(policy.log_likelihood_sum(batch.start, seq), batch.loglik_old[i],
                                seq.size());
    const double a = batch.advantages[i];
    const double clipped = std::clamp(s, lo, hi);
    const double unclipped_term = s * a;
    const double clipped_term = clipped * a;
    out.value += std::min(unclipped_term, clipped_term);

    const bool inside = s > lo && s < hi;
    const bool unclipped_selected = inside || unclipped_term < clipped_term;
    if (unclipped_selected && a != 0.0) {
      // d s / d theta = s / len * d loglik / d theta
      policy.accumulate_gradient(batch.start, seq, a * s / len / static_cast<double>(g),
                                 out.gradient);
    }
  }
  out.value /= static_cast<double>(g);
  return out;
}

Scorer default_scorer(const reward::RewardConfig& cfg) {
  return [cfg](const AnnotatedSample& sample, const policy::Sample& generated, double kl_term) {
    return reward::score(policy::parse_sample(generated), sample.truth, kl_term, cfg);
  };
}

GspoResult run_gspo(policy::TokenSequencePolicy& policy, std::span<const AnnotatedSample> data,
                    const TrainingConfig& config, const Scorer& scorer) {
  GspoResult result;
  if (config.gspo_steps == 0) return result;
  if (data.empty()) throw std::invalid_argument("GSPO needs at least one sample");
  const auto& cfg = config.reward;
  const int group = cfg.group_size;

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  Rng order_rng(Rng::derive(config.seed, 0x95b0));
  std::size_t cursor = order.size();

  policy::TokenSequencePolicy previous = policy;
  for (int step = 0; step < config.gspo_steps; ++step) {
    if (cursor == order.size()) {
      order_rng.shuffle(std::span(order));
      cursor = 0;
    }
    const auto& sample = data[order[cursor++]];
    const policy::TokenSequencePolicy old = policy;
    const auto generated =
        old.generate_from(sample.start(), group, Rng::derive(config.seed, 1000 + step));

    GspoBatch batch;
    batch.start = sample.start();
    std::vector<double> rewards;
    GspoStepLog log;
    log.step = step;
    for (const auto& gen : generated) {
      const auto& lp_new = *gen.logprobs;
      const auto lp_prev = previous.log_likelihood(batch.start, gen.tokens);
      const double kl = reward::r_kl(lp_new, lp_prev, cfg);
      const auto b = scorer(sample, gen, kl);
      rewards.push_back(b.r_total);
      batch.sequences.push_back(gen.tokens);
      batch.loglik_old.push_back(std::accumulate(lp_new.begin(), lp_new.end(), 0.0));
      log.mean.s_pod += b.s_pod / group;
      log.mean.f_beta += b.f_beta / group;
      log.mean.r_base += b.r_base / group;
      log.mean.r_result += b.r_result / group;
      log.mean.r_format += b.r_format / group;
      log.mean.r_length += b.r_length / group;
      log.mean.r_kl += b.r_kl / group;
      log.mean.r_total += b.r_total / group;
    }
    batch.advantages = gspo_advantages(rewards, cfg);
    const auto objective = gspo_objective(policy, batch, cfg);
    log.objective = objective.value;

    auto theta = policy.theta();
    for (std::size_t i = 0; i < theta.size(); ++i) {
      theta[i] += config.learning_rate * objective.gradient[i];
      if (!std::isfinite(theta[i])) {
        throw RuntimeFailure("GSPO produced non-finite logits at step " + std::to_string(step));
      }
    }
    previous = old;
    result.reward_curve.push_back(log.mean.r_total);
    result.steps.push_back(log);
  }
  return result;
}

namespace {

void write_number(std::ostream& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  out << buf;
}

}  // namespace

void write_gspo_log(std::ostream& out, const GspoResult& result) {
  out << "step,objective,r_total,r_result,r_format,r_length,r_kl,s_pod,f_beta\n";
  for (const auto& s : result.steps) {
    out << s.step;
    for (double v : {s.objective, s.mean.r_total, s.mean.r_result, s.mean.r_format,
                     s.mean.r_length, s.mean.r_kl, s.mean.s_pod, s.mean.f_beta}) {
      out << ',';
      write_number(out, v);
    }
    out << '\n';
  }
}

void write_sft_log(std::ostream& out, const SftResult& result) {
  out << "step,loss\n";
  for (std::size_t i = 0; i < result.loss_curve.size(); ++i) {
    out << i << ',';
    write_number(out, result.loss_curve[i]);
    out << '\n';
  }
}

double online_reward(Outcome predicted, Outcome observed) {
  return predicted == observed ? 1.0 : 0.0;
}

bool online_step(policy::PolicyBackend& policy, TokenId start, std::span<const TokenId> generated,
                 Outcome predicted, Outcome observed, double learning_rate,
                 const reward::RewardConfig& cfg) {
  auto* toy = dynamic_cast<policy::TokenSequencePolicy*>(&policy);
  if (toy == nullptr || !policy.trainable()) {
    spdlog::info("online step skipped: backend '{}' is not trainable", policy.name());
    return false;
  }
  if (generated.empty()) return false;
  GspoBatch batch;
  batch.start = start;
  batch.sequences.emplace_back(generated.begin(), generated.end());
  batch.loglik_old.push_back(toy->log_likelihood_sum(start, generated));
  batch.advantages.push_back(online_reward(predicted, observed) - 0.5);
  const auto objective = gspo_objective(*toy, batch, cfg);
  auto theta = toy->theta();
  for (std::size_t i = 0; i < theta.size(); ++i) theta[i] += learning_rate * objective.gradient[i];
  return true;
}

}  // namespace cotctl::training
