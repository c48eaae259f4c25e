#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "cotctl/cot.hpp"
#include "cotctl/policy.hpp"
#include "cotctl/prompt.hpp"
#include "cotctl/reward.hpp"
#include "cotctl/toy_policy.hpp"

namespace cotctl::training {

struct AnnotatedSample {
  encoder::Prompt prompt;  // the toy policy conditions on prompt.tokens.back()
  std::vector<TokenId> response;
  LabelSet truth;

  TokenId start() const;
};

struct TrainingConfig {
  int sft_steps = 500;
  int gspo_steps = 200;
  double learning_rate = 0.1;
  reward::RewardConfig reward;
  double partition_ratio = 0.5;
  std::uint64_t seed = 1;
  int batch_size = 0;  // SFT samples per step; 0 uses the whole partition

  void validate() const;
};

using Partition = std::vector<AnnotatedSample>;

/// Seeded shuffle, then the first floor(ratio * n) samples (clamped to
/// [1, n - 1]) form partition 0. Throws std::invalid_argument for n < 2.
std::pair<Partition, Partition> split_dataset(std::span<const AnnotatedSample> samples,
                                              double ratio, std::uint64_t seed);

struct LossAndGradient {
  double value = 0.0;
  std::vector<double> gradient;  // same layout as theta
};

/// Negative log-likelihood of the reference response and its gradient.
LossAndGradient sft_loss(const policy::TokenSequencePolicy& policy, const AnnotatedSample& sample);

struct SftResult {
  std::vector<double> loss_curve;  // mean loss of each step's batch, before the update
};

/// Gradient descent on the SFT loss. Throws RuntimeFailure if the loss
/// exceeds 1e6 or becomes non-finite.
SftResult run_sft(policy::TokenSequencePolicy& policy, std::span<const AnnotatedSample> data,
                  const TrainingConfig& config);

/// (R_i - mean) / (population std + adv_eps).
std::vector<double> gspo_advantages(std::span<const double> rewards,
                                    const reward::RewardConfig& cfg);

/// exp((new - old) / len): the length-normalized sequence likelihood ratio.
double gspo_ratio(double loglik_new_sum, double loglik_old_sum, std::size_t len);

struct GspoBatch {
  TokenId start = 0;
  std::vector<std::vector<TokenId>> sequences;
  std::vector<double> loglik_old;  // sequence sums under the sampling policy
  std::vector<double> advantages;
};

/// Clipped sequence-level surrogate and its ascent gradient. The gradient
/// flows through s_i only where the unclipped term is selected; strictly
/// inside the band both terms coincide, on its boundary and beyond it the
/// clipped term (zero gradient) is taken unless the unclipped one is strictly
/// smaller.
LossAndGradient gspo_objective(const policy::TokenSequencePolicy& policy, const GspoBatch& batch,
                               const reward::RewardConfig& cfg);

/// Scores one generated sample of a training prompt. `kl_term` is the signed
/// KL reward of the sample against the previous step's parameters.
using Scorer = std::function<reward::RewardBreakdown(
    const AnnotatedSample& sample, const policy::Sample& generated, double kl_term)>;

/// Parses the generation and scores it against the sample's truth set.
Scorer default_scorer(const reward::RewardConfig& cfg);

struct GspoStepLog {
  int step = 0;
  double objective = 0.0;
  reward::RewardBreakdown mean;  // component means over the group
};

struct GspoResult {
  std::vector<GspoStepLog> steps;
  std::vector<double> reward_curve;  // mean R_total per step
};

/// Per step: snapshot theta_old, draw G samples for the next prompt, score,
/// normalize advantages, take one ascent step. Throws RuntimeFailure on
/// non-finite parameters.
GspoResult run_gspo(policy::TokenSequencePolicy& policy, std::span<const AnnotatedSample> data,
                    const TrainingConfig& config, const Scorer& scorer);

void write_gspo_log(std::ostream& out, const GspoResult& result);
void write_sft_log(std::ostream& out, const SftResult& result);

/// Binary match reward: 1 when the predicted outcome equals the observed one.
double online_reward(Outcome predicted, Outcome observed);

/// One G=1 update of `policy` on the generated sequence with a fixed 0.5
/// baseline. Returns false (and logs) when the backend is not trainable.
bool online_step(policy::PolicyBackend& policy, TokenId start, std::span<const TokenId> generated,
                 Outcome predicted, Outcome observed, double learning_rate,
                 const reward::RewardConfig& cfg);

}  // namespace cotctl::training
