#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cotctl/cot.hpp"
#include "cotctl/types.hpp"

namespace cotctl::reward {

struct MatchCounts {
  int tp = 0;
  int fp = 0;
  int fn = 0;
  int pod_match = 0;
  int pod_not = 0;

  friend bool operator==(const MatchCounts&, const MatchCounts&) = default;
};

struct RewardConfig {
  double epsilon = 1e-8;
  double alpha = 0.05;
  double beta_f = 2.0;
  double delta = 0.1;
  double d = 0.25;
  double tau_fn = 2.0;
  int l_min = 64;
  int l_max = 1024;
  double beta_kl = 0.01;
  double clip_eps = 0.2;
  int group_size = 8;
  double adv_eps = 1e-8;

  /// Throws ConfigError naming the first out-of-range field.
  void validate() const;
};

struct RewardBreakdown {
  double s_pod = 0.0;
  double f_beta = 0.0;
  double r_base = 0.0;
  double r_result = 0.0;
  double r_format = 0.0;
  double r_length = 0.0;
  double r_kl = 0.0;
  double r_total = 0.0;
};

MatchCounts match_counts(const LabelSet& predicted, const LabelSet& truth);

double s_pod(const MatchCounts& c, const RewardConfig& cfg);
double f_beta(const MatchCounts& c, const RewardConfig& cfg);
double r_base(const MatchCounts& c, const RewardConfig& cfg);
double r_result(const MatchCounts& c, const RewardConfig& cfg);
/// -c_invalid / c_total. Throws std::invalid_argument unless 0 <= c_invalid <= c_total, c_total > 0.
double r_format(int c_total, int c_invalid);
double length_penalty(int length, const RewardConfig& cfg);
double r_length(int length, bool correct, const RewardConfig& cfg);
/// -beta_kl times the mean per-token log-ratio of the sampled sequence.
/// Throws std::invalid_argument on length mismatch.
double r_kl(std::span<const double> logp_new, std::span<const double> logp_old,
            const RewardConfig& cfg);
/// -beta_kl times an exact KL divergence supplied by the caller.
double r_kl_exact(double kl, const RewardConfig& cfg);

/// Fills r_total as the plain sum of the four components.
RewardBreakdown r_total(const MatchCounts& counts, const cot::FormatChecks& checks, int length,
                        double kl_term, const RewardConfig& cfg);

/// Full score of a parsed output against a truth set; `kl_term` is the
/// already-signed KL reward.
RewardBreakdown score(const cot::CotOutput& out, const LabelSet& truth, double kl_term,
                      const RewardConfig& cfg);

/// Truth-free part of the reward (format + length, with correctness assumed).
double format_and_length(const cot::CotOutput& out, const RewardConfig& cfg);

struct RcaCase {
  LabelSet predicted;
  std::optional<RootLabel> top1;
  LabelSet truth;
};

struct RcaMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double accuracy = 0.0;
  bool precision_defined = true;
  bool recall_defined = true;
};

/// Micro-averaged precision/recall and top-1 accuracy. Undefined ratios
/// report 0 with the matching flag cleared. Throws on an empty case list.
RcaMetrics rca_metrics(std::span<const RcaCase> cases);

}  // namespace cotctl::reward
