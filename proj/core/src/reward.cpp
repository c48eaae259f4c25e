#include "cotctl/reward.hpp"

#include <algorithm>
#include <stdexcept>

#include "cotctl/error.hpp"

namespace cotctl::reward {

void RewardConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("reward config: ") + what);
  };
  require(epsilon > 0.0, "epsilon must be > 0");
  require(alpha > 0.0 && alpha < 1.0, "alpha must be in (0, 1)");
  require(beta_f > 1.0, "beta_f must be > 1");
  require(delta > 0.0, "delta must be > 0");
  require(d > 0.0, "d must be > 0");
  require(tau_fn >= 0.0, "tau_fn must be >= 0");
  require(l_min > 0 && l_min < l_max, "need 0 < l_min < l_max");
  require(beta_kl >= 0.0, "beta_kl must be >= 0");
  require(clip_eps > 0.0 && clip_eps < 1.0, "clip_eps must be in (0, 1)");
  require(group_size >= 2, "group_size must be >= 2");
  require(adv_eps > 0.0, "adv_eps must be > 0");
}

MatchCounts match_counts(const LabelSet& predicted, const LabelSet& truth) {
  MatchCounts c;
  for (const auto& p : predicted) {
    if (truth.contains(p)) {
      ++c.tp;
    } else {
      ++c.fp;
    }
  }
  for (const auto& t : truth) {
    if (!predicted.contains(t)) ++c.fn;
  }
  std::set<ServiceId> pred_pods, truth_pods;
  for (const auto& p : predicted) pred_pods.insert(p.service);
  for (const auto& t : truth) truth_pods.insert(t.service);
  for (ServiceId s : pred_pods) {
    if (truth_pods.contains(s)) {
      ++c.pod_match;
    } else {
      ++c.pod_not;
    }
  }
  return c;
}

double s_pod(const MatchCounts& c, const RewardConfig& cfg) {
  return c.pod_match / (c.pod_match + c.pod_not + cfg.epsilon);
}

double f_beta(const MatchCounts& c, const RewardConfig& cfg) {
  const double b2 = cfg.beta_f * cfg.beta_f;
  const double num = (1.0 + b2) * c.tp;
  return num / (num + b2 * c.fn + c.fp + cfg.epsilon);
}

double r_base(const MatchCounts& c, const RewardConfig& cfg) {
  return cfg.alpha * s_pod(c, cfg) + (1.0 - cfg.alpha) * f_beta(c, cfg) +
         cfg.delta * (c.tp > 0 ? 1.0 : 0.0);
}

double r_result(const MatchCounts& c, const RewardConfig& cfg) {
  return r_base(c, cfg) - cfg.d * std::max(0.0, c.fn - cfg.tau_fn);
}

double r_format(int c_total, int c_invalid) {
  if (c_total <= 0) throw std::invalid_argument("format check total must be > 0");
  if (c_invalid < 0 || c_invalid > c_total) {
    throw std::invalid_argument("failed format checks must be within [0, total]");
  }
  return c_invalid == 0 ? 0.0 : -static_cast<double>(c_invalid) / c_total;
}

double length_penalty(int length, const RewardConfig& cfg) {
  if (length <= cfg.l_min) return 0.0;
  if (length >= cfg.l_max) return -1.0;
  return -static_cast<double>(length - cfg.l_min) / (cfg.l_max - cfg.l_min);
}

double r_length(int length, bool correct, const RewardConfig& cfg) {
  return correct ? length_penalty(length, cfg) : 0.0;
}

double r_kl(std::span<const double> logp_new, std::span<const double> logp_old,
            const RewardConfig& cfg) {
  if (logp_new.size() != logp_old.size()) {
    throw std::invalid_argument("KL estimate needs aligned log-likelihood sequences");
  }
  if (logp_new.empty() || cfg.beta_kl == 0.0) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < logp_new.size(); ++i) sum += logp_new[i] - logp_old[i];
  return -cfg.beta_kl * (sum / static_cast<double>(logp_new.size()));
}

double r_kl_exact(double kl, const RewardConfig& cfg) { return -cfg.beta_kl * kl; }

RewardBreakdown r_total(const MatchCounts& counts, const cot::FormatChecks& checks, int length,
                        double kl_term, const RewardConfig& cfg) {
  RewardBreakdown b;
  b.s_pod = s_pod(counts, cfg);
  b.f_beta = f_beta(counts, cfg);
  b.r_base = r_base(counts, cfg);
  b.r_result = r_result(counts, cfg);
  b.r_format = r_format(checks.total, checks.invalid);
  b.r_length = r_length(length, counts.tp > 0, cfg);
  b.r_kl = kl_term;
  b.r_total = b.r_result + b.r_format + b.r_length + b.r_kl;
  return b;
}

RewardBreakdown score(const cot::CotOutput& out, const LabelSet& truth, double kl_term,
                      const RewardConfig& cfg) {
  return r_total(match_counts(out.root_set(), truth), cot::count_format_checks(out),
                 cot::reasoning_length(out), kl_term, cfg);
}

double format_and_length(const cot::CotOutput& out, const RewardConfig& cfg) {
  const auto checks = cot::count_format_checks(out);
  return r_format(checks.total, checks.invalid) +
         r_length(cot::reasoning_length(out), true, cfg);
}

RcaMetrics rca_metrics(std::span<const RcaCase> cases) {
  if (cases.empty()) throw std::invalid_argument("RCA metrics need at least one case");
  long tp = 0, fp = 0, fn = 0, hits = 0;
  for (const auto& c : cases) {
    const auto m = match_counts(c.predicted, c.truth);
    tp += m.tp;
    fp += m.fp;
    fn += m.fn;
    if (c.truth.empty()) {
      hits += c.top1.has_value() ? 0 : 1;
    } else if (c.top1 && c.truth.contains(*c.top1)) {
      hits += 1;
    }
  }
  RcaMetrics r;
  r.precision_defined = tp + fp > 0;
  r.recall_defined = tp + fn > 0;
  r.precision = r.precision_defined ? static_cast<double>(tp) / (tp + fp) : 0.0;
  r.recall = r.recall_defined ? static_cast<double>(tp) / (tp + fn) : 0.0;
  r.accuracy = static_cast<double>(hits) / static_cast<double>(cases.size());
  return r;
}

}  // namespace cotctl::reward
