#include "reference.hpp"

#include <algorithm>
#include <cmath>

namespace cotctl::reference {

namespace {

bool same(const RootLabel& a, const RootLabel& b) {
  return a.service == b.service && a.resource == b.resource;
}

std::vector<RootLabel> unique_labels(const std::vector<RootLabel>& in) {
  std::vector<RootLabel> out;
  for (const auto& l : in) {
    bool seen = false;
    for (const auto& o : out) seen = seen || same(o, l);
    if (!seen) out.push_back(l);
  }
  return out;
}

std::vector<ServiceId> unique_services(const std::vector<RootLabel>& in) {
  std::vector<ServiceId> out;
  for (const auto& l : in) {
    bool seen = false;
    for (ServiceId s : out) seen = seen || s == l.service;
    if (!seen) out.push_back(l.service);
  }
  return out;
}

}  // namespace

Counts naive_counts(const std::vector<RootLabel>& predicted_in,
                    const std::vector<RootLabel>& truth_in) {
  const auto predicted = unique_labels(predicted_in);
  const auto truth = unique_labels(truth_in);
  Counts c;
  for (const auto& p : predicted) {
    bool hit = false;
    for (const auto& t : truth) hit = hit || same(p, t);
    if (hit) {
      c.tp += 1;
    } else {
      c.fp += 1;
    }
  }
  for (const auto& t : truth) {
    bool hit = false;
    for (const auto& p : predicted) hit = hit || same(p, t);
    if (!hit) c.fn += 1;
  }
  const auto pred_pods = unique_services(predicted);
  const auto truth_pods = unique_services(truth);
  for (ServiceId p : pred_pods) {
    bool hit = false;
    for (ServiceId t : truth_pods) hit = hit || p == t;
    if (hit) {
      c.pod_match += 1;
    } else {
      c.pod_not += 1;
    }
  }
  return c;
}

Scores direct_scores(const Counts& c, const reward::RewardConfig& cfg) {
  Scores s;
  const double b2 = cfg.beta_f * cfg.beta_f;
  s.s_pod = c.pod_match / (c.pod_match + c.pod_not + cfg.epsilon);
  s.f_beta = (1.0 + b2) * c.tp / ((1.0 + b2) * c.tp + b2 * c.fn + c.fp + cfg.epsilon);
  const double bonus = c.tp > 0 ? cfg.delta : 0.0;
  s.r_base = cfg.alpha * s.s_pod + (1.0 - cfg.alpha) * s.f_beta + bonus;
  const double excess = c.fn - cfg.tau_fn;
  s.r_result = s.r_base - cfg.d * (excess > 0.0 ? excess : 0.0);
  return s;
}

std::vector<RootLabel> random_labels(Rng& rng, int max_service, int max_size) {
  constexpr ResourceType kResources[] = {ResourceType::Cpu, ResourceType::Disk,
                                         ResourceType::Memory, ResourceType::Network};
  const auto size = rng.below(static_cast<std::size_t>(max_size) + 1);
  std::vector<RootLabel> out;
  for (std::size_t i = 0; i < size; ++i) {
    out.push_back(RootLabel{1 + static_cast<ServiceId>(rng.below(static_cast<std::size_t>(max_service))),
                            kResources[rng.below(4)]});
  }
  return out;
}

double mmc_mean_sojourn(double lambda, double mu, int c) {
  const double a = lambda / mu;
  double term = 1.0;  // a^k / k!
  double head = 0.0;
  for (int k = 0; k < c; ++k) {
    head += term;
    term *= a / (k + 1);
  }
  // term now holds a^c / c!
  const double tail = term * c / (c - a);
  const double p_wait = tail / (head + tail);
  return p_wait / (c * mu - lambda) + 1.0 / mu;
}

CheckSummary compare_rewards(int cases, std::uint64_t seed, int max_service) {
  CheckSummary summary;
  const reward::RewardConfig cfg;
  Rng rng(seed);
  for (int i = 0; i < cases; ++i) {
    const auto predicted = random_labels(rng, max_service, 2 * max_service);
    const auto truth = random_labels(rng, max_service, 2 * max_service);
    const auto expected = naive_counts(predicted, truth);
    const auto counts = reward::match_counts(LabelSet(predicted.begin(), predicted.end()),
                                             LabelSet(truth.begin(), truth.end()));
    if (counts.tp != expected.tp || counts.fp != expected.fp || counts.fn != expected.fn ||
        counts.pod_match != expected.pod_match || counts.pod_not != expected.pod_not) {
      summary.count_mismatches += 1;
    }
    const auto ref = direct_scores(expected, cfg);
    const double diffs[] = {std::abs(reward::s_pod(counts, cfg) - ref.s_pod),
                            std::abs(reward::f_beta(counts, cfg) - ref.f_beta),
                            std::abs(reward::r_base(counts, cfg) - ref.r_base),
                            std::abs(reward::r_result(counts, cfg) - ref.r_result)};
    for (double d : diffs) summary.max_abs_diff = std::max(summary.max_abs_diff, d);
    summary.cases += 1;
  }
  return summary;
}

}  // namespace cotctl::reference
