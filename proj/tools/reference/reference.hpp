#pragma once

// Independent reference implementations used to cross-check the library:
// naive set counting and direct reward formulas, and the closed-form M/M/c
// sojourn time computed from the factorial sum.

#include <cstdint>
#include <vector>

#include "cotctl/reward.hpp"
#include "cotctl/rng.hpp"
#include "cotctl/types.hpp"

namespace cotctl::reference {

struct Counts {
  int tp = 0, fp = 0, fn = 0, pod_match = 0, pod_not = 0;
};

/// Double loop over plain vectors of labels (duplicates ignored).
Counts naive_counts(const std::vector<RootLabel>& predicted, const std::vector<RootLabel>& truth);

struct Scores {
  double s_pod = 0.0;
  double f_beta = 0.0;
  double r_base = 0.0;
  double r_result = 0.0;
};

Scores direct_scores(const Counts& c, const reward::RewardConfig& cfg);

/// Random label list over services 1..max_service and all four resources;
/// may contain duplicates.
std::vector<RootLabel> random_labels(Rng& rng, int max_service, int max_size);

/// Mean sojourn (seconds) of an M/M/c queue from the textbook formula
/// P_wait = (a^c / c!) (c / (c - a)) / (sum_{k<c} a^k / k! + (a^c / c!) (c / (c - a))).
double mmc_mean_sojourn(double lambda, double mu, int c);

struct CheckSummary {
  int cases = 0;
  double max_abs_diff = 0.0;
  int count_mismatches = 0;
};

/// Compares the library's reward functions with the direct formulas on
/// `cases` seeded random (predicted, truth) pairs.
CheckSummary compare_rewards(int cases, std::uint64_t seed, int max_service = 8);

}  // namespace cotctl::reference
