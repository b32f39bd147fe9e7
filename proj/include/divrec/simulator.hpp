#pragma once

// Synthetic population harness comparing ranking policies on exposure
// concentration (gini), catalog coverage, acceptance and label trust.
//
// World: n_items random unit vectors; each user has a random unit taste
// vector (the target profile) and an ideal novelty distance d_u* drawn from
// U[d_lo, d_hi]. A user accepts an item at distance d with probability
// exp(-(d - d_u*)^2 / (2 tau^2)); accept/reject feeds the user's session.

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "divrec/session.hpp"

namespace divrec::sim {

enum class Policy { kSimilar, kDiverse, kDiverseEquity };

std::string_view policy_name(Policy policy);
/// "similar", "diverse" or "diverse+equity"; throws Error(kDomain) otherwise.
Policy parse_policy(std::string_view name);
inline constexpr Policy kAllPolicies[] = {Policy::kSimilar, Policy::kDiverse,
                                          Policy::kDiverseEquity};

struct PopulationSpec {
  std::size_t n_users = 50;
  std::size_t n_items = 500;
  std::size_t latent_dim = 8;
  double novelty_lo = 0.1;
  double novelty_hi = 0.4;
  double tau = 0.05;
  std::uint64_t seed = 42;
  std::size_t k = 5;
  double lambda = kDefaultEquityLambda;  // used by the diverse+equity policy only
  SessionDefaults session;

  /// Throws Error(kPrecondition) on zero counts, tau <= 0 or a bad novelty range.
  void validate() const;
};

struct RoundMetrics {
  std::size_t round = 0;  // 1-based
  double gini = 0.0;
  double coverage = 0.0;
  double acceptance_rate = 0.0;
  std::optional<double> mean_distance;  // over accepted items; empty if none
  double trust = 0.0;  // share of bold labels agreeing with the user's own novelty threshold
  std::size_t offered = 0;
  std::size_t accepted = 0;

  friend bool operator==(const RoundMetrics&, const RoundMetrics&) = default;
};

using MetricsSeries = std::vector<RoundMetrics>;

/// Fully deterministic given (pop, policy, rounds). Throws
/// Error(kPrecondition) for rounds == 0.
MetricsSeries run_simulation(const PopulationSpec& pop, Policy policy, std::size_t rounds);

/// Line-delimited {"round","gini","coverage","acceptance_rate","mean_distance"}.
void write_metrics(std::ostream& out, const MetricsSeries& series);

struct PolicySummary {
  Policy policy;
  double diversity = 0.0;   // final coverage
  double equity = 0.0;      // final gini (lower is fairer)
  double trust = 0.0;       // correctly labelled share over all rounds
  double usefulness = 0.0;  // acceptance rate over all rounds
  MetricsSeries series;
};

struct ComparisonReport {
  PopulationSpec population;
  std::size_t rounds = 0;
  std::vector<PolicySummary> policies;
};

inline constexpr std::string_view kReportColumns[] = {"Diversity", "Equity", "Trust",
                                                      "Usefulness"};

/// Runs every policy on the same world and random streams.
ComparisonReport evaluate_policies(const PopulationSpec& pop, std::size_t rounds);

/// JSON document {"seed","rounds","columns":[...],"policies":[{policy, Diversity, ...}]}.
std::string report_json(const ComparisonReport& report);
/// Fixed-width human-readable table.
std::string report_table(const ComparisonReport& report);

}  // namespace divrec::sim
