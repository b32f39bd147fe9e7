#pragma once

// Scoring pipeline: profile distance -> diversity kernel -> equity boost ->
// deterministic top-k with bold labelling.

#include <cstddef>
#include <set>
#include <string>
#include <vector>

#include "divrec/catalog.hpp"
#include "divrec/equity.hpp"
#include "divrec/kernel.hpp"

namespace divrec {

/// Either a set of seed items (music mode) or a target vector with the ids
/// it was built from (document mode). Excluded ids are never recommended.
class SeedProfile {
 public:
  /// Throws Error(kPrecondition) on an empty seed list.
  static SeedProfile from_items(std::vector<std::string> seed_ids);
  static SeedProfile from_target(Vector target, std::set<std::string> exclude = {});

  bool item_mode() const noexcept { return item_mode_; }
  /// Sorted, unique. Empty in target mode.
  const std::vector<std::string>& seed_ids() const noexcept { return seed_ids_; }
  const Vector& target() const noexcept { return target_; }
  const std::set<std::string>& excluded() const noexcept { return excluded_; }

  /// Throws Error(kLookup) for unknown seeds; Error(kPrecondition) when a
  /// target profile meets a catalog without a matching vector feature.
  void validate(const Catalog& catalog) const;

  friend bool operator==(const SeedProfile&, const SeedProfile&) = default;

 private:
  bool item_mode_ = true;
  std::vector<std::string> seed_ids_;
  Vector target_;
  std::set<std::string> excluded_;
};

struct Recommendation {
  std::string item_id;
  double distance = 0.0;
  double raw_score = 0.0;
  double adjusted_score = 0.0;
  kernel::Band band = kernel::Band::kSimilar;
  bool bold = false;
  std::size_t rank = 0;

  friend bool operator==(const Recommendation&, const Recommendation&) = default;
};

/// Mean combined distance to the seeds, or (1 - cos)/2 to the target.
/// Throws Error(kPrecondition) when `item` is one of the seed items.
double profile_distance(const Item& item, const SeedProfile& profile, const Catalog& catalog);

struct RecommendOptions {
  kernel::KernelParams params;
  double lambda = kDefaultEquityLambda;
  std::size_t k = 10;
  kernel::RankingMode mode = kernel::RankingMode::kDiverse;
};

/// Scores and ranks every non-excluded item without touching the ledger.
std::vector<Recommendation> rank_candidates(const Catalog& catalog, const SeedProfile& profile,
                                            const RecommendOptions& options,
                                            const ExposureLedger& ledger);

/// rank_candidates, then records one exposure per returned item.
std::vector<Recommendation> recommend(const Catalog& catalog, const SeedProfile& profile,
                                      const RecommendOptions& options, ExposureLedger& ledger);

}  // namespace divrec
