#pragma once

// Multi-criteria item distance. Every per-criterion distance is normalized
// into [0, 1], symmetric and zero on identical features; the composite is
// their weighted mean, optionally passed through a perceptual calibration.

#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "divrec/genre_graph.hpp"
#include "divrec/item.hpp"

namespace divrec {

enum class CriterionKind { kVectorCosine, kVectorEuclidean, kGraphShortestPath, kCategoricalOverlap };

std::string_view criterion_kind_name(CriterionKind kind);
std::optional<CriterionKind> parse_criterion_kind(std::string_view name);

/// Item::genre_id is addressed by this feature key.
inline constexpr std::string_view kGenreFeatureKey = "genre_id";

struct CriterionSpec {
  std::string id;
  CriterionKind kind = CriterionKind::kVectorCosine;
  double weight = 1.0;
  std::string feature_key;

  friend bool operator==(const CriterionSpec&, const CriterionSpec&) = default;
};

/// Monotone piecewise-linear map from raw to perceived distance.
class CalibrationMap {
 public:
  /// Throws Error(kConfiguration) unless raw is strictly increasing,
  /// perceived nondecreasing, all knots in [0,1]^2 and (0,0), (1,1) present.
  explicit CalibrationMap(std::vector<std::pair<double, double>> knots);

  static CalibrationMap identity();

  const std::vector<std::pair<double, double>>& knots() const noexcept { return knots_; }
  double apply(double raw) const;

  friend bool operator==(const CalibrationMap&, const CalibrationMap&) = default;

 private:
  std::vector<std::pair<double, double>> knots_;
};

struct DistanceConfig {
  std::vector<CriterionSpec> criteria;
  std::optional<CalibrationMap> calibration;

  /// Throws Error(kConfiguration) on empty/duplicate criteria, negative or
  /// non-finite weights, or all-zero weights.
  void validate() const;

  friend bool operator==(const DistanceConfig&, const DistanceConfig&) = default;
};

/// JSON document: {"criteria":[{"id","kind","weight","feature_key"}...],
/// "calibration":[[raw,perceived]...]} (calibration optional).
DistanceConfig load_distance_config(std::istream& in);
void write_distance_config(std::ostream& out, const DistanceConfig& config);

/// (1 - cos)/2. Exactly 0 for element-wise equal vectors; 0.5 when exactly
/// one side has zero norm.
double cosine_distance(std::span<const double> a, std::span<const double> b);

/// ||a - b|| / (1 + ||a - b||).
double euclidean_distance(std::span<const double> a, std::span<const double> b);

/// 1 - |A n B| / |A u B|; 0 when both are empty.
double jaccard_distance(const TagSet& a, const TagSet& b);

/// Throws Error(kValidation) naming item and key on a missing or wrongly
/// typed feature, Error(kConfiguration) for a graph criterion without graph,
/// Error(kLookup) for genres absent from the graph.
double criterion_distance(const Item& a, const Item& b, const CriterionSpec& spec,
                          const GenreGraph* graph);

double combined_distance(const Item& a, const Item& b, std::span<const CriterionSpec> specs,
                         const CalibrationMap* calibration, const GenreGraph* graph = nullptr);

}  // namespace divrec
