#include "divrec/distance.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

#include "divrec/error.hpp"
#include "divrec/simd/vec_ops.hpp"

namespace divrec {
namespace {

using nlohmann::json;

const FeatureValue& feature_of(const Item& item, const std::string& key) {
  const auto it = item.features.find(key);
  if (it == item.features.end()) {
    throw Error(ErrorCode::kValidation, "item '" + item.id + "' lacks feature '" + key + "'");
  }
  return it->second;
}

const Vector& vector_feature(const Item& item, const std::string& key) {
  const auto* v = std::get_if<Vector>(&feature_of(item, key));
  if (!v) {
    throw Error(ErrorCode::kValidation,
                "feature '" + key + "' of item '" + item.id + "' is not a vector");
  }
  return *v;
}

const TagSet& tag_feature(const Item& item, const std::string& key) {
  const auto* t = std::get_if<TagSet>(&feature_of(item, key));
  if (!t) {
    throw Error(ErrorCode::kValidation,
                "feature '" + key + "' of item '" + item.id + "' is not a tag set");
  }
  return *t;
}

const std::string& genre_of(const Item& item, const std::string& key) {
  if (key == kGenreFeatureKey) return item.genre_id;
  const TagSet& tags = tag_feature(item, key);
  if (tags.size() != 1) {
    throw Error(ErrorCode::kValidation, "feature '" + key + "' of item '" + item.id +
                                            "' must name exactly one genre");
  }
  return *tags.begin();
}

void require_same_dim(const Vector& a, const Vector& b, const std::string& key) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kValidation, "feature '" + key + "' has mismatched dimensions " +
                                            std::to_string(a.size()) + " and " +
                                            std::to_string(b.size()));
  }
}

}  // namespace

std::string_view criterion_kind_name(CriterionKind kind) {
  switch (kind) {
    case CriterionKind::kVectorCosine: return "vector-cosine";
    case CriterionKind::kVectorEuclidean: return "vector-euclidean";
    case CriterionKind::kGraphShortestPath: return "graph-shortest-path";
    case CriterionKind::kCategoricalOverlap: return "categorical-overlap";
  }
  return "unknown";
}

std::optional<CriterionKind> parse_criterion_kind(std::string_view name) {
  for (auto k : {CriterionKind::kVectorCosine, CriterionKind::kVectorEuclidean,
                 CriterionKind::kGraphShortestPath, CriterionKind::kCategoricalOverlap}) {
    if (criterion_kind_name(k) == name) return k;
  }
  return std::nullopt;
}

CalibrationMap::CalibrationMap(std::vector<std::pair<double, double>> knots)
    : knots_(std::move(knots)) {
  auto bad = [](const std::string& why) {
    return Error(ErrorCode::kConfiguration, "invalid calibration: " + why);
  };
  if (knots_.size() < 2) throw bad("needs at least the (0,0) and (1,1) knots");
  for (std::size_t i = 0; i < knots_.size(); ++i) {
    const auto [raw, perceived] = knots_[i];
    if (!(raw >= 0.0 && raw <= 1.0 && perceived >= 0.0 && perceived <= 1.0)) {
      throw bad("knot outside [0,1]^2");
    }
    if (i > 0 && !(raw > knots_[i - 1].first)) throw bad("raw distances must strictly increase");
    if (i > 0 && perceived < knots_[i - 1].second) {
      throw bad("perceived distances must not decrease");
    }
  }
  if (knots_.front() != std::pair{0.0, 0.0} || knots_.back() != std::pair{1.0, 1.0}) {
    throw bad("endpoints (0,0) and (1,1) are required");
  }
}

CalibrationMap CalibrationMap::identity() { return CalibrationMap({{0.0, 0.0}, {1.0, 1.0}}); }

double CalibrationMap::apply(double raw) const {
  raw = std::clamp(raw, 0.0, 1.0);
  const auto upper = std::upper_bound(
      knots_.begin(), knots_.end(), raw,
      [](double value, const std::pair<double, double>& knot) { return value < knot.first; });
  if (upper == knots_.end()) return knots_.back().second;
  const auto& [x1, y1] = *upper;
  const auto& [x0, y0] = *(upper - 1);
  const double t = (raw - x0) / (x1 - x0);
  return std::clamp(y0 + t * (y1 - y0), y0, y1);
}

void DistanceConfig::validate() const {
  if (criteria.empty()) throw Error(ErrorCode::kConfiguration, "no distance criteria configured");
  std::set<std::string> ids;
  double total = 0.0;
  for (const auto& c : criteria) {
    if (c.id.empty()) throw Error(ErrorCode::kConfiguration, "criterion with empty id");
    if (!ids.insert(c.id).second) {
      throw Error(ErrorCode::kConfiguration, "duplicate criterion id '" + c.id + "'");
    }
    if (c.feature_key.empty()) {
      throw Error(ErrorCode::kConfiguration, "criterion '" + c.id + "' has no feature_key");
    }
    if (!std::isfinite(c.weight) || c.weight < 0.0) {
      throw Error(ErrorCode::kConfiguration, "criterion '" + c.id + "' has invalid weight");
    }
    total += c.weight;
  }
  if (!(total > 0.0)) throw Error(ErrorCode::kConfiguration, "all criterion weights are zero");
}

DistanceConfig load_distance_config(std::istream& in) {
  const json doc = json::parse(in, nullptr, false);
  auto bad = [](const std::string& why) {
    return Error(ErrorCode::kConfiguration, "distance config: " + why);
  };
  if (doc.is_discarded() || !doc.is_object()) throw bad("not a JSON object");
  DistanceConfig config;
  for (const auto& [key, value] : doc.items()) {
    if (key != "criteria" && key != "calibration") throw bad("unknown field '" + key + "'");
  }
  if (!doc.contains("criteria") || !doc["criteria"].is_array()) {
    throw bad("'criteria' must be an array");
  }
  for (const auto& c : doc["criteria"]) {
    if (!c.is_object()) throw bad("criterion must be an object");
    for (const auto& [key, value] : c.items()) {
      if (key != "id" && key != "kind" && key != "weight" && key != "feature_key") {
        throw bad("unknown criterion field '" + key + "'");
      }
    }
    if (!c.contains("id") || !c["id"].is_string() || !c.contains("kind") ||
        !c["kind"].is_string() || !c.contains("feature_key") || !c["feature_key"].is_string()) {
      throw bad("criterion needs string fields id, kind, feature_key");
    }
    CriterionSpec spec;
    spec.id = c["id"].get<std::string>();
    const auto kind = parse_criterion_kind(c["kind"].get<std::string>());
    if (!kind) throw bad("unknown criterion kind '" + c["kind"].get<std::string>() + "'");
    spec.kind = *kind;
    spec.feature_key = c["feature_key"].get<std::string>();
    if (c.contains("weight")) {
      if (!c["weight"].is_number()) throw bad("weight must be a number");
      spec.weight = c["weight"].get<double>();
    }
    config.criteria.push_back(std::move(spec));
  }
  if (doc.contains("calibration")) {
    const json& cal = doc["calibration"];
    if (!cal.is_array()) throw bad("'calibration' must be an array of [raw, perceived]");
    std::vector<std::pair<double, double>> knots;
    for (const auto& k : cal) {
      if (!k.is_array() || k.size() != 2 || !k[0].is_number() || !k[1].is_number()) {
        throw bad("calibration knot must be [raw, perceived]");
      }
      knots.emplace_back(k[0].get<double>(), k[1].get<double>());
    }
    config.calibration = CalibrationMap(std::move(knots));
  }
  config.validate();
  return config;
}

void write_distance_config(std::ostream& out, const DistanceConfig& config) {
  json doc;
  doc["criteria"] = json::array();
  for (const auto& c : config.criteria) {
    doc["criteria"].push_back({{"id", c.id},
                               {"kind", criterion_kind_name(c.kind)},
                               {"weight", c.weight},
                               {"feature_key", c.feature_key}});
  }
  if (config.calibration) {
    json knots = json::array();
    for (const auto& [raw, perceived] : config.calibration->knots()) {
      knots.push_back({raw, perceived});
    }
    doc["calibration"] = knots;
  }
  out << doc.dump(2) << '\n';
}

double cosine_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::kDomain, "cosine of mismatched dimensions");
  if (std::equal(a.begin(), a.end(), b.begin())) return 0.0;
  const double na = simd::norm(a);
  const double nb = simd::norm(b);
  if (na == 0.0 || nb == 0.0) return 0.5;
  const double sim = std::clamp(simd::dot(a, b) / (na * nb), -1.0, 1.0);
  return 0.5 * (1.0 - sim);
}

double euclidean_distance(std::span<const double> a, std::span<const double> b) {
  const double e = std::sqrt(simd::squared_distance(a, b));
  return e / (1.0 + e);
}

double jaccard_distance(const TagSet& a, const TagSet& b) {
  std::size_t common = 0;
  for (const auto& t : a) common += b.contains(t) ? 1 : 0;
  const std::size_t all = a.size() + b.size() - common;
  if (all == 0) return 0.0;
  return 1.0 - static_cast<double>(common) / static_cast<double>(all);
}

double criterion_distance(const Item& a, const Item& b, const CriterionSpec& spec,
                          const GenreGraph* graph) {
  switch (spec.kind) {
    case CriterionKind::kVectorCosine:
    case CriterionKind::kVectorEuclidean: {
      const Vector& va = vector_feature(a, spec.feature_key);
      const Vector& vb = vector_feature(b, spec.feature_key);
      require_same_dim(va, vb, spec.feature_key);
      return spec.kind == CriterionKind::kVectorCosine ? cosine_distance(va, vb)
                                                       : euclidean_distance(va, vb);
    }
    case CriterionKind::kGraphShortestPath: {
      if (!graph) {
        throw Error(ErrorCode::kConfiguration,
                    "criterion '" + spec.id + "' needs a genre graph");
      }
      return genre_graph_distance(genre_of(a, spec.feature_key), genre_of(b, spec.feature_key),
                                  *graph);
    }
    case CriterionKind::kCategoricalOverlap:
      return jaccard_distance(tag_feature(a, spec.feature_key),
                              tag_feature(b, spec.feature_key));
  }
  throw Error(ErrorCode::kConfiguration, "unknown criterion kind");
}

double combined_distance(const Item& a, const Item& b, std::span<const CriterionSpec> specs,
                         const CalibrationMap* calibration, const GenreGraph* graph) {
  double weighted = 0.0;
  double total = 0.0;
  for (const auto& spec : specs) {
    const double d = criterion_distance(a, b, spec, graph);
    weighted += spec.weight * d;
    total += spec.weight;
  }
  if (!(total > 0.0)) throw Error(ErrorCode::kConfiguration, "all criterion weights are zero");
  const double raw = std::clamp(weighted / total, 0.0, 1.0);
  return calibration ? calibration->apply(raw) : raw;
}

}  // namespace divrec
