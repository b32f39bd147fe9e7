#include "divrec/catalog.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include <json.hpp>

#include "divrec/error.hpp"

namespace divrec {
namespace {

using nlohmann::json;

constexpr std::string_view kFields[] = {"id",       "title",    "artist",
                                        "genre_id", "features", "popularity"};

bool known_field(const std::string& key) {
  for (auto f : kFields) {
    if (f == key) return true;
  }
  return false;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

enum class FeatureShape { kVector, kTags };

struct FeatureSignature {
  FeatureShape shape;
  std::size_t dim;
  std::size_t line;
};

std::optional<Item> parse_record(const json& rec, std::size_t line, ValidationReport& report) {
  if (!rec.is_object()) {
    report.add(CatalogErrorCode::kMalformedRecord, line, "", "record is not a JSON object");
    return std::nullopt;
  }
  const std::size_t before = report.issues.size();
  std::string id;
  if (rec.contains("id") && rec["id"].is_string()) id = rec["id"].get<std::string>();

  for (const auto& [key, value] : rec.items()) {
    if (!known_field(key)) {
      report.add(CatalogErrorCode::kUnknownField, line, id, "unknown field '" + key + "'");
    }
  }

  Item item;
  auto read_string = [&](const char* field, std::string& out, bool non_empty) {
    if (!rec.contains(field)) {
      report.add(CatalogErrorCode::kMissingField, line, id,
                 std::string("missing field '") + field + "'");
      return;
    }
    const json& v = rec[field];
    if (!v.is_string()) {
      report.add(CatalogErrorCode::kWrongType, line, id,
                 std::string("field '") + field + "' must be a string");
      return;
    }
    out = v.get<std::string>();
    if (non_empty && out.empty()) {
      report.add(CatalogErrorCode::kInvalidValue, line, id,
                 std::string("field '") + field + "' must not be empty");
    }
  };
  read_string("id", item.id, true);
  read_string("title", item.title, false);
  read_string("artist", item.artist, false);
  read_string("genre_id", item.genre_id, true);

  if (!rec.contains("features")) {
    report.add(CatalogErrorCode::kMissingField, line, id, "missing field 'features'");
  } else if (!rec["features"].is_object()) {
    report.add(CatalogErrorCode::kWrongType, line, id, "field 'features' must be an object");
  } else {
    for (const auto& [key, value] : rec["features"].items()) {
      if (!value.is_array()) {
        report.add(CatalogErrorCode::kWrongType, line, id,
                   "feature '" + key + "' must be an array");
        continue;
      }
      bool all_numbers = !value.empty();
      bool all_strings = true;
      for (const auto& e : value) {
        all_numbers = all_numbers && e.is_number();
        all_strings = all_strings && e.is_string();
      }
      if (all_strings) {
        TagSet tags;
        for (const auto& e : value) tags.insert(e.get<std::string>());
        item.features.emplace(key, std::move(tags));
      } else if (all_numbers) {
        Vector v;
        v.reserve(value.size());
        bool finite = true;
        for (const auto& e : value) {
          v.push_back(e.get<double>());
          finite = finite && std::isfinite(v.back());
        }
        if (!finite) {
          report.add(CatalogErrorCode::kInvalidValue, line, id,
                     "feature '" + key + "' contains a non-finite number");
        }
        item.features.emplace(key, std::move(v));
      } else {
        report.add(CatalogErrorCode::kWrongType, line, id,
                   "feature '" + key + "' must be all numbers or all strings");
      }
    }
  }

  if (rec.contains("popularity")) {
    const json& p = rec["popularity"];
    if (p.is_number_unsigned()) {
      item.popularity = p.get<std::uint64_t>();
    } else if (p.is_number_integer()) {
      report.add(CatalogErrorCode::kInvalidValue, line, id, "popularity must be >= 0");
    } else {
      report.add(CatalogErrorCode::kWrongType, line, id,
                 "popularity must be a nonnegative integer");
    }
  }

  if (report.issues.size() != before) return std::nullopt;
  return item;
}

// Per-key shape and dimension consistency across the whole item set.
void check_feature_consistency(const std::vector<Item>& items,
                               const std::vector<std::size_t>& lines,
                               ValidationReport& report) {
  std::map<std::string, FeatureSignature> seen;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const std::size_t line = i < lines.size() ? lines[i] : 0;
    for (const auto& [key, value] : items[i].features) {
      const auto* vec = std::get_if<Vector>(&value);
      const FeatureSignature sig{vec ? FeatureShape::kVector : FeatureShape::kTags,
                                 vec ? vec->size() : 0, line};
      const auto [it, inserted] = seen.emplace(key, sig);
      if (inserted) continue;
      if (it->second.shape != sig.shape) {
        report.add(CatalogErrorCode::kFeatureKindMismatch, line, items[i].id,
                   "feature '" + key + "' mixes vectors and tag sets");
      } else if (sig.shape == FeatureShape::kVector && it->second.dim != sig.dim) {
        report.add(CatalogErrorCode::kDimensionMismatch, line, items[i].id,
                   "feature '" + key + "' has dimension " + std::to_string(sig.dim) +
                       ", expected " + std::to_string(it->second.dim));
      }
    }
  }
}

}  // namespace

std::string_view catalog_error_name(CatalogErrorCode code) {
  switch (code) {
    case CatalogErrorCode::kEmptyCatalog: return "empty_catalog";
    case CatalogErrorCode::kMalformedRecord: return "malformed_record";
    case CatalogErrorCode::kUnknownField: return "unknown_field";
    case CatalogErrorCode::kMissingField: return "missing_field";
    case CatalogErrorCode::kWrongType: return "wrong_type";
    case CatalogErrorCode::kInvalidValue: return "invalid_value";
    case CatalogErrorCode::kDuplicateId: return "duplicate_id";
    case CatalogErrorCode::kDimensionMismatch: return "dimension_mismatch";
    case CatalogErrorCode::kFeatureKindMismatch: return "feature_kind_mismatch";
    case CatalogErrorCode::kMissingFeature: return "missing_feature";
    case CatalogErrorCode::kUnresolvableGenre: return "unresolvable_genre";
    case CatalogErrorCode::kConfiguration: return "configuration";
  }
  return "unknown";
}

void ValidationReport::add(CatalogErrorCode code, std::size_t line, std::string item_id,
                           std::string message) {
  issues.push_back({code, line, std::move(item_id), std::move(message)});
}

std::string ValidationReport::to_string() const {
  std::ostringstream out;
  for (const auto& issue : issues) {
    if (issue.line > 0) out << "line " << issue.line << ' ';
    out << '[' << catalog_error_name(issue.code) << ']';
    if (!issue.item_id.empty()) out << " item '" << issue.item_id << "'";
    out << ": " << issue.message << '\n';
  }
  return out.str();
}

std::vector<Item> parse_items(std::istream& in, ValidationReport& report,
                              std::vector<std::size_t>* lines) {
  std::vector<Item> items;
  std::vector<std::size_t> item_lines;
  std::map<std::string, std::size_t> first_line;
  std::string raw;
  std::size_t line_no = 0;
  std::size_t records = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (trim(raw).empty()) continue;
    ++records;
    const json rec = json::parse(raw, nullptr, false);
    if (rec.is_discarded()) {
      report.add(CatalogErrorCode::kMalformedRecord, line_no, "", "not valid JSON");
      continue;
    }
    auto item = parse_record(rec, line_no, report);
    if (!item) continue;
    const auto [it, inserted] = first_line.emplace(item->id, line_no);
    if (!inserted) {
      report.add(CatalogErrorCode::kDuplicateId, line_no, item->id,
                 "duplicate id (first defined on line " + std::to_string(it->second) + ")");
      continue;
    }
    items.push_back(std::move(*item));
    item_lines.push_back(line_no);
  }
  if (records == 0) report.add(CatalogErrorCode::kEmptyCatalog, 0, "", "empty catalog");
  check_feature_consistency(items, item_lines, report);
  if (lines) *lines = std::move(item_lines);
  return items;
}

CatalogLoad Catalog::build(std::vector<Item> items, DistanceConfig config,
                           std::optional<GenreGraph> graph, std::vector<std::size_t> lines) {
  CatalogLoad result;
  ValidationReport& report = result.report;
  auto line_of = [&](std::size_t i) { return i < lines.size() ? lines[i] : 0; };

  if (items.empty()) report.add(CatalogErrorCode::kEmptyCatalog, 0, "", "empty catalog");
  try {
    config.validate();
  } catch (const Error& e) {
    report.add(CatalogErrorCode::kConfiguration, 0, "", e.what());
  }

  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const Item& item = items[i];
    if (item.id.empty()) {
      report.add(CatalogErrorCode::kInvalidValue, line_of(i), "", "empty id");
    } else if (!index.emplace(item.id, i).second) {
      report.add(CatalogErrorCode::kDuplicateId, line_of(i), item.id, "duplicate id");
    }
    for (const auto& [key, value] : item.features) {
      if (const auto* v = std::get_if<Vector>(&value)) {
        for (double x : *v) {
          if (!std::isfinite(x)) {
            report.add(CatalogErrorCode::kInvalidValue, line_of(i), item.id,
                       "feature '" + key + "' contains a non-finite number");
            break;
          }
        }
      }
    }
  }
  check_feature_consistency(items, lines, report);

  bool needs_graph = false;
  for (const auto& spec : config.criteria) {
    needs_graph = needs_graph || spec.kind == CriterionKind::kGraphShortestPath;
  }
  if (needs_graph && !graph) {
    report.add(CatalogErrorCode::kConfiguration, 0, "",
               "a graph-shortest-path criterion is configured but no genre graph was given");
  }

  for (std::size_t i = 0; i < items.size(); ++i) {
    const Item& item = items[i];
    if (needs_graph && graph && !graph->contains(item.genre_id)) {
      report.add(CatalogErrorCode::kUnresolvableGenre, line_of(i), item.id,
                 "genre '" + item.genre_id + "' is not in the genre graph");
    }
    for (const auto& spec : config.criteria) {
      if (spec.kind == CriterionKind::kGraphShortestPath &&
          spec.feature_key == kGenreFeatureKey) {
        continue;
      }
      const auto it = item.features.find(spec.feature_key);
      if (it == item.features.end()) {
        report.add(CatalogErrorCode::kMissingFeature, line_of(i), item.id,
                   "criterion '" + spec.id + "' needs feature '" + spec.feature_key + "'");
        continue;
      }
      const bool is_vector = std::holds_alternative<Vector>(it->second);
      const bool wants_vector = spec.kind == CriterionKind::kVectorCosine ||
                                spec.kind == CriterionKind::kVectorEuclidean;
      if (is_vector != wants_vector) {
        report.add(CatalogErrorCode::kFeatureKindMismatch, line_of(i), item.id,
                   "criterion '" + spec.id + "' (" + std::string(criterion_kind_name(spec.kind)) +
                       ") cannot read feature '" + spec.feature_key + "'");
        continue;
      }
      if (spec.kind == CriterionKind::kGraphShortestPath) {
        const auto& tags = std::get<TagSet>(it->second);
        if (tags.size() != 1) {
          report.add(CatalogErrorCode::kInvalidValue, line_of(i), item.id,
                     "feature '" + spec.feature_key + "' must name exactly one genre");
        } else if (graph && !graph->contains(*tags.begin())) {
          report.add(CatalogErrorCode::kUnresolvableGenre, line_of(i), item.id,
                     "genre '" + *tags.begin() + "' is not in the genre graph");
        }
      }
    }
  }

  if (!report.ok()) return result;

  Catalog catalog;
  catalog.items_ = std::move(items);
  catalog.index_ = std::move(index);
  catalog.config_ = std::move(config);
  catalog.graph_ = std::move(graph);
  for (const auto& spec : catalog.config_.criteria) {
    if (spec.kind == CriterionKind::kVectorCosine || spec.kind == CriterionKind::kVectorEuclidean) {
      catalog.embedding_key_ = spec.feature_key;
      break;
    }
  }
  result.catalog = std::move(catalog);
  return result;
}

std::optional<std::size_t> Catalog::index_of(const std::string& id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const Item& Catalog::item(const std::string& id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) throw Error(ErrorCode::kLookup, "unknown item '" + id + "'");
  return items_[it->second];
}

double Catalog::distance(const Item& a, const Item& b) const {
  const CalibrationMap* cal = config_.calibration ? &*config_.calibration : nullptr;
  return combined_distance(a, b, config_.criteria, cal, genre_graph());
}

CatalogLoad load_catalog(std::istream& in, const DistanceConfig& config,
                         std::optional<GenreGraph> graph) {
  CatalogLoad result;
  std::vector<std::size_t> lines;
  std::vector<Item> items = parse_items(in, result.report, &lines);
  if (result.report.ok()) {
    return Catalog::build(std::move(items), config, std::move(graph), std::move(lines));
  }
  // Cross-validate the records that did parse so the report is complete.
  const auto seen = [&](const ValidationIssue& issue) {
    return std::any_of(result.report.issues.begin(), result.report.issues.end(),
                       [&](const ValidationIssue& other) {
                         return other.code == issue.code && other.line == issue.line &&
                                other.item_id == issue.item_id;
                       });
  };
  auto checked = Catalog::build(std::move(items), config, std::move(graph), std::move(lines));
  for (auto& issue : checked.report.issues) {
    if (issue.code == CatalogErrorCode::kEmptyCatalog || seen(issue)) continue;
    result.report.issues.push_back(std::move(issue));
  }
  return result;
}

std::string item_to_json_line(const Item& item) {
  nlohmann::ordered_json rec;
  rec["id"] = item.id;
  rec["title"] = item.title;
  rec["artist"] = item.artist;
  rec["genre_id"] = item.genre_id;
  nlohmann::ordered_json features = nlohmann::ordered_json::object();
  for (const auto& [key, value] : item.features) {
    if (const auto* v = std::get_if<Vector>(&value)) {
      features[key] = *v;
    } else {
      const auto& tags = std::get<TagSet>(value);
      features[key] = std::vector<std::string>(tags.begin(), tags.end());
    }
  }
  rec["features"] = std::move(features);
  rec["popularity"] = item.popularity;
  return rec.dump();
}

void write_items(std::ostream& out, const std::vector<Item>& items) {
  for (const auto& item : items) out << item_to_json_line(item) << '\n';
}

}  // namespace divrec
