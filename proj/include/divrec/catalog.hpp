#pragma once

// Catalog ingestion. The item file is line-delimited JSON, one record per
// line, with exactly the fields id, title, artist, genre_id, features and an
// optional popularity. Features map a key to an array of numbers (dense
// vector) or an array of strings (tag set); an empty array is a tag set.
//
// Validation is total: every input either yields a fully validated Catalog or
// a ValidationReport listing every violation. Nothing in between.

#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "divrec/distance.hpp"
#include "divrec/genre_graph.hpp"
#include "divrec/item.hpp"

namespace divrec {

enum class CatalogErrorCode {
  kEmptyCatalog,
  kMalformedRecord,  // not a JSON object / invalid UTF-8 / trailing garbage
  kUnknownField,
  kMissingField,
  kWrongType,
  kInvalidValue,  // empty id, non-finite number, negative popularity
  kDuplicateId,
  kDimensionMismatch,
  kFeatureKindMismatch,
  kMissingFeature,
  kUnresolvableGenre,
  kConfiguration,
};

std::string_view catalog_error_name(CatalogErrorCode code);

struct ValidationIssue {
  CatalogErrorCode code;
  std::size_t line = 0;  // 1-based; 0 when not tied to a line
  std::string item_id;
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;

  bool ok() const noexcept { return issues.empty(); }
  void add(CatalogErrorCode code, std::size_t line, std::string item_id, std::string message);
  /// One issue per line: `line N [code] item 'id': message`.
  std::string to_string() const;
};

struct CatalogLoad;

/// Immutable after construction; safe to share across threads.
class Catalog {
 public:
  /// Full cross-validation of items against the distance configuration and
  /// genre graph.
  static CatalogLoad build(std::vector<Item> items, DistanceConfig config,
                           std::optional<GenreGraph> graph = std::nullopt,
                           std::vector<std::size_t> source_lines = {});

  const std::vector<Item>& items() const noexcept { return items_; }
  std::size_t size() const noexcept { return items_.size(); }
  const DistanceConfig& config() const noexcept { return config_; }
  const GenreGraph* genre_graph() const noexcept { return graph_ ? &*graph_ : nullptr; }

  bool contains(const std::string& id) const { return index_.contains(id); }
  std::optional<std::size_t> index_of(const std::string& id) const;
  /// Throws Error(kLookup) for unknown ids.
  const Item& item(const std::string& id) const;

  /// combined_distance under this catalog's configuration.
  double distance(const Item& a, const Item& b) const;

  /// Feature key of the first vector-valued criterion, used when profiles
  /// are target vectors rather than seed items.
  const std::string* embedding_key() const noexcept {
    return embedding_key_.empty() ? nullptr : &embedding_key_;
  }

 private:
  Catalog() = default;

  std::vector<Item> items_;
  std::unordered_map<std::string, std::size_t> index_;
  DistanceConfig config_;
  std::optional<GenreGraph> graph_;
  std::string embedding_key_;
};

struct CatalogLoad {
  std::optional<Catalog> catalog;
  ValidationReport report;

  bool ok() const noexcept { return catalog.has_value(); }
};

/// Parses and structurally validates records (types, fields, duplicate ids,
/// consistent vector dimensions). `lines` receives each item's source line.
std::vector<Item> parse_items(std::istream& in, ValidationReport& report,
                              std::vector<std::size_t>* lines = nullptr);

/// parse_items + Catalog::build.
CatalogLoad load_catalog(std::istream& in, const DistanceConfig& config,
                         std::optional<GenreGraph> graph = std::nullopt);

/// Writes items in the load_catalog format; numbers round-trip exactly.
void write_items(std::ostream& out, const std::vector<Item>& items);
std::string item_to_json_line(const Item& item);

}  // namespace divrec
