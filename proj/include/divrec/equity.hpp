#pragma once

// Exposure accounting and equity boosting. The ledger counts how often each
// item has been recommended; under-exposed items get their positive
// diversity scores boosted, steering discovery towards the less recommended
// parts of the catalog.

#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace divrec {

class Catalog;

inline constexpr double kDefaultEquityLambda = 0.25;

class ExposureLedger {
 public:
  ExposureLedger() = default;

  /// Ledger over a known id universe, all counts zero.
  explicit ExposureLedger(std::span<const std::string> ids);
  static ExposureLedger for_catalog(const Catalog& catalog);

  bool knows(const std::string& id) const { return counts_.contains(id); }
  /// Throws Error(kLookup) for unknown ids.
  std::uint64_t count(const std::string& id) const;
  std::uint64_t total() const noexcept { return total_; }
  std::uint64_t max_count() const noexcept { return max_; }
  std::size_t size() const noexcept { return counts_.size(); }
  const std::map<std::string, std::uint64_t>& counts() const noexcept { return counts_; }

  /// Increments each listed id once per occurrence. All ids are checked
  /// before any count changes; unknown ids throw Error(kLookup).
  void record(std::span<const std::string> ids);
  void record(const std::string& id, std::uint64_t times);

  friend bool operator==(const ExposureLedger&, const ExposureLedger&) = default;

 private:
  std::map<std::string, std::uint64_t> counts_;
  std::uint64_t total_ = 0;
  std::uint64_t max_ = 0;
};

ExposureLedger record_exposure(ExposureLedger ledger, std::span<const std::string> ids);

/// 1 - c_id / c_max; 1 for every item while nothing has been exposed.
double underexposure(const std::string& item_id, const ExposureLedger& ledger);

/// score * (1 + lambda * u) for positive scores; nonpositive scores pass through.
double equity_adjust(double score, double u, double lambda);

/// Gini coefficient of the exposure counts (zero counts included).
double gini(const ExposureLedger& ledger);
double gini(std::span<const std::uint64_t> counts);

/// Fraction of catalog items exposed at least once.
double coverage(const ExposureLedger& ledger, const Catalog& catalog);
double coverage(const ExposureLedger& ledger);

/// Line-delimited {"id":..., "count":...} records.
void write_ledger(std::ostream& out, const ExposureLedger& ledger);
/// Throws Error(kDecode) naming the line on malformed input.
ExposureLedger read_ledger(std::istream& in);

}  // namespace divrec
