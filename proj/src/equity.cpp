#include "divrec/equity.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "divrec/catalog.hpp"
#include "divrec/error.hpp"

namespace divrec {

ExposureLedger::ExposureLedger(std::span<const std::string> ids) {
  for (const auto& id : ids) counts_.emplace(id, 0);
}

ExposureLedger ExposureLedger::for_catalog(const Catalog& catalog) {
  ExposureLedger ledger;
  for (const auto& item : catalog.items()) ledger.counts_.emplace(item.id, 0);
  return ledger;
}

std::uint64_t ExposureLedger::count(const std::string& id) const {
  const auto it = counts_.find(id);
  if (it == counts_.end()) throw Error(ErrorCode::kLookup, "unknown item '" + id + "'");
  return it->second;
}

void ExposureLedger::record(std::span<const std::string> ids) {
  for (const auto& id : ids) {
    if (!counts_.contains(id)) throw Error(ErrorCode::kLookup, "unknown item '" + id + "'");
  }
  for (const auto& id : ids) {
    auto& c = counts_[id];
    ++c;
    ++total_;
    max_ = std::max(max_, c);
  }
}

void ExposureLedger::record(const std::string& id, std::uint64_t times) {
  const auto it = counts_.find(id);
  if (it == counts_.end()) throw Error(ErrorCode::kLookup, "unknown item '" + id + "'");
  it->second += times;
  total_ += times;
  max_ = std::max(max_, it->second);
}

ExposureLedger record_exposure(ExposureLedger ledger, std::span<const std::string> ids) {
  ledger.record(ids);
  return ledger;
}

double underexposure(const std::string& item_id, const ExposureLedger& ledger) {
  const std::uint64_t c = ledger.count(item_id);
  const std::uint64_t c_max = ledger.max_count();
  if (c_max == 0) return 1.0;
  return 1.0 - static_cast<double>(c) / static_cast<double>(c_max);
}

double equity_adjust(double score, double u, double lambda) {
  if (!(u >= 0.0 && u <= 1.0)) throw Error(ErrorCode::kDomain, "underexposure must lie in [0,1]");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorCode::kDomain, "lambda must be finite and >= 0");
  }
  if (score <= 0.0) return score;
  return score * (1.0 + lambda * u);
}

double gini(std::span<const std::uint64_t> counts) {
  const std::size_t n = counts.size();
  if (n == 0) return 0.0;
  std::vector<std::uint64_t> sorted(counts.begin(), counts.end());
  std::sort(sorted.begin(), sorted.end());
  double sum = 0.0;
  double weighted = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double c = static_cast<double>(sorted[i]);
    sum += c;
    weighted += (2.0 * static_cast<double>(i + 1) - static_cast<double>(n) - 1.0) * c;
  }
  if (sum == 0.0) return 0.0;
  return weighted / (static_cast<double>(n) * sum);
}

double gini(const ExposureLedger& ledger) {
  std::vector<std::uint64_t> counts;
  counts.reserve(ledger.size());
  for (const auto& [id, c] : ledger.counts()) counts.push_back(c);
  return gini(counts);
}

double coverage(const ExposureLedger& ledger) {
  if (ledger.size() == 0) return 0.0;
  std::size_t exposed = 0;
  for (const auto& [id, c] : ledger.counts()) exposed += c > 0 ? 1 : 0;
  return static_cast<double>(exposed) / static_cast<double>(ledger.size());
}

double coverage(const ExposureLedger& ledger, const Catalog& catalog) {
  if (catalog.size() == 0) return 0.0;
  std::size_t exposed = 0;
  for (const auto& item : catalog.items()) {
    exposed += ledger.knows(item.id) && ledger.count(item.id) > 0 ? 1 : 0;
  }
  return static_cast<double>(exposed) / static_cast<double>(catalog.size());
}

void write_ledger(std::ostream& out, const ExposureLedger& ledger) {
  for (const auto& [id, c] : ledger.counts()) {
    out << nlohmann::ordered_json{{"id", id}, {"count", c}}.dump() << '\n';
  }
}

ExposureLedger read_ledger(std::istream& in) {
  std::vector<std::string> ids;
  std::vector<std::uint64_t> counts;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (raw.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto rec = nlohmann::json::parse(raw, nullptr, false);
    if (rec.is_discarded() || !rec.is_object() || !rec.contains("id") ||
        !rec["id"].is_string() || !rec.contains("count") || !rec["count"].is_number_unsigned()) {
      throw Error(ErrorCode::kDecode, "ledger line " + std::to_string(line) + " is malformed");
    }
    ids.push_back(rec["id"].get<std::string>());
    counts.push_back(rec["count"].get<std::uint64_t>());
  }
  ExposureLedger ledger(ids);
  if (ledger.size() != ids.size()) throw Error(ErrorCode::kDecode, "ledger repeats an id");
  for (std::size_t i = 0; i < ids.size(); ++i) {
    ledger.record(ids[i], counts[i]);
  }
  return ledger;
}

}  // namespace divrec
