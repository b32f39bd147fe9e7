#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace divrec {

using Vector = std::vector<double>;
using TagSet = std::set<std::string>;

/// A per-criterion feature: a dense vector or a set of tags.
using FeatureValue = std::variant<Vector, TagSet>;

struct Item {
  std::string id;
  std::string title;
  std::string artist;
  std::string genre_id;
  std::map<std::string, FeatureValue> features;
  // Prior play/citation count. Carried for display only; never scored.
  std::uint64_t popularity = 0;

  friend bool operator==(const Item&, const Item&) = default;
};

}  // namespace divrec
