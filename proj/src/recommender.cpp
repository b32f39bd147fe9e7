#include "divrec/recommender.hpp"

#include <algorithm>

#include "divrec/distance.hpp"
#include "divrec/error.hpp"

namespace divrec {

SeedProfile SeedProfile::from_items(std::vector<std::string> seed_ids) {
  if (seed_ids.empty()) throw Error(ErrorCode::kPrecondition, "seed profile needs at least one item");
  SeedProfile p;
  std::sort(seed_ids.begin(), seed_ids.end());
  seed_ids.erase(std::unique(seed_ids.begin(), seed_ids.end()), seed_ids.end());
  p.excluded_ = {seed_ids.begin(), seed_ids.end()};
  p.seed_ids_ = std::move(seed_ids);
  return p;
}

SeedProfile SeedProfile::from_target(Vector target, std::set<std::string> exclude) {
  if (target.empty()) throw Error(ErrorCode::kPrecondition, "target vector is empty");
  SeedProfile p;
  p.item_mode_ = false;
  p.target_ = std::move(target);
  p.excluded_ = std::move(exclude);
  return p;
}

void SeedProfile::validate(const Catalog& catalog) const {
  if (item_mode_) {
    for (const auto& id : seed_ids_) {
      if (!catalog.contains(id)) throw Error(ErrorCode::kLookup, "unknown seed item '" + id + "'");
    }
    return;
  }
  const std::string* key = catalog.embedding_key();
  if (!key) throw Error(ErrorCode::kPrecondition, "catalog has no vector feature for a target");
  const auto& first = catalog.items().front().features.at(*key);
  if (std::get<Vector>(first).size() != target_.size()) {
    throw Error(ErrorCode::kPrecondition, "target dimension does not match feature '" + *key + "'");
  }
}

double profile_distance(const Item& item, const SeedProfile& profile, const Catalog& catalog) {
  if (!profile.item_mode()) {
    const std::string* key = catalog.embedding_key();
    if (!key) throw Error(ErrorCode::kPrecondition, "catalog has no vector feature for a target");
    const auto& v = std::get<Vector>(item.features.at(*key));
    if (v.size() != profile.target().size()) {
      throw Error(ErrorCode::kPrecondition, "target dimension mismatch");
    }
    return cosine_distance(profile.target(), v);
  }
  if (profile.excluded().contains(item.id)) {
    throw Error(ErrorCode::kPrecondition, "item '" + item.id + "' is one of the seeds");
  }
  double sum = 0.0;
  for (const auto& seed : profile.seed_ids()) sum += catalog.distance(item, catalog.item(seed));
  return sum / static_cast<double>(profile.seed_ids().size());
}

std::vector<Recommendation> rank_candidates(const Catalog& catalog, const SeedProfile& profile,
                                            const RecommendOptions& options,
                                            const ExposureLedger& ledger) {
  if (options.k == 0) throw Error(ErrorCode::kPrecondition, "k must be >= 1");
  profile.validate(catalog);
  const double sigma = options.params.sigma();

  struct Candidate {
    Recommendation rec;
    std::uint64_t exposure;
  };
  std::vector<Candidate> candidates;
  candidates.reserve(catalog.size());
  for (const auto& item : catalog.items()) {
    if (profile.excluded().contains(item.id)) continue;
    Candidate c;
    c.rec.item_id = item.id;
    c.rec.distance = profile_distance(item, profile, catalog);
    c.rec.raw_score = kernel::mode_score(options.mode, c.rec.distance, sigma);
    c.rec.adjusted_score =
        equity_adjust(c.rec.raw_score, underexposure(item.id, ledger), options.lambda);
    c.exposure = ledger.count(item.id);
    candidates.push_back(std::move(c));
  }

  const auto before = [](const Candidate& a, const Candidate& b) {
    if (a.rec.adjusted_score != b.rec.adjusted_score) {
      return a.rec.adjusted_score > b.rec.adjusted_score;
    }
    if (a.exposure != b.exposure) return a.exposure < b.exposure;
    if (a.rec.distance != b.rec.distance) return a.rec.distance < b.rec.distance;
    return a.rec.item_id < b.rec.item_id;
  };
  const std::size_t take = std::min(options.k, candidates.size());
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(take),
                    candidates.end(), before);

  std::vector<Recommendation> out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) {
    Recommendation rec = std::move(candidates[i].rec);
    rec.band = kernel::band_classify(rec.distance, options.params);
    rec.bold = rec.distance >= sigma;
    rec.rank = i + 1;
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<Recommendation> recommend(const Catalog& catalog, const SeedProfile& profile,
                                      const RecommendOptions& options, ExposureLedger& ledger) {
  auto recs = rank_candidates(catalog, profile, options, ledger);
  std::vector<std::string> ids;
  ids.reserve(recs.size());
  for (const auto& r : recs) ids.push_back(r.item_id);
  ledger.record(ids);
  return recs;
}

}  // namespace divrec
