#include "divrec/textemb.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <unordered_map>

#include <json.hpp>

#include "divrec/distance.hpp"
#include "divrec/error.hpp"
#include "divrec/simd/vec_ops.hpp"

namespace divrec::textemb {
namespace {

using nlohmann::json;

bool is_alnum(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

[[noreturn]] void fail_at(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::kValidation, "line " + std::to_string(line) + ": " + what);
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (current.size() >= 2) tokens.push_back(current);
    current.clear();
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (is_alnum(c)) {
      current.push_back(static_cast<char>(c >= 'A' && c <= 'Z' ? c - 'A' + 'a' : c));
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

EmbedResult build_vectors(std::span<const Document> corpus, std::size_t k, std::uint64_t seed,
                          Projection projection) {
  if (corpus.empty()) throw Error(ErrorCode::kPrecondition, "corpus is empty");
  if (k == 0) throw Error(ErrorCode::kPrecondition, "embedding dimension must be >= 1");

  EmbedResult result;
  struct Bag {
    const Document* doc;
    std::map<std::string, std::size_t> counts;
  };
  std::vector<Bag> bags;
  std::map<std::string, std::size_t> df;
  for (const auto& doc : corpus) {
    auto tokens = tokenize(doc.text);
    if (tokens.empty()) {
      result.skipped.push_back({doc.id, "no tokens"});
      continue;
    }
    Bag bag{&doc, {}};
    for (auto& t : tokens) ++bag.counts[std::move(t)];
    for (const auto& [term, c] : bag.counts) ++df[term];
    bags.push_back(std::move(bag));
  }
  if (bags.empty()) throw Error(ErrorCode::kPrecondition, "no document has any token");

  const std::size_t vocab = df.size();
  if (k > vocab) {
    throw Error(ErrorCode::kPrecondition, "vocabulary size " + std::to_string(vocab) +
                                              " is smaller than k = " + std::to_string(k));
  }
  if (projection == Projection::kIdentity && k != vocab) {
    throw Error(ErrorCode::kPrecondition, "identity projection needs k == vocabulary size");
  }

  std::unordered_map<std::string, std::size_t> column;
  std::vector<double> idf;
  idf.reserve(vocab);
  result.vocabulary.reserve(vocab);
  const double n_docs = static_cast<double>(bags.size());
  for (const auto& [term, count] : df) {
    column.emplace(term, result.vocabulary.size());
    result.vocabulary.push_back(term);
    idf.push_back(std::log(n_docs / static_cast<double>(count)));
  }

  // Column-major: the k entries for term t are contiguous at t * k.
  std::vector<double> matrix;
  if (projection == Projection::kRandomSign) {
    matrix.resize(vocab * k);
    std::mt19937_64 rng(seed);
    const double magnitude = 1.0 / std::sqrt(static_cast<double>(k));
    for (double& entry : matrix) entry = (rng() >> 63) ? -magnitude : magnitude;
  }

  for (const auto& bag : bags) {
    Vector v(k, 0.0);
    for (const auto& [term, count] : bag.counts) {
      const std::size_t t = column.at(term);
      const double weight = (1.0 + std::log(static_cast<double>(count))) * idf[t];
      if (weight == 0.0) continue;
      if (projection == Projection::kIdentity) {
        v[t] = weight;
      } else {
        simd::axpy(weight, std::span<const double>(matrix).subspan(t * k, k), v);
      }
    }
    const double n = simd::norm(v);
    if (n == 0.0) {
      result.skipped.push_back({bag.doc->id, "all term weights are zero"});
      continue;
    }
    simd::scale(1.0 / n, v);
    result.vectors.push_back({bag.doc->id, std::move(v)});
  }
  return result;
}

Vector seed_target(std::span<const Vector> seeds) {
  if (seeds.empty()) throw Error(ErrorCode::kPrecondition, "no seed vectors");
  const std::size_t dim = seeds.front().size();
  for (const auto& s : seeds) {
    if (s.size() != dim) throw Error(ErrorCode::kPrecondition, "seed dimensions differ");
  }
  if (seeds.size() == 1) {
    if (simd::norm(seeds.front()) == 0.0) {
      throw Error(ErrorCode::kDegenerate, "seed vector is zero");
    }
    return seeds.front();
  }
  Vector mean(dim, 0.0);
  for (const auto& s : seeds) simd::axpy(1.0, s, mean);
  simd::scale(1.0 / static_cast<double>(seeds.size()), mean);
  const double n = simd::norm(mean);
  if (!(n > 1e-12)) {
    throw Error(ErrorCode::kDegenerate, "seed centroid vanishes (antipodal seeds)");
  }
  simd::scale(1.0 / n, mean);
  return mean;
}

Vector seed_target(std::span<const DocVector> seeds) {
  std::vector<Vector> vs;
  vs.reserve(seeds.size());
  for (const auto& s : seeds) vs.push_back(s.vector);
  return seed_target(std::span<const Vector>(vs));
}

std::vector<RingHit> ring_retrieve(std::span<const double> target,
                                   std::span<const DocVector> corpus,
                                   const kernel::KernelParams& params, std::size_t k,
                                   kernel::RankingMode mode, const std::set<std::string>& exclude) {
  if (k == 0) throw Error(ErrorCode::kPrecondition, "k must be >= 1");
  std::vector<RingHit> hits;
  hits.reserve(corpus.size());
  for (const auto& doc : corpus) {
    if (exclude.contains(doc.id)) continue;
    if (doc.vector.size() != target.size()) {
      throw Error(ErrorCode::kDomain, "document '" + doc.id + "' has dimension " +
                                          std::to_string(doc.vector.size()) + ", target has " +
                                          std::to_string(target.size()));
    }
    const double d = cosine_distance(target, doc.vector);
    hits.push_back({doc.id, d, kernel::mode_score(mode, d, params.sigma())});
  }
  const auto before = [](const RingHit& a, const RingHit& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.distance != b.distance) return a.distance < b.distance;
    return a.id < b.id;
  };
  const std::size_t take = std::min(k, hits.size());
  std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(take), hits.end(),
                    before);
  hits.resize(take);
  return hits;
}

std::vector<Document> parse_corpus(std::istream& in, ValidationReport& report) {
  std::vector<Document> docs;
  std::set<std::string> ids;
  std::string raw;
  std::size_t line = 0;
  std::size_t records = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (raw.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++records;
    const json rec = json::parse(raw, nullptr, false);
    if (rec.is_discarded() || !rec.is_object()) {
      report.add(CatalogErrorCode::kMalformedRecord, line, "", "not a JSON object");
      continue;
    }
    std::string id = rec.contains("id") && rec["id"].is_string() ? rec["id"].get<std::string>()
                                                                  : std::string();
    const std::size_t before = report.issues.size();
    for (const auto& [key, value] : rec.items()) {
      if (key != "id" && key != "title" && key != "text" && key != "discipline_tag") {
        report.add(CatalogErrorCode::kUnknownField, line, id, "unknown field '" + key + "'");
      }
    }
    Document doc;
    for (auto [field, target, required] :
         {std::tuple{"id", &doc.id, true}, std::tuple{"title", &doc.title, true},
          std::tuple{"text", &doc.text, true},
          std::tuple{"discipline_tag", &doc.discipline_tag, false}}) {
      if (!rec.contains(field)) {
        if (required) {
          report.add(CatalogErrorCode::kMissingField, line, id,
                     std::string("missing field '") + field + "'");
        }
        continue;
      }
      if (!rec[field].is_string()) {
        report.add(CatalogErrorCode::kWrongType, line, id,
                   std::string("field '") + field + "' must be a string");
        continue;
      }
      *target = rec[field].get<std::string>();
    }
    if (report.issues.size() != before) continue;
    if (doc.id.empty()) {
      report.add(CatalogErrorCode::kInvalidValue, line, "", "empty id");
      continue;
    }
    if (!ids.insert(doc.id).second) {
      report.add(CatalogErrorCode::kDuplicateId, line, doc.id, "duplicate id");
      continue;
    }
    docs.push_back(std::move(doc));
  }
  if (records == 0) report.add(CatalogErrorCode::kEmptyCatalog, 0, "", "empty corpus");
  return docs;
}

std::vector<DocVector> load_vectors(std::istream& in) {
  std::vector<DocVector> out;
  std::set<std::string> ids;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (raw.find_first_not_of(" \t\r") == std::string::npos) continue;
    const json rec = json::parse(raw, nullptr, false);
    if (rec.is_discarded() || !rec.is_object() || !rec.contains("id") || !rec["id"].is_string() ||
        !rec.contains("vector") || !rec["vector"].is_array() || rec.size() != 2) {
      fail_at(line, "expected {\"id\": string, \"vector\": [numbers]}");
    }
    DocVector dv{rec["id"].get<std::string>(), {}};
    for (const auto& x : rec["vector"]) {
      if (!x.is_number()) fail_at(line, "vector entries must be numbers");
      dv.vector.push_back(x.get<double>());
      if (!std::isfinite(dv.vector.back())) fail_at(line, "non-finite vector entry");
    }
    if (dv.vector.empty()) fail_at(line, "empty vector");
    if (!out.empty() && dv.vector.size() != out.front().vector.size()) {
      fail_at(line, "dimension " + std::to_string(dv.vector.size()) + " differs from " +
                        std::to_string(out.front().vector.size()));
    }
    if (!ids.insert(dv.id).second) fail_at(line, "duplicate id '" + dv.id + "'");
    const double n = simd::norm(dv.vector);
    if (n == 0.0) fail_at(line, "zero vector");
    simd::scale(1.0 / n, dv.vector);
    out.push_back(std::move(dv));
  }
  if (out.empty()) throw Error(ErrorCode::kValidation, "vectors file is empty");
  return out;
}

void write_vectors(std::ostream& out, std::span<const DocVector> vectors) {
  for (const auto& v : vectors) {
    out << nlohmann::ordered_json{{"id", v.id}, {"vector", v.vector}}.dump() << '\n';
  }
}

Catalog documents_to_catalog(std::span<const DocVector> vectors,
                             std::span<const Document> documents) {
  std::unordered_map<std::string, const Document*> by_id;
  for (const auto& d : documents) by_id.emplace(d.id, &d);
  std::vector<Item> items;
  items.reserve(vectors.size());
  for (const auto& v : vectors) {
    Item item;
    item.id = v.id;
    item.genre_id = "unknown";
    if (const auto it = by_id.find(v.id); it != by_id.end()) {
      item.title = it->second->title;
      if (!it->second->discipline_tag.empty()) item.genre_id = it->second->discipline_tag;
    }
    item.features.emplace(std::string(kEmbeddingKey), v.vector);
    items.push_back(std::move(item));
  }
  DistanceConfig config;
  config.criteria.push_back(
      {"embedding", CriterionKind::kVectorCosine, 1.0, std::string(kEmbeddingKey)});
  auto load = Catalog::build(std::move(items), std::move(config));
  if (!load.ok()) throw Error(ErrorCode::kValidation, load.report.to_string());
  return std::move(*load.catalog);
}

}  // namespace divrec::textemb
