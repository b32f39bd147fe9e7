#pragma once

// Document-embedding mode: tf-idf weighted bag of words, projected to k
// dimensions by a seeded random sign matrix and L2-normalized. Seed papers
// define a target direction; ring retrieval then ranks the corpus by the
// diversity kernel applied to the distance from that target.

#include <cstdint>
#include <istream>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "divrec/catalog.hpp"
#include "divrec/item.hpp"
#include "divrec/kernel.hpp"

namespace divrec::textemb {

struct Document {
  std::string id;
  std::string title;
  std::string text;
  std::string discipline_tag;  // evaluation only; may be empty
};

struct DocVector {
  std::string id;
  Vector vector;
};

/// Lowercase, split on non-alphanumeric ASCII, drop tokens shorter than two
/// characters. Bytes >= 0x80 are separators.
std::vector<std::string> tokenize(std::string_view text);

enum class Projection {
  kRandomSign,  // k x V matrix of +-1/sqrt(k)
  kIdentity,    // no projection; requires k == vocabulary size
};

struct SkippedDocument {
  std::string id;
  std::string reason;
};

struct EmbedResult {
  std::vector<DocVector> vectors;
  std::vector<SkippedDocument> skipped;
  std::vector<std::string> vocabulary;  // sorted; column order of the tf-idf space
};

/// tf = 1 + ln(count), idf = ln(N / df) over the N documents with at least
/// one token. Projection entries come from std::mt19937_64(seed), one draw per
/// entry, term-major (all k rows of term 0, then term 1, ...): the top bit
/// of the draw set means negative. Documents without tokens, or whose
/// weights are all zero, are skipped and reported.
/// Throws Error(kPrecondition) for an empty corpus, k == 0 or k > V, and for
/// identity projection with k != V.
EmbedResult build_vectors(std::span<const Document> corpus, std::size_t k, std::uint64_t seed,
                          Projection projection = Projection::kRandomSign);

/// Normalized centroid. Throws Error(kDegenerate) when the mean vanishes,
/// Error(kPrecondition) on empty input or mixed dimensions.
Vector seed_target(std::span<const Vector> seeds);
Vector seed_target(std::span<const DocVector> seeds);

struct RingHit {
  std::string id;
  double distance = 0.0;
  double score = 0.0;
};

/// Top-k by score descending; ties by smaller distance, then id.
std::vector<RingHit> ring_retrieve(std::span<const double> target,
                                   std::span<const DocVector> corpus,
                                   const kernel::KernelParams& params, std::size_t k,
                                   kernel::RankingMode mode,
                                   const std::set<std::string>& exclude = {});

/// Line-delimited {"id","title","text","discipline_tag"?}; issues go to
/// `report` using the catalog error codes.
std::vector<Document> parse_corpus(std::istream& in, ValidationReport& report);

/// Line-delimited {"id","vector"}. Vectors are normalized on load. Throws
/// Error(kValidation) naming the line on malformed rows, ragged dimensions,
/// duplicate ids or zero vectors.
std::vector<DocVector> load_vectors(std::istream& in);
void write_vectors(std::ostream& out, std::span<const DocVector> vectors);

/// Feature key under which documents_to_catalog stores embeddings.
inline constexpr std::string_view kEmbeddingKey = "embedding";

/// Wraps embedded documents as catalog items (genre_id = discipline tag or
/// "unknown") with a single vector-cosine criterion on kEmbeddingKey.
Catalog documents_to_catalog(std::span<const DocVector> vectors,
                             std::span<const Document> documents);

}  // namespace divrec::textemb
