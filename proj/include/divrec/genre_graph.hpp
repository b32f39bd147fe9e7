#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace divrec {

/// Undirected, unweighted genre proximity graph. All-pairs hop counts are
/// computed once at construction; the graph is immutable afterwards.
class GenreGraph {
 public:
  /// Throws Error(kValidation) on empty node set, self-loops or edges that
  /// reference undeclared nodes.
  GenreGraph(std::vector<std::string> nodes,
             std::vector<std::pair<std::string, std::string>> edges);

  const std::vector<std::string>& nodes() const noexcept { return nodes_; }
  /// Unique edges as (a, b) with a < b, sorted.
  const std::vector<std::pair<std::string, std::string>>& edges() const noexcept {
    return edges_;
  }

  /// Max eccentricity over the largest connected component. When several
  /// components share the largest size, the largest of their diameters.
  int diameter() const noexcept { return diameter_; }

  bool contains(const std::string& node) const;
  std::optional<std::size_t> index_of(const std::string& node) const;

  /// Hop count, or nullopt when the nodes lie in different components.
  std::optional<int> hops(std::size_t a, std::size_t b) const;

  /// hops / diameter clamped to [0, 1]; 0 for the same node, 1 across components.
  double normalized_distance(std::size_t a, std::size_t b) const;

 private:
  std::vector<std::string> nodes_;
  std::vector<std::pair<std::string, std::string>> edges_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<int> hops_;  // n*n, -1 when unreachable
  int diameter_ = 0;
};

/// genre_graph_distance: throws Error(kLookup) for unknown genre ids.
double genre_graph_distance(const std::string& g1, const std::string& g2,
                            const GenreGraph& graph);

/// Line format: `node` declares a node, `nodeA<TAB>nodeB` adds an edge,
/// lines starting with '#' and blank lines are ignored. Every node an edge
/// names must be declared somewhere in the file. Errors carry the line number.
GenreGraph load_genre_graph(std::istream& in);

void write_genre_graph(std::ostream& out, const GenreGraph& graph);

}  // namespace divrec
