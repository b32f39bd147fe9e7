#include "divrec/genre_graph.hpp"

#include <algorithm>
#include <deque>
#include <set>
#include <string_view>

#include "divrec/error.hpp"

namespace divrec {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void fail_at(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::kValidation, "line " + std::to_string(line) + ": " + what);
}

}  // namespace

GenreGraph::GenreGraph(std::vector<std::string> nodes,
                       std::vector<std::pair<std::string, std::string>> edges) {
  std::set<std::string> unique_nodes(nodes.begin(), nodes.end());
  if (unique_nodes.empty()) throw Error(ErrorCode::kValidation, "genre graph has no nodes");
  nodes_.assign(unique_nodes.begin(), unique_nodes.end());
  for (std::size_t i = 0; i < nodes_.size(); ++i) index_.emplace(nodes_[i], i);

  std::set<std::pair<std::string, std::string>> unique_edges;
  for (auto& [a, b] : edges) {
    if (a == b) throw Error(ErrorCode::kValidation, "self-loop on genre '" + a + "'");
    for (const auto* n : {&a, &b}) {
      if (!index_.contains(*n)) {
        throw Error(ErrorCode::kValidation, "edge references unknown genre '" + *n + "'");
      }
    }
    unique_edges.insert(a < b ? std::pair{a, b} : std::pair{b, a});
  }
  edges_.assign(unique_edges.begin(), unique_edges.end());

  const std::size_t n = nodes_.size();
  std::vector<std::vector<std::size_t>> adj(n);
  for (const auto& [a, b] : edges_) {
    adj[index_.at(a)].push_back(index_.at(b));
    adj[index_.at(b)].push_back(index_.at(a));
  }

  hops_.assign(n * n, -1);
  std::vector<std::size_t> component(n, n);
  std::vector<std::size_t> component_size;
  std::vector<int> component_diameter;
  for (std::size_t src = 0; src < n; ++src) {
    int* row = &hops_[src * n];
    row[src] = 0;
    std::deque<std::size_t> queue{src};
    int ecc = 0;
    while (!queue.empty()) {
      const std::size_t u = queue.front();
      queue.pop_front();
      for (std::size_t v : adj[u]) {
        if (row[v] < 0) {
          row[v] = row[u] + 1;
          ecc = std::max(ecc, row[v]);
          queue.push_back(v);
        }
      }
    }
    if (component[src] == n) {
      const std::size_t c = component_size.size();
      std::size_t size = 0;
      for (std::size_t v = 0; v < n; ++v) {
        if (row[v] >= 0) {
          component[v] = c;
          ++size;
        }
      }
      component_size.push_back(size);
      component_diameter.push_back(0);
    }
    int& diam = component_diameter[component[src]];
    diam = std::max(diam, ecc);
  }

  const std::size_t largest = *std::max_element(component_size.begin(), component_size.end());
  for (std::size_t c = 0; c < component_size.size(); ++c) {
    if (component_size[c] == largest) diameter_ = std::max(diameter_, component_diameter[c]);
  }
}

bool GenreGraph::contains(const std::string& node) const { return index_.contains(node); }

std::optional<std::size_t> GenreGraph::index_of(const std::string& node) const {
  const auto it = index_.find(node);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::optional<int> GenreGraph::hops(std::size_t a, std::size_t b) const {
  const int h = hops_.at(a * nodes_.size() + b);
  if (h < 0) return std::nullopt;
  return h;
}

double GenreGraph::normalized_distance(std::size_t a, std::size_t b) const {
  if (a == b) return 0.0;
  const auto h = hops(a, b);
  if (!h || diameter_ == 0) return 1.0;
  // A smaller component can be longer than the largest one; clamp keeps [0, 1].
  return std::min(1.0, static_cast<double>(*h) / static_cast<double>(diameter_));
}

double genre_graph_distance(const std::string& g1, const std::string& g2,
                            const GenreGraph& graph) {
  const auto a = graph.index_of(g1);
  if (!a) throw Error(ErrorCode::kLookup, "unknown genre '" + g1 + "'");
  const auto b = graph.index_of(g2);
  if (!b) throw Error(ErrorCode::kLookup, "unknown genre '" + g2 + "'");
  return graph.normalized_distance(*a, *b);
}

GenreGraph load_genre_graph(std::istream& in) {
  std::vector<std::string> nodes;
  std::vector<std::pair<std::string, std::string>> edges;
  std::vector<std::size_t> edge_lines;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) {
      nodes.emplace_back(line);
      continue;
    }
    const std::string_view a = trim(line.substr(0, tab));
    const std::string_view b = trim(line.substr(tab + 1));
    if (a.empty() || b.empty() || b.find('\t') != std::string_view::npos) {
      fail_at(line_no, "expected 'nodeA<TAB>nodeB'");
    }
    if (a == b) fail_at(line_no, "self-loop on genre '" + std::string(a) + "'");
    edges.emplace_back(std::string(a), std::string(b));
    edge_lines.push_back(line_no);
  }
  if (nodes.empty() && edges.empty()) {
    throw Error(ErrorCode::kValidation, "empty genre graph");
  }
  const std::set<std::string> declared(nodes.begin(), nodes.end());
  for (std::size_t i = 0; i < edges.size(); ++i) {
    for (const auto* n : {&edges[i].first, &edges[i].second}) {
      if (!declared.contains(*n)) fail_at(edge_lines[i], "unknown genre '" + *n + "'");
    }
  }
  return GenreGraph(std::move(nodes), std::move(edges));
}

void write_genre_graph(std::ostream& out, const GenreGraph& graph) {
  for (const auto& n : graph.nodes()) out << n << '\n';
  for (const auto& [a, b] : graph.edges()) out << a << '\t' << b << '\n';
}

}  // namespace divrec
