// Acceptance suite: one PASS/FAIL line per primary criterion. Exits non-zero
// when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "divrec/catalog.hpp"
#include "divrec/error.hpp"
#include "divrec/kernel.hpp"
#include "divrec/recommender.hpp"
#include "divrec/service.hpp"
#include "divrec/session.hpp"
#include "divrec/simulator.hpp"
#include "divrec/textemb.hpp"
#include "test_support.hpp"

using namespace divrec;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Criterion {
  const char* name;
  double time_limit_s;  // <= 0: none
  std::function<Outcome()> run;
};

Outcome fail(std::string why) { return {false, std::move(why)}; }

// ---------------------------------------------------------------- kernel

Outcome kernel_correctness() {
  auto gauss = [](double t) { return std::exp(-t * t / 2.0); };
  const double h = 1e-4;
  double worst = 0.0;
  for (int i = -400; i <= 400; ++i) {
    const double t = i * 0.01;
    const double fd = -(gauss(t + h) - 2.0 * gauss(t) + gauss(t - h)) / (h * h);
    const double psi = kernel::mexican_hat(t, 1.0);
    const double err = std::abs(psi - fd);
    if (err > std::max(1e-8, 1e-5 * std::abs(fd))) {
      return fail("t=" + std::to_string(t) + " psi=" + std::to_string(psi) + " fd=" + std::to_string(fd));
    }
    worst = std::max(worst, err);
  }
  std::ostringstream detail;
  detail << "max |psi + G''| = " << worst;
  for (double sigma : {0.05, 0.2, 0.5}) {
    const double step = 1e-5 * sigma;
    double best = -std::numeric_limits<double>::infinity();
    double arg = 0.0;
    for (long i = 1; i * step <= 6.0 * sigma; ++i) {
      const double g = kernel::diversity_score(i * step, sigma);
      if (g > best) {
        best = g;
        arg = i * step;
      }
    }
    const double off = std::abs(arg - std::sqrt(3.0) * sigma);
    if (off > 1e-3 * sigma) return fail("argmax off by " + std::to_string(off) + " at sigma " + std::to_string(sigma));
    detail << "; sigma " << sigma << " argmax " << arg;
  }
  return {true, detail.str()};
}

// ---------------------------------------------------------------- genre map

Outcome genre_map_reproduction() {
  const auto catalog = testing::genre_map_catalog();
  const auto profile = SeedProfile::from_items({"th-1"});
  RecommendOptions opt;
  opt.params = kernel::KernelParams(kernel::sigma_for_optimal(0.25));
  opt.k = 4;
  auto ledger = ExposureLedger::for_catalog(catalog);
  const auto recs = recommend(catalog, profile, opt, ledger);
  const std::set<std::string> allowed{"ah-1", "ej-1", "dub-1", "is-1"};
  std::string got;
  for (const auto& r : recs) {
    got += catalog.item(r.item_id).genre_id + ", ";
    if (!allowed.contains(r.item_id)) return fail("unexpected " + r.item_id);
    if (r.item_id == "cl-1" || r.item_id == "hr-1") return fail("remote genre recommended");
  }
  if (recs.size() != 4) return fail("expected 4 recommendations");
  return {true, "top-4: " + got.substr(0, got.size() - 2)};
}

// ---------------------------------------------------------------- oracle

// Exhaustive scorer: every candidate scored, fully sorted with the tie chain.
std::vector<std::string> brute_force(const Catalog& catalog, const std::vector<std::string>& seeds,
                                     const RecommendOptions& opt,
                                     std::map<std::string, std::uint64_t>& counts) {
  std::uint64_t cmax = 0;
  for (const auto& [id, c] : counts) cmax = std::max(cmax, c);
  struct Row {
    double adjusted;
    std::uint64_t exposure;
    double distance;
    std::string id;
  };
  std::vector<Row> rows;
  for (const auto& item : catalog.items()) {
    if (std::find(seeds.begin(), seeds.end(), item.id) != seeds.end()) continue;
    double sum = 0.0;
    for (const auto& s : seeds) sum += catalog.distance(item, catalog.item(s));
    const double d = sum / static_cast<double>(seeds.size());
    const double raw = opt.mode == kernel::RankingMode::kDiverse
                           ? kernel::diversity_score(d, opt.params.sigma())
                           : 1.0 - d;
    const double u = cmax == 0 ? 1.0 : 1.0 - static_cast<double>(counts[item.id]) / static_cast<double>(cmax);
    const double adjusted = raw > 0.0 ? raw * (1.0 + opt.lambda * u) : raw;
    rows.push_back({adjusted, counts[item.id], d, item.id});
  }
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    if (a.adjusted != b.adjusted) return a.adjusted > b.adjusted;
    if (a.exposure != b.exposure) return a.exposure < b.exposure;
    if (a.distance != b.distance) return a.distance < b.distance;
    return a.id < b.id;
  });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < rows.size() && i < opt.k; ++i) {
    out.push_back(rows[i].id);
    ++counts[rows[i].id];
  }
  return out;
}

Outcome oracle_equivalence() {
  std::mt19937_64 rng(2024);
  std::size_t calls = 0;
  for (int trial = 0; trial < 100; ++trial) {
    testing::RandomCatalogSpec spec;
    spec.n_items = 2 + rng() % 199;
    spec.dim = 2 + rng() % 6;
    spec.integer_vectors = trial % 3 != 0;
    const auto catalog = testing::random_catalog(rng, spec);
    auto ledger = ExposureLedger::for_catalog(catalog);
    std::map<std::string, std::uint64_t> counts;
    for (const auto& it : catalog.items()) counts[it.id] = 0;

    std::set<std::string> seed_set;
    const std::size_t n_seeds = 1 + rng() % 3;
    for (std::size_t s = 0; s < n_seeds; ++s) seed_set.insert(catalog.items()[rng() % catalog.size()].id);
    const std::vector<std::string> seeds(seed_set.begin(), seed_set.end());
    const auto profile = SeedProfile::from_items(seeds);

    for (int call = 0; call < 4; ++call) {
      RecommendOptions opt;
      opt.mode = call % 2 ? kernel::RankingMode::kSimilar : kernel::RankingMode::kDiverse;
      opt.params = kernel::KernelParams(0.05 + 0.45 * static_cast<double>(rng() % 1000) / 999.0);
      static const double kLambdas[] = {0.0, 0.25, 1.0, 10.0};
      opt.lambda = kLambdas[rng() % 4];
      opt.k = 1 + rng() % 20;
      const auto expected = brute_force(catalog, seeds, opt, counts);
      const auto got = recommend(catalog, profile, opt, ledger);
      ++calls;
      if (got.size() != expected.size()) return fail("trial " + std::to_string(trial) + ": size differs");
      for (std::size_t i = 0; i < got.size(); ++i) {
        if (got[i].item_id != expected[i]) {
          return fail("trial " + std::to_string(trial) + " call " + std::to_string(call) + " rank " +
                      std::to_string(i + 1) + ": " + got[i].item_id + " vs " + expected[i]);
        }
      }
      for (const auto& [id, c] : counts) {
        if (ledger.count(id) != c) return fail("ledger diverged on " + id);
      }
    }
  }
  return {true, std::to_string(calls) + " calls over 100 catalogs, both modes"};
}

// ---------------------------------------------------------------- equity

Outcome equity_direction() {
  sim::PopulationSpec pop;  // 50 users, 500 items, seed 42
  pop.n_users = 50;
  pop.n_items = 500;
  pop.seed = 42;
  auto text = [&](sim::Policy p, sim::MetricsSeries* keep) {
    const auto series = sim::run_simulation(pop, p, 200);
    if (keep) *keep = series;
    std::ostringstream out;
    sim::write_metrics(out, series);
    return out.str();
  };
  sim::MetricsSeries similar, equity;
  const auto s1 = text(sim::Policy::kSimilar, &similar);
  const auto e1 = text(sim::Policy::kDiverseEquity, &equity);
  const auto s2 = text(sim::Policy::kSimilar, nullptr);
  const auto e2 = text(sim::Policy::kDiverseEquity, nullptr);
  if (s1 != s2 || e1 != e2) return fail("metrics differ across reruns");
  const auto& a = similar.back();
  const auto& b = equity.back();
  std::ostringstream detail;
  detail << "gini " << a.gini << " (similar) vs " << b.gini << " (diverse+equity); coverage "
         << a.coverage << " vs " << b.coverage;
  if (!(a.gini > b.gini)) return fail(detail.str());
  if (!(b.coverage >= a.coverage)) return fail(detail.str());
  return {true, detail.str()};
}

// ---------------------------------------------------------------- adaptation

Outcome adaptation() {
  double worst = 0.0;
  for (Verdict v : {Verdict::kReject, Verdict::kAccept}) {
    UserSession s("accept", SeedProfile::from_items({"x"}), kernel::KernelParams(0.2), 0.1, 0);
    Recommendation r;
    r.item_id = "bold";
    r.distance = 0.4;
    r.bold = true;
    s.note_recommendations({r}, 0);
    for (int n = 1; n <= 40; ++n) {
      s.apply_feedback("bold", v, n);
      const double closed = v == Verdict::kReject ? std::max(0.05, 0.2 * std::pow(0.9, n))
                                                  : std::min(0.5, 0.2 * std::pow(1.1, n));
      const double err = std::abs(s.sigma() - closed);
      worst = std::max(worst, err);
      if (err > 1e-12) {
        return fail(std::string(verdict_name(v)) + " step " + std::to_string(n) + ": " +
                    std::to_string(s.sigma()) + " vs " + std::to_string(closed));
      }
    }
    if (v == Verdict::kReject && s.sigma() != 0.05) return fail("reject run did not clamp at 0.05");
    if (v == Verdict::kAccept && s.sigma() != 0.5) return fail("accept run did not clamp at 0.5");
  }
  std::ostringstream d;
  d << "40-step reject/accept runs, max deviation " << worst;
  return {true, d.str()};
}

// ---------------------------------------------------------------- bridge corpus

Outcome cross_discipline() {
  std::ifstream in(testing::data_path("bridge_corpus.jsonl"));
  ValidationReport report;
  const auto docs = textemb::parse_corpus(in, report);
  if (!report.ok()) return fail(report.to_string());
  const auto emb = textemb::build_vectors(docs, 32, 7);
  std::vector<textemb::DocVector> seeds;
  std::set<std::string> seed_tags;
  for (const auto& v : emb.vectors) {
    if (v.id == "seed0" || v.id == "seed1") seeds.push_back(v);
  }
  std::map<std::string, std::string> tag;
  for (const auto& d : docs) tag[d.id] = d.discipline_tag;
  for (const auto& s : seeds) seed_tags.insert(tag[s.id]);
  const auto target = textemb::seed_target(std::span<const textemb::DocVector>(seeds));
  const std::set<std::string> exclude{"seed0", "seed1"};
  auto foreign = [&](kernel::RankingMode mode) {
    int n = 0;
    for (const auto& h : textemb::ring_retrieve(target, emb.vectors, kernel::KernelParams(), 10, mode, exclude))
      n += !seed_tags.contains(tag[h.id]);
    return n;
  };
  const int div = foreign(kernel::RankingMode::kDiverse);
  const int sim = foreign(kernel::RankingMode::kSimilar);
  const std::string detail = "cross-discipline hits in top-10: diverse " + std::to_string(div) +
                             ", similar " + std::to_string(sim);
  if (div < 1 || sim != 0) return fail(detail);
  return {true, detail};
}

// ---------------------------------------------------------------- popularity

Outcome popularity_blindness() {
  std::mt19937_64 rng(31337);
  std::size_t compared = 0;
  auto run_engine = [](Catalog catalog, const std::string& seed) {
    service::ServiceConfig config;
    service::Engine engine(std::move(catalog), config, [] { return std::int64_t{0}; });
    const auto created = engine.handle("POST", "/sessions", {}, nlohmann::json{{"seed_ids", {seed}}}.dump());
    const auto id = nlohmann::json::parse(created.body)["session_id"].get<std::string>();
    std::vector<std::string> bodies;
    for (const char* body : {R"({"k":5})", R"({"k":8,"mode":"similar"})", R"({"k":5,"lambda":2})",
                             R"({"k":10})"}) {
      bodies.push_back(engine.handle("POST", "/sessions/" + id + "/recommend", {}, body).body);
    }
    bodies.push_back(engine.handle("GET", "/metrics/equity", {}, "").body);
    return bodies;
  };
  for (int trial = 0; trial < 20; ++trial) {
    Catalog base = trial == 0 ? testing::genre_map_catalog() : testing::random_catalog(rng, {});
    std::vector<Item> items = base.items();
    std::vector<std::uint64_t> pops;
    for (const auto& it : items) pops.push_back(it.popularity);
    std::shuffle(pops.begin(), pops.end(), rng);
    if (pops.size() > 1 && std::equal(pops.begin() + 1, pops.end(), pops.begin())) pops[0] += 1;
    for (std::size_t i = 0; i < items.size(); ++i) items[i].popularity = pops[i];
    std::optional<GenreGraph> graph;
    if (base.genre_graph()) graph = *base.genre_graph();
    auto permuted = Catalog::build(items, base.config(), graph);
    if (!permuted.ok()) return fail(permuted.report.to_string());
    const std::string seed = items[rng() % items.size()].id;
    const auto a = run_engine(base, seed);
    const auto b = run_engine(std::move(*permuted.catalog), seed);
    if (a != b) return fail("response bodies differ in trial " + std::to_string(trial));
    compared += a.size();
  }
  return {true, std::to_string(compared) + " response bodies byte-identical"};
}

// ---------------------------------------------------------------- fuzz

std::string valid_record(std::mt19937_64& rng, const std::string& id) {
  nlohmann::ordered_json rec{{"id", id},
                             {"title", "t" + std::to_string(rng() % 100)},
                             {"artist", "a"},
                             {"genre_id", "g"},
                             {"features", {{"v", {1.0, 2.0, 3.0}}, {"tags", {"x", "y"}}}},
                             {"popularity", rng() % 50}};
  return rec.dump();
}

// Each generator yields a line that must be rejected.
std::string malformed_line(std::mt19937_64& rng, int kind) {
  const std::string good = valid_record(rng, "m");
  auto j = nlohmann::ordered_json::parse(good);
  switch (kind) {
    case 0: {  // truncated
      return good.substr(0, 1 + rng() % (good.size() - 2));
    }
    case 1: {  // invalid UTF-8 inside a string
      static const char* kBad[] = {"\xff", "\xc3", "\xe2\x82", "\xed\xa0\x80", "\xc0\xaf"};
      std::string s = good;
      const auto pos = s.find("\"t") + 2;
      s.insert(pos, kBad[rng() % 5]);
      return s;
    }
    case 2: {  // required field removed
      static const char* kFields[] = {"id", "title", "artist", "genre_id", "features"};
      j.erase(kFields[rng() % 5]);
      return j.dump();
    }
    case 3: {  // wrong type
      static const char* kFields[] = {"id", "title", "artist", "genre_id", "features", "popularity"};
      const char* f = kFields[rng() % 6];
      j[f] = (rng() % 2) ? nlohmann::ordered_json(true) : nlohmann::ordered_json::array({1, "x"});
      return j.dump();
    }
    case 4: {  // unknown field
      j["extra_" + std::to_string(rng() % 10)] = 1;
      return j.dump();
    }
    case 5: {  // dimension mismatch
      auto& v = j["features"]["v"];
      if (rng() % 2) {
        v.push_back(4.0);
      } else {
        v.erase(v.size() - 1);
      }
      return j.dump();
    }
    case 6: {  // invalid values
      switch (rng() % 4) {
        case 0: j["popularity"] = -1 - static_cast<int>(rng() % 100); break;
        case 1: j["id"] = ""; break;
        case 2: j["features"]["v"][0] = 0.5; j["features"]["tags"] = {1, 2}; break;
        default: {
          std::string s = j.dump();
          const auto pos = s.find("1.0");
          return s.replace(pos, 3, "1e999");
        }
      }
      return j.dump();
    }
    case 7: {  // feature kind swap
      j["features"]["v"] = {"a", "b", "c"};
      return j.dump();
    }
    case 8: {  // non-object JSON or garbage
      static const char* kLines[] = {"[]", "42", "\"str\"", "null", "true", "}{", "{\"id\":}", "{,}",
                                     "{\"id\":\"q\"", "\x01\x02\x03", "{'id':'x'}"};
      return kLines[rng() % 11];
    }
    case 9: {  // random bytes, never starting an object
      std::string s;
      const std::size_t n = 1 + rng() % 80;
      for (std::size_t i = 0; i < n; ++i) s.push_back(static_cast<char>(rng() % 256));
      for (char& c : s)
        if (c == '\n' || c == '\r') c = 'x';
      if (s[0] == '{' || s[0] == ' ' || s[0] == '\t') s[0] = '#';
      return s;
    }
    case 10: {  // trailing garbage after a valid object
      return good + (rng() % 2 ? " x" : "}");
    }
    default: {  // duplicate of the first line's id
      return valid_record(rng, "ok");
    }
  }
}

Outcome ingestion_totality() {
  std::mt19937_64 rng(1234);
  DistanceConfig cfg;
  cfg.criteria.push_back({"v", CriterionKind::kVectorEuclidean, 1.0, "v"});
  cfg.criteria.push_back({"tags", CriterionKind::kCategoricalOverlap, 1.0, "tags"});
  std::map<std::string, int> codes;
  const int kinds = 12;
  const int cases = 1200;
  for (int c = 0; c < cases; ++c) {
    const int kind = c % kinds;
    const std::string bad = malformed_line(rng, kind);
    const std::string text = valid_record(rng, "ok") + "\n" + bad + "\n";
    try {
      std::istringstream in(text);
      const auto load = load_catalog(in, cfg);
      if (load.ok()) return fail("case " + std::to_string(c) + " (kind " + std::to_string(kind) + ") accepted: " + bad);
      bool on_line = false;
      for (const auto& issue : load.report.issues) {
        const auto name = catalog_error_name(issue.code);
        if (name.empty()) return fail("uncoded issue");
        ++codes[std::string(name)];
        on_line = on_line || issue.line == 2;
      }
      if (!on_line) return fail("case " + std::to_string(c) + ": no issue names line 2");
    } catch (const std::exception& e) {
      return fail("case " + std::to_string(c) + " threw: " + e.what());
    }
  }
  // Unconstrained byte mutations: must never crash or throw, whatever the verdict.
  const std::string good = valid_record(rng, "ok");
  for (int c = 0; c < 2000; ++c) {
    std::string s = good;
    const int edits = 1 + static_cast<int>(rng() % 4);
    for (int e = 0; e < edits; ++e) s[rng() % s.size()] = static_cast<char>(rng() % 256);
    try {
      std::istringstream in(s + "\n" + good + "\n");
      (void)load_catalog(in, cfg);
      std::istringstream graph(s);
      try {
        (void)load_genre_graph(graph);
      } catch (const Error&) {
      }
      std::istringstream corpus(s);
      ValidationReport r;
      (void)textemb::parse_corpus(corpus, r);
    } catch (const std::exception& e) {
      return fail(std::string("byte mutation threw: ") + e.what());
    }
  }
  std::string detail = std::to_string(cases) + " malformed lines rejected with codes {";
  for (const auto& [name, n] : codes) detail += name + ":" + std::to_string(n) + " ";
  detail.back() = '}';
  return {true, detail + "; 2000 byte mutations without a crash"};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"kernel correctness", 1.0, kernel_correctness},
      {"genre map reproduction", 1.0, genre_map_reproduction},
      {"oracle equivalence", 30.0, oracle_equivalence},
      {"equity direction", 60.0, equity_direction},
      {"sigma adaptation", 0.0, adaptation},
      {"cross-discipline retrieval", 5.0, cross_discipline},
      {"popularity blindness", 0.0, popularity_blindness},
      {"ingestion totality", 0.0, ingestion_totality},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome = fail(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (outcome.pass && c.time_limit_s > 0.0 && secs > c.time_limit_s) {
      outcome = fail("took " + std::to_string(secs) + " s, limit " + std::to_string(c.time_limit_s) + " s; " +
                     outcome.detail);
    }
    std::printf("%s  %-28s %7.3f s  %s\n", outcome.pass ? "PASS" : "FAIL", c.name, secs, outcome.detail.c_str());
    failed += !outcome.pass;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
