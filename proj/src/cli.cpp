#include "divrec/cli.hpp"

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "divrec/catalog.hpp"
#include "divrec/error.hpp"
#include "divrec/recommender.hpp"
#include "divrec/service.hpp"
#include "divrec/simulator.hpp"
#include "divrec/textemb.hpp"

namespace divrec::cli {
namespace {

struct Failure {
  int code;
  std::string message;
};

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{kExitValidation, "cannot read " + path};
  return in;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Failure{kExitValidation, "cannot write " + path};
  return out;
}

struct MusicInputs {
  std::string catalog;
  std::string genres;
  std::string config;
};

struct DocInputs {
  std::string corpus;
  std::string vectors;
  std::size_t dimension = 64;
  std::uint64_t seed = 7;
};

std::optional<GenreGraph> read_graph(const std::string& path) {
  if (path.empty()) return std::nullopt;
  auto in = open_input(path);
  return load_genre_graph(in);
}

Catalog read_catalog(const MusicInputs& in_paths) {
  auto config_in = open_input(in_paths.config);
  DistanceConfig config = load_distance_config(config_in);
  auto graph = read_graph(in_paths.genres);
  auto in = open_input(in_paths.catalog);
  auto load = load_catalog(in, config, std::move(graph));
  if (!load.ok()) throw Failure{kExitValidation, load.report.to_string()};
  return std::move(*load.catalog);
}

std::vector<textemb::Document> read_corpus(const std::string& path) {
  auto in = open_input(path);
  ValidationReport report;
  auto docs = textemb::parse_corpus(in, report);
  if (!report.ok()) throw Failure{kExitValidation, report.to_string()};
  return docs;
}

Catalog read_documents(const DocInputs& d, std::ostream& err) {
  std::vector<textemb::Document> docs;
  if (!d.corpus.empty()) docs = read_corpus(d.corpus);
  std::vector<textemb::DocVector> vectors;
  if (!d.vectors.empty()) {
    auto in = open_input(d.vectors);
    vectors = textemb::load_vectors(in);
  } else {
    auto embedded = textemb::build_vectors(docs, d.dimension, d.seed);
    for (const auto& s : embedded.skipped) err << "skipped " << s.id << ": " << s.reason << '\n';
    vectors = std::move(embedded.vectors);
  }
  return textemb::documents_to_catalog(vectors, docs);
}

int cmd_ingest(const MusicInputs& music, const DocInputs& docs, std::ostream& out,
               std::ostream& err) {
  if (!docs.corpus.empty()) {
    auto corpus = read_corpus(docs.corpus);
    out << "ok: " << corpus.size() << " documents\n";
    return kExitOk;
  }
  if (!docs.vectors.empty()) {
    auto in = open_input(docs.vectors);
    const auto vectors = textemb::load_vectors(in);
    out << "ok: " << vectors.size() << " vectors of dimension " << vectors.front().vector.size()
        << '\n';
    return kExitOk;
  }
  if (music.catalog.empty()) throw Failure{kExitUsage, "ingest needs --catalog or --corpus"};
  if (music.config.empty()) {
    auto in = open_input(music.catalog);
    ValidationReport report;
    const auto items = parse_items(in, report);
    if (!report.ok()) throw Failure{kExitValidation, report.to_string()};
    out << "ok: " << items.size() << " items (structure only; no distance config given)\n";
    return kExitOk;
  }
  const Catalog catalog = read_catalog(music);
  out << "ok: " << catalog.size() << " items, " << catalog.config().criteria.size()
      << " criteria";
  if (const auto* g = catalog.genre_graph()) {
    out << ", " << g->nodes().size() << " genres (diameter " << g->diameter() << ")";
  }
  out << '\n';
  (void)err;
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Diversity-aware recommendation engine", "divrec"};
  app.require_subcommand(1);

  MusicInputs music;
  DocInputs docs;
  auto add_music = [&](CLI::App* sub) {
    sub->add_option("--catalog", music.catalog, "Item catalog (JSON lines)");
    sub->add_option("--genres", music.genres, "Genre graph (node / nodeA<TAB>nodeB lines)");
    sub->add_option("--config", music.config, "Distance configuration (JSON)");
  };
  auto add_docs = [&](CLI::App* sub) {
    sub->add_option("--corpus", docs.corpus, "Document corpus (JSON lines)");
    sub->add_option("--vectors", docs.vectors, "Precomputed document vectors (JSON lines)");
    sub->add_option("--dim", docs.dimension, "Embedding dimension")->check(CLI::PositiveNumber);
    sub->add_option("--embed-seed", docs.seed, "Projection seed");
  };

  auto* ingest = app.add_subcommand("ingest", "Validate a catalog or corpus and print a report");
  add_music(ingest);
  add_docs(ingest);

  auto* rec = app.add_subcommand("recommend", "One-shot recommendation to standard output");
  add_music(rec);
  add_docs(rec);
  std::vector<std::string> seeds;
  std::vector<std::string> target_docs;
  std::size_t k = 10;
  std::string mode = "diverse";
  double sigma = kernel::kDefaultSigma;
  double theta = kernel::kDefaultTheta;
  double lambda = kDefaultEquityLambda;
  std::string ledger_path;
  rec->add_option("--seed", seeds, "Seed item id (repeatable)");
  rec->add_option("--target-doc", target_docs, "Seed document id (repeatable)");
  rec->add_option("--k", k, "Number of recommendations")->check(CLI::PositiveNumber);
  rec->add_option("--mode", mode, "diverse or similar")
      ->check(CLI::IsMember({"diverse", "similar"}));
  rec->add_option("--sigma", sigma, "Diversity radius");
  rec->add_option("--theta", theta, "Optimal-band threshold");
  rec->add_option("--lambda", lambda, "Equity boost strength");
  rec->add_option("--ledger", ledger_path, "Exposure ledger file, read and updated");

  auto* embed = app.add_subcommand("embed", "Build a vectors file from a corpus");
  std::string corpus_path;
  std::string vectors_out;
  std::size_t embed_k = 64;
  std::uint64_t embed_seed = 7;
  bool identity = false;
  embed->add_option("--corpus", corpus_path, "Document corpus (JSON lines)")->required();
  embed->add_option("--k", embed_k, "Target dimension")->check(CLI::PositiveNumber);
  embed->add_option("--seed", embed_seed, "Projection seed");
  embed->add_option("--out", vectors_out, "Output vectors file")->required();
  embed->add_flag("--identity", identity, "Skip projection (k must equal vocabulary size)");

  auto* simulate = app.add_subcommand("simulate", "Run the policy simulator");
  sim::PopulationSpec pop;
  std::size_t rounds = 200;
  std::string policy = "all";
  std::string metrics_out;
  std::string report_out;
  simulate->add_option("--users", pop.n_users, "Number of users");
  simulate->add_option("--items", pop.n_items, "Number of items");
  simulate->add_option("--rounds", rounds, "Rounds");
  simulate->add_option("--dim", pop.latent_dim, "Latent dimension");
  simulate->add_option("--seed", pop.seed, "Random seed");
  simulate->add_option("--lambda", pop.lambda, "Equity boost for diverse+equity");
  simulate->add_option("--policy", policy, "similar, diverse, diverse+equity or all")
      ->check(CLI::IsMember({"similar", "diverse", "diverse+equity", "all"}));
  simulate->add_option("--out", metrics_out, "Metrics file (JSON lines)")->required();
  simulate->add_option("--report", report_out, "Comparison report (JSON), with --policy all");

  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  std::string service_config;
  std::string listen;
  std::string store;
  serve->add_option("--service-config", service_config, "Service configuration (JSON)");
  add_music(serve);
  add_docs(serve);
  serve->add_option("--listen", listen, "host:port");
  serve->add_option("--store", store, "Session store directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  try {
    if (*ingest) return cmd_ingest(music, docs, out, err);

    if (*rec) {
      const bool doc_mode = !docs.corpus.empty() || !docs.vectors.empty();
      if (doc_mode == !music.catalog.empty()) {
        throw Failure{kExitUsage, "recommend needs either --catalog/--config or --corpus/--vectors"};
      }
      const Catalog catalog = doc_mode ? read_documents(docs, err) : read_catalog(music);
      std::optional<SeedProfile> profile;
      if (doc_mode) {
        if (target_docs.empty()) throw Failure{kExitUsage, "document mode needs --target-doc"};
        std::vector<Vector> vs;
        for (const auto& id : target_docs) {
          vs.push_back(std::get<Vector>(
              catalog.item(id).features.at(std::string(textemb::kEmbeddingKey))));
        }
        profile = SeedProfile::from_target(textemb::seed_target(std::span<const Vector>(vs)),
                                           {target_docs.begin(), target_docs.end()});
      } else {
        if (seeds.empty()) throw Failure{kExitUsage, "recommend needs at least one --seed"};
        profile = SeedProfile::from_items(seeds);
      }
      ExposureLedger ledger = ExposureLedger::for_catalog(catalog);
      if (!ledger_path.empty()) {
        std::ifstream in(ledger_path, std::ios::binary);
        if (in) {
          const ExposureLedger saved = read_ledger(in);
          for (const auto& [id, count] : saved.counts()) {
            if (ledger.knows(id)) ledger.record(id, count);
          }
        }
      }
      RecommendOptions options;
      options.params = kernel::KernelParams(sigma, theta);
      options.k = k;
      options.lambda = lambda;
      options.mode = kernel::parse_mode(mode);
      const auto recs = recommend(catalog, *profile, options, ledger);
      if (!ledger_path.empty()) {
        auto o = open_output(ledger_path);
        write_ledger(o, ledger);
      }
      out << service::recommendations_body(catalog, recs, sigma) << '\n';
      return kExitOk;
    }

    if (*embed) {
      const auto corpus = read_corpus(corpus_path);
      const auto result = textemb::build_vectors(
          corpus, embed_k, embed_seed,
          identity ? textemb::Projection::kIdentity : textemb::Projection::kRandomSign);
      for (const auto& s : result.skipped) err << "skipped " << s.id << ": " << s.reason << '\n';
      auto o = open_output(vectors_out);
      textemb::write_vectors(o, result.vectors);
      out << "wrote " << result.vectors.size() << " vectors of dimension " << embed_k << " to "
          << vectors_out << '\n';
      return kExitOk;
    }

    if (*simulate) {
      if (policy == "all") {
        const auto report = sim::evaluate_policies(pop, rounds);
        auto o = open_output(metrics_out);
        for (const auto& p : report.policies) {
          std::ostringstream lines;
          sim::write_metrics(lines, p.series);
          std::istringstream split(lines.str());
          for (std::string line; std::getline(split, line);) {
            o << "{\"policy\":\"" << sim::policy_name(p.policy) << "\"," << line.substr(1)
              << '\n';
          }
        }
        if (!report_out.empty()) {
          auto r = open_output(report_out);
          r << sim::report_json(report);
        }
        out << sim::report_table(report);
      } else {
        const auto series = sim::run_simulation(pop, sim::parse_policy(policy), rounds);
        auto o = open_output(metrics_out);
        sim::write_metrics(o, series);
        const auto& last = series.back();
        out << "policy " << policy << ": final gini " << last.gini << ", coverage "
            << last.coverage << '\n';
      }
      return kExitOk;
    }

    if (*serve) {
      service::ServiceConfig config;
      if (!service_config.empty()) {
        auto in = open_input(service_config);
        config = service::load_service_config(
            in, std::filesystem::path(service_config).parent_path());
      }
      if (!music.catalog.empty()) config.catalog_path = music.catalog;
      if (!music.genres.empty()) config.genre_graph_path = music.genres;
      if (!music.config.empty()) config.distance_config_path = music.config;
      if (!docs.corpus.empty()) config.corpus_path = docs.corpus;
      if (!docs.vectors.empty()) config.vectors_path = docs.vectors;
      if (!store.empty()) config.session_store = store;
      if (!listen.empty()) {
        const auto colon = listen.rfind(':');
        if (colon == std::string::npos) throw Failure{kExitUsage, "--listen must be host:port"};
        config.host = listen.substr(0, colon);
        try {
          config.port = std::stoi(listen.substr(colon + 1));
        } catch (const std::exception&) {
          throw Failure{kExitUsage, "--listen port is not a number"};
        }
      }
      service::serve(config, err);
      return kExitOk;
    }
  } catch (const Failure& f) {
    err << (f.code == kExitUsage ? "usage error: " : "error: ") << f.message;
    if (f.message.empty() || f.message.back() != '\n') err << '\n';
    return f.code;
  } catch (const service::StartupError& e) {
    err << "error [" << e.code() << "]: " << e.what() << '\n';
    return kExitValidation;
  } catch (const Error& e) {
    err << "error [" << error_code_name(e.code()) << "]: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitUsage;
}

}  // namespace divrec::cli
