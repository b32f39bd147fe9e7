#include "divrec/service.hpp"

#include <chrono>
#include <csignal>
#include <fstream>
#include <sstream>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "divrec/error.hpp"
#include "divrec/recommender.hpp"
#include "divrec/textemb.hpp"

namespace divrec::service {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

Response json_response(int status, const ordered_json& body) {
  return {status, body.dump()};
}

Response error_response(int status, std::string_view code, const std::string& message) {
  return json_response(status, ordered_json{{"error", {{"code", code}, {"message", message}}}});
}

Response from_error(const Error& e) {
  int status = 400;
  switch (e.code()) {
    case ErrorCode::kNotFound:
    case ErrorCode::kLookup: status = 404; break;
    case ErrorCode::kConflict: status = 409; break;
    case ErrorCode::kIo: status = 500; break;
    default: break;
  }
  return error_response(status, error_code_name(e.code()), e.what());
}

std::vector<std::string_view> split_path(std::string_view path) {
  std::vector<std::string_view> parts;
  while (!path.empty()) {
    if (path.front() == '/') {
      path.remove_prefix(1);
      continue;
    }
    const auto slash = path.find('/');
    parts.push_back(path.substr(0, slash));
    if (slash == std::string_view::npos) break;
    path.remove_prefix(slash);
  }
  return parts;
}

json parse_body(std::string_view body) {
  if (body.find_first_not_of(" \t\r\n") == std::string_view::npos) return json::object();
  json doc = json::parse(body, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw Error(ErrorCode::kValidation, "request body must be a JSON object");
  }
  return doc;
}

template <typename T>
std::optional<T> optional_field(const json& doc, const char* name) {
  if (!doc.contains(name) || doc[name].is_null()) return std::nullopt;
  try {
    return doc[name].get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::kValidation, std::string("field '") + name + "' has the wrong type");
  }
}

std::int64_t system_now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

std::filesystem::path resolve(const json& doc, const char* key,
                              const std::filesystem::path& base) {
  if (!doc.contains(key) || doc[key].is_null()) return {};
  std::filesystem::path p = doc[key].get<std::string>();
  return p.is_absolute() || base.empty() ? p : base / p;
}

std::ifstream open_or_fail(const std::filesystem::path& p, const std::string& code) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw StartupError(code, "cannot read " + p.string());
  return in;
}

}  // namespace

void ServiceConfig::validate() const {
  auto bad = [](const std::string& why) { return Error(ErrorCode::kConfiguration, why); };
  const bool music = !catalog_path.empty();
  const bool docs = !corpus_path.empty() || !vectors_path.empty();
  if (music == docs) throw bad("configure exactly one of: catalog, or corpus/vectors");
  if (music && distance_config_path.empty()) throw bad("catalog mode needs a distance config");
  if (port < 0 || port > 65535) throw bad("port out of range");
  if (k == 0) throw bad("default k must be >= 1");
  if (!(lambda >= 0.0)) throw bad("lambda must be >= 0");
  if (!(defaults.eta > 0.0 && defaults.eta < 1.0)) throw bad("eta must lie in (0, 1)");
  kernel::KernelParams(defaults.sigma, defaults.theta, defaults.sigma_min, defaults.sigma_max);
}

ServiceConfig load_service_config(std::istream& in, const std::filesystem::path& base_dir) {
  const json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw Error(ErrorCode::kConfiguration, "service config must be a JSON object");
  }
  ServiceConfig c;
  try {
    if (doc.contains("listen")) {
      const auto listen = doc["listen"].get<std::string>();
      const auto colon = listen.rfind(':');
      if (colon == std::string::npos) {
        throw Error(ErrorCode::kConfiguration, "listen must be host:port");
      }
      c.host = listen.substr(0, colon);
      c.port = std::stoi(listen.substr(colon + 1));
    }
    c.catalog_path = resolve(doc, "catalog", base_dir);
    c.genre_graph_path = resolve(doc, "genre_graph", base_dir);
    c.distance_config_path = resolve(doc, "distance_config", base_dir);
    c.corpus_path = resolve(doc, "corpus", base_dir);
    c.vectors_path = resolve(doc, "vectors", base_dir);
    c.session_store = resolve(doc, "session_store", base_dir);
    if (doc.contains("embed")) {
      const auto& e = doc["embed"];
      c.embed_dimension = e.value("dimension", c.embed_dimension);
      c.embed_seed = e.value("seed", c.embed_seed);
    }
    if (doc.contains("defaults")) {
      const auto& d = doc["defaults"];
      c.defaults.sigma = d.value("sigma", c.defaults.sigma);
      c.defaults.eta = d.value("eta", c.defaults.eta);
      c.defaults.theta = d.value("theta", c.defaults.theta);
      c.defaults.sigma_min = d.value("sigma_min", c.defaults.sigma_min);
      c.defaults.sigma_max = d.value("sigma_max", c.defaults.sigma_max);
      c.lambda = d.value("lambda", c.lambda);
      c.k = d.value("k", c.k);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfiguration, std::string("service config: ") + e.what());
  } catch (const std::logic_error& e) {
    throw Error(ErrorCode::kConfiguration, std::string("service config: ") + e.what());
  }
  c.validate();
  return c;
}

Engine::Engine(Catalog catalog, ServiceConfig config, Clock clock)
    : catalog_(std::move(catalog)),
      config_(std::move(config)),
      clock_(clock ? std::move(clock) : Clock(&system_now_ms)),
      ledger_(ExposureLedger::for_catalog(catalog_)) {
  if (!config_.session_store.empty()) {
    store_.emplace(config_.session_store);
    if (auto saved = store_->load_ledger()) {
      for (const auto& [id, count] : saved->counts()) {
        if (ledger_.knows(id)) ledger_.record(id, count);
      }
    }
  }
}

std::unique_ptr<Engine> Engine::from_config(const ServiceConfig& config) {
  try {
    config.validate();
  } catch (const Error& e) {
    throw StartupError("config_invalid", e.what());
  }
  std::optional<Catalog> catalog;
  if (!config.catalog_path.empty()) {
    DistanceConfig dist;
    try {
      auto in = open_or_fail(config.distance_config_path, "config_invalid");
      dist = load_distance_config(in);
    } catch (const Error& e) {
      throw StartupError("config_invalid", e.what());
    }
    std::optional<GenreGraph> graph;
    if (!config.genre_graph_path.empty()) {
      try {
        auto in = open_or_fail(config.genre_graph_path, "catalog_invalid");
        graph = load_genre_graph(in);
      } catch (const Error& e) {
        throw StartupError("catalog_invalid", std::string("genre graph: ") + e.what());
      }
    }
    auto in = open_or_fail(config.catalog_path, "catalog_invalid");
    auto load = load_catalog(in, dist, std::move(graph));
    if (!load.ok()) throw StartupError("catalog_invalid", load.report.to_string());
    catalog = std::move(*load.catalog);
  } else {
    try {
      std::vector<textemb::Document> docs;
      if (!config.corpus_path.empty()) {
        auto in = open_or_fail(config.corpus_path, "corpus_invalid");
        ValidationReport report;
        docs = textemb::parse_corpus(in, report);
        if (!report.ok()) throw StartupError("corpus_invalid", report.to_string());
      }
      std::vector<textemb::DocVector> vectors;
      if (!config.vectors_path.empty()) {
        auto in = open_or_fail(config.vectors_path, "corpus_invalid");
        vectors = textemb::load_vectors(in);
      } else {
        vectors = textemb::build_vectors(docs, config.embed_dimension, config.embed_seed).vectors;
      }
      catalog = textemb::documents_to_catalog(vectors, docs);
    } catch (const Error& e) {
      throw StartupError("corpus_invalid", e.what());
    }
  }
  try {
    return std::make_unique<Engine>(std::move(*catalog), config);
  } catch (const Error& e) {
    throw StartupError("store_unavailable", e.what());
  }
}

ExposureLedger Engine::ledger_snapshot() const {
  std::lock_guard lock(ledger_mutex_);
  return ledger_;
}

Response Engine::handle(std::string_view method, std::string_view path,
                        const std::map<std::string, std::string>& query, std::string_view body) {
  const auto parts = split_path(path);
  try {
    if (method == "GET" && parts.size() == 1 && parts[0] == "health") return health();
    if (method == "GET" && parts.size() == 1 && parts[0] == "items") return list_items(query);
    if (method == "GET" && parts.size() == 2 && parts[0] == "metrics" && parts[1] == "equity") {
      return equity_metrics();
    }
    if (parts.size() >= 1 && parts[0] == "sessions") {
      if (parts.size() == 1 && method == "POST") return create(body);
      if (parts.size() == 2 && method == "GET") return get_session(std::string(parts[1]));
      if (parts.size() == 3 && method == "POST" && parts[2] == "recommend") {
        return recommend(std::string(parts[1]), body);
      }
      if (parts.size() == 3 && method == "POST" && parts[2] == "feedback") {
        return feedback(std::string(parts[1]), body);
      }
    }
    return error_response(404, "no_route", std::string(method) + " " + std::string(path));
  } catch (const Error& e) {
    return from_error(e);
  } catch (const std::exception& e) {
    return error_response(500, "internal_error", e.what());
  }
}

Response Engine::health() const {
  return json_response(200, ordered_json{{"status", "ok"},
                                         {"items", catalog_.size()},
                                         {"version", kVersion}});
}

Response Engine::list_items(const std::map<std::string, std::string>& query) const {
  std::string prefix;
  std::size_t limit = 20;
  if (auto it = query.find("prefix"); it != query.end()) prefix = it->second;
  if (auto it = query.find("limit"); it != query.end()) {
    try {
      limit = std::stoul(it->second);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kValidation, "limit must be a nonnegative integer");
    }
  }
  auto lower = [](std::string s) {
    for (char& c : s) {
      if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return s;
  };
  const std::string needle = lower(prefix);
  ordered_json items = ordered_json::array();
  for (const auto& item : catalog_.items()) {
    if (items.size() >= limit) break;
    if (!needle.empty() && lower(item.id).rfind(needle, 0) != 0 &&
        lower(item.title).rfind(needle, 0) != 0) {
      continue;
    }
    items.push_back(ordered_json{{"item_id", item.id},
                                 {"title", item.title},
                                 {"artist", item.artist},
                                 {"genre_id", item.genre_id}});
  }
  return json_response(200, ordered_json{{"items", items}});
}

Response Engine::create(std::string_view body) {
  const json req = parse_body(body);
  const auto seed_ids = optional_field<std::vector<std::string>>(req, "seed_ids");
  const auto doc_ids = optional_field<std::vector<std::string>>(req, "target_doc_ids");
  const auto sigma = optional_field<double>(req, "sigma");
  if (seed_ids.has_value() == doc_ids.has_value()) {
    throw Error(ErrorCode::kValidation, "give exactly one of seed_ids or target_doc_ids");
  }
  std::optional<SeedProfile> profile;
  if (seed_ids) {
    profile = SeedProfile::from_items(*seed_ids);
  } else {
    const std::string* key = catalog_.embedding_key();
    if (!key) throw Error(ErrorCode::kValidation, "catalog has no embeddings for target_doc_ids");
    if (doc_ids->empty()) throw Error(ErrorCode::kValidation, "target_doc_ids is empty");
    std::vector<Vector> seeds;
    for (const auto& id : *doc_ids) {
      seeds.push_back(std::get<Vector>(catalog_.item(id).features.at(*key)));
    }
    profile = SeedProfile::from_target(textemb::seed_target(std::span<const Vector>(seeds)),
                                       {doc_ids->begin(), doc_ids->end()});
  }
  auto created = create_session(*profile, config_.defaults, catalog_, sigma, {}, clock_());
  persist(created.session);
  ordered_json out{{"session_id", created.session.session_id()},
                   {"sigma", created.session.sigma()}};
  if (created.clamp_notice) out["notice"] = *created.clamp_notice;
  const auto slot = std::make_shared<SessionSlot>();
  const std::string id = created.session.session_id();
  slot->session.emplace(std::move(created.session));
  {
    std::lock_guard lock(sessions_mutex_);
    sessions_[id] = slot;
  }
  return json_response(201, out);
}

std::shared_ptr<Engine::SessionSlot> Engine::slot_for(const std::string& id) {
  std::lock_guard lock(sessions_mutex_);
  auto& slot = sessions_[id];
  if (!slot) slot = std::make_shared<SessionSlot>();
  return slot;
}

void Engine::persist(const UserSession& session) const {
  if (store_) store_->save(session);
}

namespace {

void ensure_loaded(std::optional<UserSession>& session, const std::optional<SessionStore>& store,
                   const std::string& id) {
  if (session) return;
  if (!store || !store->exists(id)) throw Error(ErrorCode::kNotFound, "no session '" + id + "'");
  session = store->load(id);
}

}  // namespace

Response Engine::get_session(const std::string& id) {
  const auto slot = slot_for(id);
  std::lock_guard lock(slot->mutex);
  ensure_loaded(slot->session, store_, id);
  const UserSession& s = *slot->session;
  ordered_json log = ordered_json::array();
  for (const auto& f : s.feedback_log()) {
    log.push_back(ordered_json{{"item_id", f.item_id},
                               {"verdict", verdict_name(f.verdict)},
                               {"bold", f.bold},
                               {"sigma_before", f.sigma_before},
                               {"sigma_after", f.sigma_after}});
  }
  return json_response(200, ordered_json{{"session_id", s.session_id()},
                                         {"sigma", s.sigma()},
                                         {"feedback", log}});
}

Response Engine::recommend(const std::string& id, std::string_view body) {
  const auto slot = slot_for(id);
  std::lock_guard lock(slot->mutex);
  ensure_loaded(slot->session, store_, id);
  const json req = parse_body(body);
  const auto request_id = optional_field<std::string>(req, "request_id");
  if (request_id) {
    if (auto it = slot->replies.find("recommend:" + *request_id); it != slot->replies.end()) {
      return it->second;
    }
  }
  UserSession& session = *slot->session;
  RecommendOptions options;
  options.params = session.params();
  options.k = optional_field<std::size_t>(req, "k").value_or(config_.k);
  options.lambda = optional_field<double>(req, "lambda").value_or(config_.lambda);
  options.mode = kernel::parse_mode(optional_field<std::string>(req, "mode").value_or("diverse"));

  std::vector<Recommendation> recs;
  {
    std::lock_guard ledger_lock(ledger_mutex_);
    recs = divrec::recommend(catalog_, session.profile(), options, ledger_);
    if (store_) store_->save_ledger(ledger_);
  }
  session.note_recommendations(recs, clock_());
  persist(session);

  Response out{200, recommendations_body(catalog_, recs, session.sigma())};
  if (request_id) slot->replies["recommend:" + *request_id] = out;
  return out;
}

Response Engine::feedback(const std::string& id, std::string_view body) {
  const auto slot = slot_for(id);
  std::lock_guard lock(slot->mutex);
  ensure_loaded(slot->session, store_, id);
  const json req = parse_body(body);
  const auto request_id = optional_field<std::string>(req, "request_id");
  if (request_id) {
    if (auto it = slot->replies.find("feedback:" + *request_id); it != slot->replies.end()) {
      return it->second;
    }
  }
  const auto item_id = optional_field<std::string>(req, "item_id");
  const auto verdict = optional_field<std::string>(req, "verdict");
  if (!item_id || !verdict) throw Error(ErrorCode::kValidation, "item_id and verdict are required");
  const Verdict v = parse_verdict(*verdict);
  catalog_.item(*item_id);
  const FeedbackEvent& event = slot->session->apply_feedback(*item_id, v, clock_());
  const ordered_json out{{"sigma_before", event.sigma_before}, {"sigma_after", event.sigma_after}};
  persist(*slot->session);
  Response r = json_response(200, out);
  if (request_id) slot->replies["feedback:" + *request_id] = r;
  return r;
}

std::string recommendations_body(const Catalog& catalog, const std::vector<Recommendation>& recs,
                                 double sigma) {
  ordered_json list = ordered_json::array();
  for (const auto& r : recs) {
    const Item& item = catalog.item(r.item_id);
    list.push_back(ordered_json{{"item_id", r.item_id},
                                {"title", item.title},
                                {"artist", item.artist},
                                {"distance", r.distance},
                                {"raw_score", r.raw_score},
                                {"adjusted_score", r.adjusted_score},
                                {"band", kernel::band_name(r.band)},
                                {"bold", r.bold},
                                {"rank", r.rank}});
  }
  return ordered_json{{"recommendations", list}, {"sigma", sigma}}.dump();
}

Response Engine::equity_metrics() const {
  const ExposureLedger snapshot = ledger_snapshot();
  return json_response(200, ordered_json{{"gini", gini(snapshot)},
                                         {"coverage", coverage(snapshot, catalog_)},
                                         {"total_exposures", snapshot.total()}});
}

namespace {

std::atomic<bool> g_signalled{false};

extern "C" void on_signal(int) { g_signalled.store(true); }

}  // namespace

void serve(const ServiceConfig& config, std::ostream& log, const std::atomic<bool>* stop,
           std::function<void(int port)> on_listening) {
  auto engine = Engine::from_config(config);
  httplib::Server server;
  std::mutex log_mutex;

  auto dispatch = [&](const httplib::Request& req, httplib::Response& res) {
    std::map<std::string, std::string> query;
    for (const auto& [k, v] : req.params) query.emplace(k, v);
    const Response out = engine->handle(req.method, req.path, query, req.body);
    res.status = out.status;
    res.set_content(out.body, "application/json");
  };
  server.Get(R"(/.*)", dispatch);
  server.Post(R"(/.*)", dispatch);
  server.set_logger([&](const httplib::Request& req, const httplib::Response& res) {
    const ordered_json line{{"ts_ms", system_now_ms()},
                            {"method", req.method},
                            {"path", req.path},
                            {"status", res.status}};
    std::lock_guard lock(log_mutex);
    log << line.dump() << '\n' << std::flush;
  });

  // SO_REUSEADDR only: with SO_REUSEPORT a second instance would bind the same port.
  server.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes), sizeof(yes));
  });

  int port = config.port;
  if (port == 0) {
    port = server.bind_to_any_port(config.host);
    if (port < 0) throw StartupError("port_busy", "cannot bind " + config.host);
  } else if (!server.bind_to_port(config.host, port)) {
    throw StartupError("port_busy", "cannot bind " + config.host + ":" + std::to_string(port));
  }

  g_signalled.store(false);
  auto previous_int = std::signal(SIGINT, on_signal);
  auto previous_term = std::signal(SIGTERM, on_signal);
  std::atomic<bool> done{false};
  std::thread watcher([&] {
    while (!done.load()) {
      if (g_signalled.load() || (stop && stop->load())) {
        server.stop();
        break;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
  });
  if (on_listening) on_listening(port);
  {
    std::lock_guard lock(log_mutex);
    log << ordered_json{{"event", "listening"}, {"host", config.host}, {"port", port}}.dump()
        << '\n'
        << std::flush;
  }
  server.listen_after_bind();
  done.store(true);
  watcher.join();
  std::signal(SIGINT, previous_int);
  std::signal(SIGTERM, previous_term);
}

}  // namespace divrec::service
