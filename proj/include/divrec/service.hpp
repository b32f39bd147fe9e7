#pragma once

// HTTP binding of the engine. Engine::handle is transport-free so the
// routing, error mapping and state handling can be exercised without
// sockets; serve() wraps it in an HTTP server.

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>

#include "divrec/catalog.hpp"
#include "divrec/equity.hpp"
#include "divrec/recommender.hpp"
#include "divrec/session.hpp"

namespace divrec::service {

inline constexpr std::string_view kVersion = "0.1.0";

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  // Music mode: catalog + distance config (+ genre graph).
  std::filesystem::path catalog_path;
  std::filesystem::path genre_graph_path;
  std::filesystem::path distance_config_path;
  // Document mode: a corpus (embedded at startup) and/or a vectors file.
  std::filesystem::path corpus_path;
  std::filesystem::path vectors_path;
  std::size_t embed_dimension = 64;
  std::uint64_t embed_seed = 7;

  std::filesystem::path session_store;
  SessionDefaults defaults;
  double lambda = kDefaultEquityLambda;
  std::size_t k = 10;

  /// Throws Error(kConfiguration) for missing or contradictory settings.
  void validate() const;
};

/// JSON config file; relative paths resolve against `base_dir`.
ServiceConfig load_service_config(std::istream& in, const std::filesystem::path& base_dir);

/// Startup failure with a stable code: config_invalid, catalog_invalid,
/// corpus_invalid, store_unavailable, port_busy.
class StartupError : public std::runtime_error {
 public:
  StartupError(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

struct Response {
  int status = 200;
  std::string body;
};

class Engine {
 public:
  using Clock = std::function<std::int64_t()>;

  Engine(Catalog catalog, ServiceConfig config, Clock clock = {});

  /// Loads every file named by `config`; throws StartupError.
  static std::unique_ptr<Engine> from_config(const ServiceConfig& config);

  /// Dispatches one request. `query` maps query-string parameters.
  Response handle(std::string_view method, std::string_view path,
                  const std::map<std::string, std::string>& query, std::string_view body);

  const Catalog& catalog() const noexcept { return catalog_; }
  ExposureLedger ledger_snapshot() const;

 private:
  struct SessionSlot {
    std::mutex mutex;
    std::optional<UserSession> session;
    std::map<std::string, Response> replies;  // request_id -> response
  };

  Response health() const;
  Response list_items(const std::map<std::string, std::string>& query) const;
  Response create(std::string_view body);
  Response get_session(const std::string& id);
  Response recommend(const std::string& id, std::string_view body);
  Response feedback(const std::string& id, std::string_view body);
  Response equity_metrics() const;

  std::shared_ptr<SessionSlot> slot_for(const std::string& id);
  void persist(const UserSession& session) const;

  Catalog catalog_;
  ServiceConfig config_;
  Clock clock_;
  std::optional<SessionStore> store_;

  mutable std::mutex ledger_mutex_;
  ExposureLedger ledger_;

  std::mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<SessionSlot>> sessions_;
};

/// Body of a recommend response: {"recommendations":[...],"sigma":...}.
std::string recommendations_body(const Catalog& catalog, const std::vector<Recommendation>& recs,
                                 double sigma);

/// Runs the HTTP server until SIGINT/SIGTERM or until `stop` becomes true.
/// One JSON log line per request goes to `log`. Throws StartupError.
void serve(const ServiceConfig& config, std::ostream& log,
           const std::atomic<bool>* stop = nullptr,
           std::function<void(int port)> on_listening = {});

}  // namespace divrec::service
