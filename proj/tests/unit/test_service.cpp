#include <doctest.h>

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <mutex>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "divrec/service.hpp"
#include "test_support.hpp"

using namespace divrec;
using namespace divrec::service;
using nlohmann::json;

namespace {

Engine genre_map_engine() {
  ServiceConfig config;
  config.k = 4;
  return Engine(testing::genre_map_catalog(), config, [] { return std::int64_t{1700000000000}; });
}

json body_of(const Response& r) { return json::parse(r.body); }

std::string new_session(Engine& e, const std::string& body = R"({"seed_ids":["th-1"]})") {
  const auto r = e.handle("POST", "/sessions", {}, body);
  REQUIRE(r.status == 201);
  return body_of(r)["session_id"].get<std::string>();
}

}  // namespace

TEST_CASE("service: health and items") {
  auto e = genre_map_engine();
  const auto h = e.handle("GET", "/health", {}, "");
  CHECK(h.status == 200);
  CHECK(body_of(h) == json{{"status", "ok"}, {"items", 7}, {"version", "0.1.0"}});
  const auto items = body_of(e.handle("GET", "/items", {{"prefix", "d"}, {"limit", "5"}}, ""));
  REQUIRE(items["items"].size() == 1);
  CHECK(items["items"][0]["item_id"] == "dub-1");
  CHECK(body_of(e.handle("GET", "/items", {{"limit", "2"}}, ""))["items"].size() == 2);
  CHECK(e.handle("GET", "/items", {{"limit", "x"}}, "").status == 400);
  const auto none = e.handle("GET", "/nowhere", {}, "");
  CHECK(none.status == 404);
  CHECK(body_of(none)["error"]["code"] == "no_route");
}

TEST_CASE("service: session lifecycle") {
  auto e = genre_map_engine();
  const auto created = e.handle("POST", "/sessions", {}, R"({"seed_ids":["th-1"],"sigma":0.9})");
  CHECK(created.status == 201);
  const auto cj = body_of(created);
  CHECK(cj["sigma"] == 0.5);
  CHECK(cj.contains("notice"));
  const std::string id = new_session(e);

  const auto rec = e.handle("POST", "/sessions/" + id + "/recommend", {}, R"({"k":3,"mode":"diverse"})");
  REQUIRE(rec.status == 200);
  const auto rj = body_of(rec);
  CHECK(rj["sigma"] == 0.2);
  REQUIRE(rj["recommendations"].size() == 3);
  const auto& first = rj["recommendations"][0];
  for (const char* field : {"item_id", "title", "artist", "distance", "raw_score", "adjusted_score",
                            "band", "bold", "rank"})
    CHECK(first.contains(field));
  CHECK(first["rank"] == 1);
  // Numbers round-trip exactly.
  const auto& catalog = e.catalog();
  const auto item_id = first["item_id"].get<std::string>();
  CHECK(first["distance"].get<double>() == catalog.distance(catalog.item(item_id), catalog.item("th-1")));

  std::string bold_id, tame_id;
  for (const auto& r : rj["recommendations"]) {
    if (r["bold"].get<bool>()) bold_id = r["item_id"];
  }
  REQUIRE(!bold_id.empty());
  const auto fb = e.handle("POST", "/sessions/" + id + "/feedback", {},
                           json{{"item_id", bold_id}, {"verdict", "reject"}}.dump());
  REQUIRE(fb.status == 200);
  CHECK(body_of(fb)["sigma_before"] == 0.2);
  CHECK(body_of(fb)["sigma_after"].get<double>() == doctest::Approx(0.18));

  const auto got = body_of(e.handle("GET", "/sessions/" + id, {}, ""));
  CHECK(got["sigma"].get<double>() == doctest::Approx(0.18));
  CHECK(got["feedback"].size() == 1);

  const auto m = body_of(e.handle("GET", "/metrics/equity", {}, ""));
  CHECK(m["total_exposures"] == 3);
  CHECK(m["coverage"].get<double>() == doctest::Approx(3.0 / 7.0));
  CHECK(m["gini"].get<double>() == doctest::Approx(gini(e.ledger_snapshot())));
}

TEST_CASE("service: error mapping") {
  auto e = genre_map_engine();
  const auto unknown = e.handle("POST", "/sessions/nosuch/recommend", {}, "{}");
  CHECK(unknown.status == 404);
  CHECK(body_of(unknown)["error"]["code"] == "not_found");

  const std::string id = new_session(e);
  const auto never = e.handle("POST", "/sessions/" + id + "/feedback", {},
                              R"({"item_id":"cl-1","verdict":"accept"})");
  CHECK(never.status == 409);
  CHECK(body_of(never)["error"]["code"] == "conflict");

  CHECK(e.handle("POST", "/sessions", {}, "{bad json").status == 400);
  CHECK(e.handle("POST", "/sessions", {}, R"({"seed_ids":["nope"]})").status == 404);
  CHECK(e.handle("POST", "/sessions", {}, R"({})").status == 400);
  CHECK(e.handle("POST", "/sessions/" + id + "/recommend", {}, R"({"mode":"wild"})").status == 400);
  CHECK(e.handle("POST", "/sessions/" + id + "/feedback", {}, R"({"item_id":"cl-1","verdict":"meh"})")
            .status == 400);
  CHECK(e.handle("GET", "/sessions/nosuch", {}, "").status == 404);
}

TEST_CASE("service: request ids make mutations idempotent") {
  auto e = genre_map_engine();
  const std::string id = new_session(e);
  const std::string body = R"({"k":2,"request_id":"r-1"})";
  const auto a = e.handle("POST", "/sessions/" + id + "/recommend", {}, body);
  const auto total = e.ledger_snapshot().total();
  const auto b = e.handle("POST", "/sessions/" + id + "/recommend", {}, body);
  CHECK(a.body == b.body);
  CHECK(e.ledger_snapshot().total() == total);
  const auto item = body_of(a)["recommendations"][0]["item_id"].get<std::string>();
  const auto fb = json{{"item_id", item}, {"verdict", "accept"}, {"request_id", "f-1"}}.dump();
  const auto f1 = e.handle("POST", "/sessions/" + id + "/feedback", {}, fb);
  const auto f2 = e.handle("POST", "/sessions/" + id + "/feedback", {}, fb);
  CHECK(f1.body == f2.body);
  CHECK(body_of(e.handle("GET", "/sessions/" + id, {}, ""))["feedback"].size() == 1);
}

TEST_CASE("service: identical state and request give identical bodies") {
  auto e1 = genre_map_engine();
  auto e2 = genre_map_engine();
  const std::string s1 = new_session(e1);
  const std::string s2 = new_session(e2);
  for (int i = 0; i < 3; ++i) {
    const auto r1 = e1.handle("POST", "/sessions/" + s1 + "/recommend", {}, R"({"k":4})");
    const auto r2 = e2.handle("POST", "/sessions/" + s2 + "/recommend", {}, R"({"k":4})");
    CHECK(r1.body == r2.body);
  }
}

TEST_CASE("service: sessions persist in the store") {
  const auto dir = std::filesystem::temp_directory_path() / "divrec-service-store-test";
  std::filesystem::remove_all(dir);
  ServiceConfig config;
  config.session_store = dir;
  std::string id;
  {
    Engine e(testing::genre_map_catalog(), config);
    id = new_session(e);
    e.handle("POST", "/sessions/" + id + "/recommend", {}, R"({"k":2})");
  }
  Engine again(testing::genre_map_catalog(), config);
  const auto r = again.handle("GET", "/sessions/" + id, {}, "");
  CHECK(r.status == 200);
  CHECK(again.ledger_snapshot().total() == 2);
  std::filesystem::remove_all(dir);
}

TEST_CASE("service: config loading and startup errors") {
  std::istringstream in(R"({"listen":"127.0.0.1:0","catalog":"genre_map_catalog.jsonl",
    "genre_graph":"genre_map.tsv","distance_config":"genre_map_distance.json",
    "defaults":{"sigma":0.3,"k":6}})");
  const auto config = load_service_config(in, DIVREC_TEST_DATA);
  CHECK(config.port == 0);
  CHECK(config.defaults.sigma == 0.3);
  CHECK(config.k == 6);
  auto engine = Engine::from_config(config);
  CHECK(engine->catalog().size() == 7);

  auto broken = config;
  broken.catalog_path = testing::data_path("duplicate_catalog.jsonl");
  try {
    Engine::from_config(broken);
    FAIL("expected startup error");
  } catch (const StartupError& e) {
    CHECK(e.code() == "catalog_invalid");
  }
  std::istringstream bad(R"({"listen":"nowhere"})");
  CHECK_THROWS(load_service_config(bad, "."));
}

TEST_CASE("service: HTTP round trip") {
  std::istringstream in(R"({"listen":"127.0.0.1:0","catalog":"genre_map_catalog.jsonl",
    "genre_graph":"genre_map.tsv","distance_config":"genre_map_distance.json"})");
  const auto config = load_service_config(in, DIVREC_TEST_DATA);
  std::atomic<bool> stop{false};
  std::mutex m;
  std::condition_variable cv;
  int port = 0;
  std::ostringstream log;
  std::thread server([&] {
    serve(config, log, &stop, [&](int p) {
      std::lock_guard lock(m);
      port = p;
      cv.notify_all();
    });
  });
  {
    std::unique_lock lock(m);
    REQUIRE(cv.wait_for(lock, std::chrono::seconds(10), [&] { return port != 0; }));
  }
  httplib::Client client("127.0.0.1", port);
  const auto health = client.Get("/health");
  REQUIRE(health);
  CHECK(health->status == 200);
  CHECK(json::parse(health->body)["items"] == 7);
  const auto created = client.Post("/sessions", R"({"seed_ids":["th-1"]})", "application/json");
  REQUIRE(created);
  CHECK(created->status == 201);
  const auto id = json::parse(created->body)["session_id"].get<std::string>();
  const auto rec = client.Post(("/sessions/" + id + "/recommend").c_str(), R"({"k":2})", "application/json");
  REQUIRE(rec);
  CHECK(rec->status == 200);
  CHECK(rec->get_header_value("Content-Type").find("application/json") != std::string::npos);
  const auto missing = client.Post("/sessions/zzz/recommend", "{}", "application/json");
  REQUIRE(missing);
  CHECK(missing->status == 404);
  stop = true;
  server.join();
  CHECK(log.str().find("\"path\"") != std::string::npos);

  // A second server on the same port fails with a coded startup error.
  httplib::Server blocker;
  const int taken = blocker.bind_to_any_port("127.0.0.1");
  auto busy = config;
  busy.port = taken;
  try {
    std::ostringstream sink;
    serve(busy, sink, &stop);
    FAIL("expected port_busy");
  } catch (const StartupError& e) {
    CHECK(e.code() == "port_busy");
  }
}
