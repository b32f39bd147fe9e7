#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "divrec/error.hpp"
#include "divrec/session.hpp"
#include "test_support.hpp"

using namespace divrec;
namespace fs = std::filesystem;

namespace {

Recommendation rec(std::string id, double distance, bool bold) {
  Recommendation r;
  r.item_id = std::move(id);
  r.distance = distance;
  r.bold = bold;
  r.band = bold ? kernel::Band::kOptimal : kernel::Band::kSimilar;
  r.rank = 1;
  return r;
}

UserSession session_with(double sigma, double eta = kDefaultEta) {
  UserSession s("s1", SeedProfile::from_items({"th-1"}), kernel::KernelParams(sigma), eta, 1000);
  s.note_recommendations({rec("bold", 0.3, true), rec("tame", 0.05, false)}, 2000);
  return s;
}

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("divrec-test-" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

}  // namespace

TEST_CASE("session: single feedback steps") {
  auto s = session_with(0.2);
  const auto& ev = s.apply_feedback("bold", Verdict::kReject, 3000);
  CHECK(ev.sigma_before == 0.2);
  CHECK(ev.bold);
  CHECK(s.sigma() == doctest::Approx(0.18).epsilon(1e-15));

  auto t = session_with(0.2);
  t.apply_feedback("bold", Verdict::kAccept, 3000);
  CHECK(t.sigma() == doctest::Approx(0.22).epsilon(1e-15));

  auto u = session_with(0.2);
  u.apply_feedback("tame", Verdict::kReject, 3000);
  u.apply_feedback("tame", Verdict::kAccept, 3001);
  CHECK(u.sigma() == 0.2);
  CHECK(u.feedback_log().size() == 2);
  CHECK_FALSE(u.feedback_log()[0].bold);
}

TEST_CASE("session: forty bold rejects clamp at sigma_min") {
  auto s = session_with(0.2);
  double prev = s.sigma();
  double unclamped = 0.2;
  for (int i = 0; i < 40; ++i) {
    s.apply_feedback("bold", Verdict::kReject, 3000 + i);
    unclamped *= 0.9;
    CHECK(s.sigma() <= prev);
    CHECK(s.sigma() >= 0.05);
    CHECK(s.sigma() == doctest::Approx(std::max(0.05, unclamped)).epsilon(1e-12));
    prev = s.sigma();
  }
  CHECK(0.2 * std::pow(0.9, 40) == doctest::Approx(0.00296).epsilon(1e-2));
  CHECK(s.sigma() == 0.05);
  CHECK(s.feedback_log().size() == 40);

  auto up = session_with(0.2);
  for (int i = 0; i < 40; ++i) up.apply_feedback("bold", Verdict::kAccept, 3000 + i);
  CHECK(up.sigma() == 0.5);
}

TEST_CASE("session: unknown or never recommended items") {
  auto s = session_with(0.2);
  try {
    s.apply_feedback("other", Verdict::kAccept, 1);
    FAIL("expected conflict");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kConflict);
  }
  CHECK(s.feedback_log().empty());
  CHECK(parse_verdict("accept") == Verdict::kAccept);
  CHECK_THROWS_AS(parse_verdict("maybe"), Error);
}

TEST_CASE("session: unclamped trajectories commute") {
  std::mt19937_64 rng(8);
  const kernel::KernelParams wide(1.0, 0.5, 1e-6, 1e6);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Verdict> events;
    for (int i = 0; i < 20; ++i) events.push_back(rng() % 2 ? Verdict::kAccept : Verdict::kReject);
    auto run = [&](const std::vector<Verdict>& ev) {
      double s = 1.0;
      for (auto v : ev) s = adapted_sigma(s, 0.1, true, v, wide);
      return s;
    };
    const double base = run(events);
    auto shuffled = events;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    CHECK(run(shuffled) == doctest::Approx(base).epsilon(1e-12));
    for (auto v : events) CHECK(adapted_sigma(0.3, 0.1, false, v, wide) == 0.3);
  }
}

TEST_CASE("session: creation defaults and clamping") {
  const auto catalog = testing::genre_map_catalog();
  const auto profile = SeedProfile::from_items({"th-1"});
  const SessionDefaults defaults;
  auto a = create_session(profile, defaults, catalog);
  CHECK(a.session.sigma() == 0.2);
  CHECK_FALSE(a.clamp_notice);
  CHECK(a.session.feedback_log().empty());
  CHECK(create_session(profile, defaults, catalog, 0.3).session.sigma() == 0.3);
  auto c = create_session(profile, defaults, catalog, 0.9);
  CHECK(c.session.sigma() == 0.5);
  REQUIRE(c.clamp_notice);
  CHECK(c.clamp_notice->find("0.5") != std::string::npos);
  CHECK(create_session(profile, defaults, catalog).session.session_id() != a.session.session_id());
  CHECK_THROWS_AS(create_session(SeedProfile::from_items({"zz"}), defaults, catalog), Error);
}

TEST_CASE("session: store round trip") {
  TempDir dir;
  SessionStore store(dir.path);
  auto s = session_with(0.2);
  s.apply_feedback("bold", Verdict::kReject, 4000);
  s.apply_feedback("tame", Verdict::kAccept, 4001);
  save_session(store, s);
  CHECK(store.exists("s1"));
  const auto loaded = load_session(store, "s1");
  CHECK(loaded == s);
  CHECK(encode_session(loaded) == encode_session(s));

  auto target = UserSession("doc", SeedProfile::from_target({0.1, 0.2, 0.3}, {"a", "b"}),
                            kernel::KernelParams(0.31), 0.05, 7);
  store.save(target);
  CHECK(store.load("doc") == target);

  try {
    store.load("missing");
    FAIL("expected not found");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNotFound);
  }
  CHECK_FALSE(store.exists("missing"));

  CHECK_FALSE(store.load_ledger());
  const std::vector<std::string> ids{"x", "y"};
  ExposureLedger ledger(ids);
  ledger.record("y", 3);
  store.save_ledger(ledger);
  CHECK(*store.load_ledger() == ledger);
}

TEST_CASE("session: corrupted record names its byte offset") {
  auto s = session_with(0.2);
  s.apply_feedback("bold", Verdict::kAccept, 4000);
  std::string text = encode_session(s);
  const auto second_line = text.find('\n') + 1;
  const auto third_line = text.find('\n', second_line) + 1;
  std::string broken = text;
  broken.insert(third_line, "{not json");
  try {
    decode_session(broken);
    FAIL("expected decode error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDecode);
    CHECK(std::string(e.what()).find("byte offset " + std::to_string(third_line)) != std::string::npos);
  }
  CHECK_THROWS_AS(decode_session(""), Error);
  CHECK_THROWS_AS(decode_session("divrec-session v9\n"), Error);

  TempDir dir;
  SessionStore store(dir.path);
  store.save(s);
  std::ofstream(dir.path / "s1.session", std::ios::app) << "garbage\n";
  bool decode = false;
  try {
    store.load("s1");
  } catch (const Error& e) {
    decode = e.code() == ErrorCode::kDecode;
  }
  CHECK(decode);
}
