#include "divrec/session.hpp"

#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "divrec/error.hpp"

namespace divrec {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr std::string_view kHeader = "divrec-session v1";

bool valid_session_id(const std::string& id) {
  if (id.empty() || id.size() > 128) return false;
  for (char c : id) {
    const bool ok = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    c == '-' || c == '_';
    if (!ok) return false;
  }
  return true;
}

void require_eta(double eta) {
  if (!(eta > 0.0 && eta < 1.0)) throw Error(ErrorCode::kDomain, "eta must lie in (0, 1)");
}

ordered_json profile_json(const SeedProfile& p) {
  if (p.item_mode()) return ordered_json{{"seed_ids", p.seed_ids()}};
  return ordered_json{{"target", p.target()},
                      {"exclude", std::vector<std::string>(p.excluded().begin(),
                                                           p.excluded().end())}};
}

SeedProfile profile_from_json(const json& j) {
  if (j.contains("seed_ids")) {
    return SeedProfile::from_items(j.at("seed_ids").get<std::vector<std::string>>());
  }
  auto exclude = j.at("exclude").get<std::vector<std::string>>();
  return SeedProfile::from_target(j.at("target").get<Vector>(),
                                  std::set<std::string>(exclude.begin(), exclude.end()));
}

}  // namespace

std::string_view verdict_name(Verdict verdict) {
  return verdict == Verdict::kAccept ? "accept" : "reject";
}

Verdict parse_verdict(std::string_view name) {
  if (name == "accept") return Verdict::kAccept;
  if (name == "reject") return Verdict::kReject;
  throw Error(ErrorCode::kDomain, "verdict must be 'accept' or 'reject'");
}

double adapted_sigma(double sigma, double eta, bool bold, Verdict verdict,
                     const kernel::KernelParams& bounds) {
  if (!bold) return sigma;
  const double factor = verdict == Verdict::kReject ? 1.0 - eta : 1.0 + eta;
  return bounds.clamp(sigma * factor);
}

UserSession::UserSession(std::string session_id, SeedProfile profile,
                         kernel::KernelParams params, double eta, std::int64_t created_at_ms)
    : session_id_(std::move(session_id)),
      profile_(std::move(profile)),
      params_(params),
      eta_(eta),
      created_at_ms_(created_at_ms) {
  if (!valid_session_id(session_id_)) {
    throw Error(ErrorCode::kDomain, "session id must be 1-128 characters of [A-Za-z0-9_-]");
  }
  require_eta(eta);
}

const RecommendationRecord* UserSession::last_recommendation(const std::string& item_id) const {
  for (auto it = history_.rbegin(); it != history_.rend(); ++it) {
    if (it->item_id == item_id) return &*it;
  }
  return nullptr;
}

void UserSession::note_recommendations(const std::vector<Recommendation>& recs,
                                       std::int64_t now_ms) {
  for (const auto& r : recs) {
    history_.push_back({r.item_id, r.distance, r.bold, params_.sigma(), now_ms});
  }
}

const FeedbackEvent& UserSession::apply_feedback(const std::string& item_id, Verdict verdict,
                                                 std::int64_t now_ms) {
  const RecommendationRecord* rec = last_recommendation(item_id);
  if (!rec) {
    throw Error(ErrorCode::kConflict,
                "item '" + item_id + "' was never recommended to session " + session_id_);
  }
  const double before = params_.sigma();
  const double after = adapted_sigma(before, eta_, rec->bold, verdict, params_);
  params_ = params_.with_sigma(after);
  feedback_log_.push_back({item_id, verdict, rec->bold, before, after, now_ms});
  return feedback_log_.back();
}

std::string fresh_session_id() {
  static thread_local std::mt19937_64 rng{std::random_device{}()};
  std::ostringstream out;
  out << std::hex;
  out.width(16);
  out.fill('0');
  out << rng();
  return out.str();
}

CreatedSession create_session(const SeedProfile& profile, const SessionDefaults& defaults,
                              const Catalog& catalog, std::optional<double> sigma,
                              std::string session_id, std::int64_t now_ms) {
  profile.validate(catalog);
  if (session_id.empty()) session_id = fresh_session_id();
  const kernel::KernelParams bounds(kernel::KernelParams(defaults.sigma, defaults.theta,
                                                         defaults.sigma_min, defaults.sigma_max));
  std::optional<std::string> notice;
  double wanted = sigma.value_or(defaults.sigma);
  if (!std::isfinite(wanted) || wanted <= 0.0) {
    throw Error(ErrorCode::kDomain, "sigma must be finite and > 0");
  }
  const double clamped = bounds.clamp(wanted);
  if (clamped != wanted) {
    std::ostringstream msg;
    msg << "sigma " << wanted << " clamped to " << clamped;
    notice = msg.str();
  }
  UserSession s(std::move(session_id), profile, bounds.with_sigma(clamped), defaults.eta, now_ms);
  return {std::move(s), std::move(notice)};
}

std::string encode_session(const UserSession& s) {
  std::ostringstream out;
  out << kHeader << '\n';
  const auto& p = s.params();
  out << ordered_json{{"type", "session"},
                      {"session_id", s.session_id()},
                      {"created_at", s.created_at_ms()},
                      {"sigma", p.sigma()},
                      {"eta", s.eta()},
                      {"theta", p.theta()},
                      {"sigma_min", p.sigma_min()},
                      {"sigma_max", p.sigma_max()},
                      {"profile", profile_json(s.profile())}}
             .dump()
      << '\n';
  for (const auto& r : s.history()) {
    out << ordered_json{{"type", "recommended"}, {"item_id", r.item_id},
                        {"distance", r.distance},  {"bold", r.bold},
                        {"sigma", r.sigma},        {"timestamp", r.timestamp_ms}}
               .dump()
        << '\n';
  }
  for (const auto& f : s.feedback_log()) {
    out << ordered_json{{"type", "feedback"},
                        {"item_id", f.item_id},
                        {"verdict", verdict_name(f.verdict)},
                        {"bold", f.bold},
                        {"sigma_before", f.sigma_before},
                        {"sigma_after", f.sigma_after},
                        {"timestamp", f.timestamp_ms}}
               .dump()
        << '\n';
  }
  return out.str();
}

UserSession decode_session(std::string_view text) {
  std::size_t offset = 0;
  auto next_line = [&](std::string_view& line) {
    if (offset >= text.size()) return false;
    const auto end = text.find('\n', offset);
    line = text.substr(offset, end == std::string_view::npos ? std::string_view::npos
                                                              : end - offset);
    return true;
  };
  auto advance = [&](std::string_view line) { offset += line.size() + 1; };
  auto fail = [&](std::size_t at, const std::string& why) {
    return Error(ErrorCode::kDecode,
                 "session record at byte offset " + std::to_string(at) + ": " + why);
  };

  std::string_view line;
  if (!next_line(line) || line != kHeader) throw fail(0, "missing or unsupported header");
  advance(line);

  std::optional<UserSession> session;
  while (next_line(line)) {
    const std::size_t at = offset;
    advance(line);
    if (line.empty()) continue;
    const json rec = json::parse(line, nullptr, false);
    if (rec.is_discarded() || !rec.is_object() || !rec.contains("type") ||
        !rec["type"].is_string()) {
      throw fail(at, "not a typed JSON record");
    }
    try {
      const auto type = rec["type"].get<std::string>();
      if (type == "session") {
        if (session) throw fail(at, "duplicate session record");
        kernel::KernelParams params(rec.at("sigma").get<double>(), rec.at("theta").get<double>(),
                                    rec.at("sigma_min").get<double>(),
                                    rec.at("sigma_max").get<double>());
        session.emplace(rec.at("session_id").get<std::string>(),
                        profile_from_json(rec.at("profile")), params,
                        rec.at("eta").get<double>(), rec.at("created_at").get<std::int64_t>());
      } else if (!session) {
        throw fail(at, "record before the session record");
      } else if (type == "recommended") {
        session->history_.push_back(
            {rec.at("item_id").get<std::string>(), rec.at("distance").get<double>(),
             rec.at("bold").get<bool>(), rec.at("sigma").get<double>(),
             rec.at("timestamp").get<std::int64_t>()});
      } else if (type == "feedback") {
        session->feedback_log_.push_back(
            {rec.at("item_id").get<std::string>(),
             parse_verdict(rec.at("verdict").get<std::string>()), rec.at("bold").get<bool>(),
             rec.at("sigma_before").get<double>(), rec.at("sigma_after").get<double>(),
             rec.at("timestamp").get<std::int64_t>()});
      } else {
        throw fail(at, "unknown record type '" + type + "'");
      }
    } catch (const json::exception& e) {
      throw fail(at, e.what());
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kDecode) throw;
      throw fail(at, e.what());
    }
  }
  if (!session) throw fail(offset, "no session record");
  return std::move(*session);
}

SessionStore::SessionStore(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec || !std::filesystem::is_directory(dir_)) {
    throw Error(ErrorCode::kIo, "cannot use session store " + dir_.string());
  }
}

std::filesystem::path SessionStore::path_for(const std::string& session_id) const {
  if (!valid_session_id(session_id)) {
    throw Error(ErrorCode::kNotFound, "no session '" + session_id + "'");
  }
  return dir_ / (session_id + ".session");
}

namespace {

void write_atomically(const std::filesystem::path& path, const std::string& content) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << content;
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot replace " + path.string() + ": " + ec.message());
}

}  // namespace

void SessionStore::save(const UserSession& session) const {
  write_atomically(path_for(session.session_id()), encode_session(session));
}

bool SessionStore::exists(const std::string& session_id) const {
  return valid_session_id(session_id) && std::filesystem::exists(path_for(session_id));
}

UserSession SessionStore::load(const std::string& session_id) const {
  const auto path = path_for(session_id);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kNotFound, "no session '" + session_id + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return decode_session(buf.str());
}

void SessionStore::save_ledger(const ExposureLedger& ledger) const {
  std::ostringstream out;
  write_ledger(out, ledger);
  write_atomically(dir_ / "exposure.ledger", out.str());
}

std::optional<ExposureLedger> SessionStore::load_ledger() const {
  std::ifstream in(dir_ / "exposure.ledger", std::ios::binary);
  if (!in) return std::nullopt;
  return read_ledger(in);
}

}  // namespace divrec
