#pragma once

// Per-user state for the feedback loop. Rejecting a bold recommendation
// shrinks sigma (and with it the optimal distance sqrt(3) sigma); accepting
// one grows it. Feedback on non-bold items is logged but leaves sigma alone.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "divrec/equity.hpp"
#include "divrec/kernel.hpp"
#include "divrec/recommender.hpp"

namespace divrec {

enum class Verdict { kAccept, kReject };

std::string_view verdict_name(Verdict verdict);
/// Throws Error(kDomain) for anything but "accept" or "reject".
Verdict parse_verdict(std::string_view name);

inline constexpr double kDefaultEta = 0.1;

struct SessionDefaults {
  double sigma = kernel::kDefaultSigma;
  double eta = kDefaultEta;
  double theta = kernel::kDefaultTheta;
  double sigma_min = kernel::kDefaultSigmaMin;
  double sigma_max = kernel::kDefaultSigmaMax;
};

struct RecommendationRecord {
  std::string item_id;
  double distance = 0.0;
  bool bold = false;
  double sigma = 0.0;
  std::int64_t timestamp_ms = 0;

  friend bool operator==(const RecommendationRecord&, const RecommendationRecord&) = default;
};

struct FeedbackEvent {
  std::string item_id;
  Verdict verdict = Verdict::kAccept;
  bool bold = false;
  double sigma_before = 0.0;
  double sigma_after = 0.0;
  std::int64_t timestamp_ms = 0;

  friend bool operator==(const FeedbackEvent&, const FeedbackEvent&) = default;
};

class UserSession {
 public:
  UserSession(std::string session_id, SeedProfile profile, kernel::KernelParams params,
              double eta, std::int64_t created_at_ms);

  const std::string& session_id() const noexcept { return session_id_; }
  const SeedProfile& profile() const noexcept { return profile_; }
  double sigma() const noexcept { return params_.sigma(); }
  double eta() const noexcept { return eta_; }
  const kernel::KernelParams& params() const noexcept { return params_; }
  std::int64_t created_at_ms() const noexcept { return created_at_ms_; }
  const std::vector<FeedbackEvent>& feedback_log() const noexcept { return feedback_log_; }
  const std::vector<RecommendationRecord>& history() const noexcept { return history_; }

  /// Most recent recommendation of `item_id` to this session, if any.
  const RecommendationRecord* last_recommendation(const std::string& item_id) const;

  void note_recommendations(const std::vector<Recommendation>& recs, std::int64_t now_ms);

  /// Applies the multiplicative update and appends the event. Throws
  /// Error(kConflict) when the item was never recommended to this session.
  const FeedbackEvent& apply_feedback(const std::string& item_id, Verdict verdict,
                                      std::int64_t now_ms);

  friend bool operator==(const UserSession&, const UserSession&) = default;

 private:
  friend UserSession decode_session(std::string_view text);

  std::string session_id_;
  SeedProfile profile_;
  kernel::KernelParams params_;
  double eta_;
  std::int64_t created_at_ms_;
  std::vector<FeedbackEvent> feedback_log_;
  std::vector<RecommendationRecord> history_;
};

/// sigma' = clamp(sigma * (1 - eta)) on a bold reject, clamp(sigma * (1 + eta))
/// on a bold accept, sigma otherwise.
double adapted_sigma(double sigma, double eta, bool bold, Verdict verdict,
                     const kernel::KernelParams& bounds);

struct CreatedSession {
  UserSession session;
  std::optional<std::string> clamp_notice;
};

/// Random 16-hex-digit id.
std::string fresh_session_id();

/// Uses defaults.sigma unless `sigma` is given; out-of-range requests are
/// clamped and reported in clamp_notice. Throws Error(kLookup) if the
/// profile names unknown items, Error(kDomain) for invalid defaults.
CreatedSession create_session(const SeedProfile& profile, const SessionDefaults& defaults,
                              const Catalog& catalog, std::optional<double> sigma = std::nullopt,
                              std::string session_id = {}, std::int64_t now_ms = 0);

/// Versioned line format: header line, one session record, then history and
/// feedback records in order.
std::string encode_session(const UserSession& session);
/// Throws Error(kDecode) naming the byte offset of the offending record.
UserSession decode_session(std::string_view text);

/// One file per session under a directory, plus the shared exposure ledger.
class SessionStore {
 public:
  explicit SessionStore(std::filesystem::path dir);

  const std::filesystem::path& dir() const noexcept { return dir_; }

  void save(const UserSession& session) const;
  /// Throws Error(kNotFound) for unknown ids.
  UserSession load(const std::string& session_id) const;
  bool exists(const std::string& session_id) const;

  void save_ledger(const ExposureLedger& ledger) const;
  std::optional<ExposureLedger> load_ledger() const;

 private:
  std::filesystem::path path_for(const std::string& session_id) const;

  std::filesystem::path dir_;
};

inline void save_session(const SessionStore& store, const UserSession& session) {
  store.save(session);
}
inline UserSession load_session(const SessionStore& store, const std::string& session_id) {
  return store.load(session_id);
}

}  // namespace divrec
