#include "divrec/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "divrec/error.hpp"

namespace divrec::kernel {
namespace {

// 2 e^{-3/2}: magnitude of psi at its negative lobe minimum t = sqrt(3) sigma.
const double kScoreScale = 2.0 * std::exp(-1.5);

void require_sigma(double sigma) {
  if (!std::isfinite(sigma) || sigma <= 0.0) {
    throw Error(ErrorCode::kDomain, "sigma must be finite and > 0, got " + std::to_string(sigma));
  }
}

void require_distance(double d) {
  if (!std::isfinite(d) || d < 0.0) {
    throw Error(ErrorCode::kDomain, "distance must be finite and >= 0, got " + std::to_string(d));
  }
}

}  // namespace

KernelParams::KernelParams(double sigma, double theta, double sigma_min, double sigma_max)
    : sigma_(sigma), theta_(theta), sigma_min_(sigma_min), sigma_max_(sigma_max) {
  if (!(std::isfinite(sigma_min) && std::isfinite(sigma_max) && sigma_min > 0.0 &&
        sigma_min <= sigma_max)) {
    throw Error(ErrorCode::kDomain, "sigma bounds must satisfy 0 < sigma_min <= sigma_max");
  }
  if (!(std::isfinite(sigma) && sigma >= sigma_min && sigma <= sigma_max)) {
    throw Error(ErrorCode::kDomain, "sigma " + std::to_string(sigma) + " outside [" +
                                        std::to_string(sigma_min) + ", " +
                                        std::to_string(sigma_max) + "]");
  }
  if (!(std::isfinite(theta) && theta > 0.0 && theta <= 1.0)) {
    throw Error(ErrorCode::kDomain, "theta must lie in (0, 1], got " + std::to_string(theta));
  }
}

double KernelParams::clamp(double sigma) const noexcept {
  return std::clamp(sigma, sigma_min_, sigma_max_);
}

KernelParams KernelParams::with_sigma(double sigma) const {
  require_sigma(sigma);
  return KernelParams(clamp(sigma), theta_, sigma_min_, sigma_max_);
}

std::string_view band_name(Band band) {
  switch (band) {
    case Band::kSimilar: return "similar";
    case Band::kNear: return "near";
    case Band::kOptimal: return "optimal";
    case Band::kRemote: return "remote";
  }
  return "unknown";
}

std::string_view mode_name(RankingMode mode) {
  return mode == RankingMode::kDiverse ? "diverse" : "similar";
}

RankingMode parse_mode(std::string_view name) {
  if (name == "diverse") return RankingMode::kDiverse;
  if (name == "similar") return RankingMode::kSimilar;
  throw Error(ErrorCode::kDomain, "unknown mode '" + std::string(name) + "'");
}

double mode_score(RankingMode mode, double d, double sigma) {
  if (mode == RankingMode::kDiverse) return diversity_score(d, sigma);
  require_distance(d);
  return 1.0 - d;
}

double mexican_hat(double t, double sigma) {
  require_sigma(sigma);
  if (!std::isfinite(t)) throw Error(ErrorCode::kDomain, "t must be finite");
  const double r2 = (t / sigma) * (t / sigma);
  return (1.0 - r2) * std::exp(-0.5 * r2);
}

double diversity_score(double d, double sigma) {
  require_distance(d);
  return -mexican_hat(d, sigma) / kScoreScale;
}

double optimal_distance(double sigma) {
  require_sigma(sigma);
  return std::numbers::sqrt3 * sigma;
}

double sigma_for_optimal(double d_star) {
  if (!std::isfinite(d_star) || d_star <= 0.0) {
    throw Error(ErrorCode::kDomain, "optimal distance must be finite and > 0");
  }
  return d_star / std::numbers::sqrt3;
}

Band band_classify(double d, const KernelParams& params) {
  require_distance(d);
  const double sigma = params.sigma();
  if (d < sigma) return Band::kSimilar;
  if (diversity_score(d, sigma) >= params.theta()) return Band::kOptimal;
  return d < optimal_distance(sigma) ? Band::kNear : Band::kRemote;
}

}  // namespace divrec::kernel
