#pragma once

// Mexican-hat (Ricker) wavelet and the optimal-diversity score built on it.
//
// With the unit-peak wavelet psi(t) = (1 - t^2/s^2) exp(-t^2 / (2 s^2)), the
// diversity score is g(d) = -psi(d) / (2 e^{-3/2}). It is negative below
// d = s (too similar), zero at s, peaks at exactly 1 for d* = sqrt(3) s and
// decays back towards zero for remote items. Range: [-e^{3/2}/2, 1].

#include <string_view>

namespace divrec::kernel {

inline constexpr double kDefaultSigma = 0.2;
inline constexpr double kDefaultTheta = 0.5;
inline constexpr double kDefaultSigmaMin = 0.05;
inline constexpr double kDefaultSigmaMax = 0.5;

/// Diversity radius and optimal-band threshold. sigma is in normalized
/// distance units (distances live in [0, 1]).
class KernelParams {
 public:
  KernelParams() = default;
  /// Throws Error(kDomain) unless sigma_min <= sigma <= sigma_max,
  /// 0 < sigma_min <= sigma_max and theta in (0, 1].
  explicit KernelParams(double sigma, double theta = kDefaultTheta,
                        double sigma_min = kDefaultSigmaMin,
                        double sigma_max = kDefaultSigmaMax);

  double sigma() const noexcept { return sigma_; }
  double theta() const noexcept { return theta_; }
  double sigma_min() const noexcept { return sigma_min_; }
  double sigma_max() const noexcept { return sigma_max_; }

  double clamp(double sigma) const noexcept;

  /// Copy with a new sigma, clamped into bounds.
  KernelParams with_sigma(double sigma) const;

  friend bool operator==(const KernelParams&, const KernelParams&) = default;

 private:
  double sigma_ = kDefaultSigma;
  double theta_ = kDefaultTheta;
  double sigma_min_ = kDefaultSigmaMin;
  double sigma_max_ = kDefaultSigmaMax;
};

enum class Band { kSimilar, kNear, kOptimal, kRemote };

/// Diverse ranks by diversity_score(d); similar ranks by 1 - d.
enum class RankingMode { kDiverse, kSimilar };

std::string_view mode_name(RankingMode mode);
/// Throws Error(kDomain) for anything but "diverse" or "similar".
RankingMode parse_mode(std::string_view name);

/// Raw score of an item at distance d under `mode`.
double mode_score(RankingMode mode, double d, double sigma);

std::string_view band_name(Band band);

double mexican_hat(double t, double sigma);

double diversity_score(double d, double sigma);

/// sqrt(3) * sigma, the argmax of diversity_score.
double optimal_distance(double sigma);

double sigma_for_optimal(double d_star);

Band band_classify(double d, const KernelParams& params);

}  // namespace divrec::kernel
