#pragma once

// Random number generation and the small set of distributions the samplers use.

#include <cstdint>
#include <random>
#include <string>

namespace guildtree {

/// Seeded generator whose full state (including the cached normal deviate)
/// can be serialized, so a checkpointed chain resumes bit-identically.
class Rng {
 public:
  using result_type = std::mt19937_64::result_type;

  explicit Rng(std::uint64_t seed = 1);

  /// Independent stream for chain `stream` of a run seeded with `seed`.
  static Rng stream(std::uint64_t seed, std::uint64_t stream);

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  double uniform();  // (0, 1)
  double normal() { return normal_(engine_); }
  double normal(double mean, double sd) { return mean + sd * normal_(engine_); }
  bool bernoulli(double p) { return uniform() < p; }
  double gamma(double shape, double scale);
  double beta(double a, double b);
  /// Inverse-gamma with density proportional to x^{-shape-1} exp(-scale / x).
  double inverse_gamma(double shape, double scale);
  long poisson(double mean);

  std::string serialize() const;
  static Rng deserialize(const std::string& text);

  bool operator==(const Rng& other) const {
    return engine_ == other.engine_ && normal_ == other.normal_;
  }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

enum class TruncationSide { positive, negative };

/// Draw from N(mean, sd^2) restricted to (0, inf) or (-inf, 0).
///
/// Inverse-CDF sampling; when the truncation point lies more than five
/// standard deviations from the mean the far-tail case switches to
/// exponential rejection and the near-certain case to plain rejection.
double sample_truncated_normal(double mean, double sd, TruncationSide side, Rng& rng);

}  // namespace guildtree
