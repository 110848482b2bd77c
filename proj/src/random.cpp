#include "guildtree/random.hpp"

#include "guildtree/special.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace guildtree {

Rng::Rng(std::uint64_t seed) : engine_(seed) {}

Rng Rng::stream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  Rng rng;
  rng.engine_.seed(seq);
  return rng;
}

double Rng::uniform() {
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::gamma(double shape, double scale) {
  return std::gamma_distribution<double>(shape, scale)(engine_);
}

double Rng::beta(double a, double b) {
  const double x = gamma(a, 1.0);
  const double y = gamma(b, 1.0);
  return x / (x + y);
}

double Rng::inverse_gamma(double shape, double scale) { return 1.0 / gamma(shape, 1.0 / scale); }

long Rng::poisson(double mean) {
  if (mean <= 0.0) return 0;
  return std::poisson_distribution<long>(mean)(engine_);
}

std::string Rng::serialize() const {
  std::ostringstream os;
  os << engine_ << ' ' << normal_;
  return os.str();
}

Rng Rng::deserialize(const std::string& text) {
  Rng rng;
  std::istringstream is(text);
  is >> rng.engine_ >> rng.normal_;
  if (!is) throw std::runtime_error("corrupt generator state");
  return rng;
}

namespace {

constexpr double kTailSwitch = 5.0;

// Standard normal restricted to (lower, inf).
double standard_lower_truncated(double lower, Rng& rng) {
  if (lower > kTailSwitch) {
    const double rate = 0.5 * (lower + std::sqrt(lower * lower + 4.0));
    while (true) {
      const double z = lower - std::log(rng.uniform()) / rate;
      const double d = z - rate;
      if (rng.uniform() <= std::exp(-0.5 * d * d)) return z;
    }
  }
  if (lower < -kTailSwitch) {
    while (true) {
      const double z = rng.normal();
      if (z > lower) return z;
    }
  }
  if (lower < 0.0) {
    const double lo = normal_cdf(lower);
    return normal_quantile(lo + rng.uniform() * (1.0 - lo));
  }
  return -normal_quantile(rng.uniform() * normal_cdf(-lower));
}

}  // namespace

double sample_truncated_normal(double mean, double sd, TruncationSide side, Rng& rng) {
  if (!(sd > 0.0)) throw std::invalid_argument("truncated normal needs sd > 0");
  const double m = side == TruncationSide::positive ? mean : -mean;
  double x = m + sd * standard_lower_truncated(-m / sd, rng);
  if (x <= 0.0) x = std::numeric_limits<double>::min();
  return side == TruncationSide::positive ? x : -x;
}

}  // namespace guildtree
