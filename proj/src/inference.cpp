#include "guildtree/inference.hpp"

#include "guildtree/design.hpp"
#include "guildtree/regression.hpp"
#include "guildtree/special.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

namespace guildtree {

namespace {

void require_draws(Draws draws, std::size_t minimum, const char* what) {
  if (draws.size() < minimum)
    throw InvalidInput(std::string(what) + " needs at least " + std::to_string(minimum) + " draw(s)");
}

const GuildPartition& partition_at(const PosteriorDraw& d, int period) {
  return d.coefficients.partitions.at(static_cast<std::size_t>(period));
}

}  // namespace

std::map<int, double> guild_count_distribution(Draws draws, int period) {
  require_draws(draws, 1, "guild_count_distribution");
  std::map<int, double> pmf;
  for (const auto& d : draws) pmf[partition_at(d, period).n_guilds()] += 1.0;
  for (auto& [g, p] : pmf) p /= static_cast<double>(draws.size());
  return pmf;
}

Matrix cooccurrence_matrix(Draws draws, int period) {
  require_draws(draws, 1, "cooccurrence_matrix");
  const int j_count = partition_at(draws.front(), period).n_species();
  Matrix c = Matrix::Zero(j_count, j_count);
  for (const auto& d : draws) {
    const auto& z = partition_at(d, period);
    for (int a = 0; a < j_count; ++a)
      for (int b = 0; b < j_count; ++b)
        if (z.guild_of(a) == z.guild_of(b)) c(a, b) += 1.0;
  }
  return c / static_cast<double>(draws.size());
}

std::map<std::string, double> partition_frequencies(Draws draws, int period) {
  require_draws(draws, 1, "partition_frequencies");
  std::map<std::string, double> freq;
  for (const auto& d : draws) freq[partition_at(d, period).encode()] += 1.0;
  for (auto& [k, v] : freq) v /= static_cast<double>(draws.size());
  return freq;
}

ModeTree mode_tree(Draws draws, int period) {
  require_draws(draws, 1, "mode_tree");
  std::unordered_map<std::string, long> counts;
  std::vector<std::pair<std::string, std::size_t>> first_seen;
  for (std::size_t s = 0; s < draws.size(); ++s) {
    const std::string key = partition_at(draws[s], period).encode();
    if (counts[key]++ == 0) first_seen.emplace_back(key, s);
  }
  std::size_t best = 0;
  long best_count = -1;
  for (const auto& [key, index] : first_seen) {
    if (counts[key] > best_count) {
      best_count = counts[key];
      best = index;
    }
  }
  ModeTree mode;
  mode.partition = partition_at(draws[best], period).canonical();
  const auto& trees = draws[best].trees;
  mode.tree = static_cast<std::size_t>(period) < trees.size() ? trees[period] : tree_from_partition(mode.partition);
  mode.probability = static_cast<double>(best_count) / static_cast<double>(draws.size());
  return mode;
}

Summary summarize(std::vector<double> values) {
  Summary s;
  if (values.empty()) return s;
  const double n = static_cast<double>(values.size());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.sd = values.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  std::sort(values.begin(), values.end());
  const auto quantile = [&](double p) {
    const double h = (n - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
  };
  s.q025 = quantile(0.025);
  s.q50 = quantile(0.5);
  s.q975 = quantile(0.975);
  return s;
}

double batch_means_mcse(std::span<const double> values, int batches) {
  const auto n = static_cast<long>(values.size());
  batches = static_cast<int>(std::min<long>(batches, n / 2));
  if (batches < 2) return std::numeric_limits<double>::infinity();
  const long size = n / batches;
  std::vector<double> means(batches);
  for (int b = 0; b < batches; ++b) {
    const auto first = values.begin() + (n - static_cast<long>(batches) * size) + b * size;
    means[b] = std::accumulate(first, first + size, 0.0) / static_cast<double>(size);
  }
  const double grand = std::accumulate(means.begin(), means.end(), 0.0) / batches;
  double ss = 0.0;
  for (double m : means) ss += (m - grand) * (m - grand);
  return std::sqrt(ss / (batches - 1.0) / batches);
}

std::vector<double> species_coefficient_trace(Draws draws, int period, int species, int predictor) {
  std::vector<double> out;
  out.reserve(draws.size());
  for (const auto& d : draws) {
    const auto& z = partition_at(d, period);
    out.push_back(d.coefficients.gamma[period](z.guild_of(species), predictor));
  }
  return out;
}

CoefficientPosteriors coefficient_posteriors(Draws draws) {
  require_draws(draws, 1, "coefficient_posteriors");
  const auto& first = draws.front().coefficients;
  const int j_count = static_cast<int>(first.alpha.size());
  const int n_periods = static_cast<int>(first.partitions.size());
  const int k = static_cast<int>(first.gamma.front().cols());

  CoefficientPosteriors out;
  for (int j = 0; j < j_count; ++j) {
    std::vector<double> v;
    for (const auto& d : draws) v.push_back(d.coefficients.alpha(j));
    out.intercepts.push_back(summarize(std::move(v)));
  }
  for (int t = 0; t < n_periods; ++t) {
    std::vector<std::vector<Summary>> per_species(j_count);
    for (int j = 0; j < j_count; ++j)
      for (int c = 0; c < k; ++c) per_species[j].push_back(summarize(species_coefficient_trace(draws, t, j, c)));
    out.species.push_back(std::move(per_species));

    const ModeTree mode = mode_tree(draws, t);
    const auto groups = mode.partition.groups();
    std::vector<std::vector<std::vector<double>>> values(groups.size(), std::vector<std::vector<double>>(k));
    long used = 0;
    for (const auto& d : draws) {
      const auto& z = partition_at(d, t);
      if (!z.same_grouping(mode.partition)) continue;
      ++used;
      const auto relabel = z.canonical_relabel();
      for (int g = 0; g < z.n_guilds(); ++g)
        for (int c = 0; c < k; ++c) values[relabel[g]][c].push_back(d.coefficients.gamma[t](g, c));
    }
    std::vector<GuildCoefficientSummary> guilds;
    for (std::size_t g = 0; g < groups.size(); ++g) {
      GuildCoefficientSummary gs;
      gs.members = groups[g];
      for (int c = 0; c < k; ++c) gs.by_predictor.push_back(summarize(std::move(values[g][c])));
      guilds.push_back(std::move(gs));
    }
    out.mode_guilds.push_back(std::move(guilds));
    out.mode_guild_draws.push_back(used);
  }
  return out;
}

namespace {

double log_mean_exp(const Eigen::ArrayXd& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v - m).exp().mean());
}

}  // namespace

Vector pointwise_log_likelihood(const PosteriorDraw& draw, const CommunityData& data, const ScoreOptions& options,
                                Rng& rng) {
  RegressionState reg;
  reg.alpha = draw.coefficients.alpha;
  reg.partitions = draw.coefficients.partitions;
  reg.gamma = draw.coefficients.gamma;
  if (data.n_periods() > static_cast<int>(reg.partitions.size()))
    throw InvalidInput("data has more periods than the posterior draws");
  const Matrix mu = linear_predictor(data, reg);
  const int n = data.n_sites();
  const int j_count = data.n_species();
  Vector ll(static_cast<Eigen::Index>(n) * j_count);
  if (options.family == Family::probit) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < j_count; ++j)
        ll(i * j_count + j) = data.responses(i, j) == 1 ? log_normal_cdf(mu(i, j)) : log_normal_cdf(-mu(i, j));
    return ll;
  }
  const double sd = std::sqrt(draw.sigma2);
  const double phi = draw.phi;
  Eigen::ArrayXd terms(options.latent_draws);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < j_count; ++j) {
      const long y = data.responses(i, j);
      for (int l = 0; l < options.latent_draws; ++l) terms(l) = poisson_log_pmf(y, rng.normal(mu(i, j), sd));
      const double log_poisson = log_mean_exp(terms);
      double value;
      if (y > 0)
        value = std::log1p(-phi) + log_poisson;
      else
        value = std::log(phi + (1.0 - phi) * std::exp(log_poisson));
      ll(i * j_count + j) = value;
    }
  }
  return ll;
}

namespace {

// Streaming per-cell log-mean-exp and Welford variance of log likelihoods.
class CellAccumulator {
 public:
  explicit CellAccumulator(Eigen::Index cells)
      : max_(Vector::Constant(cells, -std::numeric_limits<double>::infinity())),
        sum_(Vector::Zero(cells)),
        mean_(Vector::Zero(cells)),
        m2_(Vector::Zero(cells)) {}

  void add(const Vector& ll) {
    ++count_;
    for (Eigen::Index c = 0; c < ll.size(); ++c) {
      const double v = ll(c);
      if (v > max_(c)) {
        sum_(c) = sum_(c) * std::exp(max_(c) - v) + 1.0;
        max_(c) = v;
      } else {
        sum_(c) += std::exp(v - max_(c));
      }
      const double delta = v - mean_(c);
      mean_(c) += delta / static_cast<double>(count_);
      m2_(c) += delta * (v - mean_(c));
    }
  }

  double lppd() const {
    const double log_count = std::log(static_cast<double>(count_));
    double total = 0.0;
    for (Eigen::Index c = 0; c < max_.size(); ++c) total += max_(c) + std::log(sum_(c)) - log_count;
    return total;
  }

  double p_eff() const { return m2_.sum() / static_cast<double>(count_ - 1); }

 private:
  Vector max_;
  Vector sum_;
  Vector mean_;
  Vector m2_;
  long count_ = 0;
};

}  // namespace

Waic waic(Draws draws, const CommunityData& data, const ScoreOptions& options) {
  require_draws(draws, 2, "waic");
  Rng rng(options.seed);
  CellAccumulator acc(static_cast<Eigen::Index>(data.n_sites()) * data.n_species());
  for (const auto& d : draws) acc.add(pointwise_log_likelihood(d, data, options, rng));
  Waic out;
  out.lppd = acc.lppd();
  out.p_eff = acc.p_eff();
  out.waic = -2.0 * (out.lppd - out.p_eff);
  return out;
}

double lppd_holdout(Draws draws, const CommunityData& holdout, const ScoreOptions& options) {
  if (holdout.n_sites() == 0) throw InvalidInput("holdout data is empty");
  require_draws(draws, 1, "lppd_holdout");
  Rng rng(options.seed);
  CellAccumulator acc(static_cast<Eigen::Index>(holdout.n_sites()) * holdout.n_species());
  for (const auto& d : draws) acc.add(pointwise_log_likelihood(d, holdout, options, rng));
  return -2.0 * acc.lppd();
}

PosteriorSummary summarize_posterior(Draws draws) {
  require_draws(draws, 1, "summarize_posterior");
  PosteriorSummary out;
  const int n_periods = draws.front().n_periods();
  for (int t = 0; t < n_periods; ++t) {
    out.guild_count_pmf.push_back(guild_count_distribution(draws, t));
    out.cooccurrence.push_back(cooccurrence_matrix(draws, t));
    out.mode.push_back(mode_tree(draws, t));
  }
  out.coefficients = coefficient_posteriors(draws);
  return out;
}

}  // namespace guildtree
