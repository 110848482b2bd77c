#include "guildtree/simulate.hpp"

#include "guildtree/design.hpp"
#include "guildtree/random.hpp"
#include "guildtree/special.hpp"

#include <cmath>

namespace guildtree {

void SimSpec::validate() const {
  if (n_species < 1 || n_predictors < 1 || n_sites < 1 || n_holdout_sites < 0)
    throw InvalidInput("simulation dimensions must be positive");
  if (partitions.empty()) throw InvalidInput("simulation needs at least one period partition");
  if (gamma.size() != partitions.size()) throw InvalidInput("one gamma matrix per period is required");
  for (std::size_t t = 0; t < partitions.size(); ++t) {
    if (partitions[t].n_species() != n_species) throw InvalidInput("partition species count mismatch");
    if (gamma[t].rows() != partitions[t].n_guilds() || gamma[t].cols() != n_predictors)
      throw InvalidInput("gamma must be G x K for every period");
  }
  if (alpha.size() != n_species) throw InvalidInput("alpha must have one entry per species");
  if (family == Family::zip && (!(phi >= 0.0 && phi <= 1.0) || !(sigma2 > 0.0)))
    throw InvalidInput("zip simulation needs phi in [0, 1] and sigma2 > 0");
}

SimResult simulate(const SimSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const int n = spec.n_sites + spec.n_holdout_sites;
  const int j_count = spec.n_species;
  const int k = spec.n_predictors;
  const int n_periods = spec.n_periods();

  CommunityData data;
  data.predictors.resize(n, k);
  for (int c = 0; c < k; ++c)
    for (int i = 0; i < n; ++i) data.predictors(i, c) = rng.normal();
  for (int c = 0; c < k; ++c) {
    auto col = data.predictors.col(c);
    const double mean = col.mean();
    col.array() -= mean;
    const double sd = std::sqrt(col.squaredNorm() / (n - 1.0));
    if (sd > 0.0) col /= sd;
  }
  for (int j = 0; j < j_count; ++j) data.species_names.push_back("sp" + std::to_string(j + 1));
  for (int c = 0; c < k; ++c) data.predictor_names.push_back("x" + std::to_string(c + 1));
  if (n_periods > 1)
    for (int i = 0; i < n; ++i) data.period.push_back(i % n_periods);
  if (spec.n_holdout_sites > 0)
    for (int i = 0; i < n; ++i) data.holdout.push_back(i >= spec.n_sites);

  SimTruth truth;
  truth.spec = spec;
  truth.mu.resize(n, j_count);
  for (int i = 0; i < n; ++i) {
    const int t = data.period_of(i);
    truth.mu.row(i) = (spec.alpha + expand_guild_design(data.predictors.row(i).transpose(), spec.partitions[t],
                                                        spec.gamma[t].reshaped()))
                          .transpose();
  }

  data.responses.resize(n, j_count);
  if (spec.family == Family::probit) {
    for (int j = 0; j < j_count; ++j)
      for (int i = 0; i < n; ++i) data.responses(i, j) = rng.bernoulli(normal_cdf(truth.mu(i, j))) ? 1 : 0;
  } else {
    truth.z.resize(n, j_count);
    const double sd = std::sqrt(spec.sigma2);
    for (int j = 0; j < j_count; ++j)
      for (int i = 0; i < n; ++i) {
        truth.z(i, j) = rng.normal(truth.mu(i, j), sd);
        const bool structural_zero = rng.bernoulli(spec.phi);
        const long count = rng.poisson(std::exp(truth.z(i, j)));
        data.responses(i, j) = structural_zero ? 0 : static_cast<int>(count);
      }
  }
  return SimResult{std::move(data), std::move(truth)};
}

SimSpec two_guild_probit_spec(int n_species, int n_sites, double first, double second, std::uint64_t seed) {
  SimSpec spec;
  spec.family = Family::probit;
  spec.n_species = n_species;
  spec.n_predictors = 1;
  spec.n_sites = n_sites;
  std::vector<int> membership(n_species);
  for (int j = 0; j < n_species; ++j) membership[j] = j < n_species / 2 ? 0 : 1;
  spec.partitions = {GuildPartition(membership)};
  Matrix gamma(2, 1);
  gamma << first, second;
  spec.gamma = {gamma};
  spec.alpha = Vector::Zero(n_species);
  spec.seed = seed;
  return spec;
}

}  // namespace guildtree
