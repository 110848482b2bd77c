#pragma once

// Synthetic communities with known guild structure.

#include "guildtree/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace guildtree {

struct SimSpec {
  Family family = Family::probit;
  int n_species = 6;
  int n_predictors = 1;
  int n_sites = 225;          // fitting sites
  int n_holdout_sites = 0;    // extra sites flagged as holdout
  std::vector<GuildPartition> partitions;  // one per period
  std::vector<Matrix> gamma;               // per period, G_t x K
  Vector alpha;                            // J
  double phi = 0.0;     // zip: structural-zero probability
  double sigma2 = 0.5;  // zip: process variance
  std::uint64_t seed = 1;

  void validate() const;
  int n_periods() const { return static_cast<int>(partitions.size()); }
};

struct SimTruth {
  SimSpec spec;
  Matrix mu;  // n x J linear predictor
  Matrix z;   // zip latent log-intensity (empty for probit)
};

struct SimResult {
  CommunityData data;
  SimTruth truth;
};

/// Predictors are iid N(0, 1), then centred and scaled to unit sample sd.
/// Sites cycle through periods (site i is in period i mod T); the last
/// n_holdout_sites sites are flagged holdout.
SimResult simulate(const SimSpec& spec);

/// Two-guild probit design: species 1..J/2 share slope `first`, the rest `second`.
SimSpec two_guild_probit_spec(int n_species, int n_sites, double first, double second, std::uint64_t seed);

}  // namespace guildtree
