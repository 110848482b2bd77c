#pragma once

// Approximate Gibbs sampler for presence-absence data with a probit link.
//
// Auxiliary-variable formulation: aux_{i,j} ~ N(mu_{i,j}, 1) with
// y_{i,j} = 1 exactly when aux_{i,j} > 0. Each iteration refits the guild
// tree to the current auxiliary values and redraws gamma given that tree.

#include "guildtree/chain_config.hpp"
#include "guildtree/regression.hpp"

#include <vector>

namespace guildtree {

struct ProbitState {
  Matrix aux;  // n x J
  RegressionState regression;
  long learner_warnings = 0;
};

/// alpha_j = probit(prevalence clamped to [0.01, 0.99]), one guild, gamma = 0.
ProbitState initial_probit_state(const CommunityData& data);

struct ProbitStepOptions {
  bool check_invariants = false;
  GuildUpdateOptions guilds;
};

/// Throws InvalidInput naming the first cell whose sign disagrees with y.
void check_probit_invariants(const ProbitState& state, const CommunityData& data);

void gibbs_step_probit(ProbitState& state, const CommunityData& data, const ProbitPriors& priors,
                       const std::vector<LearnerConfig>& learners, Rng& rng, const ProbitStepOptions& options = {});

PosteriorDraw snapshot_probit(const ProbitState& state);

std::vector<PosteriorDraw> run_chain_probit(const CommunityData& data, const ChainConfig& cfg, Rng& rng,
                                            const ChainCallbacks<ProbitState>& callbacks = {},
                                            const Checkpoint<ProbitState>* resume = nullptr,
                                            const GuildUpdateOptions& guild_options = {});

}  // namespace guildtree
