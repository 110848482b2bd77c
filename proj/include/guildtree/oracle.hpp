#pragma once

// Exact small-instance references for the approximate sampler: Bayesian
// model averaging over every species partition the tree process can reach,
// and a fixed-structure conjugate probit sampler with Chib marginal
// likelihoods.

#include "guildtree/chain_config.hpp"
#include "guildtree/tree_prior.hpp"
#include "guildtree/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace guildtree {

struct PartitionEnumeration {
  std::vector<GuildPartition> partitions;  // canonical guild order
  std::vector<double> prior_weights;       // sum to 1
};

/// Partitions reachable by recursive binary splitting, weighted by the
/// probability the tree process generates them. Refuses J > cap.
PartitionEnumeration enumerate_partitions(int n_species, const TreePriorConfig& prior = {}, int cap = 6);

struct ReferenceOptions {
  long iterations = 6000;
  long burn = 1000;
  std::uint64_t seed = 11;
};

/// Output of the fixed-partition probit sampler (learner bypassed).
struct ReferenceFit {
  GuildPartition partition;
  Matrix alpha_draws;  // draws x J
  Matrix gamma_draws;  // draws x (G*K), predictor-major
  Vector alpha_mean;
  Matrix beta_mean;  // J x K
  Vector alpha_mcse;
  Matrix beta_mcse;
  double log_marginal_likelihood = 0.0;
};

/// Standard auxiliary-variable probit Gibbs with Z held fixed: (alpha, gamma)
/// drawn jointly from their Gaussian conditional. The marginal likelihood is
/// Chib's estimate at the posterior mean with Rao-Blackwellized ordinate.
ReferenceFit fixed_structure_reference(const CommunityData& data, const GuildPartition& partition,
                                       const ProbitPriors& priors, const ReferenceOptions& options);

struct ModelAverage {
  PartitionEnumeration enumeration;
  std::vector<double> log_marginal_likelihood;
  std::vector<double> posterior_weights;
  std::vector<Matrix> conditional_beta_mean;  // per partition, J x K
  std::vector<Vector> conditional_alpha_mean;
  Matrix beta_mean;  // model-averaged, J x K
  Vector alpha_mean;
  std::vector<std::string> warnings;
};

ModelAverage exact_model_average_probit(const CommunityData& data, const PartitionEnumeration& enumeration,
                                        const ProbitPriors& priors, const ReferenceOptions& options);

}  // namespace guildtree
