#include "guildtree/chain_config.hpp"

namespace guildtree {

void ProbitPriors::validate() const {
  if (!(intercept_variance > 0.0) || !(gamma_variance > 0.0))
    throw InvalidInput("prior variances must be positive");
}

void ZipPriors::validate() const {
  if (!(intercept_variance > 0.0) || !(gamma_variance > 0.0))
    throw InvalidInput("prior variances must be positive");
  if (!(sigma2_shape > 0.0) || !(sigma2_scale > 0.0))
    throw InvalidInput("inverse-gamma hyperparameters must be positive");
  if (!(phi_a > 0.0) || !(phi_b > 0.0)) throw InvalidInput("beta hyperparameters must be positive");
}

void ChainSchedule::validate() const {
  if (thin < 1) throw InvalidInput("thin must be at least 1");
  if (iterations < thin) throw InvalidInput("iterations must be at least thin");
  if (burn < 0 || burn >= thinned())
    throw InvalidInput("burn must be nonnegative and below iterations / thin");
}

void ChainConfig::validate(int n_periods) const {
  schedule.validate();
  probit.validate();
  zip.validate();
  if (chains < 1) throw InvalidInput("chains must be at least 1");
  if (alpha.size() > 1 && static_cast<int>(alpha.size()) != n_periods)
    throw InvalidInput("alpha list has " + std::to_string(alpha.size()) + " entries but data has " +
                       std::to_string(n_periods) + " periods");
  for (int t = 0; t < n_periods; ++t) learner(t).validate();
}

LearnerConfig ChainConfig::learner(int period) const {
  LearnerConfig cfg;
  if (alpha.empty())
    cfg.alpha = family == Family::probit ? 0.025 : 0.01;
  else
    cfg.alpha = alpha.size() == 1 ? alpha.front() : alpha.at(static_cast<std::size_t>(period));
  cfg.min_node_species = min_node_species;
  cfg.max_exhaustive_subset = max_exhaustive_subset;
  cfg.seed = seed;
  return cfg;
}

std::vector<LearnerConfig> ChainConfig::learners(int n_periods) const {
  std::vector<LearnerConfig> out;
  for (int t = 0; t < n_periods; ++t) out.push_back(learner(t));
  return out;
}

}  // namespace guildtree
