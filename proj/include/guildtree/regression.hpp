#pragma once

// Guild-structured Gaussian regression block shared by both samplers:
// latent = alpha_j + x_i' gamma_{t(i), g(j)} + noise, with per-period trees.

#include "guildtree/random.hpp"
#include "guildtree/tree_learner.hpp"
#include "guildtree/types.hpp"

#include <vector>

namespace guildtree {

struct RegressionState {
  Vector alpha;
  std::vector<GuildTree> trees;  // one per period
  std::vector<GuildPartition> partitions;
  std::vector<Matrix> gamma;  // per period, G_t x K in tree guild order

  static RegressionState initial(const Vector& alpha, int n_periods, int n_predictors);
  int n_periods() const { return static_cast<int>(trees.size()); }
};

/// Sites of each period; a period with no sites yields an empty list.
std::vector<std::vector<int>> sites_by_period(const CommunityData& data, int n_periods);

/// n x J matrix of mu_{i,j} = alpha_j + x_i' gamma_{t(i), g(j)}.
Matrix linear_predictor(const CommunityData& data, const RegressionState& reg);

/// Conjugate draw of the G x K guild coefficients given per-species
/// sufficient statistics of the pseudo-response, Gaussian noise variance and
/// an N(0, prior_variance) prior on every coefficient.
Matrix draw_guild_coefficients(const SpeciesStats& stats, const GuildPartition& z, double noise_variance,
                               double prior_variance, Rng& rng);

struct GuildUpdateOptions {
  /// When nonempty, trees are held at these partitions (learner bypassed).
  std::vector<GuildPartition> fixed_partitions;
};

/// For each period: pseudo-response r = latent - alpha, fit the tree, then
/// redraw gamma given the tree. Returns the number of learner warnings.
long update_guilds(RegressionState& reg, const Matrix& latent, const CommunityData& data, double noise_variance,
                   double gamma_prior_variance, const std::vector<LearnerConfig>& learners, Rng& rng,
                   const GuildUpdateOptions& options = {});

/// Conjugate normal draw of every intercept, pooling all periods.
void update_intercepts(RegressionState& reg, const Matrix& latent, const CommunityData& data,
                       double noise_variance, double intercept_prior_variance, Rng& rng);

}  // namespace guildtree
