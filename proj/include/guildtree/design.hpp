#pragma once

// Guild design algebra: mapping guild-level coefficients onto species.

#include "guildtree/types.hpp"

#include <cstdint>
#include <span>

namespace guildtree {

/// Linear-predictor contributions (x' (x) Z) gamma for one site.
///
/// `gamma` is the predictor-major flattening of the G x K guild coefficients:
/// (g1k1, g2k1, ..., gGk1, g1k2, ...). Species j in guild g receives
/// sum_k x_k * gamma_{g,k}.
template <typename XDerived, typename GDerived>
Vector expand_guild_design(const Eigen::MatrixBase<XDerived>& x, const GuildPartition& z,
                           const Eigen::MatrixBase<GDerived>& gamma) {
  const Eigen::Index k = x.size();
  const Eigen::Index g = z.n_guilds();
  if (gamma.size() != g * k)
    throw InvalidInput("gamma has " + std::to_string(gamma.size()) + " entries, expected G*K = " +
                       std::to_string(g * k));
  const Matrix gamma_gk = gamma.derived().reshaped(g, k);
  const Vector per_guild = gamma_gk * x.derived();
  Vector out(z.n_species());
  for (int j = 0; j < z.n_species(); ++j) out(j) = per_guild(z.guild_of(j));
  return out;
}

/// Guild membership induced by the terminal nodes, columns left to right.
GuildPartition partition_from_tree(const GuildTree& tree);

/// A tree whose terminal nodes (left to right) are the partition's guilds in
/// canonical order; peels one guild off per split.
GuildTree tree_from_partition(const GuildPartition& partition);

/// The K x (G*K) block W_j = I_K (x) Z_j linking gamma to species j.
Matrix membership_block(const GuildPartition& z, int species, int n_predictors);

/// beta_t = Z_t * Gamma_t (J x K) for every period of the draw.
SpeciesCoefficients species_coefficients(const PosteriorDraw& draw);
Matrix species_coefficients(const GuildPartition& z, const Matrix& gamma);

/// Nonempty species subsets, 2^J - 1. Throws std::overflow_error past 63 species.
std::uint64_t count_guild_compositions(int n_species);

/// sum_t G_t * K.
long regression_coefficient_count(std::span<const GuildPartition> partitions, int n_predictors);

/// J intercepts + sum_t G_t K guild coefficients (+ phi and sigma2 for zip).
long model_dimension(std::span<const GuildPartition> partitions, int n_species, int n_predictors,
                     Family family);

}  // namespace guildtree
