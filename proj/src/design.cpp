#include "guildtree/design.hpp"

#include <numeric>
#include <stdexcept>

namespace guildtree {

GuildPartition partition_from_tree(const GuildTree& tree) {
  tree.validate();
  return GuildPartition::from_groups(tree.guilds(), tree.n_species());
}

GuildTree tree_from_partition(const GuildPartition& partition) {
  auto groups = partition.canonical().groups();
  GuildTree tree = GuildTree::single_guild(partition.n_species());
  int node = 0;
  for (std::size_t g = 0; g + 1 < groups.size(); ++g) {
    std::vector<int> rest;
    for (std::size_t h = g + 1; h < groups.size(); ++h)
      rest.insert(rest.end(), groups[h].begin(), groups[h].end());
    node = tree.split(node, groups[g], std::move(rest)) + 1;
  }
  return tree;
}

Matrix membership_block(const GuildPartition& z, int species, int n_predictors) {
  const int g = z.n_guilds();
  Matrix w = Matrix::Zero(n_predictors, g * n_predictors);
  for (int k = 0; k < n_predictors; ++k) w(k, k * g + z.guild_of(species)) = 1.0;
  return w;
}

Matrix species_coefficients(const GuildPartition& z, const Matrix& gamma) {
  if (gamma.rows() != z.n_guilds())
    throw InvalidInput("gamma rows do not match the number of guilds");
  Matrix beta(z.n_species(), gamma.cols());
  for (int j = 0; j < z.n_species(); ++j) beta.row(j) = gamma.row(z.guild_of(j));
  return beta;
}

SpeciesCoefficients species_coefficients(const PosteriorDraw& draw) {
  SpeciesCoefficients out;
  const auto& c = draw.coefficients;
  for (std::size_t t = 0; t < c.partitions.size(); ++t)
    out.beta.push_back(species_coefficients(c.partitions[t], c.gamma[t]));
  return out;
}

std::uint64_t count_guild_compositions(int n_species) {
  if (n_species < 1) throw InvalidInput("need at least one species");
  if (n_species > 63) throw std::overflow_error("2^J - 1 does not fit in 64 bits for J > 63");
  return (std::uint64_t{1} << n_species) - 1;
}

long regression_coefficient_count(std::span<const GuildPartition> partitions, int n_predictors) {
  return std::accumulate(partitions.begin(), partitions.end(), 0L,
                         [&](long acc, const GuildPartition& p) {
                           return acc + static_cast<long>(p.n_guilds()) * n_predictors;
                         });
}

long model_dimension(std::span<const GuildPartition> partitions, int n_species, int n_predictors,
                     Family family) {
  for (const auto& p : partitions)
    if (p.n_species() != n_species) throw InvalidInput("partition species count mismatch");
  return n_species + regression_coefficient_count(partitions, n_predictors) +
         (family == Family::zip ? 2 : 0);
}

}  // namespace guildtree
