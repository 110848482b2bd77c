#include "guildtree/tree_prior.hpp"

namespace guildtree {

void TreePriorConfig::validate() const {
  if (!(p_split >= 0.0 && p_split <= 1.0)) throw InvalidInput("p_split must lie in [0, 1]");
  if (max_depth < 0) throw InvalidInput("max_depth must be nonnegative");
}

namespace {

void grow(GuildTree& tree, int node, int depth, const TreePriorConfig& cfg, Rng& rng) {
  const std::vector<int> species = tree.nodes()[node].species;
  if (species.size() < 2 || depth >= cfg.max_depth || !rng.bernoulli(cfg.p_split)) return;
  std::vector<int> first;
  std::vector<int> second;
  do {
    first.clear();
    second.clear();
    for (int j : species) (rng.bernoulli(0.5) ? first : second).push_back(j);
  } while (first.empty() || second.empty());
  const int child = tree.split(node, std::move(first), std::move(second));
  grow(tree, child, depth + 1, cfg, rng);
  grow(tree, child + 1, depth + 1, cfg, rng);
}

}  // namespace

GuildTree sample_tree_prior(int n_species, const TreePriorConfig& cfg, Rng& rng) {
  cfg.validate();
  GuildTree tree = GuildTree::single_guild(n_species);
  grow(tree, 0, 0, cfg, rng);
  return tree;
}

}  // namespace guildtree
