#pragma once

#include "guildtree/random.hpp"
#include "guildtree/types.hpp"

namespace guildtree {

/// Generative branching process over species trees.
struct TreePriorConfig {
  double p_split = 0.5;  // probability a node with >= 2 species splits
  int max_depth = 64;    // nodes at this depth never split

  void validate() const;
};

/// Each node with at least two species splits with probability p_split; on a
/// split every species independently joins either child with probability 1/2,
/// redrawing any allocation that leaves a child empty.
GuildTree sample_tree_prior(int n_species, const TreePriorConfig& cfg, Rng& rng);

}  // namespace guildtree
