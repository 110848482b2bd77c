#pragma once

// Model-based recursive partitioning over the species index.
//
// Each node regresses the pseudo-response on the predictors (no intercept:
// species intercepts are already removed), tests whether species-specific
// fits improve on the pooled fit, and if so splits the node's species into
// the two groups with the smallest total residual sum of squares.

#include "guildtree/types.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace guildtree {

struct LearnerConfig {
  double alpha = 0.05;             // split when the instability p-value is below this
  int min_node_species = 1;        // smallest allowed child
  int max_exhaustive_subset = 12;  // above this, scan only slope-ordered contiguous splits
  std::uint64_t seed = 0;

  void validate() const;
};

/// Observations (species, predictor row, pseudo-response).
struct PseudoData {
  std::vector<int> species;
  Matrix x;  // N x K
  Vector r;  // N
  int n_species = 0;

  void validate() const;
};

/// Per-species sufficient statistics: X'X, X'r, r'r and counts.
struct SpeciesStats {
  std::vector<Matrix> xtx;
  std::vector<Vector> xtr;
  std::vector<double> rtr;
  std::vector<long> count;

  int n_species() const { return static_cast<int>(xtx.size()); }
  int n_predictors() const { return xtx.empty() ? 0 : static_cast<int>(xtx.front().rows()); }

  static SpeciesStats from_pseudo_data(const PseudoData& data);
  /// All species observed at the same sites: x is n x K, r is n x J.
  static SpeciesStats from_shared_design(const Matrix& x, const Matrix& r);
  static SpeciesStats from_shared_design(const Matrix& x, const Matrix& xtx, const Matrix& r);
};

struct NodeFit {
  Vector coefficients;
  double rss = 0.0;
  long count = 0;
  bool degenerate = false;  // X'X rank deficient
};

/// Pooled least squares over the listed species.
NodeFit fit_node(const SpeciesStats& stats, std::span<const int> species);

/// Likelihood-ratio statistic N log(RSS_pooled / RSS_species) and its
/// chi-square p-value on (|S| - 1) K degrees of freedom.
struct InstabilityTest {
  double statistic = 0.0;
  double p_value = 1.0;
  double df = 0.0;
};
InstabilityTest instability_test(const SpeciesStats& stats, std::span<const int> species);

struct SplitResult {
  std::vector<int> left;  // contains the smallest species of the node
  std::vector<int> right;
  double rss = 0.0;            // total RSS of the two child fits
  double rss_reduction = 0.0;  // pooled RSS minus `rss`
  long candidates = 0;         // partitions scored
  bool exhaustive = true;
};

/// Best binary partition of `species` by total child RSS. Exhaustive when
/// |S| <= max_exhaustive_subset; ties go to the lexicographically smallest
/// left subset.
SplitResult split_search(const SpeciesStats& stats, std::span<const int> species, const LearnerConfig& cfg);

struct TreeFit {
  GuildTree tree;
  Matrix coefficients;  // G x K least-squares estimates, guild order of the tree
  std::vector<std::string> warnings;
};

TreeFit fit_tree(const SpeciesStats& stats, const LearnerConfig& cfg);
TreeFit fit_tree(const PseudoData& data, const LearnerConfig& cfg);

}  // namespace guildtree
