#pragma once

// Core domain types shared by the samplers, inference and I/O layers.

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace guildtree {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using CountMatrix = Eigen::MatrixXi;

enum class Family { probit, zip };

std::string to_string(Family family);
Family family_from_string(const std::string& name);

/// Raised for malformed inputs (dimension mismatches, invalid labels, bad files).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Site-by-species responses plus the site-by-predictor design.
///
/// `period` holds a 0-based period label per site (empty means one period);
/// `holdout` flags sites reserved for out-of-sample scoring (empty means none).
struct CommunityData {
  CountMatrix responses;
  Matrix predictors;
  std::vector<std::string> species_names;
  std::vector<std::string> predictor_names;
  std::vector<int> period;
  std::vector<bool> holdout;

  int n_sites() const { return static_cast<int>(responses.rows()); }
  int n_species() const { return static_cast<int>(responses.cols()); }
  int n_predictors() const { return static_cast<int>(predictors.cols()); }
  int n_periods() const;
  int period_of(int site) const { return period.empty() ? 0 : period[site]; }
  bool has_holdout() const;

  /// Throws InvalidInput if any invariant for `family` is violated.
  void validate(Family family) const;

  /// Rows `sites` (in the given order); holdout flags are dropped.
  CommunityData select_sites(const std::vector<int>& sites) const;
  CommunityData fit_sites() const;
  CommunityData holdout_sites() const;
};

struct TreeNode {
  std::vector<int> species;  // sorted, 0-based
  int left = -1;
  int right = -1;

  bool terminal() const { return left < 0; }
};

/// Binary tree over species; terminal nodes are guilds.
///
/// Node 0 is the root. Guild indices follow the left-to-right (depth-first)
/// order of the terminal nodes.
class GuildTree {
 public:
  GuildTree() = default;

  /// One terminal node holding species 0..n_species-1.
  static GuildTree single_guild(int n_species);

  /// Splits terminal node `node` into (left, right) and returns the index of
  /// the left child; the right child is the next index.
  int split(int node, std::vector<int> left, std::vector<int> right);

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  int n_species() const { return n_species_; }
  int n_guilds() const;

  /// Species sets of the terminal nodes, left to right.
  std::vector<std::vector<int>> guilds() const;

  /// Throws InvalidInput unless terminal sets partition 0..n_species-1.
  void validate() const;

 private:
  void collect(int node, std::vector<std::vector<int>>& out) const;

  std::vector<TreeNode> nodes_;
  int n_species_ = 0;
};

/// Guild membership of each species; the J x G indicator matrix Z.
class GuildPartition {
 public:
  GuildPartition() = default;

  /// `membership[j]` is the 0-based guild of species j. Every guild in
  /// 0..max must be nonempty.
  explicit GuildPartition(std::vector<int> membership);

  static GuildPartition pooled(int n_species);
  static GuildPartition identity(int n_species);
  static GuildPartition from_groups(const std::vector<std::vector<int>>& groups, int n_species);

  int n_species() const { return static_cast<int>(membership_.size()); }
  int n_guilds() const { return n_guilds_; }
  int guild_of(int species) const { return membership_[species]; }
  const std::vector<int>& membership() const { return membership_; }
  std::vector<std::vector<int>> groups() const;

  Matrix indicator() const;

  /// Same partition with guilds ordered by their smallest species.
  GuildPartition canonical() const;

  /// Old guild index -> canonical guild index.
  std::vector<int> canonical_relabel() const;

  /// "1+2+3|4+5+6": 1-based species, members ascending, guilds by smallest member.
  std::string encode() const;
  static GuildPartition decode(const std::string& text, int n_species);

  /// True when both partitions group the species identically.
  bool same_grouping(const GuildPartition& other) const;

  bool operator==(const GuildPartition&) const = default;

 private:
  std::vector<int> membership_;
  int n_guilds_ = 0;
};

/// Intercepts plus one (partition, G x K coefficient) pair per period.
///
/// `gamma[t]` rows follow the guild order of `partitions[t]`; its column-major
/// flattening is the predictor-major layout (g=1..G for k=1, then k=2, ...).
struct Coefficients {
  Vector alpha;
  std::vector<GuildPartition> partitions;
  std::vector<Matrix> gamma;
};

/// One retained MCMC state.
struct PosteriorDraw {
  long draw_index = 0;
  Coefficients coefficients;
  std::vector<GuildTree> trees;
  double phi = 0.0;     // zip only
  double sigma2 = 0.0;  // zip only

  int n_periods() const { return static_cast<int>(coefficients.partitions.size()); }
};

/// Per-period species-level coefficients and the blocks W_j that produce them.
struct SpeciesCoefficients {
  std::vector<Matrix> beta;  // per period, J x K
};

}  // namespace guildtree
