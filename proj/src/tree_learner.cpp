#include "guildtree/tree_learner.hpp"

#include "guildtree/special.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace guildtree {

void LearnerConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidInput("learner alpha must lie in [0, 1]");
  if (min_node_species < 1) throw InvalidInput("min_node_species must be at least 1");
  if (max_exhaustive_subset < 1) throw InvalidInput("max_exhaustive_subset must be at least 1");
}

void PseudoData::validate() const {
  const auto n = static_cast<Eigen::Index>(species.size());
  if (x.rows() != n || r.size() != n) throw InvalidInput("pseudo-data columns have unequal length");
  if (x.cols() < 1) throw InvalidInput("pseudo-data needs at least one predictor");
  if (!x.allFinite() || !r.allFinite()) throw InvalidInput("pseudo-data contains non-finite values");
  std::vector<int> seen(n_species, 0);
  for (int j : species) {
    if (j < 0 || j >= n_species) throw InvalidInput("pseudo-data species index out of range");
    ++seen[j];
  }
  for (int j = 0; j < n_species; ++j)
    if (seen[j] == 0) throw InvalidInput("species " + std::to_string(j + 1) + " has no observations");
}

SpeciesStats SpeciesStats::from_pseudo_data(const PseudoData& data) {
  data.validate();
  const int k = static_cast<int>(data.x.cols());
  SpeciesStats s;
  s.xtx.assign(data.n_species, Matrix::Zero(k, k));
  s.xtr.assign(data.n_species, Vector::Zero(k));
  s.rtr.assign(data.n_species, 0.0);
  s.count.assign(data.n_species, 0);
  for (std::size_t i = 0; i < data.species.size(); ++i) {
    const int j = data.species[i];
    const auto row = data.x.row(static_cast<Eigen::Index>(i));
    s.xtx[j].noalias() += row.transpose() * row;
    s.xtr[j].noalias() += row.transpose() * data.r(static_cast<Eigen::Index>(i));
    s.rtr[j] += data.r(static_cast<Eigen::Index>(i)) * data.r(static_cast<Eigen::Index>(i));
    ++s.count[j];
  }
  return s;
}

SpeciesStats SpeciesStats::from_shared_design(const Matrix& x, const Matrix& r) {
  return from_shared_design(x, x.transpose() * x, r);
}

SpeciesStats SpeciesStats::from_shared_design(const Matrix& x, const Matrix& xtx, const Matrix& r) {
  if (x.rows() != r.rows()) throw InvalidInput("design and pseudo-response rows differ");
  const auto j_count = static_cast<int>(r.cols());
  SpeciesStats s;
  const Matrix xtr = x.transpose() * r;
  s.xtx.assign(j_count, xtx);
  s.rtr.resize(j_count);
  s.count.assign(j_count, static_cast<long>(x.rows()));
  for (int j = 0; j < j_count; ++j) {
    s.xtr.push_back(xtr.col(j));
    s.rtr[j] = r.col(j).squaredNorm();
  }
  return s;
}

namespace {

NodeFit solve_node(const Matrix& xtx, const Vector& xtr, double rtr, long count) {
  NodeFit fit;
  fit.count = count;
  Eigen::LDLT<Matrix> ldlt(xtx);
  const auto d = ldlt.vectorD().cwiseAbs();
  const double scale = d.size() ? d.maxCoeff() : 0.0;
  if (ldlt.info() == Eigen::Success && scale > 0.0 && d.minCoeff() > 1e-10 * scale) {
    fit.coefficients = ldlt.solve(xtr);
  } else {
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(xtx);
    cod.setThreshold(1e-10);
    fit.coefficients = cod.solve(xtr);
    fit.degenerate = true;
  }
  fit.rss = std::max(0.0, rtr - fit.coefficients.dot(xtr));
  return fit;
}

}  // namespace

NodeFit fit_node(const SpeciesStats& stats, std::span<const int> species) {
  const int k = stats.n_predictors();
  Matrix xtx = Matrix::Zero(k, k);
  Vector xtr = Vector::Zero(k);
  double rtr = 0.0;
  long count = 0;
  for (int j : species) {
    xtx += stats.xtx[j];
    xtr += stats.xtr[j];
    rtr += stats.rtr[j];
    count += stats.count[j];
  }
  return solve_node(xtx, xtr, rtr, count);
}

InstabilityTest instability_test(const SpeciesStats& stats, std::span<const int> species) {
  InstabilityTest test;
  test.df = static_cast<double>((species.size() - 1) * stats.n_predictors());
  const NodeFit pooled = fit_node(stats, species);
  double rss_split = 0.0;
  for (int j : species) rss_split += fit_node(stats, std::span<const int>(&j, 1)).rss;
  if (pooled.rss <= rss_split) return test;
  if (rss_split <= 0.0) {
    test.statistic = std::numeric_limits<double>::infinity();
    test.p_value = 0.0;
    return test;
  }
  test.statistic = static_cast<double>(pooled.count) * std::log(pooled.rss / rss_split);
  test.p_value = chi_square_sf(test.statistic, test.df);
  return test;
}

namespace {

struct Candidate {
  std::vector<int> left;
  std::vector<int> right;
  double rss = std::numeric_limits<double>::infinity();
};

// Orient so the left side holds the node's smallest species, then keep the
// better candidate (ties: lexicographically smaller left side).
void consider(const SpeciesStats& stats, std::vector<int> a, std::vector<int> b, Candidate& best) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  if (b.front() < a.front()) std::swap(a, b);
  const double rss = fit_node(stats, a).rss + fit_node(stats, b).rss;
  if (rss < best.rss || (rss == best.rss && a < best.left)) {
    best.rss = rss;
    best.left = std::move(a);
    best.right = std::move(b);
  }
}

// Index of the coefficient whose species-specific estimates deviate most from
// the pooled estimate, in standard-error units.
int most_unstable_coefficient(const SpeciesStats& stats, std::span<const int> species,
                              std::vector<Vector>& per_species) {
  const int k = stats.n_predictors();
  const NodeFit pooled = fit_node(stats, species);
  double rss_split = 0.0;
  long n = 0;
  per_species.clear();
  for (int j : species) {
    const NodeFit f = fit_node(stats, std::span<const int>(&j, 1));
    per_species.push_back(f.coefficients);
    rss_split += f.rss;
    n += f.count;
  }
  if (k == 1) return 0;
  const long resid_df = n - static_cast<long>(species.size()) * k;
  const double sigma2 = resid_df > 0 && rss_split > 0.0 ? rss_split / static_cast<double>(resid_df) : 1.0;
  Vector score = Vector::Zero(k);
  for (std::size_t s = 0; s < species.size(); ++s) {
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(stats.xtx[species[s]]);
    const Matrix inv = cod.pseudoInverse();
    for (int c = 0; c < k; ++c) {
      const double var = sigma2 * inv(c, c);
      if (var <= 0.0) continue;
      const double d = per_species[s](c) - pooled.coefficients(c);
      score(c) += d * d / var;
    }
  }
  Eigen::Index arg = 0;
  score.maxCoeff(&arg);
  return static_cast<int>(arg);
}

}  // namespace

SplitResult split_search(const SpeciesStats& stats, std::span<const int> species, const LearnerConfig& cfg) {
  if (species.size() < 2) throw InvalidInput("split_search needs at least two species");
  std::vector<int> s(species.begin(), species.end());
  std::sort(s.begin(), s.end());
  const int n = static_cast<int>(s.size());
  const auto min_child = static_cast<std::size_t>(cfg.min_node_species);

  SplitResult result;
  Candidate best;
  if (n <= cfg.max_exhaustive_subset) {
    const std::uint64_t masks = (std::uint64_t{1} << (n - 1)) - 1;
    for (std::uint64_t mask = 0; mask < masks; ++mask) {
      std::vector<int> left{s[0]};
      std::vector<int> right;
      for (int b = 1; b < n; ++b) ((mask >> (b - 1)) & 1U ? left : right).push_back(s[b]);
      ++result.candidates;
      if (left.size() < min_child || right.size() < min_child) continue;
      consider(stats, std::move(left), std::move(right), best);
    }
  } else {
    result.exhaustive = false;
    std::vector<Vector> per_species;
    const int k = most_unstable_coefficient(stats, s, per_species);
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return per_species[a](k) < per_species[b](k); });
    for (int cut = 1; cut < n; ++cut) {
      std::vector<int> left;
      std::vector<int> right;
      for (int p = 0; p < n; ++p) (p < cut ? left : right).push_back(s[order[p]]);
      ++result.candidates;
      if (left.size() < min_child || right.size() < min_child) continue;
      consider(stats, std::move(left), std::move(right), best);
    }
  }
  if (best.left.empty()) return result;
  result.left = std::move(best.left);
  result.right = std::move(best.right);
  result.rss = best.rss;
  result.rss_reduction = fit_node(stats, s).rss - best.rss;
  return result;
}

namespace {

void grow(const SpeciesStats& stats, const LearnerConfig& cfg, GuildTree& tree, int node,
          std::vector<std::string>& warnings) {
  const std::vector<int> species = tree.nodes()[node].species;
  const auto size = static_cast<int>(species.size());
  if (size < 2 || size < 2 * cfg.min_node_species || cfg.alpha <= 0.0) return;
  if (fit_node(stats, species).degenerate) {
    warnings.push_back("degenerate design in node with " + std::to_string(size) +
                       " species; node kept terminal");
    return;
  }
  const InstabilityTest test = instability_test(stats, species);
  // p < 1 exactly when the statistic is positive
  const bool unstable = cfg.alpha >= 1.0 ? test.statistic > 0.0 : test.p_value < cfg.alpha;
  if (!unstable) return;
  SplitResult split = split_search(stats, species, cfg);
  if (split.left.empty()) return;
  const int child = tree.split(node, std::move(split.left), std::move(split.right));
  grow(stats, cfg, tree, child, warnings);
  grow(stats, cfg, tree, child + 1, warnings);
}

}  // namespace

TreeFit fit_tree(const SpeciesStats& stats, const LearnerConfig& cfg) {
  cfg.validate();
  if (stats.n_species() < 1 || stats.n_predictors() < 1)
    throw InvalidInput("fit_tree needs at least one species and one predictor");
  for (int j = 0; j < stats.n_species(); ++j)
    if (stats.count[j] < 1) throw InvalidInput("species " + std::to_string(j + 1) + " has no observations");
  TreeFit fit;
  fit.tree = GuildTree::single_guild(stats.n_species());
  grow(stats, cfg, fit.tree, 0, fit.warnings);
  const auto guilds = fit.tree.guilds();
  fit.coefficients.resize(static_cast<Eigen::Index>(guilds.size()), stats.n_predictors());
  for (std::size_t g = 0; g < guilds.size(); ++g)
    fit.coefficients.row(static_cast<Eigen::Index>(g)) = fit_node(stats, guilds[g]).coefficients.transpose();
  return fit;
}

TreeFit fit_tree(const PseudoData& data, const LearnerConfig& cfg) {
  return fit_tree(SpeciesStats::from_pseudo_data(data), cfg);
}

}  // namespace guildtree
