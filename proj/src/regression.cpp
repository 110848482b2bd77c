#include "guildtree/regression.hpp"

#include "guildtree/design.hpp"

#include <Eigen/Cholesky>

#include <cmath>

namespace guildtree {

RegressionState RegressionState::initial(const Vector& alpha, int n_periods, int n_predictors) {
  RegressionState reg;
  reg.alpha = alpha;
  const int j = static_cast<int>(alpha.size());
  for (int t = 0; t < n_periods; ++t) {
    reg.trees.push_back(GuildTree::single_guild(j));
    reg.partitions.push_back(GuildPartition::pooled(j));
    reg.gamma.push_back(Matrix::Zero(1, n_predictors));
  }
  return reg;
}

std::vector<std::vector<int>> sites_by_period(const CommunityData& data, int n_periods) {
  std::vector<std::vector<int>> out(n_periods);
  for (int i = 0; i < data.n_sites(); ++i) {
    const int t = data.period_of(i);
    if (t >= n_periods) throw InvalidInput("site period exceeds the number of modelled periods");
    out[t].push_back(i);
  }
  return out;
}

Matrix linear_predictor(const CommunityData& data, const RegressionState& reg) {
  const int n = data.n_sites();
  const int j_count = data.n_species();
  Matrix mu(n, j_count);
  std::vector<Matrix> per_guild(reg.gamma.size());
  for (std::size_t t = 0; t < reg.gamma.size(); ++t)
    per_guild[t] = data.predictors * reg.gamma[t].transpose();  // n x G_t
  for (int i = 0; i < n; ++i) {
    const int t = data.period_of(i);
    const GuildPartition& z = reg.partitions[t];
    for (int j = 0; j < j_count; ++j) mu(i, j) = reg.alpha(j) + per_guild[t](i, z.guild_of(j));
  }
  return mu;
}

Matrix draw_guild_coefficients(const SpeciesStats& stats, const GuildPartition& z, double noise_variance,
                               double prior_variance, Rng& rng) {
  const int k = stats.n_predictors();
  const auto groups = z.groups();
  Matrix gamma(z.n_guilds(), k);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    Matrix precision = Matrix::Identity(k, k) / prior_variance;
    Vector rhs = Vector::Zero(k);
    for (int j : groups[g]) {
      precision += stats.xtx[j] / noise_variance;
      rhs += stats.xtr[j] / noise_variance;
    }
    Eigen::LLT<Matrix> llt(precision);
    if (llt.info() != Eigen::Success) throw std::runtime_error("guild coefficient precision is not positive definite");
    const Vector mean = llt.solve(rhs);
    Vector noise(k);
    for (int c = 0; c < k; ++c) noise(c) = rng.normal();
    gamma.row(static_cast<Eigen::Index>(g)) = (mean + llt.matrixU().solve(noise)).transpose();
  }
  return gamma;
}

long update_guilds(RegressionState& reg, const Matrix& latent, const CommunityData& data, double noise_variance,
                   double gamma_prior_variance, const std::vector<LearnerConfig>& learners, Rng& rng,
                   const GuildUpdateOptions& options) {
  const int n_periods = reg.n_periods();
  const auto periods = sites_by_period(data, n_periods);
  long warnings = 0;
  for (int t = 0; t < n_periods; ++t) {
    const auto& sites = periods[t];
    if (sites.empty()) {
      ++warnings;
      continue;
    }
    Matrix x(static_cast<Eigen::Index>(sites.size()), data.n_predictors());
    Matrix r(static_cast<Eigen::Index>(sites.size()), data.n_species());
    for (std::size_t s = 0; s < sites.size(); ++s) {
      x.row(static_cast<Eigen::Index>(s)) = data.predictors.row(sites[s]);
      r.row(static_cast<Eigen::Index>(s)) = latent.row(sites[s]) - reg.alpha.transpose();
    }
    const SpeciesStats stats = SpeciesStats::from_shared_design(x, r);
    if (options.fixed_partitions.empty()) {
      TreeFit fit = fit_tree(stats, learners.at(static_cast<std::size_t>(t)));
      warnings += static_cast<long>(fit.warnings.size());
      reg.trees[t] = std::move(fit.tree);
      reg.partitions[t] = partition_from_tree(reg.trees[t]);
    } else {
      reg.partitions[t] = options.fixed_partitions.at(static_cast<std::size_t>(t));
      reg.trees[t] = tree_from_partition(reg.partitions[t]);
      reg.partitions[t] = partition_from_tree(reg.trees[t]);
    }
    reg.gamma[t] = draw_guild_coefficients(stats, reg.partitions[t], noise_variance, gamma_prior_variance, rng);
  }
  return warnings;
}

void update_intercepts(RegressionState& reg, const Matrix& latent, const CommunityData& data,
                       double noise_variance, double intercept_prior_variance, Rng& rng) {
  RegressionState centred = reg;
  centred.alpha.setZero();
  const Matrix resid = latent - linear_predictor(data, centred);
  const double precision = static_cast<double>(data.n_sites()) / noise_variance + 1.0 / intercept_prior_variance;
  const double sd = 1.0 / std::sqrt(precision);
  for (int j = 0; j < data.n_species(); ++j) {
    const double mean = resid.col(j).sum() / noise_variance / precision;
    reg.alpha(j) = rng.normal(mean, sd);
  }
}

}  // namespace guildtree
