#include "guildtree/oracle.hpp"

#include "guildtree/design.hpp"
#include "guildtree/inference.hpp"
#include "guildtree/random.hpp"
#include "guildtree/special.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <numbers>
#include <thread>

namespace guildtree {

namespace {

using Groups = std::vector<std::vector<int>>;
using GroupDistribution = std::map<Groups, double>;

class PartitionProcess {
 public:
  explicit PartitionProcess(const TreePriorConfig& cfg) : cfg_(cfg) {}

  // Distribution over terminal partitions of `species` for a node at `depth`.
  const GroupDistribution& at(const std::vector<int>& species, int depth) {
    const auto key = std::make_pair(species, depth);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    GroupDistribution dist;
    const auto n = static_cast<int>(species.size());
    if (n < 2 || depth >= cfg_.max_depth) {
      dist[Groups{species}] = 1.0;
    } else {
      dist[Groups{species}] += 1.0 - cfg_.p_split;
      const std::uint64_t masks = (std::uint64_t{1} << n) - 1;
      const double assignment = 1.0 / static_cast<double>(masks - 1);
      for (std::uint64_t mask = 1; mask < masks; ++mask) {
        std::vector<int> first;
        std::vector<int> second;
        for (int b = 0; b < n; ++b) ((mask >> b) & 1U ? first : second).push_back(species[b]);
        const GroupDistribution left = at(first, depth + 1);
        const GroupDistribution& right = at(second, depth + 1);
        for (const auto& [lg, lp] : left) {
          for (const auto& [rg, rp] : right) {
            Groups merged = lg;
            merged.insert(merged.end(), rg.begin(), rg.end());
            std::sort(merged.begin(), merged.end());
            dist[merged] += cfg_.p_split * assignment * lp * rp;
          }
        }
      }
    }
    return memo_.emplace(key, std::move(dist)).first->second;
  }

 private:
  TreePriorConfig cfg_;
  std::map<std::pair<std::vector<int>, int>, GroupDistribution> memo_;
};

}  // namespace

PartitionEnumeration enumerate_partitions(int n_species, const TreePriorConfig& prior, int cap) {
  prior.validate();
  if (n_species < 1) throw InvalidInput("need at least one species");
  if (n_species > cap)
    throw InvalidInput("exact enumeration refused for " + std::to_string(n_species) + " species (cap " +
                       std::to_string(cap) + ")");
  std::vector<int> all(n_species);
  for (int j = 0; j < n_species; ++j) all[j] = j;

  TreePriorConfig support_cfg = prior;
  support_cfg.p_split = 0.5;
  PartitionProcess support(support_cfg);
  PartitionProcess weighted(prior);
  const GroupDistribution& reachable = support.at(all, 0);
  const GroupDistribution& weights = weighted.at(all, 0);

  PartitionEnumeration out;
  double total = 0.0;
  for (const auto& [groups, p] : reachable) {
    out.partitions.push_back(GuildPartition::from_groups(groups, n_species).canonical());
    const auto it = weights.find(groups);
    const double w = it == weights.end() ? 0.0 : it->second;
    out.prior_weights.push_back(w);
    total += w;
  }
  for (double& w : out.prior_weights) w /= total;
  return out;
}

namespace {

// Dense design for one fixed partition: columns are the J intercepts
// followed by the predictor-major guild coefficients.
Matrix reference_design(const CommunityData& data, const GuildPartition& z) {
  const int n = data.n_sites();
  const int j_count = data.n_species();
  const int k = data.n_predictors();
  const int g = z.n_guilds();
  Matrix d = Matrix::Zero(static_cast<Eigen::Index>(n) * j_count, j_count + g * k);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < j_count; ++j) {
      const Eigen::Index row = static_cast<Eigen::Index>(i) * j_count + j;
      d(row, j) = 1.0;
      for (int c = 0; c < k; ++c) d(row, j_count + c * g + z.guild_of(j)) = data.predictors(i, c);
    }
  return d;
}

double log_mean_exp(const std::vector<double>& v) {
  const double m = *std::max_element(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s / static_cast<double>(v.size()));
}

}  // namespace

ReferenceFit fixed_structure_reference(const CommunityData& data, const GuildPartition& partition,
                                       const ProbitPriors& priors, const ReferenceOptions& options) {
  data.validate(Family::probit);
  priors.validate();
  if (data.n_periods() > 1) throw InvalidInput("the fixed-structure reference handles a single period");
  if (partition.n_species() != data.n_species()) throw InvalidInput("partition species count mismatch");
  if (options.iterations <= options.burn + 1) throw InvalidInput("reference chain too short");

  const int j_count = data.n_species();
  const int k = data.n_predictors();
  const int g = partition.n_guilds();
  const Matrix d = reference_design(data, partition);
  const Eigen::Index p = d.cols();
  const Eigen::Index cells = d.rows();

  Vector prior_precision(p);
  prior_precision.head(j_count).setConstant(1.0 / priors.intercept_variance);
  prior_precision.tail(p - j_count).setConstant(1.0 / priors.gamma_variance);
  Matrix precision = d.transpose() * d;
  precision.diagonal() += prior_precision;
  const Eigen::LLT<Matrix> llt(precision);
  if (llt.info() != Eigen::Success) throw std::runtime_error("reference posterior precision not positive definite");

  Vector y(cells);
  for (int i = 0; i < data.n_sites(); ++i)
    for (int j = 0; j < j_count; ++j) y(static_cast<Eigen::Index>(i) * j_count + j) = data.responses(i, j);

  Rng rng(options.seed);
  Vector theta = Vector::Zero(p);
  Vector aux(cells);
  const long kept = options.iterations - options.burn;
  Matrix draws(kept, p);
  Matrix conditional_means(kept, p);
  for (long it = 0; it < options.iterations; ++it) {
    const Vector mu = d * theta;
    for (Eigen::Index c = 0; c < cells; ++c)
      aux(c) = sample_truncated_normal(mu(c), 1.0, y(c) > 0.5 ? TruncationSide::positive : TruncationSide::negative,
                                       rng);
    const Vector mean = llt.solve(d.transpose() * aux);
    Vector noise(p);
    for (Eigen::Index c = 0; c < p; ++c) noise(c) = rng.normal();
    theta = mean + llt.matrixU().solve(noise);
    if (it >= options.burn) {
      draws.row(it - options.burn) = theta.transpose();
      conditional_means.row(it - options.burn) = mean.transpose();
    }
  }

  ReferenceFit fit;
  fit.partition = partition;
  fit.alpha_draws = draws.leftCols(j_count);
  fit.gamma_draws = draws.rightCols(p - j_count);
  const Vector theta_star = draws.colwise().mean().transpose();
  fit.alpha_mean = theta_star.head(j_count);
  fit.alpha_mcse.resize(j_count);
  for (int j = 0; j < j_count; ++j) {
    const Vector col = fit.alpha_draws.col(j);
    fit.alpha_mcse(j) = batch_means_mcse(std::span<const double>(col.data(), static_cast<std::size_t>(col.size())));
  }
  fit.beta_mean.resize(j_count, k);
  fit.beta_mcse.resize(j_count, k);
  for (int j = 0; j < j_count; ++j)
    for (int c = 0; c < k; ++c) {
      const Vector col = fit.gamma_draws.col(c * g + partition.guild_of(j));
      fit.beta_mean(j, c) = col.mean();
      fit.beta_mcse(j, c) = batch_means_mcse(std::span<const double>(col.data(), static_cast<std::size_t>(col.size())));
    }

  // Chib: log m(y) = log f(y | theta*) + log pi(theta*) - log pi(theta* | y)
  const Vector mu_star = d * theta_star;
  double log_lik = 0.0;
  for (Eigen::Index c = 0; c < cells; ++c) log_lik += log_normal_cdf(y(c) > 0.5 ? mu_star(c) : -mu_star(c));
  double log_prior = 0.0;
  for (Eigen::Index c = 0; c < p; ++c) log_prior += normal_log_density(theta_star(c), 0.0, 1.0 / prior_precision(c));
  const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  const double constant = -0.5 * static_cast<double>(p) * std::log(2.0 * std::numbers::pi) + 0.5 * log_det;
  std::vector<double> ordinates(static_cast<std::size_t>(kept));
  for (long m = 0; m < kept; ++m) {
    const Vector diff = theta_star - conditional_means.row(m).transpose();
    ordinates[static_cast<std::size_t>(m)] = constant - 0.5 * diff.dot(precision * diff);
  }
  fit.log_marginal_likelihood = log_lik + log_prior - log_mean_exp(ordinates);
  return fit;
}

ModelAverage exact_model_average_probit(const CommunityData& data, const PartitionEnumeration& enumeration,
                                        const ProbitPriors& priors, const ReferenceOptions& options) {
  const std::size_t count = enumeration.partitions.size();
  ModelAverage out;
  out.enumeration = enumeration;
  out.log_marginal_likelihood.assign(count, -std::numeric_limits<double>::infinity());
  out.posterior_weights.assign(count, 0.0);
  out.conditional_beta_mean.assign(count, Matrix::Zero(data.n_species(), data.n_predictors()));
  out.conditional_alpha_mean.assign(count, Vector::Zero(data.n_species()));

  std::vector<std::string> errors(count);
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t p = next++; p < count; p = next++) {
      if (enumeration.prior_weights[p] <= 0.0) continue;
      try {
        ReferenceOptions opts = options;
        opts.seed = options.seed + 7919 * (p + 1);
        const ReferenceFit fit = fixed_structure_reference(data, enumeration.partitions[p], priors, opts);
        out.log_marginal_likelihood[p] = fit.log_marginal_likelihood;
        out.conditional_beta_mean[p] = fit.beta_mean;
        out.conditional_alpha_mean[p] = fit.alpha_mean;
      } catch (const std::exception& e) {
        errors[p] = e.what();
      }
    }
  };
  const unsigned n_workers = std::max(1U, std::min<unsigned>(std::thread::hardware_concurrency(), static_cast<unsigned>(count)));
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  double max_log = -std::numeric_limits<double>::infinity();
  std::vector<double> log_post(count, -std::numeric_limits<double>::infinity());
  for (std::size_t p = 0; p < count; ++p) {
    if (enumeration.prior_weights[p] <= 0.0) continue;
    if (!errors[p].empty() || !std::isfinite(out.log_marginal_likelihood[p])) {
      out.warnings.push_back("partition " + enumeration.partitions[p].encode() +
                             " excluded: " + (errors[p].empty() ? "non-finite marginal likelihood" : errors[p]));
      continue;
    }
    log_post[p] = std::log(enumeration.prior_weights[p]) + out.log_marginal_likelihood[p];
    max_log = std::max(max_log, log_post[p]);
  }
  if (!std::isfinite(max_log)) throw std::runtime_error("no partition produced a usable marginal likelihood");
  double total = 0.0;
  for (std::size_t p = 0; p < count; ++p) {
    out.posterior_weights[p] = std::isfinite(log_post[p]) ? std::exp(log_post[p] - max_log) : 0.0;
    total += out.posterior_weights[p];
  }
  out.beta_mean = Matrix::Zero(data.n_species(), data.n_predictors());
  out.alpha_mean = Vector::Zero(data.n_species());
  for (std::size_t p = 0; p < count; ++p) {
    out.posterior_weights[p] /= total;
    out.beta_mean += out.posterior_weights[p] * out.conditional_beta_mean[p];
    out.alpha_mean += out.posterior_weights[p] * out.conditional_alpha_mean[p];
  }
  return out;
}

}  // namespace guildtree
