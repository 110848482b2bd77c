#include "guildtree/zip.hpp"

#include <algorithm>
#include <cmath>

namespace guildtree {

ZipState initial_zip_state(const CommunityData& data) {
  const int n = data.n_sites();
  const int j_count = data.n_species();
  ZipState state;
  state.z = data.responses.cast<double>().unaryExpr([](double y) { return std::log(y + 0.5); });
  state.w = data.responses.unaryExpr([](int y) { return y == 0 ? 1 : 0; });
  const double zero_fraction = static_cast<double>(state.w.sum()) / static_cast<double>(n * j_count);
  state.phi = std::clamp(0.5 * zero_fraction, 0.05, 0.95);
  state.sigma2 = 1.0;
  state.regression = RegressionState::initial(state.z.colwise().mean().transpose(), data.n_periods(),
                                              data.n_predictors());
  state.log_step.resize(n, j_count);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < j_count; ++j) {
      const double information = 1.0 / state.sigma2 + std::max(1, data.responses(i, j));
      state.log_step(i, j) = std::log(2.4 / std::sqrt(information));
    }
  state.accepted = CountMatrix::Zero(n, j_count);
  state.attempted = CountMatrix::Zero(n, j_count);
  return state;
}

void update_inflation_indicators(ZipState& state, const CommunityData& data, Rng& rng) {
  for (int j = 0; j < data.n_species(); ++j)
    for (int i = 0; i < data.n_sites(); ++i)
      state.w(i, j) = data.responses(i, j) > 0 ? 0 : (rng.bernoulli(structural_zero_probability(state.phi, state.z(i, j))) ? 1 : 0);
}

double update_phi(const CountMatrix& w, Rng& rng, double prior_a, double prior_b) {
  const double ones = static_cast<double>(w.sum());
  const double zeros = static_cast<double>(w.size()) - ones;
  return rng.beta(prior_a + ones, prior_b + zeros);
}

void update_latent_z(ZipState& state, const CommunityData& data, const Matrix& mu, Rng& rng, bool adapt) {
  const double sd = std::sqrt(state.sigma2);
  for (int j = 0; j < data.n_species(); ++j) {
    for (int i = 0; i < data.n_sites(); ++i) {
      if (state.w(i, j) == 1) {
        state.z(i, j) = rng.normal(mu(i, j), sd);
        continue;
      }
      const long y = data.responses(i, j);
      const auto log_lik = [y](double z) { return static_cast<double>(y) * z - std::exp(z); };
      const bool ok = metropolis_latent_step(state.z(i, j), mu(i, j), state.sigma2, std::exp(state.log_step(i, j)),
                                             log_lik, rng);
      if (adapt) {
        ++state.attempted(i, j);
        if (ok) ++state.accepted(i, j);
      }
    }
  }
  if (!adapt) return;
  if (state.attempted.maxCoeff() < kAdaptationBatch) return;
  ++state.batches;
  const double delta = std::min(0.25, 1.0 / std::sqrt(static_cast<double>(state.batches)));
  for (Eigen::Index c = 0; c < state.log_step.size(); ++c) {
    const int tried = state.attempted(c);
    if (tried == 0) continue;
    const double rate = static_cast<double>(state.accepted(c)) / tried;
    state.log_step(c) += rate > kTargetAcceptance ? delta : -delta;
  }
  state.accepted.setZero();
  state.attempted.setZero();
}

double update_sigma2(const Matrix& z, const Matrix& mu, const ZipPriors& priors, Rng& rng) {
  const double ss = (z - mu).squaredNorm();
  const double m = static_cast<double>(z.size());
  return rng.inverse_gamma(priors.sigma2_shape + 0.5 * m, priors.sigma2_scale + 0.5 * ss);
}

void check_zip_invariants(const ZipState& state, const CommunityData& data) {
  for (int i = 0; i < data.n_sites(); ++i)
    for (int j = 0; j < data.n_species(); ++j)
      if (data.responses(i, j) > 0 && state.w(i, j) != 0)
        throw InvalidInput("structural-zero flag set on a positive count at site " + std::to_string(i + 1) +
                           ", species " + std::to_string(j + 1));
  if (!(state.sigma2 > 0.0)) throw InvalidInput("process variance must stay positive");
  if (!(state.phi >= 0.0 && state.phi <= 1.0))
    throw InvalidInput("mixture probability left [0, 1]");
}

void gibbs_step_zip(ZipState& state, const CommunityData& data, const ZipPriors& priors,
                    const std::vector<LearnerConfig>& learners, Rng& rng, const ZipStepOptions& options) {
  Matrix mu = linear_predictor(data, state.regression);
  update_inflation_indicators(state, data, rng);
  if (options.check_invariants) check_zip_invariants(state, data);
  state.phi = options.fixed_phi ? *options.fixed_phi : update_phi(state.w, rng, priors.phi_a, priors.phi_b);
  update_latent_z(state, data, mu, rng, options.adapt);
  if (!state.z.allFinite()) throw std::runtime_error("non-finite latent abundance");
  state.sigma2 = options.fixed_sigma2 ? *options.fixed_sigma2 : update_sigma2(state.z, mu, priors, rng);
  if (options.update_regression) {
    state.learner_warnings += update_guilds(state.regression, state.z, data, state.sigma2, priors.gamma_variance,
                                            learners, rng, options.guilds);
    update_intercepts(state.regression, state.z, data, state.sigma2, priors.intercept_variance, rng);
  }
  if (options.check_invariants) check_zip_invariants(state, data);
}

PosteriorDraw snapshot_zip(const ZipState& state) {
  PosteriorDraw draw;
  draw.coefficients.alpha = state.regression.alpha;
  draw.coefficients.partitions = state.regression.partitions;
  draw.coefficients.gamma = state.regression.gamma;
  draw.trees = state.regression.trees;
  draw.phi = state.phi;
  draw.sigma2 = state.sigma2;
  return draw;
}

std::vector<PosteriorDraw> run_chain_zip(const CommunityData& data, const ChainConfig& cfg, Rng& rng,
                                         const ChainCallbacks<ZipState>& callbacks, const Checkpoint<ZipState>* resume,
                                         const ZipStepOptions& base_options) {
  data.validate(Family::zip);
  const int n_periods = data.n_periods();
  cfg.validate(n_periods);
  const auto learners = cfg.learners(n_periods);
  ZipState state = resume ? resume->state : initial_zip_state(data);
  if (!resume && base_options.fixed_phi) state.phi = *base_options.fixed_phi;
  if (!resume && base_options.fixed_sigma2) state.sigma2 = *base_options.fixed_sigma2;
  Rng chain_rng = resume ? resume->rng : rng;
  const long start = resume ? resume->iteration : 0;
  const long adapt_until = cfg.schedule.burn_iterations();
  return drive_chain(
      std::move(state), std::move(chain_rng), start, cfg.schedule,
      [&](ZipState& s, Rng& r, long it) {
        ZipStepOptions options = base_options;
        options.adapt = cfg.adapt_proposals && it <= adapt_until;
        options.check_invariants = options.check_invariants || cfg.check_invariants;
        gibbs_step_zip(s, data, cfg.zip, learners, r, options);
      },
      [](const ZipState& s) { return snapshot_zip(s); }, callbacks);
}

}  // namespace guildtree
