#include "guildtree/probit.hpp"

#include "guildtree/special.hpp"

#include <algorithm>
#include <cmath>

namespace guildtree {

ProbitState initial_probit_state(const CommunityData& data) {
  const int j_count = data.n_species();
  Vector alpha(j_count);
  for (int j = 0; j < j_count; ++j) {
    const double prevalence = data.responses.col(j).cast<double>().mean();
    alpha(j) = normal_quantile(std::clamp(prevalence, 0.01, 0.99));
  }
  ProbitState state;
  state.regression = RegressionState::initial(alpha, data.n_periods(), data.n_predictors());
  state.aux = data.responses.cast<double>().unaryExpr([](double y) { return y > 0.0 ? 0.5 : -0.5; });
  return state;
}

void check_probit_invariants(const ProbitState& state, const CommunityData& data) {
  for (int i = 0; i < data.n_sites(); ++i)
    for (int j = 0; j < data.n_species(); ++j)
      if ((state.aux(i, j) > 0.0) != (data.responses(i, j) == 1))
        throw InvalidInput("auxiliary sign disagrees with response at site " + std::to_string(i + 1) +
                           ", species " + std::to_string(j + 1));
}

void gibbs_step_probit(ProbitState& state, const CommunityData& data, const ProbitPriors& priors,
                       const std::vector<LearnerConfig>& learners, Rng& rng, const ProbitStepOptions& options) {
  const Matrix mu = linear_predictor(data, state.regression);
  for (int j = 0; j < data.n_species(); ++j) {
    for (int i = 0; i < data.n_sites(); ++i) {
      const auto side = data.responses(i, j) == 1 ? TruncationSide::positive : TruncationSide::negative;
      state.aux(i, j) = sample_truncated_normal(mu(i, j), 1.0, side, rng);
    }
  }
  if (!state.aux.allFinite()) throw std::runtime_error("non-finite auxiliary variable");
  if (options.check_invariants) check_probit_invariants(state, data);

  state.learner_warnings += update_guilds(state.regression, state.aux, data, 1.0, priors.gamma_variance, learners,
                                          rng, options.guilds);
  update_intercepts(state.regression, state.aux, data, 1.0, priors.intercept_variance, rng);
  if (!state.regression.alpha.allFinite()) throw std::runtime_error("non-finite intercept");
}

PosteriorDraw snapshot_probit(const ProbitState& state) {
  PosteriorDraw draw;
  draw.coefficients.alpha = state.regression.alpha;
  draw.coefficients.partitions = state.regression.partitions;
  draw.coefficients.gamma = state.regression.gamma;
  draw.trees = state.regression.trees;
  return draw;
}

std::vector<PosteriorDraw> run_chain_probit(const CommunityData& data, const ChainConfig& cfg, Rng& rng,
                                            const ChainCallbacks<ProbitState>& callbacks,
                                            const Checkpoint<ProbitState>* resume,
                                            const GuildUpdateOptions& guild_options) {
  data.validate(Family::probit);
  const int n_periods = data.n_periods();
  cfg.validate(n_periods);
  const auto learners = cfg.learners(n_periods);
  ProbitStepOptions options{cfg.check_invariants, guild_options};
  ProbitState state = resume ? resume->state : initial_probit_state(data);
  Rng chain_rng = resume ? resume->rng : rng;
  const long start = resume ? resume->iteration : 0;
  auto draws = drive_chain(
      std::move(state), std::move(chain_rng), start, cfg.schedule,
      [&](ProbitState& s, Rng& r, long) { gibbs_step_probit(s, data, cfg.probit, learners, r, options); },
      [](const ProbitState& s) { return snapshot_probit(s); }, callbacks);
  return draws;
}

}  // namespace guildtree
