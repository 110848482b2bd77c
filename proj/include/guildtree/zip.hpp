#pragma once

// Metropolis-within-Gibbs sampler for zero-inflated Poisson abundance data.
//
// y_{i,j} = 0 with probability phi (structural zero, w = 1); otherwise
// y_{i,j} ~ Poisson(exp(z_{i,j})) with z_{i,j} ~ N(mu_{i,j}, sigma2). Guild
// trees and coefficients may differ between sampling periods; intercepts are
// shared.

#include "guildtree/chain_config.hpp"
#include "guildtree/regression.hpp"
#include "guildtree/special.hpp"

#include <cmath>
#include <optional>
#include <vector>

namespace guildtree {

inline constexpr double kTargetAcceptance = 0.44;
inline constexpr int kAdaptationBatch = 50;

struct ZipState {
  Matrix z;         // log-scale latent process
  CountMatrix w;    // 1 = structural zero
  double phi = 0.5;
  double sigma2 = 1.0;
  RegressionState regression;
  Matrix log_step;         // random-walk proposal log sd per cell
  CountMatrix accepted;    // acceptances in the current adaptation batch
  CountMatrix attempted;
  long batches = 0;
  long learner_warnings = 0;
};

ZipState initial_zip_state(const CommunityData& data);

/// P(w = 1 | y = 0, z, phi).
inline double structural_zero_probability(double phi, double z) {
  const double poisson_zero = std::exp(-std::exp(z));
  return phi / (phi + (1.0 - phi) * poisson_zero);
}

void update_inflation_indicators(ZipState& state, const CommunityData& data, Rng& rng);

/// phi ~ Beta(a + sum w, b + sum (1 - w)).
double update_phi(const CountMatrix& w, Rng& rng, double prior_a = 1.0, double prior_b = 1.0);

/// One random-walk Metropolis step on a scalar latent with an N(mean, variance)
/// prior and log-likelihood `log_lik`. Returns true on acceptance.
template <class LogLik>
bool metropolis_latent_step(double& z, double mean, double variance, double step_sd, LogLik&& log_lik, Rng& rng) {
  const double proposal = z + step_sd * rng.normal();
  const double dc = z - mean;
  const double dp = proposal - mean;
  const double log_ratio = log_lik(proposal) - log_lik(z) - 0.5 * (dp * dp - dc * dc) / variance;
  if (log_ratio >= 0.0 || std::log(rng.uniform()) < log_ratio) {
    z = proposal;
    return true;
  }
  return false;
}

/// Exact N(mu, sigma2) draws where w = 1, one Metropolis step elsewhere.
/// With `adapt`, proposal scales move toward 0.44 acceptance after every
/// batch of 50 iterations.
void update_latent_z(ZipState& state, const CommunityData& data, const Matrix& mu, Rng& rng, bool adapt);

/// sigma2 ~ IG(shape + m/2, scale + SS/2) over all m cells.
double update_sigma2(const Matrix& z, const Matrix& mu, const ZipPriors& priors, Rng& rng);

struct ZipStepOptions {
  bool adapt = false;
  bool check_invariants = false;
  std::optional<double> fixed_phi;
  std::optional<double> fixed_sigma2;
  bool update_regression = true;
  GuildUpdateOptions guilds;
};

void check_zip_invariants(const ZipState& state, const CommunityData& data);

void gibbs_step_zip(ZipState& state, const CommunityData& data, const ZipPriors& priors,
                    const std::vector<LearnerConfig>& learners, Rng& rng, const ZipStepOptions& options = {});

PosteriorDraw snapshot_zip(const ZipState& state);

std::vector<PosteriorDraw> run_chain_zip(const CommunityData& data, const ChainConfig& cfg, Rng& rng,
                                         const ChainCallbacks<ZipState>& callbacks = {},
                                         const Checkpoint<ZipState>* resume = nullptr,
                                         const ZipStepOptions& base_options = {});

}  // namespace guildtree
