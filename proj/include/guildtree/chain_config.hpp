#pragma once

// Run configuration shared by both samplers, and the generic chain driver.

#include "guildtree/random.hpp"
#include "guildtree/tree_learner.hpp"
#include "guildtree/types.hpp"

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace guildtree {

struct ProbitPriors {
  double intercept_variance = 1.0;  // Phi(alpha_j) ~ unif(0, 1)
  double gamma_variance = 10.0;

  void validate() const;
};

struct ZipPriors {
  double intercept_variance = 1000.0;
  double gamma_variance = 10.0;
  double sigma2_shape = 2.01;
  double sigma2_scale = 1.0;
  double phi_a = 1.0;  // Beta(1, 1) = unif(0, 1)
  double phi_b = 1.0;

  void validate() const;
};

/// Iteration count, thinning interval and burn-in (counted in thinned draws).
struct ChainSchedule {
  long iterations = 100000;
  long thin = 10;
  long burn = 500;

  void validate() const;
  long thinned() const { return iterations / thin; }
  long retained() const { return thinned() - burn; }
  long burn_iterations() const { return burn * thin; }
};

struct ChainConfig {
  Family family = Family::probit;
  /// One learner threshold per period, or a single shared value. Empty means
  /// the family default (0.025 probit, 0.01 zip).
  std::vector<double> alpha;
  ChainSchedule schedule;
  std::uint64_t seed = 1;
  int chains = 1;
  ProbitPriors probit;
  ZipPriors zip;
  int min_node_species = 1;
  int max_exhaustive_subset = 12;
  bool adapt_proposals = true;
  /// Assert the auxiliary-sign and inflation-indicator invariants every iteration.
  bool check_invariants = false;

  void validate(int n_periods = 1) const;
  LearnerConfig learner(int period) const;
  std::vector<LearnerConfig> learners(int n_periods) const;
};

/// Raised when a sampler step fails; carries the iteration that failed.
class SamplerError : public std::runtime_error {
 public:
  SamplerError(const std::string& what, long iteration)
      : std::runtime_error(what + " (iteration " + std::to_string(iteration) + ")"), iteration_(iteration) {}
  long iteration() const { return iteration_; }

 private:
  long iteration_;
};

template <class State>
struct Checkpoint {
  State state;
  Rng rng;
  long iteration = 0;
};

template <class State>
struct ChainCallbacks {
  std::function<void(const PosteriorDraw&)> on_draw;
  std::function<void(const Checkpoint<State>&)> on_checkpoint;
  long checkpoint_every = 0;  // in thinned draws; 0 disables
};

/// Runs `step(state, rng, iteration)` from `start + 1` to the scheduled
/// iteration count and returns retained draws (numbered from 1).
template <class State, class Step, class Snapshot>
std::vector<PosteriorDraw> drive_chain(State state, Rng rng, long start, const ChainSchedule& schedule,
                                       Step&& step, Snapshot&& snapshot,
                                       const ChainCallbacks<State>& callbacks) {
  schedule.validate();
  std::vector<PosteriorDraw> draws;
  draws.reserve(static_cast<std::size_t>(std::max(0L, schedule.retained())));
  for (long it = start + 1; it <= schedule.iterations; ++it) {
    try {
      step(state, rng, it);
    } catch (const SamplerError&) {
      throw;
    } catch (const std::exception& e) {
      throw SamplerError(e.what(), it);
    }
    if (it % schedule.thin != 0) continue;
    const long thinned = it / schedule.thin;
    if (thinned > schedule.burn) {
      PosteriorDraw draw = snapshot(state);
      draw.draw_index = thinned - schedule.burn;
      if (callbacks.on_draw) callbacks.on_draw(draw);
      draws.push_back(std::move(draw));
    }
    if (callbacks.on_checkpoint && callbacks.checkpoint_every > 0 && thinned % callbacks.checkpoint_every == 0)
      callbacks.on_checkpoint(Checkpoint<State>{state, rng, it});
  }
  return draws;
}

}  // namespace guildtree
