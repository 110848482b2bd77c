#pragma once

// Posterior post-processing over retained draws: guild structure summaries,
// species-level coefficients and predictive scores.

#include "guildtree/random.hpp"
#include "guildtree/types.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace guildtree {

using Draws = std::span<const PosteriorDraw>;

/// Posterior pmf of the number of guilds in `period`.
std::map<int, double> guild_count_distribution(Draws draws, int period = 0);

/// Fraction of draws in which species j and j' share a guild.
Matrix cooccurrence_matrix(Draws draws, int period = 0);

struct ModeTree {
  GuildTree tree;
  GuildPartition partition;  // canonical guild order
  double probability = 0.0;
};

/// Most frequent induced partition; ties go to the one seen first.
ModeTree mode_tree(Draws draws, int period = 0);

/// Partition encoding -> posterior frequency.
std::map<std::string, double> partition_frequencies(Draws draws, int period = 0);

struct Summary {
  double mean = 0.0;
  double sd = 0.0;
  double q025 = 0.0;
  double q50 = 0.0;
  double q975 = 0.0;
};

Summary summarize(std::vector<double> values);

/// Monte Carlo standard error of the mean by non-overlapping batch means.
double batch_means_mcse(std::span<const double> values, int batches = 50);

struct GuildCoefficientSummary {
  std::vector<int> members;
  std::vector<Summary> by_predictor;
};

struct CoefficientPosteriors {
  std::vector<Summary> intercepts;                         // J
  std::vector<std::vector<std::vector<Summary>>> species;  // period -> J -> K
  /// Per period, guild coefficients over draws whose partition equals the
  /// mode partition. Valid only conditionally on that guild structure.
  std::vector<std::vector<GuildCoefficientSummary>> mode_guilds;
  std::vector<long> mode_guild_draws;
};

CoefficientPosteriors coefficient_posteriors(Draws draws);

/// Per-draw species-level coefficient beta_{j,k} for one period.
std::vector<double> species_coefficient_trace(Draws draws, int period, int species, int predictor);

struct ScoreOptions {
  Family family = Family::probit;
  int latent_draws = 32;  // fresh z draws per retained draw and cell (zip)
  std::uint64_t seed = 7;
};

/// Log predictive density of every cell (site-major, row i*J + j) under one draw.
Vector pointwise_log_likelihood(const PosteriorDraw& draw, const CommunityData& data, const ScoreOptions& options,
                                Rng& rng);

struct Waic {
  double waic = 0.0;
  double lppd = 0.0;
  double p_eff = 0.0;
};

/// lppd = sum over cells of log mean likelihood; p_eff = sum over cells of the
/// sample (n - 1) variance of log likelihood; waic = -2 (lppd - p_eff).
Waic waic(Draws draws, const CommunityData& data, const ScoreOptions& options);

/// -2 times the summed log mean predictive density over the holdout cells.
double lppd_holdout(Draws draws, const CommunityData& holdout, const ScoreOptions& options);

struct PosteriorSummary {
  std::vector<std::map<int, double>> guild_count_pmf;  // per period
  std::vector<Matrix> cooccurrence;
  std::vector<ModeTree> mode;
  CoefficientPosteriors coefficients;
};

PosteriorSummary summarize_posterior(Draws draws);

}  // namespace guildtree
