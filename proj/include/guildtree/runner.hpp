#pragma once
// Batch orchestration behind the command-line verbs: data preparation,
// chains with on-disk persistence and resume, summary tables and scores.

#include "guildtree/inference.hpp"
#include "guildtree/io.hpp"
#include "guildtree/oracle.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace guildtree {

inline constexpr const char* kEngineVersion = "0.1.0";

struct PreparedData {
  CommunityData data;  // all sites, holdout flags set
  PredictorScaling scaling;
  std::string sha256;
};

/// Ingests the CSV, assigns holdout sites from `holdout_fraction` when the
/// file has no holdout column, then standardizes on the fit sites.
PreparedData prepare_data(const RunConfig& cfg, const std::filesystem::path& data_path);

struct Scores {
  Waic in_sample;
  std::optional<double> neg2_lppd_holdout;
  long draws = 0;
};

struct ChainOutcome {
  std::filesystem::path directory;
  Scores scores;
  double slope_sd = 0.0;
  ModeTree mode;  // first period
};

/// Runs every configured chain; single-chain output goes to `out`, otherwise
/// to `out/chain_<c>`. Throws on failure after marking the manifest failed.
/// With `resume`, each chain restarts from its last checkpoint and the data
/// checksum must match the one recorded in the manifest.
std::vector<ChainOutcome> run_fit(const RunConfig& cfg, const std::filesystem::path& data_path,
                                  const std::filesystem::path& out, bool resume = false);

/// A finished run directory: configuration echo, re-prepared data (checksum
/// verified against the manifest) and the per-chain directories.
struct LoadedRun {
  RunConfig config;
  PreparedData prep;
  nlohmann::json manifest;
  std::vector<std::filesystem::path> chain_dirs;
};

LoadedRun load_run(const std::filesystem::path& run_dir);

/// Ingests an external holdout file with the run's schema and scaling; every
/// site is flagged holdout.
CommunityData load_holdout(const LoadedRun& run, const std::filesystem::path& path);

/// Guild counts, co-occurrence, coefficient and mode-tree tables plus a text report.
void write_summary(const std::filesystem::path& dir, Draws draws, const CommunityData& data);

Scores score_draws(Draws draws, const CommunityData& all_sites, const ScoreOptions& options);
void write_scores(const std::filesystem::path& path, const Scores& scores);

/// Across-species standard deviation of posterior-mean slopes.
double slope_spread(Draws draws, int period = 0, int predictor = 0);

/// Lag-1 autocorrelation; 0 for fewer than 3 values or zero variance.
double lag1_autocorrelation(std::span<const double> values);

/// Per-parameter retained-draw mean, sd and lag-1 autocorrelation.
nlohmann::json trace_diagnostics(Draws draws, const CommunityData& data, Family family);

struct SweepRow {
  double alpha = 0.0;
  Scores scores;
  double slope_sd = 0.0;
  int mode_guilds = 0;
  std::string mode_partition;
};

/// Fits each alpha on the same prepared data; runs alphas concurrently and
/// writes `out/alpha_<value>/` run directories plus `out/sweep.csv`.
std::vector<SweepRow> run_sweep(const RunConfig& cfg, const std::filesystem::path& data_path,
                                const std::vector<double>& alphas, const std::filesystem::path& out);

struct VerifyReport {
  Matrix engine_beta;
  Matrix oracle_beta;
  double max_abs_difference = 0.0;
  ModelAverage average;
  std::map<std::string, double> engine_partition_frequencies;
};

/// Engine versus exact model averaging on a probit data set (J <= 6).
VerifyReport verify_against_oracle(const CommunityData& data, const ChainConfig& chain,
                                   const ReferenceOptions& reference);
void write_verify_report(const std::filesystem::path& dir, const VerifyReport& report, const CommunityData& data,
                         double tolerance);

/// Draws from one chain in memory, dispatching on family.
std::vector<PosteriorDraw> run_chain(const CommunityData& fit_data, const ChainConfig& cfg, int chain = 0);

}  // namespace guildtree
