#pragma once

// File formats: community CSV, draws CSV, JSON configuration and checkpoints.
// The byte-level layout of each format is documented in docs/FORMATS.md.

#include "guildtree/chain_config.hpp"
#include "guildtree/probit.hpp"
#include "guildtree/simulate.hpp"
#include "guildtree/types.hpp"
#include "guildtree/zip.hpp"

#include "json.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace guildtree {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

struct IngestSchema {
  Family family = Family::probit;
  std::vector<std::string> species;     // response columns
  std::vector<std::string> predictors;  // predictor columns
  bool standardize = true;
};

struct PredictorScaling {
  std::vector<double> center;
  std::vector<double> scale;
};

struct IngestResult {
  CommunityData data;
  PredictorScaling scaling;  // identity when not standardized
};

/// Reads a community CSV. Recognized columns: `site` (ignored label),
/// `period` (1-based), `holdout` (0/1), the declared species and predictors.
/// Any other column is rejected. With `standardize`, predictors are centred
/// and scaled by the mean and sample sd of the non-holdout sites.
IngestResult ingest(const std::filesystem::path& path, const IngestSchema& schema);
IngestResult ingest(std::istream& in, const IngestSchema& schema, const std::string& source = "<stream>");

/// Centres and scales predictors by the mean and sample sd of the non-holdout
/// sites (a zero sd leaves the scale at 1) and returns the constants used.
PredictorScaling standardize_predictors(CommunityData& data);
void apply_scaling(CommunityData& data, const PredictorScaling& scaling);

/// Flags round(fraction * n) sites as holdout, chosen by a seeded shuffle.
void assign_holdout(CommunityData& data, double fraction, std::uint64_t seed);

void write_community_csv(const std::filesystem::path& path, const CommunityData& data);
void write_community_csv(std::ostream& out, const CommunityData& data);

nlohmann::json truth_to_json(const SimTruth& truth);
SimSpec sim_spec_from_json(const nlohmann::json& j);

/// Draws table: draw, alpha per species, partition and gamma per period, phi, sigma2.
void write_draws_header(std::ostream& out, const CommunityData& data, int n_periods);
void write_draw_row(std::ostream& out, const PosteriorDraw& draw, Family family);
std::vector<PosteriorDraw> read_draws(const std::filesystem::path& path, int n_species, int n_predictors);

struct RunConfig {
  ChainConfig chain;
  std::vector<std::string> species;
  std::vector<std::string> predictors;
  bool standardize = true;
  std::optional<double> holdout_fraction;
  long checkpoint_every = 100;  // thinned draws between checkpoints
  int score_latent_draws = 32;
  std::uint64_t score_seed = 7;
};

RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::json run_config_to_json(const RunConfig& cfg);
RunConfig load_run_config(const std::filesystem::path& path);

nlohmann::json checkpoint_to_json(const Checkpoint<ProbitState>& cp);
nlohmann::json checkpoint_to_json(const Checkpoint<ZipState>& cp);
Checkpoint<ProbitState> probit_checkpoint_from_json(const nlohmann::json& j);
Checkpoint<ZipState> zip_checkpoint_from_json(const nlohmann::json& j);

/// Hex SHA-256 of a file's bytes.
std::string file_sha256(const std::filesystem::path& path);

}  // namespace guildtree
