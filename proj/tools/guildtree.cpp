// Command-line front end: fit, simulate, score, summarize, verify, sweep.

#include "guildtree/design.hpp"
#include "guildtree/runner.hpp"
#include "guildtree/simulate.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace guildtree;

namespace {

std::vector<double> parse_alphas(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw InvalidInput("bad alpha value '" + item + "'");
    out.push_back(v);
  }
  return out;
}

void print_scores(const Scores& s) {
  std::cout << "waic " << format_double(s.in_sample.waic) << "  lppd " << format_double(s.in_sample.lppd)
            << "  p_eff " << format_double(s.in_sample.p_eff);
  if (s.neg2_lppd_holdout) std::cout << "  -2*lppd(holdout) " << format_double(*s.neg2_lppd_holdout);
  std::cout << "  draws " << s.draws << '\n';
}

fs::path truth_path(const fs::path& csv) {
  fs::path p = csv;
  p.replace_extension(".truth.json");
  return p;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tree shrinkage prior engine for multi-species distribution models"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kEngineVersion);

  std::string config_path, data_path, out_path, run_path, spec_path, holdout_path;
  std::string alphas_text = "0,0.025,0.1,0.5,1";
  bool resume = false;
  std::uint64_t seed = 3;
  long iterations = 20000;
  double tolerance = 0.1;

  auto* fit = app.add_subcommand("fit", "Run the sampler and write draws, summaries, scores and a manifest");
  fit->add_option("--config", config_path, "JSON run configuration")->required()->check(CLI::ExistingFile);
  fit->add_option("--data", data_path, "community CSV")->required()->check(CLI::ExistingFile);
  fit->add_option("--out", out_path, "output directory")->required();
  fit->add_flag("--resume", resume, "continue from the last checkpoint in --out");

  auto* sim = app.add_subcommand("simulate", "Generate a synthetic community CSV plus a truth sidecar");
  sim->add_option("--spec", spec_path, "JSON simulation spec")->required()->check(CLI::ExistingFile);
  sim->add_option("--out", out_path, "output CSV path")->required();

  auto* score = app.add_subcommand("score", "Recompute WAIC and holdout scores for a finished run");
  score->add_option("--run", run_path, "run directory")->required()->check(CLI::ExistingDirectory);
  score->add_option("--holdout", holdout_path, "external holdout CSV (same schema)");

  auto* summarize = app.add_subcommand("summarize", "Rewrite posterior summary tables for a finished run");
  summarize->add_option("--run", run_path, "run directory")->required()->check(CLI::ExistingDirectory);

  auto* verify = app.add_subcommand("verify", "Compare the engine with exact model averaging on a small problem");
  verify->add_option("--out", out_path, "report directory")->required();
  verify->add_option("--config", config_path, "JSON run configuration (default: synthetic J = 3 problem)")
      ->check(CLI::ExistingFile);
  verify->add_option("--data", data_path, "community CSV (with --config)")->check(CLI::ExistingFile);
  verify->add_option("--seed", seed, "seed of the synthetic problem");
  verify->add_option("--iterations", iterations, "engine iterations for the synthetic problem");
  verify->add_option("--tolerance", tolerance, "largest acceptable coefficient difference");

  auto* sweep = app.add_subcommand("sweep", "Fit an alpha grid and tabulate scores");
  sweep->add_option("--config", config_path, "JSON run configuration")->required()->check(CLI::ExistingFile);
  sweep->add_option("--data", data_path, "community CSV")->required()->check(CLI::ExistingFile);
  sweep->add_option("--out", out_path, "output directory")->required();
  sweep->add_option("--alphas", alphas_text, "comma-separated alpha grid");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*fit) {
      const RunConfig cfg = load_run_config(config_path);
      const auto outcomes = run_fit(cfg, data_path, out_path, resume);
      for (const auto& o : outcomes) {
        std::cout << o.directory.string() << ": mode partition " << o.mode.partition.encode() << " ("
                  << format_double(o.mode.probability) << ")\n  ";
        print_scores(o.scores);
      }
    } else if (*sim) {
      std::ifstream in(spec_path);
      const SimSpec spec = sim_spec_from_json(nlohmann::json::parse(in));
      const SimResult result = simulate(spec);
      const fs::path out = out_path;
      if (out.has_parent_path()) fs::create_directories(out.parent_path());
      write_community_csv(out, result.data);
      std::ofstream truth(truth_path(out));
      truth << truth_to_json(result.truth).dump(2) << '\n';
      std::cout << "wrote " << out.string() << " and " << truth_path(out).string() << '\n';
    } else if (*score) {
      const LoadedRun run = load_run(run_path);
      const ScoreOptions options{run.config.chain.family, run.config.score_latent_draws, run.config.score_seed};
      const CommunityData fit_data = run.prep.data.fit_sites();
      std::optional<CommunityData> external;
      if (!holdout_path.empty()) {
        if (!fs::exists(holdout_path)) throw InvalidInput("holdout file " + holdout_path + " does not exist");
        external = load_holdout(run, holdout_path);
      }
      for (const auto& dir : run.chain_dirs) {
        const auto draws = read_draws(dir / "draws.csv", fit_data.n_species(), fit_data.n_predictors());
        Scores s;
        if (external) {
          s.draws = static_cast<long>(draws.size());
          s.in_sample = waic(draws, fit_data, options);
          s.neg2_lppd_holdout = lppd_holdout(draws, *external, options);
        } else {
          s = score_draws(draws, run.prep.data, options);
        }
        write_scores(dir / "scores.csv", s);
        std::cout << dir.string() << ": ";
        print_scores(s);
      }
    } else if (*summarize) {
      const LoadedRun run = load_run(run_path);
      const CommunityData fit_data = run.prep.data.fit_sites();
      for (const auto& dir : run.chain_dirs) {
        const auto draws = read_draws(dir / "draws.csv", fit_data.n_species(), fit_data.n_predictors());
        write_summary(dir, draws, fit_data);
        std::cout << "wrote summary tables to " << dir.string() << '\n';
      }
    } else if (*verify) {
      CommunityData data;
      ChainConfig chain;
      if (!config_path.empty()) {
        if (data_path.empty()) throw InvalidInput("--config needs --data");
        const RunConfig cfg = load_run_config(config_path);
        data = prepare_data(cfg, data_path).data;
        chain = cfg.chain;
      } else {
        SimSpec spec = two_guild_probit_spec(3, 100, -1.0, 1.0, seed);
        spec.partitions = {GuildPartition(std::vector<int>{0, 0, 1})};
        data = simulate(spec).data;
        chain.alpha = {0.05};
        chain.schedule = ChainSchedule{iterations, 10, std::min(500L, iterations / 20)};
        chain.seed = seed;
      }
      const VerifyReport report = verify_against_oracle(data, chain, ReferenceOptions{});
      write_verify_report(out_path, report, data, tolerance);
      const bool ok = report.max_abs_difference <= tolerance;
      std::cout << "max |engine - oracle| = " << format_double(report.max_abs_difference) << " (tolerance "
                << format_double(tolerance) << "): " << (ok ? "PASS" : "FAIL") << '\n';
      return ok ? 0 : 3;
    } else if (*sweep) {
      const RunConfig cfg = load_run_config(config_path);
      const auto rows = run_sweep(cfg, data_path, parse_alphas(alphas_text), out_path);
      for (const auto& r : rows) {
        std::cout << "alpha " << format_double(r.alpha) << ": mode guilds " << r.mode_guilds << ", slope sd "
                  << format_double(r.slope_sd) << ", ";
        print_scores(r.scores);
      }
    }
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
