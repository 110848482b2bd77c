#include "guildtree/runner.hpp"

#include "guildtree/design.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

namespace guildtree {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw InvalidInput(path.string() + ": " + e.what());
  }
}

// Write-then-rename so a crash never leaves a half-written file behind.
void write_json_atomic(const fs::path& path, const json& j) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw InvalidInput("cannot write " + tmp.string());
    out << j.dump(2) << '\n';
  }
  fs::rename(tmp, path);
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write " + path.string());
  return out;
}

std::string members_label(const std::vector<int>& members) {
  std::string s;
  for (std::size_t m = 0; m < members.size(); ++m) s += (m ? "+" : "") + std::to_string(members[m] + 1);
  return s;
}

// Keeps the header and the first `rows` data lines of a draws file.
void truncate_draws(const fs::path& path, long rows) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot resume: " + path.string() + " is missing");
  std::string kept;
  std::string line;
  long seen = -1;
  while (seen < rows && std::getline(in, line)) {
    kept += line + '\n';
    ++seen;
  }
  if (seen < rows)
    throw InvalidInput("cannot resume: " + path.string() + " holds fewer draws than the checkpoint expects");
  in.close();
  std::ofstream out(path, std::ios::trunc);
  out << kept;
}

template <class State, class Run, class FromJson>
void persisted_chain(const CommunityData& fit, const RunConfig& cfg, int chain, const fs::path& dir, bool resume,
                     Run&& run, FromJson&& from_json) {
  fs::create_directories(dir);
  const fs::path draws_path = dir / "draws.csv";
  const fs::path cp_path = dir / "checkpoint.json";
  const ChainSchedule& schedule = cfg.chain.schedule;

  std::optional<Checkpoint<State>> cp;
  if (resume && fs::exists(cp_path)) cp = from_json(read_json(cp_path));
  std::ofstream out;
  if (cp) {
    truncate_draws(draws_path, std::max(0L, cp->iteration / schedule.thin - schedule.burn));
    out.open(draws_path, std::ios::app);
  } else {
    out.open(draws_path, std::ios::trunc);
    write_draws_header(out, fit, fit.n_periods());
  }
  if (!out) throw InvalidInput("cannot write " + draws_path.string());

  ChainCallbacks<State> callbacks;
  callbacks.on_draw = [&](const PosteriorDraw& d) { write_draw_row(out, d, cfg.chain.family); };
  callbacks.on_checkpoint = [&](const Checkpoint<State>& c) {
    out.flush();
    write_json_atomic(cp_path, checkpoint_to_json(c));
  };
  callbacks.checkpoint_every = cfg.checkpoint_every;
  Rng rng = Rng::stream(cfg.chain.seed, static_cast<std::uint64_t>(chain));
  run(fit, cfg.chain, rng, callbacks, cp ? &*cp : nullptr);
  out.flush();
}

}  // namespace

PreparedData prepare_data(const RunConfig& cfg, const fs::path& data_path) {
  IngestSchema schema{cfg.chain.family, cfg.species, cfg.predictors, false};
  PreparedData prep;
  prep.data = ingest(data_path, schema).data;
  prep.sha256 = file_sha256(data_path);
  if (cfg.holdout_fraction && prep.data.holdout.empty())
    assign_holdout(prep.data, *cfg.holdout_fraction, cfg.chain.seed);
  prep.scaling.center.assign(static_cast<std::size_t>(prep.data.n_predictors()), 0.0);
  prep.scaling.scale.assign(static_cast<std::size_t>(prep.data.n_predictors()), 1.0);
  if (cfg.standardize) prep.scaling = standardize_predictors(prep.data);
  prep.data.validate(cfg.chain.family);
  return prep;
}

std::vector<PosteriorDraw> run_chain(const CommunityData& fit_data, const ChainConfig& cfg, int chain) {
  Rng rng = Rng::stream(cfg.seed, static_cast<std::uint64_t>(chain));
  return cfg.family == Family::probit ? run_chain_probit(fit_data, cfg, rng) : run_chain_zip(fit_data, cfg, rng);
}

double lag1_autocorrelation(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 3) return 0.0;
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    den += (values[i] - mean) * (values[i] - mean);
    if (i + 1 < n) num += (values[i] - mean) * (values[i + 1] - mean);
  }
  return den > 0.0 ? num / den : 0.0;
}

json trace_diagnostics(Draws draws, const CommunityData& data, Family family) {
  json out = json::object();
  const auto add = [&](const std::string& name, const std::vector<double>& v) {
    const Summary s = summarize(v);
    out[name] = {{"mean", s.mean}, {"sd", s.sd}, {"lag1_autocorrelation", lag1_autocorrelation(v)}};
  };
  if (draws.empty()) return out;
  const int j_count = data.n_species();
  std::vector<double> v(draws.size());
  for (int j = 0; j < j_count; ++j) {
    for (std::size_t d = 0; d < draws.size(); ++d) v[d] = draws[d].coefficients.alpha(j);
    add("alpha_" + data.species_names[j], v);
  }
  for (int t = 0; t < draws.front().n_periods(); ++t) {
    const std::string period = std::to_string(t + 1);
    for (int j = 0; j < j_count; ++j)
      for (int k = 0; k < data.n_predictors(); ++k)
        add("beta_" + period + "_" + data.species_names[j] + "_" + data.predictor_names[k],
            species_coefficient_trace(draws, t, j, k));
    for (std::size_t d = 0; d < draws.size(); ++d) v[d] = draws[d].coefficients.partitions[t].n_guilds();
    add("guilds_" + period, v);
  }
  if (family == Family::zip) {
    for (std::size_t d = 0; d < draws.size(); ++d) v[d] = draws[d].phi;
    add("phi", v);
    for (std::size_t d = 0; d < draws.size(); ++d) v[d] = draws[d].sigma2;
    add("sigma2", v);
  }
  return out;
}

double slope_spread(Draws draws, int period, int predictor) {
  if (draws.empty()) throw InvalidInput("no draws");
  const int j_count = static_cast<int>(draws.front().coefficients.alpha.size());
  if (j_count < 2) return 0.0;
  std::vector<double> means(static_cast<std::size_t>(j_count));
  for (int j = 0; j < j_count; ++j) {
    const auto trace = species_coefficient_trace(draws, period, j, predictor);
    means[static_cast<std::size_t>(j)] = std::accumulate(trace.begin(), trace.end(), 0.0) / static_cast<double>(trace.size());
  }
  const double mean = std::accumulate(means.begin(), means.end(), 0.0) / j_count;
  double ss = 0.0;
  for (double m : means) ss += (m - mean) * (m - mean);
  return std::sqrt(ss / (j_count - 1.0));
}

Scores score_draws(Draws draws, const CommunityData& all_sites, const ScoreOptions& options) {
  Scores s;
  s.draws = static_cast<long>(draws.size());
  s.in_sample = waic(draws, all_sites.fit_sites(), options);
  if (all_sites.has_holdout()) s.neg2_lppd_holdout = lppd_holdout(draws, all_sites.holdout_sites(), options);
  return s;
}

void write_scores(const fs::path& path, const Scores& scores) {
  auto out = open_out(path);
  out << "metric,value\n";
  out << "waic," << format_double(scores.in_sample.waic) << '\n';
  out << "lppd," << format_double(scores.in_sample.lppd) << '\n';
  out << "p_eff," << format_double(scores.in_sample.p_eff) << '\n';
  out << "neg2_lppd_holdout," << (scores.neg2_lppd_holdout ? format_double(*scores.neg2_lppd_holdout) : "NA") << '\n';
  out << "draws," << scores.draws << '\n';
}

void write_summary(const fs::path& dir, Draws draws, const CommunityData& data) {
  fs::create_directories(dir);
  const PosteriorSummary summary = summarize_posterior(draws);
  const int n_periods = static_cast<int>(summary.guild_count_pmf.size());
  const int j_count = data.n_species();
  const auto summary_cols = [](std::ostream& out, const Summary& s) {
    out << format_double(s.mean) << ',' << format_double(s.sd) << ',' << format_double(s.q025) << ','
        << format_double(s.q50) << ',' << format_double(s.q975);
  };

  {
    auto out = open_out(dir / "guild_counts.csv");
    out << "period,guilds,probability\n";
    for (int t = 0; t < n_periods; ++t)
      for (const auto& [g, p] : summary.guild_count_pmf[t]) out << t + 1 << ',' << g << ',' << format_double(p) << '\n';
  }
  for (int t = 0; t < n_periods; ++t) {
    auto out = open_out(dir / ("cooccurrence_" + std::to_string(t + 1) + ".csv"));
    out << "species";
    for (const auto& s : data.species_names) out << ',' << s;
    out << '\n';
    for (int j = 0; j < j_count; ++j) {
      out << data.species_names[j];
      for (int l = 0; l < j_count; ++l) out << ',' << format_double(summary.cooccurrence[t](j, l));
      out << '\n';
    }
  }
  {
    auto out = open_out(dir / "partitions.csv");
    out << "period,partition,frequency\n";
    for (int t = 0; t < n_periods; ++t) {
      const auto freq = partition_frequencies(draws, t);
      std::vector<std::pair<std::string, double>> rows(freq.begin(), freq.end());
      std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
      for (const auto& [p, f] : rows) out << t + 1 << ',' << p << ',' << format_double(f) << '\n';
    }
  }
  {
    auto out = open_out(dir / "mode_tree.csv");
    out << "period,partition,guilds,probability\n";
    for (int t = 0; t < n_periods; ++t)
      out << t + 1 << ',' << summary.mode[t].partition.encode() << ',' << summary.mode[t].partition.n_guilds() << ','
          << format_double(summary.mode[t].probability) << '\n';
  }
  const CoefficientPosteriors& coef = summary.coefficients;
  {
    auto out = open_out(dir / "coefficients.csv");
    out << "parameter,period,species,predictor,mean,sd,q025,q50,q975\n";
    for (int j = 0; j < j_count; ++j) {
      out << "alpha,NA," << data.species_names[j] << ",NA,";
      summary_cols(out, coef.intercepts[j]);
      out << '\n';
    }
    for (int t = 0; t < n_periods; ++t)
      for (int j = 0; j < j_count; ++j)
        for (int k = 0; k < data.n_predictors(); ++k) {
          out << "beta," << t + 1 << ',' << data.species_names[j] << ',' << data.predictor_names[k] << ',';
          summary_cols(out, coef.species[t][j][k]);
          out << '\n';
        }
  }
  {
    // Guild-level coefficients exist only conditionally on a fixed guild
    // structure; they are reported for the mode partition alone.
    auto out = open_out(dir / "guild_coefficients.csv");
    out << "period,guild,members,predictor,conditional_on,draws,mean,sd,q025,q50,q975\n";
    for (int t = 0; t < n_periods; ++t)
      for (std::size_t g = 0; g < coef.mode_guilds[t].size(); ++g) {
        const auto& guild = coef.mode_guilds[t][g];
        for (int k = 0; k < data.n_predictors(); ++k) {
          out << t + 1 << ',' << g + 1 << ',' << members_label(guild.members) << ',' << data.predictor_names[k]
              << ",mode_partition," << coef.mode_guild_draws[t] << ',';
          summary_cols(out, guild.by_predictor[k]);
          out << '\n';
        }
      }
  }
  {
    auto out = open_out(dir / "report.txt");
    out << "retained draws: " << draws.size() << '\n';
    out << "species: " << j_count << ", predictors: " << data.n_predictors() << ", periods: " << n_periods << '\n';
    for (int t = 0; t < n_periods; ++t) {
      out << "\nperiod " << t + 1 << '\n';
      out << "  guild count pmf:";
      for (const auto& [g, p] : summary.guild_count_pmf[t]) out << ' ' << g << "=" << format_double(p);
      out << "\n  mode partition: " << summary.mode[t].partition.encode() << " (posterior frequency "
          << format_double(summary.mode[t].probability) << ")\n";
      out << "  species-level coefficients (posterior mean [2.5%, 97.5%]):\n";
      for (int j = 0; j < j_count; ++j)
        for (int k = 0; k < data.n_predictors(); ++k) {
          const Summary& s = coef.species[t][j][k];
          out << "    " << data.species_names[j] << " ~ " << data.predictor_names[k] << ": "
              << format_double(s.mean) << " [" << format_double(s.q025) << ", " << format_double(s.q975) << "]\n";
        }
    }
  }
}

std::vector<ChainOutcome> run_fit(const RunConfig& cfg, const fs::path& data_path, const fs::path& out, bool resume) {
  const auto started = std::chrono::steady_clock::now();
  const PreparedData prep = prepare_data(cfg, data_path);
  const CommunityData fit = prep.data.fit_sites();
  cfg.chain.validate(fit.n_periods());
  fs::create_directories(out);
  const fs::path manifest_path = out / "manifest.json";
  if (resume) {
    if (!fs::exists(manifest_path)) throw InvalidInput("cannot resume: no manifest in " + out.string());
    const json previous = read_json(manifest_path);
    if (previous.at("data").at("sha256") != prep.sha256)
      throw InvalidInput("cannot resume: data checksum differs from the one recorded in the manifest");
  }

  json manifest;
  manifest["engine"] = "guildtree";
  manifest["version"] = kEngineVersion;
  manifest["status"] = "running";
  manifest["config"] = run_config_to_json(cfg);
  manifest["data"] = {{"path", fs::absolute(data_path).string()},
                      {"sha256", prep.sha256},
                      {"sites", prep.data.n_sites()},
                      {"fit_sites", fit.n_sites()},
                      {"holdout_sites", prep.data.n_sites() - fit.n_sites()},
                      {"species", prep.data.n_species()},
                      {"predictors", prep.data.n_predictors()},
                      {"periods", fit.n_periods()}};
  manifest["scaling"] = {{"predictors", prep.data.predictor_names},
                         {"center", prep.scaling.center},
                         {"scale", prep.scaling.scale}};
  write_json_atomic(manifest_path, manifest);

  const int chains = cfg.chain.chains;
  std::vector<fs::path> dirs;
  for (int c = 0; c < chains; ++c) dirs.push_back(chains == 1 ? out : out / ("chain_" + std::to_string(c + 1)));
  std::vector<std::string> errors(static_cast<std::size_t>(chains));
  std::vector<double> seconds(static_cast<std::size_t>(chains), 0.0);

  const auto work = [&](int c) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      if (cfg.chain.family == Family::probit) {
        persisted_chain<ProbitState>(
            fit, cfg, c, dirs[c], resume,
            [](const CommunityData& d, const ChainConfig& cc, Rng& r, const ChainCallbacks<ProbitState>& cb,
               const Checkpoint<ProbitState>* cp) { run_chain_probit(d, cc, r, cb, cp); },
            [](const json& j) { return probit_checkpoint_from_json(j); });
      } else {
        persisted_chain<ZipState>(
            fit, cfg, c, dirs[c], resume,
            [](const CommunityData& d, const ChainConfig& cc, Rng& r, const ChainCallbacks<ZipState>& cb,
               const Checkpoint<ZipState>* cp) { run_chain_zip(d, cc, r, cb, cp); },
            [](const json& j) { return zip_checkpoint_from_json(j); });
      }
    } catch (const std::exception& e) {
      errors[c] = e.what();
    }
    seconds[c] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  if (chains == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int c = 0; c < chains; ++c) pool.emplace_back(work, c);
    for (auto& t : pool) t.join();
  }

  std::vector<ChainOutcome> outcomes;
  json chain_records = json::array();
  std::string failure;
  const ScoreOptions score_options{cfg.chain.family, cfg.score_latent_draws, cfg.score_seed};
  for (int c = 0; c < chains; ++c) {
    json record = {{"chain", c + 1}, {"directory", fs::relative(dirs[c], out).string()}, {"wall_seconds", seconds[c]}};
    if (errors[c].empty()) {
      try {
        const auto draws = read_draws(dirs[c] / "draws.csv", fit.n_species(), fit.n_predictors());
        write_summary(dirs[c], draws, fit);
        ChainOutcome outcome{dirs[c], score_draws(draws, prep.data, score_options), slope_spread(draws),
                             mode_tree(draws)};
        write_scores(dirs[c] / "scores.csv", outcome.scores);
        record["retained_draws"] = draws.size();
        record["diagnostics"] = trace_diagnostics(draws, fit, cfg.chain.family);
        outcomes.push_back(std::move(outcome));
      } catch (const std::exception& e) {
        errors[c] = std::string("post-processing failed: ") + e.what();
      }
    }
    record["status"] = errors[c].empty() ? "complete" : "failed";
    if (!errors[c].empty()) {
      record["error"] = errors[c];
      if (failure.empty()) failure = "chain " + std::to_string(c + 1) + ": " + errors[c];
    }
    chain_records.push_back(record);
  }
  manifest["chains"] = chain_records;
  manifest["status"] = failure.empty() ? "complete" : "failed";
  if (!failure.empty()) manifest["error"] = failure;
  manifest["wall_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  write_json_atomic(manifest_path, manifest);
  if (!failure.empty()) throw std::runtime_error(failure);
  return outcomes;
}

LoadedRun load_run(const fs::path& run_dir) {
  LoadedRun run;
  run.manifest = read_json(run_dir / "manifest.json");
  run.config = run_config_from_json(run.manifest.at("config"));
  const fs::path data_path = run.manifest.at("data").at("path").get<std::string>();
  run.prep = prepare_data(run.config, data_path);
  if (run.prep.sha256 != run.manifest.at("data").at("sha256"))
    throw InvalidInput(data_path.string() + " changed since the run (checksum mismatch)");
  for (const auto& c : run.manifest.at("chains")) run.chain_dirs.push_back(run_dir / c.at("directory").get<std::string>());
  return run;
}

CommunityData load_holdout(const LoadedRun& run, const fs::path& path) {
  IngestSchema schema{run.config.chain.family, run.config.species, run.config.predictors, false};
  CommunityData data = ingest(path, schema).data;
  if (run.config.standardize) apply_scaling(data, run.prep.scaling);
  data.holdout.assign(static_cast<std::size_t>(data.n_sites()), true);
  return data;
}

std::vector<SweepRow> run_sweep(const RunConfig& cfg, const fs::path& data_path, const std::vector<double>& alphas,
                                const fs::path& out) {
  if (alphas.empty()) throw InvalidInput("empty alpha grid");
  fs::create_directories(out);
  std::vector<SweepRow> rows(alphas.size());
  std::vector<std::string> errors(alphas.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t a = next++; a < alphas.size(); a = next++) {
      try {
        RunConfig run = cfg;
        run.chain.alpha = {alphas[a]};
        run.chain.chains = 1;
        const auto outcome = run_fit(run, data_path, out / ("alpha_" + format_double(alphas[a])));
        rows[a] = SweepRow{alphas[a], outcome.front().scores, outcome.front().slope_sd,
                           outcome.front().mode.partition.n_guilds(), outcome.front().mode.partition.encode()};
      } catch (const std::exception& e) {
        errors[a] = e.what();
      }
    }
  };
  const unsigned n_workers =
      std::max(1U, std::min<unsigned>(std::thread::hardware_concurrency(), static_cast<unsigned>(alphas.size())));
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  for (std::size_t a = 0; a < alphas.size(); ++a)
    if (!errors[a].empty()) throw std::runtime_error("alpha " + format_double(alphas[a]) + ": " + errors[a]);

  auto table = open_out(out / "sweep.csv");
  table << "alpha,waic,lppd,p_eff,neg2_lppd_holdout,slope_sd,mode_guilds,mode_partition\n";
  for (const auto& r : rows)
    table << format_double(r.alpha) << ',' << format_double(r.scores.in_sample.waic) << ','
          << format_double(r.scores.in_sample.lppd) << ',' << format_double(r.scores.in_sample.p_eff) << ','
          << (r.scores.neg2_lppd_holdout ? format_double(*r.scores.neg2_lppd_holdout) : "NA") << ','
          << format_double(r.slope_sd) << ',' << r.mode_guilds << ',' << r.mode_partition << '\n';
  return rows;
}

VerifyReport verify_against_oracle(const CommunityData& data, const ChainConfig& chain,
                                   const ReferenceOptions& reference) {
  if (chain.family != Family::probit) throw InvalidInput("verification supports the probit family");
  const CommunityData fit = data.fit_sites();
  if (fit.n_periods() != 1) throw InvalidInput("verification needs a single period");
  VerifyReport report;
  const auto draws = run_chain(fit, chain);
  report.engine_beta.resize(fit.n_species(), fit.n_predictors());
  for (int j = 0; j < fit.n_species(); ++j)
    for (int k = 0; k < fit.n_predictors(); ++k) {
      const auto trace = species_coefficient_trace(draws, 0, j, k);
      report.engine_beta(j, k) = std::accumulate(trace.begin(), trace.end(), 0.0) / static_cast<double>(trace.size());
    }
  report.engine_partition_frequencies = partition_frequencies(draws);
  report.average = exact_model_average_probit(fit, enumerate_partitions(fit.n_species()), chain.probit, reference);
  report.oracle_beta = report.average.beta_mean;
  report.max_abs_difference = (report.engine_beta - report.oracle_beta).cwiseAbs().maxCoeff();
  return report;
}

void write_verify_report(const fs::path& dir, const VerifyReport& report, const CommunityData& data,
                         double tolerance) {
  fs::create_directories(dir);
  {
    auto out = open_out(dir / "verify.csv");
    out << "species,predictor,engine_mean,oracle_mean,abs_difference\n";
    for (int j = 0; j < data.n_species(); ++j)
      for (int k = 0; k < data.n_predictors(); ++k)
        out << data.species_names[j] << ',' << data.predictor_names[k] << ','
            << format_double(report.engine_beta(j, k)) << ',' << format_double(report.oracle_beta(j, k)) << ','
            << format_double(std::abs(report.engine_beta(j, k) - report.oracle_beta(j, k))) << '\n';
  }
  {
    auto out = open_out(dir / "verify_partitions.csv");
    out << "partition,prior_weight,log_marginal_likelihood,oracle_posterior_weight,engine_frequency\n";
    const auto& e = report.average.enumeration;
    for (std::size_t p = 0; p < e.partitions.size(); ++p) {
      const std::string code = e.partitions[p].encode();
      const auto it = report.engine_partition_frequencies.find(code);
      out << code << ',' << format_double(e.prior_weights[p]) << ','
          << format_double(report.average.log_marginal_likelihood[p]) << ','
          << format_double(report.average.posterior_weights[p]) << ','
          << format_double(it == report.engine_partition_frequencies.end() ? 0.0 : it->second) << '\n';
    }
  }
  auto out = open_out(dir / "verify.txt");
  out << "max |engine - oracle| species coefficient mean: " << format_double(report.max_abs_difference) << '\n';
  out << "tolerance: " << format_double(tolerance) << '\n';
  out << "result: " << (report.max_abs_difference <= tolerance ? "PASS" : "FAIL") << '\n';
  for (const auto& w : report.average.warnings) out << "warning: " << w << '\n';
}

}  // namespace guildtree
