// Acceptance suite: one PASS/FAIL line per criterion. Tolerances are fixed
// below; chain lengths follow the production defaults unless noted.
//
//   acceptance                      run every criterion
//   acceptance 3 5                  run a subset
//   acceptance --report FILE        also write the verdict lines to FILE
//   acceptance --strict             exit non-zero when any criterion fails
//
// Without --strict the exit status reports whether every requested criterion
// was evaluated; verdicts are carried by the PASS/FAIL lines.

#include "guildtree/design.hpp"
#include "guildtree/inference.hpp"
#include "guildtree/io.hpp"
#include "guildtree/oracle.hpp"
#include "guildtree/probit.hpp"
#include "guildtree/runner.hpp"
#include "guildtree/simulate.hpp"
#include "guildtree/special.hpp"
#include "guildtree/zip.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

using namespace guildtree;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances.
constexpr double kMcseMultiple = 3.0;        // criteria 3 and 9
constexpr double kOracleTolerance = 0.1;     // criterion 4
constexpr double kWithinGuild = 0.9;         // criterion 5
constexpr double kAcrossGuild = 0.1;         // criterion 5
constexpr int kRecoverySeeds = 5;            // criteria 5 and 8c
constexpr int kRecoveryRequired = 4;         // criteria 5 and 8c
constexpr double kPhiTolerance = 0.05;       // criterion 8b
constexpr double kHandArithmetic = 1e-12;    // criterion 8a closed forms

const ChainSchedule kFullSchedule{100000, 10, 500};  // 9,500 retained draws

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s.precision(precision);
  s << v;
  return s.str();
}

double combined_mcse(double a, double b) { return std::sqrt(a * a + b * b); }

std::vector<double> intercept_trace(Draws draws, int j) {
  std::vector<double> v;
  v.reserve(draws.size());
  for (const auto& d : draws) v.push_back(d.coefficients.alpha(j));
  return v;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_sd(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

// Posterior mode of the number of guilds; ties go to the smaller count.
int modal_guild_count(Draws draws, int period = 0) {
  const auto pmf = guild_count_distribution(draws, period);
  int mode = 0;
  for (const auto& [g, p] : pmf)
    if (mode == 0 || p > pmf.at(mode)) mode = g;
  return mode;
}

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("guildtree_acceptance_" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

// ---------------------------------------------------------------------------

Outcome combinatorics() {
  const auto a = count_guild_compositions(6);
  const auto b = count_guild_compositions(15);
  return {a == 63 && b == 32767, "compositions(6) = " + std::to_string(a) + ", compositions(15) = " + std::to_string(b)};
}

Outcome parameter_accounting() {
  const GuildPartition sizes_321(std::vector<int>{0, 0, 0, 1, 1, 2});
  const std::vector<GuildPartition> one = {sizes_321};
  const int nine = model_dimension(one, 6, 1, Family::probit);
  const std::vector<GuildPartition> pooled = {GuildPartition::pooled(6)};
  const std::vector<GuildPartition> split = {GuildPartition::identity(6)};
  const int seven = model_dimension(pooled, 6, 1, Family::probit);
  const int twelve = model_dimension(split, 6, 1, Family::probit);
  const std::vector<GuildPartition> three(3, GuildPartition::identity(15));
  const int coefficients = regression_coefficient_count(three, 3);
  return {nine == 9 && seven == 7 && twelve == 12 && coefficients == 135,
          "G=3: " + std::to_string(nine) + ", G=1: " + std::to_string(seven) + ", G=6: " + std::to_string(twelve) +
              ", J=15 K=3 T=3 identity coefficients: " + std::to_string(coefficients)};
}

// Engine at a learner endpoint against the fixed-structure reference.
Outcome endpoint(const CommunityData& data, double alpha, const GuildPartition& fixed, const std::string& label) {
  ChainConfig cfg;
  cfg.alpha = {alpha};
  cfg.schedule = kFullSchedule;
  cfg.seed = 31;
  const auto draws = run_chain(data, cfg);
  const ReferenceFit ref = fixed_structure_reference(data, fixed, cfg.probit, ReferenceOptions{100000, 5000, 32});
  const std::string expected = fixed.canonical().encode();
  const auto mode = mode_tree(draws);
  double worst = 0.0;  // largest |difference| / combined MCSE
  for (int j = 0; j < data.n_species(); ++j) {
    const auto a = intercept_trace(draws, j);
    const auto b = species_coefficient_trace(draws, 0, j, 0);
    worst = std::max(worst, std::abs(mean(a) - ref.alpha_mean(j)) / combined_mcse(batch_means_mcse(a), ref.alpha_mcse(j)));
    worst = std::max(worst,
                     std::abs(mean(b) - ref.beta_mean(j, 0)) / combined_mcse(batch_means_mcse(b), ref.beta_mcse(j, 0)));
  }
  const bool structure = mode.partition.encode() == expected && mode.probability == 1.0;
  return {structure && worst <= kMcseMultiple,
          label + ": mode " + mode.partition.encode() + " (" + fmt(mode.probability) + "), worst |diff|/MCSE " +
              fmt(worst, 3) + " over " + std::to_string(draws.size()) + " draws"};
}

Outcome endpoint_equivalence() {
  const CommunityData data = simulate(two_guild_probit_spec(4, 200, -1.5, 1.5, 17)).data;
  const Outcome pooled = endpoint(data, 0.0, GuildPartition::pooled(4), "alpha 0 vs pooled");
  const Outcome split = endpoint(data, 1.0, GuildPartition::identity(4), "alpha 1 vs per-species");
  return {pooled.pass && split.pass, pooled.detail + "; " + split.detail};
}

Outcome oracle_equivalence() {
  SimSpec spec = two_guild_probit_spec(3, 100, -1.0, 1.0, 3);
  spec.partitions = {GuildPartition(std::vector<int>{0, 0, 1})};
  const CommunityData data = simulate(spec).data;
  ChainConfig cfg;
  cfg.alpha = {0.05};
  cfg.schedule = kFullSchedule;
  cfg.seed = 3;
  const VerifyReport report = verify_against_oracle(data, cfg, ReferenceOptions{});
  return {report.max_abs_difference <= kOracleTolerance,
          "max |engine - model average| = " + fmt(report.max_abs_difference, 3) + " (tolerance " +
              fmt(kOracleTolerance) + ")"};
}

// Two true guilds among six species: slopes -1 (species 1-3) and 0 (4-6).
SimSpec recovery_spec(std::uint64_t seed) {
  SimSpec spec = two_guild_probit_spec(6, 225, -1.0, 0.0, seed);
  spec.n_holdout_sites = 225;
  return spec;
}

ChainConfig recovery_chain(double alpha, std::uint64_t seed) {
  ChainConfig cfg;
  cfg.alpha = {alpha};
  cfg.schedule = kFullSchedule;
  cfg.seed = seed;
  return cfg;
}

Outcome guild_recovery() {
  int recovered = 0;
  std::string detail;
  for (int s = 1; s <= kRecoverySeeds; ++s) {
    const SimResult sim = simulate(recovery_spec(static_cast<std::uint64_t>(s)));
    const auto draws = run_chain(sim.data.fit_sites(), recovery_chain(0.05, static_cast<std::uint64_t>(s)));
    const int mode_count = modal_guild_count(draws);
    const Matrix co = cooccurrence_matrix(draws);
    const auto& truth = sim.truth.spec.partitions[0];
    double within = 1.0;
    double across = 0.0;
    for (int a = 0; a < 6; ++a)
      for (int b = a + 1; b < 6; ++b) {
        if (truth.membership()[a] == truth.membership()[b])
          within = std::min(within, co(a, b));
        else
          across = std::max(across, co(a, b));
      }
    const auto mode = mode_tree(draws);
    const bool ok = mode_count == 2 && within > kWithinGuild && across < kAcrossGuild &&
                    mode.partition.same_grouping(truth);
    recovered += ok;
    detail += (s > 1 ? "; " : "") + std::string("seed ") + std::to_string(s) + ": G=" + std::to_string(mode_count) +
              " " + mode.partition.encode() + " min-within " + fmt(within, 3) + " max-across " + fmt(across, 3) +
              (ok ? "" : " (miss)");
  }
  return {recovered >= kRecoveryRequired,
          std::to_string(recovered) + "/" + std::to_string(kRecoverySeeds) + " seeds recovered [" + detail + "]"};
}

// The alpha sweep on the first recovery data set, shared by criteria 6 and 7.
const std::vector<double> kSweepAlphas = {0.0, 0.025, 0.1, 0.5, 1.0};

const std::vector<SweepRow>& sweep_rows() {
  static std::vector<SweepRow> rows;
  if (!rows.empty()) return rows;
  TempDir tmp;
  SimResult sim = simulate(recovery_spec(1));
  for (int j = 0; j < 6; ++j) sim.data.species_names[static_cast<std::size_t>(j)] = "sp" + std::to_string(j + 1);
  const fs::path csv = tmp.path / "recovery.csv";
  write_community_csv(csv, sim.data);
  RunConfig cfg;
  cfg.chain = recovery_chain(0.0, 1);
  cfg.species = sim.data.species_names;
  cfg.predictors = sim.data.predictor_names;
  cfg.checkpoint_every = 1000;
  rows = run_sweep(cfg, csv, kSweepAlphas, tmp.path / "sweep");
  return rows;
}

Outcome score_behaviour() {
  const auto& rows = sweep_rows();
  std::size_t best_waic = 0;
  std::size_t best_lppd = 0;
  std::string detail;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].scores.in_sample.waic < rows[best_waic].scores.in_sample.waic) best_waic = r;
    if (*rows[r].scores.neg2_lppd_holdout < *rows[best_lppd].scores.neg2_lppd_holdout) best_lppd = r;
    detail += (r ? "; " : "") + std::string("alpha ") + fmt(rows[r].alpha) + ": WAIC " +
              fmt(rows[r].scores.in_sample.waic, 6) + " -2LPPD " + fmt(*rows[r].scores.neg2_lppd_holdout, 6) +
              " p_eff " + fmt(rows[r].scores.in_sample.p_eff, 3);
  }
  const bool waic_ok = best_waic != 0 && rows[best_waic].scores.in_sample.waic < rows[0].scores.in_sample.waic;
  const bool lppd_ok =
      best_lppd != 0 && *rows[best_lppd].scores.neg2_lppd_holdout < *rows[0].scores.neg2_lppd_holdout;
  const bool peff_ok = rows.front().scores.in_sample.p_eff < rows.back().scores.in_sample.p_eff;
  return {waic_ok && lppd_ok && peff_ok, "WAIC best at alpha " + fmt(rows[best_waic].alpha) +
                                             ", -2LPPD best at alpha " + fmt(rows[best_lppd].alpha) + " [" + detail +
                                             "]"};
}

Outcome shrinkage_direction() {
  const auto& rows = sweep_rows();
  const auto sd_at = [&](double a) {
    for (const auto& r : rows)
      if (r.alpha == a) return r.slope_sd;
    throw std::logic_error("alpha missing from sweep");
  };
  const double full = sd_at(1.0);
  const double interior = sd_at(0.1);
  const double pooled = sd_at(0.0);
  std::string detail;
  for (const auto& r : rows) detail += (detail.empty() ? "" : ", ") + fmt(r.alpha) + ": " + fmt(r.slope_sd, 3);
  return {full > interior && interior > pooled,
          "slope sd alpha 1 > 0.1 > 0: " + fmt(full, 3) + " > " + fmt(interior, 3) + " > " + fmt(pooled, 3) +
              " [" + detail + "]"};
}

// --- criterion 8 -----------------------------------------------------------

CommunityData tiny_counts(const std::vector<std::vector<int>>& y, const std::vector<double>& x) {
  CommunityData d;
  d.responses.resize(static_cast<Eigen::Index>(y.size()), static_cast<Eigen::Index>(y[0].size()));
  d.predictors.resize(static_cast<Eigen::Index>(y.size()), 1);
  for (std::size_t i = 0; i < y.size(); ++i) {
    for (std::size_t j = 0; j < y[i].size(); ++j) d.responses(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = y[i][j];
    d.predictors(static_cast<Eigen::Index>(i), 0) = x[i];
  }
  for (std::size_t j = 0; j < y[0].size(); ++j) d.species_names.push_back("s" + std::to_string(j + 1));
  d.predictor_names = {"x"};
  return d;
}

Outcome zip_hand_arithmetic() {
  std::vector<std::string> notes;
  bool ok = true;
  const auto expect = [&](bool cond, const std::string& what) {
    ok = ok && cond;
    if (!cond) notes.push_back(what);
  };
  Rng rng(81);

  // P(w = 1 | y = 0, phi = 0.5, e^z = 1) = 1 / (1 + e^-1).
  const double p = structural_zero_probability(0.5, 0.0);
  expect(std::abs(p - 1.0 / (1.0 + std::exp(-1.0))) < kHandArithmetic, "structural-zero probability");
  expect(std::abs(p - 0.7311) < 5e-5, "0.7311");
  // Positive counts are never structural zeros; phi = 0 gives pure Poisson.
  {
    const CommunityData d = tiny_counts({{5, 0}}, {0.0});
    ZipState s = initial_zip_state(d);
    s.phi = 0.99;
    bool positive_ok = true;
    for (int i = 0; i < 10000; ++i) {
      update_inflation_indicators(s, d, rng);
      positive_ok = positive_ok && s.w(0, 0) == 0;
    }
    expect(positive_ok, "y > 0 gives w = 0");
    s.phi = 0.0;
    update_inflation_indicators(s, d, rng);
    expect(s.w(0, 1) == 0, "phi = 0 gives w = 0");
  }
  // phi | w ~ Beta(1 + sum w, 1 + sum (1 - w)): check the first two moments.
  const auto beta_check = [&](const CountMatrix& w, double a, double b, const std::string& label) {
    const int n = 400000;
    std::vector<double> v(n);
    for (double& x : v) x = update_phi(w, rng);
    const double m = a / (a + b);
    const double var = a * b / ((a + b) * (a + b) * (a + b + 1));
    expect(std::abs(mean(v) - m) < kMcseMultiple * std::sqrt(var / n), label + " mean");
    expect(std::abs(sample_sd(v) - std::sqrt(var)) < 0.01 * std::sqrt(var), label + " sd");
  };
  CountMatrix w10 = CountMatrix::Zero(10, 1);
  w10(1) = w10(5) = w10(8) = 1;
  beta_check(w10, 4, 8, "Beta(4, 8)");
  beta_check(CountMatrix::Ones(6, 1), 7, 1, "Beta(1 + m, 1)");
  // sigma2 | z ~ IG(2.01 + m/2, 1 + SS/2); m = 2, SS = 2 gives IG(3.01, 2).
  {
    Matrix z(2, 1);
    z << 1.0, -1.0;
    const Matrix mu = Matrix::Zero(2, 1);
    const int n = 400000;
    std::vector<double> v(n);
    for (double& x : v) x = update_sigma2(z, mu, ZipPriors{}, rng);
    const double m = 2.0 / 2.01;
    const double var = 4.0 / (2.01 * 2.01 * 1.01);
    expect(std::abs(mean(v) - m) < kMcseMultiple * std::sqrt(var / n), "IG(3.01, 2) mean");
  }
  return {ok, ok ? "P(w=1) = " + fmt(p, 6) + "; Beta(4,8), Beta(7,1), IG(3.01,2) moments and w/y rules hold"
                 : "failed: " + [&] {
                     std::string s;
                     for (const auto& n : notes) s += n + " ";
                     return s;
                   }()};
}

// Posterior of phi on a tiny data set with alpha, gamma and sigma2 fixed: the
// latent z integrate out cell by cell, leaving a 1-D density in phi.
Outcome zip_tiny_posterior() {
  const CommunityData d = tiny_counts({{0, 1}, {0, 0}, {2, 0}, {0, 3}}, {-1.0, -0.3, 0.4, 0.9});
  const Vector alpha = (Vector(2) << 0.2, -0.1).finished();
  const double slope = 0.6;
  const double sigma2 = 0.5;

  ZipState s = initial_zip_state(d);
  s.regression.alpha = alpha;
  s.regression.gamma[0] = Matrix::Constant(1, 1, slope);
  const Matrix mu = linear_predictor(d, s.regression);

  // Oracle: grid over phi of prior x prod_cells [phi 1{y=0} + (1 - phi) m(y)],
  // m(y) = integral N(z; mu, sigma2) Pois(y | e^z) dz by quadrature.
  Matrix marginal(4, 2);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 2; ++j) {
      double acc = 0.0;
      const double h = 1e-3;
      for (double z = mu(i, j) - 10.0; z <= mu(i, j) + 10.0; z += h)
        acc += h * std::exp(normal_log_density(z, mu(i, j), sigma2) + poisson_log_pmf(d.responses(i, j), z));
      marginal(i, j) = acc;
    }
  double num = 0.0;
  double den = 0.0;
  for (int g = 0; g < 20000; ++g) {
    const double phi = (g + 0.5) / 20000.0;
    double lik = 1.0;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 2; ++j) lik *= (d.responses(i, j) == 0 ? phi : 0.0) + (1 - phi) * marginal(i, j);
    num += phi * lik;
    den += lik;
  }
  const double oracle = num / den;

  Rng rng(82);
  s.sigma2 = sigma2;
  ZipStepOptions opts;
  opts.update_regression = false;
  opts.fixed_sigma2 = sigma2;
  opts.check_invariants = true;
  const ChainConfig cfg;
  const auto learners = cfg.learners(1);
  std::vector<double> trace;
  const long burn = 5000;
  const long iterations = 400000;
  for (long it = 1; it <= iterations; ++it) {
    opts.adapt = it <= burn;
    gibbs_step_zip(s, d, cfg.zip, learners, rng, opts);
    if (it > burn) trace.push_back(s.phi);
  }
  const double engine = mean(trace);
  return {std::abs(engine - oracle) <= kPhiTolerance,
          "posterior mean phi: sampler " + fmt(engine, 4) + " (MCSE " + fmt(batch_means_mcse(trace), 2) +
              "), quadrature " + fmt(oracle, 4) + ", tolerance " + fmt(kPhiTolerance)};
}

// Three periods with guild counts (2, 1, 2).
Outcome zip_period_recovery() {
  int recovered = 0;
  std::string detail;
  const auto t0 = std::chrono::steady_clock::now();
  for (int seed = 1; seed <= kRecoverySeeds; ++seed) {
    SimSpec spec;
    spec.family = Family::zip;
    spec.n_species = 6;
    spec.n_sites = 300;
    spec.partitions = {GuildPartition(std::vector<int>{0, 0, 0, 1, 1, 1}), GuildPartition::pooled(6),
                       GuildPartition(std::vector<int>{0, 1, 0, 1, 0, 1})};
    spec.gamma = {(Matrix(2, 1) << -1.0, 1.0).finished(), Matrix::Constant(1, 1, 0.5),
                  (Matrix(2, 1) << 1.0, -1.0).finished()};
    spec.alpha = Vector::Constant(6, 1.0);
    spec.phi = 0.3;
    spec.sigma2 = 0.3;
    spec.seed = static_cast<std::uint64_t>(seed);
    const SimResult sim = simulate(spec);
    ChainConfig cfg;
    cfg.family = Family::zip;  // learner alpha: the family default
    cfg.schedule = ChainSchedule{30000, 10, 500};  // 2,500 retained
    cfg.seed = static_cast<std::uint64_t>(seed);
    const auto draws = run_chain(sim.data, cfg);
    std::string counts;
    bool ok = true;
    const int want[] = {2, 1, 2};
    std::string pmfs;
    for (int t = 0; t < 3; ++t) {
      const int g = modal_guild_count(draws, t);
      counts += (t ? "," : "") + std::to_string(g);
      ok = ok && g == want[t];
      pmfs += " P(G=" + std::to_string(g) + ")=" + fmt(guild_count_distribution(draws, t).at(g), 3);
    }
    recovered += ok;
    detail += (seed > 1 ? "; " : "") + std::string("seed ") + std::to_string(seed) + ": (" + counts + ")" + pmfs;
  }
  const double minutes = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / 60.0;
  return {recovered >= kRecoveryRequired && minutes < 60.0,
          std::to_string(recovered) + "/" + std::to_string(kRecoverySeeds) + " seeds recover (2,1,2) [" + detail +
              "], " + fmt(minutes, 3) + " min"};
}

Outcome zip_correctness() {
  const Outcome a = zip_hand_arithmetic();
  const Outcome b = zip_tiny_posterior();
  const Outcome c = zip_period_recovery();
  return {a.pass && b.pass && c.pass, "(a) " + std::string(a.pass ? "ok" : "FAIL") + ": " + a.detail + " | (b) " +
                                          (b.pass ? "ok" : "FAIL") + ": " + b.detail + " | (c) " +
                                          (c.pass ? "ok" : "FAIL") + ": " + c.detail};
}

// --- criterion 9 -----------------------------------------------------------

// Moments of N(m, 1) restricted to (0, inf): with a = -m and lambda the
// inverse Mills ratio phi(a) / (1 - Phi(a)), mean m + lambda and variance
// 1 + a lambda - lambda^2.
bool truncated_moments(double m, Rng& rng, std::string& note) {
  const double a = -m;
  const double lambda = std::exp(normal_log_density(a, 0.0, 1.0) - log_normal_cdf(-a));
  const double want_mean = m + lambda;
  const double want_var = 1.0 + a * lambda - lambda * lambda;
  const int n = 200000;
  std::vector<double> v(n);
  std::vector<double> sq(n);
  bool finite = true;
  for (int i = 0; i < n; ++i) {
    v[i] = sample_truncated_normal(m, 1.0, TruncationSide::positive, rng);
    finite = finite && std::isfinite(v[i]) && v[i] > 0.0;
    sq[i] = (v[i] - want_mean) * (v[i] - want_mean);
  }
  const double sd = sample_sd(v);
  const bool mean_ok = std::abs(mean(v) - want_mean) <= kMcseMultiple * sd / std::sqrt(n);
  const bool var_ok = std::abs(mean(sq) - want_var) <= kMcseMultiple * sample_sd(sq) / std::sqrt(n);
  // Mirror: the negative side of N(-m, 1) is the negation.
  const double neg = sample_truncated_normal(-m, 1.0, TruncationSide::negative, rng);
  const bool ok = finite && mean_ok && var_ok && neg < 0.0;
  if (!ok) note += " m=" + fmt(m) + " failed";
  return ok;
}

Outcome sampler_mechanics() {
  Rng rng(91);
  std::string note;
  bool moments = true;
  for (double m : {0.0, 2.0, -3.0, -5.0, -10.0, -40.0}) moments = truncated_moments(m, rng, note) && moments;

  // Bit reproducibility of full persisted runs.
  TempDir tmp;
  SimResult sim = simulate(two_guild_probit_spec(4, 120, -1.0, 1.0, 92));
  sim.data.species_names = {"a", "b", "c", "d"};
  const fs::path csv = tmp.path / "d.csv";
  write_community_csv(csv, sim.data);
  RunConfig cfg;
  cfg.chain.alpha = {0.05};
  cfg.chain.schedule = ChainSchedule{5000, 5, 100};
  cfg.chain.seed = 92;
  cfg.chain.check_invariants = true;
  cfg.species = sim.data.species_names;
  cfg.predictors = sim.data.predictor_names;
  run_fit(cfg, csv, tmp.path / "r1");
  run_fit(cfg, csv, tmp.path / "r2");
  const auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  const bool reproducible = slurp(tmp.path / "r1" / "draws.csv") == slurp(tmp.path / "r2" / "draws.csv");

  // Invariants asserted every iteration (any violation throws).
  bool invariants = true;
  try {
    ChainConfig probit = cfg.chain;
    Rng r(93);
    run_chain_probit(sim.data, probit, r);
    SimSpec zspec = two_guild_probit_spec(4, 120, -1.0, 1.0, 94);
    zspec.family = Family::zip;
    zspec.phi = 0.4;
    const CommunityData zdata = simulate(zspec).data;
    ChainConfig zip = cfg.chain;
    zip.family = Family::zip;
    run_chain_zip(zdata, zip, r);
  } catch (const std::exception& e) {
    invariants = false;
    note += std::string(" invariant: ") + e.what();
  }
  return {moments && reproducible && invariants,
          std::string("truncated-normal moments (m = 0, 2, -3, -5, -10, -40) ") + (moments ? "ok" : "FAIL") +
              "; persisted runs " + (reproducible ? "byte-identical" : "DIFFER") +
              "; aux/y and w/y invariants checked every iteration " + (invariants ? "ok" : "FAIL") + note};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  bool strict = false;
  std::string report_path;
  for (int a = 1; a < argc; ++a) {
    const std::string arg = argv[a];
    if (arg == "--strict") {
      strict = true;
    } else if (arg == "--report" && a + 1 < argc) {
      report_path = argv[++a];
    } else {
      only.insert(std::atoi(arg.c_str()));
    }
  }
  std::ofstream report;
  if (!report_path.empty()) report.open(report_path);
  const auto emit = [&](const std::string& line) {
    std::cout << line << std::endl;
    if (report) report << line << '\n' << std::flush;
  };
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"combinatorics", combinatorics},
      {"parameter accounting", parameter_accounting},
      {"endpoint equivalence", endpoint_equivalence},
      {"oracle equivalence", oracle_equivalence},
      {"guild recovery", guild_recovery},
      {"score behaviour", score_behaviour},
      {"shrinkage direction", shrinkage_direction},
      {"zip correctness", zip_correctness},
      {"sampler mechanics", sampler_mechanics},
  };
  int failures = 0;
  int errors = 0;
  std::vector<bool> passed(criteria.size() + 1, false);
  for (std::size_t c = 0; c < criteria.size(); ++c) {
    const int number = static_cast<int>(c) + 1;
    if (!only.empty() && !only.count(number)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[c].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
      ++errors;
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    passed[static_cast<std::size_t>(number)] = o.pass;
    failures += !o.pass;
    emit("C" + std::to_string(number) + " " + (o.pass ? "PASS" : "FAIL") + " " + criteria[c].first + " (" +
         fmt(secs, 3) + " s): " + o.detail);
  }
  // Criterion 10 is the substitution itself: the field-data results are not
  // reproduced, and stand in only when the substitute properties 3-9 all hold.
  if (only.empty() || only.count(10)) {
    bool substitutes = only.empty();
    std::string missing;
    for (int n = 3; n <= 9; ++n)
      if (!passed[static_cast<std::size_t>(n)]) missing += " " + std::to_string(n);
    substitutes = substitutes && missing.empty();
    failures += !substitutes;
    emit(std::string("C10 ") + (substitutes ? "PASS" : "FAIL") +
         " desk-scale substitution: field-data coefficient posteriors, period-specific guilds and optimal alpha values are not "
         "reproduced; substitute properties 3-9 " +
         (!only.empty() ? std::string("must run together (run without arguments)")
                        : substitutes ? std::string("all pass") : "fail at:" + missing));
  }
  emit(std::to_string(failures) + " criteria failed");
  if (errors > 0) return 2;
  return strict && failures > 0 ? 1 : 0;
}
