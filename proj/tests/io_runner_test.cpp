#include "doctest.h"

#include "guildtree/design.hpp"
#include "guildtree/io.hpp"
#include "guildtree/runner.hpp"
#include "guildtree/simulate.hpp"

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace guildtree;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("guildtree_test_" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

IngestResult ingest_text(const std::string& text, Family family = Family::probit) {
  std::istringstream in(text);
  return ingest(in, IngestSchema{family, {"a", "b"}, {"x"}, false});
}

RunConfig small_config(Family family) {
  RunConfig cfg;
  cfg.chain.family = family;
  cfg.chain.alpha = {0.05};
  cfg.chain.schedule = ChainSchedule{600, 2, 50};
  cfg.chain.seed = 19;
  cfg.checkpoint_every = 25;
  for (int j = 0; j < 4; ++j) cfg.species.push_back("sp" + std::to_string(j + 1));
  cfg.predictors = {"x1"};
  return cfg;
}

fs::path write_sim(const fs::path& dir, Family family, std::uint64_t seed = 5) {
  SimSpec spec = two_guild_probit_spec(4, 80, -1.0, 1.0, seed);
  spec.family = family;
  if (family == Family::zip) {
    spec.phi = 0.2;
    spec.alpha = Vector::Constant(4, 0.5);
  }
  spec.n_holdout_sites = 20;
  SimResult r = simulate(spec);
  r.data.species_names = {"sp1", "sp2", "sp3", "sp4"};
  r.data.predictor_names = {"x1"};
  const fs::path p = dir / "data.csv";
  write_community_csv(p, r.data);
  return p;
}

}  // namespace

TEST_SUITE("io") {
  TEST_CASE("community CSV round trip") {
    SimSpec spec = two_guild_probit_spec(4, 30, -1.0, 1.0, 3);
    spec.family = Family::zip;
    spec.partitions.push_back(GuildPartition::pooled(4));
    spec.gamma.push_back(Matrix::Constant(1, 1, 0.5));
    spec.n_holdout_sites = 5;
    const CommunityData d = simulate(spec).data;
    std::stringstream ss;
    write_community_csv(ss, d);
    const IngestResult back = ingest(ss, IngestSchema{Family::zip, d.species_names, d.predictor_names, false});
    CHECK(back.data.responses == d.responses);
    CHECK(back.data.predictors == d.predictors);
    CHECK(back.data.period == d.period);
    CHECK(back.data.holdout == d.holdout);
  }

  TEST_CASE("ingest diagnostics") {
    CHECK_THROWS_WITH_AS(ingest_text(""), doctest::Contains("empty"), InvalidInput);
    CHECK_THROWS_WITH_AS(ingest_text("a,b,x\n"), doctest::Contains("no data rows"), InvalidInput);
    CHECK_THROWS_WITH_AS(ingest_text("a,b,x,elevation\n1,0,0.5,3\n"), doctest::Contains("unknown column 'elevation'"),
                         InvalidInput);
    CHECK_THROWS_WITH_AS(ingest_text("a,a,x\n1,0,0.5\n"), doctest::Contains("duplicate"), InvalidInput);
    CHECK_THROWS_WITH_AS(ingest_text("a,x\n1,0.5\n"), doctest::Contains("missing species column 'b'"), InvalidInput);
    CHECK_THROWS_WITH_AS(ingest_text("a,b,x\n1,2,0.5\n"), doctest::Contains("row 2, column 'b'"), InvalidInput);
    CHECK_THROWS_WITH_AS(ingest_text("a,b,x\n1,0,0.5\n0,-1,0.1\n", Family::zip),
                         doctest::Contains("negative count"), InvalidInput);
    CHECK_THROWS_WITH_AS(ingest_text("a,b,x\n1,0,abc\n"), doctest::Contains("predictor"), InvalidInput);
    CHECK_THROWS_WITH_AS(ingest_text("a,b,x\n1,0\n"), doctest::Contains("row 2 has 2 fields"), InvalidInput);
    CHECK_THROWS_WITH_AS(ingest_text("period,a,b,x\n0,1,0,0.5\n"), doctest::Contains("period"), InvalidInput);
    CHECK_NOTHROW(ingest_text("site,holdout,a,b,x\ns1,0,1,0,0.5\ns2,1,0,0,-0.5\n"));
  }

  TEST_CASE("standardization uses fit sites only") {
    IngestResult r = ingest_text("holdout,a,b,x\n0,1,0,1\n0,0,1,3\n1,0,0,100\n");
    const PredictorScaling s = standardize_predictors(r.data);
    CHECK(s.center[0] == 2.0);
    CHECK(s.scale[0] == doctest::Approx(std::sqrt(2.0)));
    CHECK(r.data.predictors(2, 0) == doctest::Approx(98.0 / std::sqrt(2.0)));
  }

  TEST_CASE("holdout assignment") {
    IngestResult r = ingest_text("a,b,x\n1,0,1\n0,1,2\n1,1,3\n0,0,4\n1,0,5\n");
    assign_holdout(r.data, 0.4, 9);
    CHECK(std::count(r.data.holdout.begin(), r.data.holdout.end(), true) == 2);
    IngestResult again = ingest_text("a,b,x\n1,0,1\n0,1,2\n1,1,3\n0,0,4\n1,0,5\n");
    assign_holdout(again.data, 0.4, 9);
    CHECK(again.data.holdout == r.data.holdout);
    CHECK_THROWS_AS(assign_holdout(again.data, 1.0, 9), InvalidInput);
  }

  TEST_CASE("draws round trip") {
    TempDir tmp;
    const CommunityData d = simulate(two_guild_probit_spec(4, 10, -1.0, 1.0, 2)).data;
    std::vector<PosteriorDraw> draws;
    Rng rng(8);
    for (int m = 0; m < 5; ++m) {
      PosteriorDraw p;
      p.coefficients.alpha = Vector::NullaryExpr(4, [&] { return rng.normal(); });
      const GuildPartition z = m % 2 ? GuildPartition(std::vector<int>{1, 1, 0, 2}) : GuildPartition::pooled(4);
      p.coefficients.partitions = {z.canonical()};
      p.coefficients.gamma = {Matrix::NullaryExpr(z.n_guilds(), 1, [&] { return rng.normal() / 3.0; })};
      p.trees = {tree_from_partition(p.coefficients.partitions[0])};
      p.phi = rng.uniform();
      p.sigma2 = rng.gamma(2.0, 1.0);
      draws.push_back(p);
    }
    for (Family family : {Family::probit, Family::zip}) {
      {
        std::ofstream out(tmp.path / "draws.csv");
        write_draws_header(out, d, 1);
        for (const auto& p : draws) write_draw_row(out, p, family);
      }
      const auto back = read_draws(tmp.path / "draws.csv", 4, 1);
      REQUIRE(back.size() == draws.size());
      for (std::size_t m = 0; m < draws.size(); ++m) {
        CHECK(back[m].coefficients.alpha == draws[m].coefficients.alpha);
        CHECK(back[m].coefficients.gamma[0] == draws[m].coefficients.gamma[0]);
        CHECK(back[m].coefficients.partitions[0].encode() == draws[m].coefficients.partitions[0].encode());
        if (family == Family::zip) {
          CHECK(back[m].phi == draws[m].phi);
          CHECK(back[m].sigma2 == draws[m].sigma2);
        }
      }
    }
    CHECK_THROWS_AS(read_draws(tmp.path / "draws.csv", 3, 1), InvalidInput);
  }

  TEST_CASE("configuration") {
    const nlohmann::json j = {{"family", "zip"}, {"species", {"a"}}, {"predictors", {"x"}}, {"alpha", {0.1, 0.2}},
                              {"iterations", 500}, {"thin", 5},         {"burn", 10}};
    const RunConfig cfg = run_config_from_json(j);
    CHECK(cfg.chain.family == Family::zip);
    CHECK(cfg.chain.alpha == std::vector<double>{0.1, 0.2});
    const RunConfig back = run_config_from_json(run_config_to_json(cfg));
    CHECK(run_config_to_json(back) == run_config_to_json(cfg));
    nlohmann::json bad = j;
    bad["iteratons"] = 10;
    CHECK_THROWS_WITH_AS(run_config_from_json(bad), doctest::Contains("iteratons"), InvalidInput);
    bad = j;
    bad["burn"] = 100;
    CHECK_THROWS_AS(run_config_from_json(bad), InvalidInput);
  }

  TEST_CASE("checkpoint JSON round trip") {
    const CommunityData d = simulate(two_guild_probit_spec(4, 40, -1.0, 1.0, 2)).data;
    ChainConfig cfg;
    cfg.alpha = {0.05};
    Rng rng(3);
    ProbitState s = initial_probit_state(d);
    const auto learners = cfg.learners(1);
    for (int i = 0; i < 5; ++i) gibbs_step_probit(s, d, cfg.probit, learners, rng);
    const Checkpoint<ProbitState> cp{s, rng, 5};
    const auto back = probit_checkpoint_from_json(checkpoint_to_json(cp));
    CHECK(checkpoint_to_json(back) == checkpoint_to_json(cp));
    CHECK(back.rng == rng);
    CHECK_THROWS_AS(zip_checkpoint_from_json(checkpoint_to_json(cp)), InvalidInput);
  }

  TEST_CASE("sha256") {
    TempDir tmp;
    std::ofstream(tmp.path / "abc.txt") << "abc";
    CHECK(file_sha256(tmp.path / "abc.txt") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  }
}

TEST_SUITE("runner") {
  TEST_CASE("fit writes a complete, reproducible run directory") {
    TempDir tmp;
    const fs::path data = write_sim(tmp.path, Family::probit);
    const RunConfig cfg = small_config(Family::probit);
    const auto first = run_fit(cfg, data, tmp.path / "a");
    const auto second = run_fit(cfg, data, tmp.path / "b");
    REQUIRE(first.size() == 1);
    CHECK(slurp(tmp.path / "a" / "draws.csv") == slurp(tmp.path / "b" / "draws.csv"));
    for (const char* f : {"manifest.json", "checkpoint.json", "guild_counts.csv", "cooccurrence_1.csv",
                          "partitions.csv", "mode_tree.csv", "coefficients.csv", "guild_coefficients.csv",
                          "scores.csv", "report.txt"})
      CHECK_MESSAGE(fs::exists(tmp.path / "a" / f), f);
    const auto manifest = nlohmann::json::parse(slurp(tmp.path / "a" / "manifest.json"));
    CHECK(manifest["status"] == "complete");
    CHECK(manifest["data"]["holdout_sites"] == 20);
    CHECK(manifest["chains"][0]["retained_draws"] == cfg.chain.schedule.retained());
    CHECK(first[0].scores.neg2_lppd_holdout.has_value());
    CHECK(first[0].scores.draws == cfg.chain.schedule.retained());

    const LoadedRun run = load_run(tmp.path / "a");
    CHECK(run.chain_dirs.size() == 1);
    CHECK(run.prep.data.predictors == prepare_data(cfg, data).data.predictors);
  }

  TEST_CASE("resume continues a chain bit-identically") {
    for (Family family : {Family::probit, Family::zip}) {
      TempDir tmp;
      const fs::path data = write_sim(tmp.path, family);
      const RunConfig full = small_config(family);
      run_fit(full, data, tmp.path / "full");

      // A shorter run leaves its last checkpoint mid-way through the full schedule;
      // stray rows written after that checkpoint must be discarded on resume.
      RunConfig part = full;
      part.chain.schedule.iterations = 300;
      run_fit(part, data, tmp.path / "part");
      std::ofstream(tmp.path / "part" / "draws.csv", std::ios::app) << "999,garbage\n";
      run_fit(full, data, tmp.path / "part", true);
      CHECK(slurp(tmp.path / "full" / "draws.csv") == slurp(tmp.path / "part" / "draws.csv"));
    }
  }

  TEST_CASE("resume refuses changed data") {
    TempDir tmp;
    const fs::path data = write_sim(tmp.path, Family::probit);
    const RunConfig cfg = small_config(Family::probit);
    run_fit(cfg, data, tmp.path / "run");
    write_sim(tmp.path, Family::probit, 6);
    CHECK_THROWS_WITH_AS(run_fit(cfg, data, tmp.path / "run", true), doctest::Contains("checksum"), InvalidInput);
    CHECK_THROWS_AS(run_fit(cfg, data, tmp.path / "missing", true), InvalidInput);
  }

  TEST_CASE("multiple chains use separate directories") {
    TempDir tmp;
    const fs::path data = write_sim(tmp.path, Family::probit);
    RunConfig cfg = small_config(Family::probit);
    cfg.chain.chains = 2;
    const auto out = run_fit(cfg, data, tmp.path / "run");
    CHECK(out.size() == 2);
    CHECK(fs::exists(tmp.path / "run" / "chain_1" / "draws.csv"));
    CHECK(fs::exists(tmp.path / "run" / "chain_2" / "draws.csv"));
    CHECK(slurp(tmp.path / "run" / "chain_1" / "draws.csv") != slurp(tmp.path / "run" / "chain_2" / "draws.csv"));
  }

  TEST_CASE("slope spread and autocorrelation") {
    const double iid[] = {1.0, -1.0, 1.0, -1.0};
    CHECK(lag1_autocorrelation(iid) < -0.5);
    const double flat[] = {2.0, 2.0, 2.0};
    CHECK(lag1_autocorrelation(flat) == 0.0);

    PosteriorDraw d;
    d.coefficients.alpha = Vector::Zero(3);
    d.coefficients.partitions = {GuildPartition::identity(3)};
    Matrix g(3, 1);
    g << -1.0, 0.0, 1.0;
    d.coefficients.gamma = {g};
    d.trees = {tree_from_partition(GuildPartition::identity(3))};
    const std::vector<PosteriorDraw> draws(2, d);
    CHECK(slope_spread(draws) == doctest::Approx(1.0));
  }
}
