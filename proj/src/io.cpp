#include "guildtree/io.hpp"

#include "guildtree/design.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

namespace guildtree {

using nlohmann::json;

std::string format_double(double value) {
  if (std::isnan(value)) return "NA";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

namespace {

std::vector<std::string> split(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, delim)) out.push_back(field);
  if (!line.empty() && line.back() == delim) out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

bool parse_double(const std::string& text, double& out) {
  const char* first = text.data();
  const char* last = first + text.size();
  if (first != last && *first == '+') ++first;
  const auto res = std::from_chars(first, last, out);
  return res.ec == std::errc() && res.ptr == last && std::isfinite(out);
}

bool parse_long(const std::string& text, long& out) {
  const auto res = std::from_chars(text.data(), text.data() + text.size(), out);
  return res.ec == std::errc() && res.ptr == text.data() + text.size();
}

std::string where(const std::string& source, long row, const std::string& column) {
  return source + ": row " + std::to_string(row) + ", column '" + column + "'";
}

}  // namespace

IngestResult ingest(const std::filesystem::path& path, const IngestSchema& schema) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path.string());
  return ingest(in, schema, path.string());
}

IngestResult ingest(std::istream& in, const IngestSchema& schema, const std::string& source) {
  if (schema.species.empty()) throw InvalidInput("no species columns declared");
  if (schema.predictors.empty()) throw InvalidInput("no predictor columns declared");
  std::string line;
  if (!std::getline(in, line) || trim(line).empty()) throw InvalidInput(source + " is empty");
  std::vector<std::string> header = split(trim(line), ',');
  for (auto& h : header) h = trim(h);

  enum class Role { site, period, holdout, species, predictor };
  std::vector<std::pair<Role, int>> roles;
  std::set<std::string> seen;
  std::map<std::string, int> species_index;
  std::map<std::string, int> predictor_index;
  for (std::size_t j = 0; j < schema.species.size(); ++j) species_index[schema.species[j]] = static_cast<int>(j);
  for (std::size_t k = 0; k < schema.predictors.size(); ++k)
    predictor_index[schema.predictors[k]] = static_cast<int>(k);
  bool has_period = false;
  bool has_holdout = false;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string& name = header[c];
    if (!seen.insert(name).second) throw InvalidInput(source + ": duplicate column '" + name + "'");
    if (name == "site") {
      roles.emplace_back(Role::site, 0);
    } else if (name == "period") {
      roles.emplace_back(Role::period, 0);
      has_period = true;
    } else if (name == "holdout") {
      roles.emplace_back(Role::holdout, 0);
      has_holdout = true;
    } else if (auto s = species_index.find(name); s != species_index.end()) {
      roles.emplace_back(Role::species, s->second);
    } else if (auto p = predictor_index.find(name); p != predictor_index.end()) {
      roles.emplace_back(Role::predictor, p->second);
    } else {
      throw InvalidInput(source + ": unknown column '" + name + "' (column " + std::to_string(c + 1) + ")");
    }
  }
  for (const auto& s : schema.species)
    if (!seen.count(s)) throw InvalidInput(source + ": missing species column '" + s + "'");
  for (const auto& p : schema.predictors)
    if (!seen.count(p)) throw InvalidInput(source + ": missing predictor column '" + p + "'");

  const auto j_count = static_cast<int>(schema.species.size());
  const auto k = static_cast<int>(schema.predictors.size());
  std::vector<std::vector<int>> responses;
  std::vector<std::vector<double>> predictors;
  std::vector<int> period;
  std::vector<bool> holdout;
  long row = 1;
  while (std::getline(in, line)) {
    ++row;
    line = trim(line);
    if (line.empty()) continue;
    std::vector<std::string> fields = split(line, ',');
    if (fields.size() != header.size())
      throw InvalidInput(source + ": row " + std::to_string(row) + " has " + std::to_string(fields.size()) +
                         " fields, header has " + std::to_string(header.size()));
    std::vector<int> y(j_count);
    std::vector<double> x(k);
    for (std::size_t c = 0; c < fields.size(); ++c) {
      const std::string f = trim(fields[c]);
      const auto [role, index] = roles[c];
      long v = 0;
      switch (role) {
        case Role::site:
          break;
        case Role::period:
          if (!parse_long(f, v) || v < 1)
            throw InvalidInput(where(source, row, header[c]) + ": period must be a positive integer");
          period.push_back(static_cast<int>(v - 1));
          break;
        case Role::holdout:
          if (!parse_long(f, v) || (v != 0 && v != 1))
            throw InvalidInput(where(source, row, header[c]) + ": holdout must be 0 or 1");
          holdout.push_back(v == 1);
          break;
        case Role::species:
          if (!parse_long(f, v)) throw InvalidInput(where(source, row, header[c]) + ": response is not an integer");
          if (v < 0) throw InvalidInput(where(source, row, header[c]) + ": negative count");
          if (schema.family == Family::probit && v > 1)
            throw InvalidInput(where(source, row, header[c]) + ": presence-absence response must be 0 or 1");
          y[index] = static_cast<int>(v);
          break;
        case Role::predictor:
          if (!parse_double(f, x[index]))
            throw InvalidInput(where(source, row, header[c]) + ": predictor is missing or not a finite number");
          break;
      }
    }
    responses.push_back(std::move(y));
    predictors.push_back(std::move(x));
  }
  if (responses.empty()) throw InvalidInput(source + " has no data rows");

  IngestResult result;
  CommunityData& data = result.data;
  const auto n = static_cast<int>(responses.size());
  data.responses.resize(n, j_count);
  data.predictors.resize(n, k);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < j_count; ++j) data.responses(i, j) = responses[i][j];
    for (int c = 0; c < k; ++c) data.predictors(i, c) = predictors[i][c];
  }
  data.species_names = schema.species;
  data.predictor_names = schema.predictors;
  if (has_period) data.period = std::move(period);
  if (has_holdout) data.holdout = std::move(holdout);

  result.scaling.center.assign(k, 0.0);
  result.scaling.scale.assign(k, 1.0);
  if (schema.standardize) result.scaling = standardize_predictors(data);
  data.validate(schema.family);
  return result;
}

PredictorScaling standardize_predictors(CommunityData& data) {
  const int n = data.n_sites();
  const int k = data.n_predictors();
  PredictorScaling scaling{std::vector<double>(k, 0.0), std::vector<double>(k, 1.0)};
  for (int c = 0; c < k; ++c) {
    double sum = 0.0;
    double count = 0.0;
    for (int i = 0; i < n; ++i)
      if (data.holdout.empty() || !data.holdout[i]) {
        sum += data.predictors(i, c);
        count += 1.0;
      }
    if (count == 0.0) throw InvalidInput("every site is flagged holdout");
    const double mean = sum / count;
    double ss = 0.0;
    for (int i = 0; i < n; ++i)
      if (data.holdout.empty() || !data.holdout[i])
        ss += (data.predictors(i, c) - mean) * (data.predictors(i, c) - mean);
    const double sd = count > 1.0 ? std::sqrt(ss / (count - 1.0)) : 0.0;
    scaling.center[c] = mean;
    scaling.scale[c] = sd > 0.0 ? sd : 1.0;
  }
  apply_scaling(data, scaling);
  return scaling;
}

void apply_scaling(CommunityData& data, const PredictorScaling& scaling) {
  if (static_cast<int>(scaling.center.size()) != data.n_predictors() ||
      static_cast<int>(scaling.scale.size()) != data.n_predictors())
    throw InvalidInput("scaling constants do not match the predictor count");
  for (int c = 0; c < data.n_predictors(); ++c)
    data.predictors.col(c) = (data.predictors.col(c).array() - scaling.center[c]) / scaling.scale[c];
}

void assign_holdout(CommunityData& data, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw InvalidInput("holdout fraction must lie strictly between 0 and 1");
  const int n = data.n_sites();
  const auto n_holdout = static_cast<int>(std::lround(fraction * n));
  if (n_holdout < 1 || n_holdout >= n) throw InvalidInput("holdout fraction leaves no fit or no holdout sites");
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  Rng rng = Rng::stream(seed, 0x686f6c64);
  std::shuffle(order.begin(), order.end(), rng);
  data.holdout.assign(n, false);
  for (int h = 0; h < n_holdout; ++h) data.holdout[order[h]] = true;
}

void write_community_csv(std::ostream& out, const CommunityData& data) {
  out << "site";
  if (!data.period.empty()) out << ",period";
  if (!data.holdout.empty()) out << ",holdout";
  for (const auto& s : data.species_names) out << ',' << s;
  for (const auto& p : data.predictor_names) out << ',' << p;
  out << '\n';
  for (int i = 0; i < data.n_sites(); ++i) {
    out << i + 1;
    if (!data.period.empty()) out << ',' << data.period[i] + 1;
    if (!data.holdout.empty()) out << ',' << (data.holdout[i] ? 1 : 0);
    for (int j = 0; j < data.n_species(); ++j) out << ',' << data.responses(i, j);
    for (int c = 0; c < data.n_predictors(); ++c) out << ',' << format_double(data.predictors(i, c));
    out << '\n';
  }
}

void write_community_csv(const std::filesystem::path& path, const CommunityData& data) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write " + path.string());
  write_community_csv(out, data);
}

json truth_to_json(const SimTruth& truth) {
  const SimSpec& s = truth.spec;
  json periods = json::array();
  for (std::size_t t = 0; t < s.partitions.size(); ++t) {
    json guilds = json::array();
    for (const auto& g : s.partitions[t].groups()) {
      json members = json::array();
      for (int j : g) members.push_back(j + 1);
      guilds.push_back(members);
    }
    json gamma = json::array();
    for (Eigen::Index g = 0; g < s.gamma[t].rows(); ++g) {
      json row = json::array();
      for (Eigen::Index c = 0; c < s.gamma[t].cols(); ++c) row.push_back(s.gamma[t](g, c));
      gamma.push_back(row);
    }
    periods.push_back({{"guilds", guilds}, {"gamma", gamma}, {"partition", s.partitions[t].encode()}});
  }
  return {{"family", to_string(s.family)},
          {"n_species", s.n_species},
          {"n_predictors", s.n_predictors},
          {"n_sites", s.n_sites},
          {"n_holdout_sites", s.n_holdout_sites},
          {"periods", periods},
          {"alpha", std::vector<double>(s.alpha.data(), s.alpha.data() + s.alpha.size())},
          {"phi", s.phi},
          {"sigma2", s.sigma2},
          {"seed", s.seed}};
}

SimSpec sim_spec_from_json(const json& j) {
  SimSpec s;
  s.family = family_from_string(j.value("family", "probit"));
  s.n_species = j.at("n_species").get<int>();
  s.n_predictors = j.value("n_predictors", 1);
  s.n_sites = j.at("n_sites").get<int>();
  s.n_holdout_sites = j.value("n_holdout_sites", 0);
  for (const auto& p : j.at("periods")) {
    std::vector<std::vector<int>> groups;
    for (const auto& g : p.at("guilds")) {
      std::vector<int> members;
      for (int m : g.get<std::vector<int>>()) members.push_back(m - 1);
      groups.push_back(std::move(members));
    }
    s.partitions.push_back(GuildPartition::from_groups(groups, s.n_species));
    const auto rows = p.at("gamma").get<std::vector<std::vector<double>>>();
    Matrix gamma(static_cast<Eigen::Index>(rows.size()), s.n_predictors);
    for (std::size_t g = 0; g < rows.size(); ++g) {
      if (static_cast<int>(rows[g].size()) != s.n_predictors) throw InvalidInput("gamma row length must equal K");
      for (int c = 0; c < s.n_predictors; ++c) gamma(static_cast<Eigen::Index>(g), c) = rows[g][c];
    }
    s.gamma.push_back(gamma);
  }
  const json& a = j.at("alpha");
  s.alpha = Vector::Constant(s.n_species, a.is_number() ? a.get<double>() : 0.0);
  if (a.is_array()) {
    const auto v = a.get<std::vector<double>>();
    if (static_cast<int>(v.size()) != s.n_species) throw InvalidInput("alpha needs one value per species");
    for (int k = 0; k < s.n_species; ++k) s.alpha(k) = v[k];
  }
  s.phi = j.value("phi", 0.0);
  s.sigma2 = j.value("sigma2", 0.5);
  s.seed = j.value("seed", std::uint64_t{1});
  s.validate();
  return s;
}

void write_draws_header(std::ostream& out, const CommunityData& data, int n_periods) {
  out << "draw";
  for (const auto& s : data.species_names) out << ",alpha_" << s;
  for (int t = 1; t <= n_periods; ++t) out << ",partition_" << t << ",gamma_" << t;
  out << ",phi,sigma2\n";
}

void write_draw_row(std::ostream& out, const PosteriorDraw& draw, Family family) {
  const auto& c = draw.coefficients;
  out << draw.draw_index;
  for (Eigen::Index j = 0; j < c.alpha.size(); ++j) out << ',' << format_double(c.alpha(j));
  for (std::size_t t = 0; t < c.partitions.size(); ++t) {
    const auto& z = c.partitions[t];
    const auto relabel = z.canonical_relabel();
    Matrix canonical(c.gamma[t].rows(), c.gamma[t].cols());
    for (int g = 0; g < z.n_guilds(); ++g) canonical.row(relabel[g]) = c.gamma[t].row(g);
    out << ',' << z.encode() << ',';
    const auto flat = canonical.reshaped();
    for (Eigen::Index v = 0; v < flat.size(); ++v) out << (v ? ";" : "") << format_double(flat(v));
  }
  if (family == Family::zip)
    out << ',' << format_double(draw.phi) << ',' << format_double(draw.sigma2) << '\n';
  else
    out << ",NA,NA\n";
}

std::vector<PosteriorDraw> read_draws(const std::filesystem::path& path, int n_species, int n_predictors) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open draws file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput(path.string() + " is empty");
  const auto header = split(line, ',');
  int alphas = 0;
  int periods = 0;
  for (const auto& h : header) {
    if (h.rfind("alpha_", 0) == 0) ++alphas;
    if (h.rfind("partition_", 0) == 0) ++periods;
  }
  if (alphas != n_species) throw InvalidInput(path.string() + ": species count does not match the data");
  const std::size_t expected = 1 + static_cast<std::size_t>(alphas) + 2 * static_cast<std::size_t>(periods) + 2;
  if (header.size() != expected || periods < 1) throw InvalidInput(path.string() + ": malformed draws header");

  std::vector<PosteriorDraw> draws;
  long row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != expected) throw InvalidInput(path.string() + ": row " + std::to_string(row) + " is malformed");
    PosteriorDraw d;
    long index = 0;
    if (!parse_long(f[0], index)) throw InvalidInput(path.string() + ": bad draw index on row " + std::to_string(row));
    d.draw_index = index;
    d.coefficients.alpha.resize(n_species);
    for (int j = 0; j < n_species; ++j)
      if (!parse_double(f[1 + j], d.coefficients.alpha(j)))
        throw InvalidInput(path.string() + ": bad intercept on row " + std::to_string(row));
    for (int t = 0; t < periods; ++t) {
      const GuildPartition z = GuildPartition::decode(f[1 + n_species + 2 * t], n_species);
      const auto values = split(f[2 + n_species + 2 * t], ';');
      if (static_cast<long>(values.size()) != static_cast<long>(z.n_guilds()) * n_predictors)
        throw InvalidInput(path.string() + ": gamma length disagrees with partition on row " + std::to_string(row));
      Vector flat(static_cast<Eigen::Index>(values.size()));
      for (std::size_t v = 0; v < values.size(); ++v)
        if (!parse_double(values[v], flat(static_cast<Eigen::Index>(v))))
          throw InvalidInput(path.string() + ": bad gamma on row " + std::to_string(row));
      d.trees.push_back(tree_from_partition(z));
      d.coefficients.partitions.push_back(partition_from_tree(d.trees.back()));
      d.coefficients.gamma.push_back(flat.reshaped(z.n_guilds(), n_predictors));
    }
    const std::string& phi = f[expected - 2];
    const std::string& sigma2 = f[expected - 1];
    if (phi != "NA" && !parse_double(phi, d.phi)) throw InvalidInput(path.string() + ": bad phi");
    if (sigma2 != "NA" && !parse_double(sigma2, d.sigma2)) throw InvalidInput(path.string() + ": bad sigma2");
    draws.push_back(std::move(d));
  }
  return draws;
}

namespace {

const std::set<std::string> kConfigKeys = {
    "family",      "species",          "predictors",      "alpha",           "iterations",
    "thin",        "burn",             "seed",            "chains",          "priors",
    "learner",     "standardize",      "holdout_fraction", "checkpoint_every", "adapt_proposals",
    "check_invariants", "scoring"};

}  // namespace

RunConfig run_config_from_json(const json& j) {
  for (const auto& [key, value] : j.items())
    if (!kConfigKeys.count(key)) throw InvalidInput("unknown configuration key '" + key + "'");
  RunConfig cfg;
  ChainConfig& c = cfg.chain;
  c.family = family_from_string(j.value("family", "probit"));
  cfg.species = j.value("species", std::vector<std::string>{});
  cfg.predictors = j.value("predictors", std::vector<std::string>{});
  if (j.contains("alpha")) {
    const auto& a = j.at("alpha");
    c.alpha = a.is_array() ? a.get<std::vector<double>>() : std::vector<double>{a.get<double>()};
  }
  c.schedule.iterations = j.value("iterations", c.schedule.iterations);
  c.schedule.thin = j.value("thin", c.schedule.thin);
  c.schedule.burn = j.value("burn", c.schedule.burn);
  c.seed = j.value("seed", c.seed);
  c.chains = j.value("chains", c.chains);
  c.adapt_proposals = j.value("adapt_proposals", c.adapt_proposals);
  c.check_invariants = j.value("check_invariants", c.check_invariants);
  if (j.contains("priors")) {
    const auto& p = j.at("priors");
    if (c.family == Family::probit) {
      c.probit.intercept_variance = p.value("intercept_variance", c.probit.intercept_variance);
      c.probit.gamma_variance = p.value("gamma_variance", c.probit.gamma_variance);
    } else {
      c.zip.intercept_variance = p.value("intercept_variance", c.zip.intercept_variance);
      c.zip.gamma_variance = p.value("gamma_variance", c.zip.gamma_variance);
      c.zip.sigma2_shape = p.value("sigma2_shape", c.zip.sigma2_shape);
      c.zip.sigma2_scale = p.value("sigma2_scale", c.zip.sigma2_scale);
      c.zip.phi_a = p.value("phi_a", c.zip.phi_a);
      c.zip.phi_b = p.value("phi_b", c.zip.phi_b);
    }
  }
  if (j.contains("learner")) {
    const auto& l = j.at("learner");
    c.min_node_species = l.value("min_node_species", c.min_node_species);
    c.max_exhaustive_subset = l.value("max_exhaustive_subset", c.max_exhaustive_subset);
  }
  cfg.standardize = j.value("standardize", cfg.standardize);
  if (j.contains("holdout_fraction") && !j.at("holdout_fraction").is_null()) {
    cfg.holdout_fraction = j.at("holdout_fraction").get<double>();
    if (!(*cfg.holdout_fraction > 0.0 && *cfg.holdout_fraction < 1.0))
      throw InvalidInput("holdout_fraction must lie strictly between 0 and 1");
  }
  cfg.checkpoint_every = j.value("checkpoint_every", cfg.checkpoint_every);
  if (j.contains("scoring")) {
    cfg.score_latent_draws = j.at("scoring").value("latent_draws", cfg.score_latent_draws);
    cfg.score_seed = j.at("scoring").value("seed", cfg.score_seed);
  }
  c.validate(c.alpha.size() > 1 ? static_cast<int>(c.alpha.size()) : 1);
  return cfg;
}

json run_config_to_json(const RunConfig& cfg) {
  const ChainConfig& c = cfg.chain;
  json priors;
  if (c.family == Family::probit) {
    priors = {{"intercept_variance", c.probit.intercept_variance}, {"gamma_variance", c.probit.gamma_variance}};
  } else {
    priors = {{"intercept_variance", c.zip.intercept_variance}, {"gamma_variance", c.zip.gamma_variance},
              {"sigma2_shape", c.zip.sigma2_shape},             {"sigma2_scale", c.zip.sigma2_scale},
              {"phi_a", c.zip.phi_a},                           {"phi_b", c.zip.phi_b}};
  }
  std::vector<double> alpha = c.alpha;
  if (alpha.empty()) alpha.push_back(c.learner(0).alpha);
  return {{"family", to_string(c.family)},
          {"species", cfg.species},
          {"predictors", cfg.predictors},
          {"alpha", alpha},
          {"iterations", c.schedule.iterations},
          {"thin", c.schedule.thin},
          {"burn", c.schedule.burn},
          {"seed", c.seed},
          {"chains", c.chains},
          {"priors", priors},
          {"learner", {{"min_node_species", c.min_node_species}, {"max_exhaustive_subset", c.max_exhaustive_subset}}},
          {"standardize", cfg.standardize},
          {"holdout_fraction", cfg.holdout_fraction ? json(*cfg.holdout_fraction) : json(nullptr)},
          {"checkpoint_every", cfg.checkpoint_every},
          {"adapt_proposals", c.adapt_proposals},
          {"check_invariants", c.check_invariants},
          {"scoring", {{"latent_draws", cfg.score_latent_draws}, {"seed", cfg.score_seed}}}};
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open configuration " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InvalidInput(path.string() + ": " + e.what());
  }
  return run_config_from_json(j);
}

namespace {

template <class M>
json matrix_to_json(const M& m) {
  std::vector<typename M::Scalar> v(m.data(), m.data() + m.size());
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", v}};
}

template <class M>
M matrix_from_json(const json& j) {
  using S = typename M::Scalar;
  const auto v = j.at("data").get<std::vector<S>>();
  M m(j.at("rows").get<Eigen::Index>(), j.at("cols").get<Eigen::Index>());
  if (static_cast<Eigen::Index>(v.size()) != m.size()) throw InvalidInput("corrupt matrix in checkpoint");
  std::copy(v.begin(), v.end(), m.data());
  return m;
}

json tree_to_json(const GuildTree& tree) {
  json nodes = json::array();
  for (const auto& n : tree.nodes()) nodes.push_back({{"species", n.species}, {"left", n.left}, {"right", n.right}});
  return {{"n_species", tree.n_species()}, {"nodes", nodes}};
}

void replay(const json& nodes, int old_index, GuildTree& tree, int new_index) {
  const json& n = nodes.at(static_cast<std::size_t>(old_index));
  const int left = n.at("left").get<int>();
  if (left < 0) return;
  const int right = n.at("right").get<int>();
  const int child = tree.split(new_index, nodes.at(static_cast<std::size_t>(left)).at("species").get<std::vector<int>>(),
                               nodes.at(static_cast<std::size_t>(right)).at("species").get<std::vector<int>>());
  replay(nodes, left, tree, child);
  replay(nodes, right, tree, child + 1);
}

GuildTree tree_from_json(const json& j) {
  GuildTree tree = GuildTree::single_guild(j.at("n_species").get<int>());
  replay(j.at("nodes"), 0, tree, 0);
  return tree;
}

json regression_to_json(const RegressionState& reg) {
  json trees = json::array();
  json gamma = json::array();
  for (const auto& t : reg.trees) trees.push_back(tree_to_json(t));
  for (const auto& g : reg.gamma) gamma.push_back(matrix_to_json(g));
  return {{"alpha", matrix_to_json(reg.alpha)}, {"trees", trees}, {"gamma", gamma}};
}

RegressionState regression_from_json(const json& j) {
  RegressionState reg;
  reg.alpha = matrix_from_json<Vector>(j.at("alpha"));
  for (const auto& t : j.at("trees")) {
    reg.trees.push_back(tree_from_json(t));
    reg.partitions.push_back(partition_from_tree(reg.trees.back()));
  }
  for (const auto& g : j.at("gamma")) reg.gamma.push_back(matrix_from_json<Matrix>(g));
  return reg;
}

}  // namespace

json checkpoint_to_json(const Checkpoint<ProbitState>& cp) {
  return {{"family", "probit"},
          {"iteration", cp.iteration},
          {"rng", cp.rng.serialize()},
          {"aux", matrix_to_json(cp.state.aux)},
          {"regression", regression_to_json(cp.state.regression)},
          {"learner_warnings", cp.state.learner_warnings}};
}

json checkpoint_to_json(const Checkpoint<ZipState>& cp) {
  const ZipState& s = cp.state;
  return {{"family", "zip"},
          {"iteration", cp.iteration},
          {"rng", cp.rng.serialize()},
          {"z", matrix_to_json(s.z)},
          {"w", matrix_to_json(s.w)},
          {"phi", s.phi},
          {"sigma2", s.sigma2},
          {"regression", regression_to_json(s.regression)},
          {"log_step", matrix_to_json(s.log_step)},
          {"accepted", matrix_to_json(s.accepted)},
          {"attempted", matrix_to_json(s.attempted)},
          {"batches", s.batches},
          {"learner_warnings", s.learner_warnings}};
}

Checkpoint<ProbitState> probit_checkpoint_from_json(const json& j) {
  if (j.at("family") != "probit") throw InvalidInput("checkpoint is not from a probit run");
  Checkpoint<ProbitState> cp{ProbitState{}, Rng::deserialize(j.at("rng").get<std::string>()),
                             j.at("iteration").get<long>()};
  cp.state.aux = matrix_from_json<Matrix>(j.at("aux"));
  cp.state.regression = regression_from_json(j.at("regression"));
  cp.state.learner_warnings = j.at("learner_warnings").get<long>();
  return cp;
}

Checkpoint<ZipState> zip_checkpoint_from_json(const json& j) {
  if (j.at("family") != "zip") throw InvalidInput("checkpoint is not from a zip run");
  Checkpoint<ZipState> cp{ZipState{}, Rng::deserialize(j.at("rng").get<std::string>()),
                          j.at("iteration").get<long>()};
  ZipState& s = cp.state;
  s.z = matrix_from_json<Matrix>(j.at("z"));
  s.w = matrix_from_json<CountMatrix>(j.at("w"));
  s.phi = j.at("phi").get<double>();
  s.sigma2 = j.at("sigma2").get<double>();
  s.regression = regression_from_json(j.at("regression"));
  s.log_step = matrix_from_json<Matrix>(j.at("log_step"));
  s.accepted = matrix_from_json<CountMatrix>(j.at("accepted"));
  s.attempted = matrix_from_json<CountMatrix>(j.at("attempted"));
  s.batches = j.at("batches").get<long>();
  s.learner_warnings = j.at("learner_warnings").get<long>();
  return cp;
}

std::string file_sha256(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 14];
  while (in) {
    in.read(buf, sizeof(buf));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int b = 0; b < len; ++b) hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[b]);
  return hex.str();
}

}  // namespace guildtree
