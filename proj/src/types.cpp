#include "guildtree/types.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace guildtree {

std::string to_string(Family family) {
  return family == Family::probit ? "probit" : "zip";
}

Family family_from_string(const std::string& name) {
  if (name == "probit") return Family::probit;
  if (name == "zip") return Family::zip;
  throw InvalidInput("unknown data family '" + name + "' (expected probit or zip)");
}

int CommunityData::n_periods() const {
  if (period.empty()) return 1;
  return *std::max_element(period.begin(), period.end()) + 1;
}

bool CommunityData::has_holdout() const {
  return std::any_of(holdout.begin(), holdout.end(), [](bool b) { return b; });
}

void CommunityData::validate(Family family) const {
  const int n = n_sites();
  if (n <= 0) throw InvalidInput("community data has no sites");
  if (n_species() <= 0) throw InvalidInput("community data has no species");
  if (n_predictors() <= 0) throw InvalidInput("community data has no predictors");
  if (predictors.rows() != n)
    throw InvalidInput("predictor rows (" + std::to_string(predictors.rows()) +
                       ") differ from response rows (" + std::to_string(n) + ")");
  if (!species_names.empty() && static_cast<int>(species_names.size()) != n_species())
    throw InvalidInput("species name count does not match response columns");
  if (!predictor_names.empty() && static_cast<int>(predictor_names.size()) != n_predictors())
    throw InvalidInput("predictor name count does not match predictor columns");
  if (!period.empty() && static_cast<int>(period.size()) != n)
    throw InvalidInput("period labels must cover every site");
  if (!holdout.empty() && static_cast<int>(holdout.size()) != n)
    throw InvalidInput("holdout flags must cover every site");
  for (int p : period)
    if (p < 0) throw InvalidInput("period labels must be positive");
  if (!predictors.allFinite()) throw InvalidInput("predictors contain missing or non-finite values");
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n_species(); ++j) {
      const int y = responses(i, j);
      if (family == Family::probit && y != 0 && y != 1)
        throw InvalidInput("presence-absence response must be 0 or 1 (site " + std::to_string(i + 1) +
                           ", species " + std::to_string(j + 1) + ")");
      if (y < 0)
        throw InvalidInput("negative count (site " + std::to_string(i + 1) + ", species " +
                           std::to_string(j + 1) + ")");
    }
  }
}

CommunityData CommunityData::select_sites(const std::vector<int>& sites) const {
  CommunityData out;
  const int m = static_cast<int>(sites.size());
  out.responses.resize(m, n_species());
  out.predictors.resize(m, n_predictors());
  out.species_names = species_names;
  out.predictor_names = predictor_names;
  for (int r = 0; r < m; ++r) {
    out.responses.row(r) = responses.row(sites[r]);
    out.predictors.row(r) = predictors.row(sites[r]);
    if (!period.empty()) out.period.push_back(period[sites[r]]);
  }
  return out;
}

CommunityData CommunityData::fit_sites() const {
  std::vector<int> sites;
  for (int i = 0; i < n_sites(); ++i)
    if (holdout.empty() || !holdout[i]) sites.push_back(i);
  return select_sites(sites);
}

CommunityData CommunityData::holdout_sites() const {
  std::vector<int> sites;
  for (int i = 0; i < n_sites(); ++i)
    if (!holdout.empty() && holdout[i]) sites.push_back(i);
  return select_sites(sites);
}

GuildTree GuildTree::single_guild(int n_species) {
  if (n_species < 1) throw InvalidInput("a tree needs at least one species");
  GuildTree tree;
  tree.n_species_ = n_species;
  TreeNode root;
  root.species.resize(n_species);
  std::iota(root.species.begin(), root.species.end(), 0);
  tree.nodes_.push_back(std::move(root));
  return tree;
}

int GuildTree::split(int node, std::vector<int> left, std::vector<int> right) {
  if (node < 0 || node >= static_cast<int>(nodes_.size()) || !nodes_[node].terminal())
    throw InvalidInput("only existing terminal nodes can be split");
  if (left.empty() || right.empty()) throw InvalidInput("tree split produced an empty child");
  std::sort(left.begin(), left.end());
  std::sort(right.begin(), right.end());
  std::vector<int> merged;
  std::merge(left.begin(), left.end(), right.begin(), right.end(), std::back_inserter(merged));
  if (merged != nodes_[node].species) throw InvalidInput("children do not partition the parent node");
  const int first = static_cast<int>(nodes_.size());
  nodes_[node].left = first;
  nodes_[node].right = first + 1;
  nodes_.push_back(TreeNode{std::move(left)});
  nodes_.push_back(TreeNode{std::move(right)});
  return first;
}

int GuildTree::n_guilds() const {
  return static_cast<int>(std::count_if(nodes_.begin(), nodes_.end(),
                                        [](const TreeNode& n) { return n.terminal(); }));
}

void GuildTree::collect(int node, std::vector<std::vector<int>>& out) const {
  const TreeNode& n = nodes_[node];
  if (n.terminal()) {
    out.push_back(n.species);
    return;
  }
  collect(n.left, out);
  collect(n.right, out);
}

std::vector<std::vector<int>> GuildTree::guilds() const {
  std::vector<std::vector<int>> out;
  if (!nodes_.empty()) collect(0, out);
  return out;
}

void GuildTree::validate() const {
  if (nodes_.empty()) throw InvalidInput("empty tree");
  std::vector<int> seen(n_species_, 0);
  for (const auto& g : guilds()) {
    if (g.empty()) throw InvalidInput("tree has an empty terminal node");
    for (int j : g) {
      if (j < 0 || j >= n_species_) throw InvalidInput("tree references an unknown species");
      ++seen[j];
    }
  }
  for (int c : seen)
    if (c != 1) throw InvalidInput("terminal nodes do not partition the species");
}

GuildPartition::GuildPartition(std::vector<int> membership) : membership_(std::move(membership)) {
  if (membership_.empty()) throw InvalidInput("partition needs at least one species");
  const int max_guild = *std::max_element(membership_.begin(), membership_.end());
  std::vector<int> sizes(max_guild + 1, 0);
  for (int g : membership_) {
    if (g < 0) throw InvalidInput("guild index must be nonnegative");
    ++sizes[g];
  }
  for (int s : sizes)
    if (s == 0) throw InvalidInput("partition has an empty guild");
  n_guilds_ = max_guild + 1;
}

GuildPartition GuildPartition::pooled(int n_species) {
  return GuildPartition(std::vector<int>(n_species, 0));
}

GuildPartition GuildPartition::identity(int n_species) {
  std::vector<int> m(n_species);
  std::iota(m.begin(), m.end(), 0);
  return GuildPartition(std::move(m));
}

GuildPartition GuildPartition::from_groups(const std::vector<std::vector<int>>& groups, int n_species) {
  std::vector<int> m(n_species, -1);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (int j : groups[g]) {
      if (j < 0 || j >= n_species || m[j] != -1)
        throw InvalidInput("groups do not partition the species");
      m[j] = static_cast<int>(g);
    }
  }
  if (std::find(m.begin(), m.end(), -1) != m.end()) throw InvalidInput("groups miss a species");
  return GuildPartition(std::move(m));
}

std::vector<std::vector<int>> GuildPartition::groups() const {
  std::vector<std::vector<int>> out(n_guilds_);
  for (int j = 0; j < n_species(); ++j) out[membership_[j]].push_back(j);
  return out;
}

Matrix GuildPartition::indicator() const {
  Matrix z = Matrix::Zero(n_species(), n_guilds_);
  for (int j = 0; j < n_species(); ++j) z(j, membership_[j]) = 1.0;
  return z;
}

std::vector<int> GuildPartition::canonical_relabel() const {
  std::vector<int> relabel(n_guilds_, -1);
  int next = 0;
  for (int g : membership_)
    if (relabel[g] < 0) relabel[g] = next++;
  return relabel;
}

GuildPartition GuildPartition::canonical() const {
  const auto relabel = canonical_relabel();
  std::vector<int> m(membership_.size());
  for (std::size_t j = 0; j < m.size(); ++j) m[j] = relabel[membership_[j]];
  return GuildPartition(std::move(m));
}

std::string GuildPartition::encode() const {
  std::string out;
  const auto gs = canonical().groups();
  for (std::size_t g = 0; g < gs.size(); ++g) {
    if (g) out += '|';
    for (std::size_t m = 0; m < gs[g].size(); ++m) {
      if (m) out += '+';
      out += std::to_string(gs[g][m] + 1);
    }
  }
  return out;
}

GuildPartition GuildPartition::decode(const std::string& text, int n_species) {
  std::vector<std::vector<int>> groups;
  std::stringstream guilds(text);
  std::string guild;
  while (std::getline(guilds, guild, '|')) {
    std::vector<int> members;
    std::stringstream ms(guild);
    std::string tok;
    while (std::getline(ms, tok, '+')) {
      try {
        members.push_back(std::stoi(tok) - 1);
      } catch (const std::exception&) {
        throw InvalidInput("malformed partition string '" + text + "'");
      }
    }
    if (members.empty()) throw InvalidInput("malformed partition string '" + text + "'");
    groups.push_back(std::move(members));
  }
  return from_groups(groups, n_species);
}

bool GuildPartition::same_grouping(const GuildPartition& other) const {
  return n_species() == other.n_species() && canonical() == other.canonical();
}

}  // namespace guildtree
