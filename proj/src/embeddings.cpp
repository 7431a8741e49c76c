#include "embseql/embeddings.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <set>

#include "embseql/error.hpp"
#include "text_util.hpp"

namespace embseql {

bool EmbeddingTable::set(std::string_view name, std::span<const double> values) {
  if (values.size() != dim_) {
    throw DataError("vector for '" + std::string(name) + "' has dimension " +
                    std::to_string(values.size()) + ", expected " + std::to_string(dim_));
  }
  std::string key(name);
  if (auto it = index_.find(key); it != index_.end()) {
    std::copy(values.begin(), values.end(),
              values_.begin() + static_cast<std::ptrdiff_t>(it->second * dim_));
    return true;
  }
  index_.emplace(key, names_.size());
  names_.push_back(std::move(key));
  values_.insert(values_.end(), values.begin(), values.end());
  return false;
}

std::optional<std::span<const double>> EmbeddingTable::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return std::span<const double>(values_.data() + it->second * dim_, dim_);
}

EmbeddingTable EmbeddingTable::normalize() const {
  EmbeddingTable out = *this;
  for (std::size_t i = 0; i < names_.size(); ++i) {
    double* v = out.values_.data() + i * dim_;
    double sq = 0;
    for (std::size_t k = 0; k < dim_; ++k) sq += v[k] * v[k];
    const double norm = std::sqrt(sq);
    if (norm == 0.0) throw DataError("zero embedding vector for '" + names_[i] + "'");
    for (std::size_t k = 0; k < dim_; ++k) v[k] /= norm;
  }
  out.normalized_ = true;
  return out;
}

LoadedEmbeddings read_embeddings(std::istream& in, const std::string& source) {
  LoadedEmbeddings result;
  std::optional<std::size_t> dim;
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  std::vector<double> values;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tokens = detail::split_ws(detail::strip_cr(line));
    if (tokens.empty()) continue;
    if (first) {
      first = false;
      // word2vec-style `count dim` header.
      if (tokens.size() == 2) {
        const auto count = detail::parse_int(tokens[0]);
        const auto d = detail::parse_int(tokens[1]);
        if (count && d && *count >= 0 && *d > 0) {
          dim = static_cast<std::size_t>(*d);
          continue;
        }
      }
    }
    if (tokens.size() < 2) throw ParseError(source, line_no, "expected a name and components");
    const std::size_t d = tokens.size() - 1;
    if (!dim) dim = d;
    if (d != *dim) {
      throw ParseError(source, line_no,
                       "dimension " + std::to_string(d) + " differs from " +
                           std::to_string(*dim));
    }
    values.clear();
    for (std::size_t k = 1; k < tokens.size(); ++k) {
      const auto v = detail::parse_double(tokens[k]);
      if (!v) {
        throw ParseError(source, line_no, "non-numeric component '" + std::string(tokens[k]) + "'");
      }
      values.push_back(*v);
    }
    if (result.table.size() == 0 && result.table.dim() != *dim) {
      result.table = EmbeddingTable(*dim);
    }
    if (result.table.set(tokens[0], values)) ++result.duplicates;
  }
  if (result.table.size() == 0) throw DataError(source + ": no vectors");
  return result;
}

LoadedEmbeddings load_embeddings(const std::string& path) {
  auto in = detail::open_input(path);
  return read_embeddings(in, path);
}

std::optional<Vector> symbol_embedding(std::string_view name, const EmbeddingTable& table,
                                       std::string_view joiner) {
  if (auto v = table.find(name)) return Vector(v->begin(), v->end());
  if (joiner.empty()) return std::nullopt;
  Vector sum(table.dim(), 0.0);
  std::size_t found = 0;
  for (const auto part : detail::split(name, joiner)) {
    if (auto v = table.find(part)) {
      for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += (*v)[k];
      ++found;
    }
  }
  if (found == 0) return std::nullopt;
  for (auto& x : sum) x /= static_cast<double>(found);
  return sum;
}

double euclidean_distance(std::span<const double> a, std::span<const double> b) {
  double sq = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    sq += d * d;
  }
  return std::sqrt(sq);
}

bool Group::contains(SymbolId id) const {
  return wildcard || std::binary_search(members.begin(), members.end(), id);
}

namespace {

std::string member_key(const std::vector<SymbolId>& members, const Alphabet& alphabet) {
  std::vector<std::string_view> names;
  names.reserve(members.size());
  for (const auto id : members) names.push_back(alphabet.name(id));
  std::sort(names.begin(), names.end());
  std::string key = "(";
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i > 0) key.push_back('|');
    key.append(names[i]);
  }
  key.push_back(')');
  return key;
}

}  // namespace

Group make_group(std::vector<SymbolId> members, const Alphabet& alphabet) {
  std::sort(members.begin(), members.end());
  members.erase(std::unique(members.begin(), members.end()), members.end());
  if (members.size() < 2) throw DataError("a group needs at least two distinct members");
  Group g;
  g.key = member_key(members, alphabet);
  g.display = g.key;
  g.members = std::move(members);
  return g;
}

Group wildcard_group(const Alphabet& alphabet) {
  if (alphabet.size() < 2) throw DataError("wildcard needs an alphabet of at least two symbols");
  std::vector<SymbolId> all(alphabet.size());
  for (SymbolId i = 0; i < all.size(); ++i) all[i] = i;
  Group g = make_group(std::move(all), alphabet);
  g.display = "*";
  g.wildcard = true;
  return g;
}

GroupSet::GroupSet(std::vector<Group> groups) {
  std::sort(groups.begin(), groups.end(), [](const Group& a, const Group& b) {
    if (a.members.size() != b.members.size()) return a.members.size() < b.members.size();
    return a.key < b.key;
  });
  std::set<std::vector<SymbolId>> seen;
  for (auto& g : groups) {
    if (seen.insert(g.members).second) groups_.push_back(std::move(g));
  }
  for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
    for (const auto m : groups_[gi].members) {
      if (m >= member_index_.size()) member_index_.resize(m + 1);
      member_index_[m].push_back(gi);
    }
  }
}

std::span<const std::size_t> GroupSet::containing(SymbolId id) const {
  if (id >= member_index_.size()) return {};
  return member_index_[id];
}

std::optional<std::size_t> GroupSet::find_by_key(std::string_view key) const {
  for (std::size_t i = 0; i < groups_.size(); ++i) {
    if (groups_[i].key == key) return i;
  }
  return std::nullopt;
}

GroupSet generate_groups(const Alphabet& alphabet, const EmbeddingTable& table, double radius,
                         std::string_view joiner) {
  if (!(radius >= 0)) throw DataError("radius must be non-negative");
  std::vector<SymbolId> embedded;
  std::vector<Vector> vectors;
  for (SymbolId id = 0; id < alphabet.size(); ++id) {
    if (auto v = symbol_embedding(alphabet.name(id), table, joiner)) {
      embedded.push_back(id);
      vectors.push_back(std::move(*v));
    }
  }
  std::vector<Group> candidates;
  for (std::size_t c = 0; c < embedded.size(); ++c) {
    std::vector<SymbolId> members;
    for (std::size_t o = 0; o < embedded.size(); ++o) {
      if (euclidean_distance(vectors[c], vectors[o]) <= radius) members.push_back(embedded[o]);
    }
    if (members.size() >= 2) candidates.push_back(make_group(std::move(members), alphabet));
  }
  return GroupSet(std::move(candidates));
}

GroupStats group_stats(const GroupSet& groups) {
  GroupStats stats;
  stats.groups = groups.size();
  std::set<SymbolId> covered;
  for (const auto& g : groups.groups()) {
    ++stats.size_histogram[g.members.size()];
    covered.insert(g.members.begin(), g.members.end());
  }
  stats.symbols_covered = covered.size();
  return stats;
}

GroupSet read_groups(std::istream& in, const std::string& source, Alphabet& alphabet) {
  std::vector<Group> groups;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = detail::trim(line);
    if (text.empty() || text.front() == '#') continue;
    std::vector<SymbolId> members;
    for (const auto part : detail::split(text, "|")) {
      const auto name = detail::trim(part);
      if (name.empty()) throw ParseError(source, line_no, "empty group member");
      members.push_back(alphabet.intern(name));
    }
    std::sort(members.begin(), members.end());
    if (std::unique(members.begin(), members.end()) != members.end() || members.size() < 2) {
      throw ParseError(source, line_no, "a group needs at least two distinct members");
    }
    groups.push_back(make_group(std::move(members), alphabet));
  }
  return GroupSet(std::move(groups));
}

GroupSet load_groups(const std::string& path, Alphabet& alphabet) {
  auto in = detail::open_input(path);
  return read_groups(in, path, alphabet);
}

void write_groups(std::ostream& out, const GroupSet& groups, const Alphabet& alphabet) {
  out << "# groups: " << groups.size() << '\n';
  if (groups.empty()) out << "# no two symbols fall within the radius; training uses base symbols only\n";
  for (const auto& g : groups.groups()) {
    for (const auto m : g.members) {
      if (alphabet.name(m).find('|') != std::string::npos) {
        throw DataError("symbol '" + alphabet.name(m) + "' contains '|' and cannot be written");
      }
    }
    // Strip the parentheses of the canonical key.
    out << std::string_view(g.key).substr(1, g.key.size() - 2) << '\n';
  }
}

void save_groups(const std::string& path, const GroupSet& groups, const Alphabet& alphabet) {
  auto out = detail::open_output(path);
  write_groups(out, groups, alphabet);
}

}  // namespace embseql
