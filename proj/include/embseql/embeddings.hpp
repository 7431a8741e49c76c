#pragma once

// Pre-trained embedding tables and the radius-based symbol groups derived
// from them.

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "embseql/corpus.hpp"

namespace embseql {

using Vector = std::vector<double>;

class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  explicit EmbeddingTable(std::size_t dim) : dim_(dim) {}

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return names_.size(); }
  bool normalized() const { return normalized_; }

  // Inserts or overwrites. Returns true when `name` was already present.
  bool set(std::string_view name, std::span<const double> values);
  std::optional<std::span<const double>> find(std::string_view name) const;
  bool contains(std::string_view name) const { return index_.count(std::string(name)) > 0; }

  // Names in insertion order.
  const std::vector<std::string>& names() const { return names_; }

  // Scales every vector to unit Euclidean norm. Throws DataError naming the
  // first zero vector.
  EmbeddingTable normalize() const;

 private:
  std::size_t dim_ = 0;
  bool normalized_ = false;
  std::vector<std::string> names_;
  std::vector<double> values_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct LoadedEmbeddings {
  EmbeddingTable table;
  std::size_t duplicates = 0;  // names seen more than once; the last one wins
};

// Text format: optional `count dim` header, then `name v1 ... vk` lines.
LoadedEmbeddings read_embeddings(std::istream& in, const std::string& source);
LoadedEmbeddings load_embeddings(const std::string& path);

inline EmbeddingTable normalize(const EmbeddingTable& table) { return table.normalize(); }

// The stored vector for `name`; otherwise the mean of the vectors of those
// `joiner`-separated parts of `name` that are present; otherwise nothing.
std::optional<Vector> symbol_embedding(std::string_view name, const EmbeddingTable& table,
                                       std::string_view joiner);

double euclidean_distance(std::span<const double> a, std::span<const double> b);

// A set of interchangeable base symbols. `members` is sorted by id.
// `key` renders the members as (A|B|...) sorted by surface string; `display`
// equals `key` except for the wildcard, which displays as `*`.
struct Group {
  std::vector<SymbolId> members;
  std::string key;
  std::string display;
  bool wildcard = false;

  bool contains(SymbolId id) const;
};

// Builds a group from member ids; throws DataError for fewer than two
// distinct members.
Group make_group(std::vector<SymbolId> members, const Alphabet& alphabet);

// The group of all alphabet symbols, displayed as `*`.
Group wildcard_group(const Alphabet& alphabet);

// Deduplicated groups in canonical order (size ascending, then key) with an
// inverse index from symbol id to the groups containing it.
class GroupSet {
 public:
  GroupSet() = default;
  explicit GroupSet(std::vector<Group> groups);

  const std::vector<Group>& groups() const { return groups_; }
  std::size_t size() const { return groups_.size(); }
  bool empty() const { return groups_.empty(); }
  const Group& operator[](std::size_t i) const { return groups_[i]; }

  // Indices of groups containing `id`; empty for ids no group mentions.
  std::span<const std::size_t> containing(SymbolId id) const;
  std::optional<std::size_t> find_by_key(std::string_view key) const;

 private:
  std::vector<Group> groups_;
  std::vector<std::vector<std::size_t>> member_index_;
};

// Every embedded symbol collects the embedded symbols within `radius`
// (Euclidean, inclusive). Singletons and exact duplicates are dropped.
GroupSet generate_groups(const Alphabet& alphabet, const EmbeddingTable& table, double radius,
                         std::string_view joiner = "_");

struct GroupStats {
  std::size_t groups = 0;
  std::size_t symbols_covered = 0;
  std::map<std::size_t, std::size_t> size_histogram;  // group size -> count
};

GroupStats group_stats(const GroupSet& groups);

// Groups file: one group per line, members joined by '|', '#' comments.
// Member names are interned into `alphabet`.
GroupSet read_groups(std::istream& in, const std::string& source, Alphabet& alphabet);
GroupSet load_groups(const std::string& path, Alphabet& alphabet);
void write_groups(std::ostream& out, const GroupSet& groups, const Alphabet& alphabet);
void save_groups(const std::string& path, const GroupSet& groups, const Alphabet& alphabet);

}  // namespace embseql
