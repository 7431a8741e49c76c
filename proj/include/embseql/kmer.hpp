#pragma once

// k-mer features over an extended alphabet of base symbols and groups.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "embseql/corpus.hpp"
#include "embseql/embeddings.hpp"

namespace embseql {

// Either a base symbol id or an index into FeatureSpace::groups().
struct ExtendedSymbol {
  enum class Kind : std::uint8_t { kBase, kGroup };

  Kind kind = Kind::kBase;
  std::uint32_t index = 0;

  static ExtendedSymbol base(SymbolId id) { return {Kind::kBase, id}; }
  static ExtendedSymbol group(std::size_t g) {
    return {Kind::kGroup, static_cast<std::uint32_t>(g)};
  }
  bool is_group() const { return kind == Kind::kGroup; }

  friend auto operator<=>(const ExtendedSymbol&, const ExtendedSymbol&) = default;
};

struct KmerFeature {
  std::vector<ExtendedSymbol> symbols;

  std::size_t length() const { return symbols.size(); }
  friend auto operator<=>(const KmerFeature&, const KmerFeature&) = default;
};

// The alphabet extended with groups. The wildcard, when enabled, is one more
// group holding every alphabet symbol.
class FeatureSpace {
 public:
  FeatureSpace() = default;
  FeatureSpace(Alphabet alphabet, const GroupSet& groups, bool use_wildcard = false);
  FeatureSpace(Alphabet alphabet, std::vector<Group> groups);

  const Alphabet& alphabet() const { return alphabet_; }
  const std::vector<Group>& groups() const { return groups_; }
  const Group& group(std::size_t i) const { return groups_[i]; }

  // Number of extended symbols: base symbols first, then groups.
  std::size_t extended_size() const { return alphabet_.size() + groups_.size(); }
  std::size_t extended_index(ExtendedSymbol s) const {
    return s.is_group() ? alphabet_.size() + s.index : s.index;
  }
  ExtendedSymbol from_extended_index(std::size_t i) const {
    return i < alphabet_.size() ? ExtendedSymbol::base(static_cast<SymbolId>(i))
                                : ExtendedSymbol::group(i - alphabet_.size());
  }

  // Groups that match `id`, in index order.
  std::span<const std::size_t> groups_matching(SymbolId id) const;

  bool matches(ExtendedSymbol s, SymbolId id) const {
    return s.is_group() ? groups_[s.index].contains(id) : s.index == id;
  }

  std::string display(ExtendedSymbol s) const;
  std::string display(const KmerFeature& f) const;
  // Like display, but the wildcard renders as its member list. Used for
  // ordering so that `*` and an equivalent full-alphabet group sort alike.
  std::string key(ExtendedSymbol s) const;
  std::string key(const KmerFeature& f) const;

 private:
  void build_index();

  Alphabet alphabet_;
  std::vector<Group> groups_;
  std::vector<std::vector<std::size_t>> member_index_;
  std::vector<std::size_t> wildcards_;
  // Wildcards plus any group for ids beyond member_index_.
  std::vector<std::size_t> unknown_id_groups_;
};

// 1 iff some placement of `feature` matches `seq` position by position.
int presence(const KmerFeature& feature, const Sequence& seq, const FeatureSpace& space);

// Orders features by length, then by key. Used as the tie-break wherever
// two features score equally.
bool canonical_less(const KmerFeature& a, const KmerFeature& b, const FeatureSpace& space);

}  // namespace embseql
