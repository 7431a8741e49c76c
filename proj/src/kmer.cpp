#include "embseql/kmer.hpp"

#include <set>

#include "embseql/error.hpp"

namespace embseql {

FeatureSpace::FeatureSpace(Alphabet alphabet, const GroupSet& groups, bool use_wildcard)
    : alphabet_(std::move(alphabet)), groups_(groups.groups()) {
  if (use_wildcard) {
    Group wild = wildcard_group(alphabet_);
    // An existing full-alphabet group already plays the wildcard's role.
    bool duplicate = false;
    for (const auto& g : groups_) duplicate = duplicate || g.members == wild.members;
    if (!duplicate) groups_.push_back(std::move(wild));
  }
  build_index();
}

FeatureSpace::FeatureSpace(Alphabet alphabet, std::vector<Group> groups)
    : alphabet_(std::move(alphabet)), groups_(std::move(groups)) {
  build_index();
}

void FeatureSpace::build_index() {
  member_index_.assign(alphabet_.size(), {});
  wildcards_.clear();
  for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
    const auto& g = groups_[gi];
    if (g.wildcard) wildcards_.push_back(gi);
    if (g.wildcard) {
      for (auto& list : member_index_) list.push_back(gi);
      continue;
    }
    for (const auto m : g.members) {
      if (m >= member_index_.size()) {
        throw DataError("group " + g.key + " has a member outside the alphabet");
      }
      member_index_[m].push_back(gi);
    }
  }
  unknown_id_groups_ = wildcards_;
}

std::span<const std::size_t> FeatureSpace::groups_matching(SymbolId id) const {
  if (id >= member_index_.size()) return unknown_id_groups_;
  return member_index_[id];
}

std::string FeatureSpace::display(ExtendedSymbol s) const {
  return s.is_group() ? groups_[s.index].display : alphabet_.name(s.index);
}

std::string FeatureSpace::key(ExtendedSymbol s) const {
  return s.is_group() ? groups_[s.index].key : alphabet_.name(s.index);
}

std::string FeatureSpace::display(const KmerFeature& f) const {
  std::string out;
  for (std::size_t i = 0; i < f.symbols.size(); ++i) {
    if (i > 0) out.push_back(' ');
    out += display(f.symbols[i]);
  }
  return out;
}

std::string FeatureSpace::key(const KmerFeature& f) const {
  std::string out;
  for (std::size_t i = 0; i < f.symbols.size(); ++i) {
    if (i > 0) out.push_back(' ');
    out += key(f.symbols[i]);
  }
  return out;
}

int presence(const KmerFeature& feature, const Sequence& seq, const FeatureSpace& space) {
  const std::size_t k = feature.symbols.size();
  if (k == 0 || k > seq.size()) return 0;
  for (std::size_t p = 0; p + k <= seq.size(); ++p) {
    std::size_t t = 0;
    while (t < k && space.matches(feature.symbols[t], seq[p + t])) ++t;
    if (t == k) return 1;
  }
  return 0;
}

bool canonical_less(const KmerFeature& a, const KmerFeature& b, const FeatureSpace& space) {
  if (a.length() != b.length()) return a.length() < b.length();
  return space.key(a) < space.key(b);
}

}  // namespace embseql
