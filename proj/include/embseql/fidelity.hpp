#pragma once

// Semantic Fidelity: how close a model's positively weighted features lie to
// the target concept, and its negatively weighted features to the non-target
// concept, in a background embedding space. 1 is best, 0 worst.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "embseql/embeddings.hpp"
#include "embseql/kmer.hpp"
#include "embseql/model.hpp"

namespace embseql {

enum class MissingSymbolPolicy { kSkipFeature, kError };

struct FidelityConfig {
  std::string target_concept;
  // One name is looked up directly; several are averaged (centroid of the
  // other classes' concepts).
  std::vector<std::string> nontarget_concepts;
  MissingSymbolPolicy missing_symbol_policy = MissingSymbolPolicy::kSkipFeature;
  std::string joiner = "_";
};

struct FeatureFidelity {
  std::string feature;
  double weight = 0;             // as stored in the model
  double normalized_weight = 0;  // |w| / max |w|
  double distance = 0;           // to the target concept if w >= 0, else non-target
  double contribution = 0;       // normalized_weight * distance
};

struct FidelityReport {
  double sf = 0;
  std::vector<FeatureFidelity> per_feature;
  std::vector<std::string> skipped;
};

// A base symbol's embedding (with composite fallback) or the mean over a
// group's resolvable members. Nothing when no part resolves.
std::optional<Vector> feature_symbol_embedding(ExtendedSymbol sym, const FeatureSpace& space,
                                               const EmbeddingTable& table,
                                               const std::string& joiner);

// Mean Euclidean distance between each symbol embedding and `concept_vec`.
// Nothing when a symbol is unresolvable.
std::optional<double> feature_distance(const KmerFeature& feature, const Vector& concept_vec,
                                       const FeatureSpace& space, const EmbeddingTable& table,
                                       const std::string& joiner);

// Looks up a concept vector, averaging when several names are given.
Vector concept_vector(const std::vector<std::string>& names, const EmbeddingTable& table,
                      const std::string& joiner);

// `table` must be normalized.
FidelityReport semantic_fidelity(const LinearModel& model, const EmbeddingTable& table,
                                 const FidelityConfig& config);

// `sf=...` then one `feature=... w=... d=... h=...` row per scored feature
// and one `skipped=...` row per skipped feature.
void write_fidelity_records(std::ostream& out, const FidelityReport& report);
void write_fidelity_table(std::ostream& out, const FidelityReport& report);

}  // namespace embseql
