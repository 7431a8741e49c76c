#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "embseql/corpus.hpp"
#include "embseql/embeddings.hpp"
#include "embseql/fidelity.hpp"
#include "embseql/learner.hpp"
#include "embseql/model.hpp"

namespace embseql {

// Item indices per fold. Each class is shuffled with a generator seeded by
// `seed` and dealt round-robin, so every fold holds floor or ceil of
// (class size / folds) items of each class. folds == ds.items.size() is
// leave-one-out, one item per fold in index order.
std::vector<std::vector<std::size_t>> stratified_folds(const SequenceDataset& ds,
                                                       std::size_t folds, std::uint64_t seed);

// Trains one binary model per class of `ds`.
OneVsAllModel train_one_vs_all(const SequenceDataset& ds, const LearnerConfig& config);

struct FidelitySetup {
  EmbeddingTable table;  // normalized
  std::string joiner = "_";
  // Concept name for each class; classes absent here use their own name.
  std::map<std::string, std::string> class_concepts;
  // Fixed non-target concept; when empty the centroid of the other classes'
  // concepts is used.
  std::optional<std::string> nontarget_concept;
  MissingSymbolPolicy missing_symbol_policy = MissingSymbolPolicy::kSkipFeature;
};

FidelityConfig fidelity_config_for(const std::string& cls, const std::vector<std::string>& classes,
                                   const FidelitySetup& setup);

struct FoldResult {
  EvalReport report;
  // Semantic fidelity of each class's binary model; absent when nothing
  // could be scored.
  std::map<std::string, std::optional<double>> sf;
};

struct MeanStd {
  double mean = 0;
  double std = 0;  // sample standard deviation, 0 for a single value
  std::size_t count = 0;
};

MeanStd mean_std(const std::vector<double>& values);

struct CvReport {
  std::size_t folds = 0;
  std::uint64_t seed = 0;
  std::optional<std::string> excluded_class;
  std::vector<FoldResult> per_fold;
  MeanStd accuracy;
  MeanStd weighted_f1;
  std::map<std::string, MeanStd> sf_per_class;
  std::optional<double> sf_mean;  // mean of the per-class means
};

struct CvOptions {
  std::size_t folds = 10;
  std::uint64_t seed = 1;
  std::optional<std::string> excluded_class;
  std::size_t threads = 1;  // folds trained concurrently; results do not depend on it
  const FidelitySetup* fidelity = nullptr;
};

// One-vs-all cross-validation. Throws DataError if a class has fewer than
// `folds` items, except for leave-one-out.
CvReport cross_validate(const SequenceDataset& ds, const LearnerConfig& config,
                        const CvOptions& options);

void write_cv_report(std::ostream& out, const CvReport& report);

}  // namespace embseql
