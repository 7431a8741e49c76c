#pragma once

// Greedy coordinate descent on the logistic loss over the space of all
// k-mers of an extended alphabet. Each iteration finds the k-mer with the
// largest absolute gradient by branch-and-bound and takes a line-searched
// step on its weight.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "embseql/corpus.hpp"
#include "embseql/embeddings.hpp"
#include "embseql/kmer.hpp"
#include "embseql/model.hpp"

namespace embseql {

// Sequences with labels in {+1, -1}.
struct BinaryData {
  std::vector<Sequence> sequences;
  std::vector<int> labels;

  std::size_t size() const { return sequences.size(); }
  bool has_both_classes() const;
};

// Converts a dataset labeled "+1"/"-1" (see binarize_labels).
BinaryData to_binary(const SequenceDataset& ds);

struct LearnerConfig {
  std::size_t max_len = 5;
  std::size_t max_iterations = 1000;
  double convergence_eps = 1e-4;
  bool use_wildcard = false;
  std::optional<GroupSet> group_set;
  std::size_t line_search = 30;  // max step halvings
  std::size_t threads = 1;       // search workers; results do not depend on it
};

// Current weights and the cached margins y_i * beta^T x_i.
struct TrainState {
  std::map<KmerFeature, double> beta;
  std::vector<double> margins;
  double loss = 0;
  std::size_t iteration = 0;

  static TrainState initial(const BinaryData& data);
};

// log(1 + exp(-margin)), without overflow.
double logistic_loss(double margin);
// 1 / (1 + exp(margin)), without overflow.
double logistic_weight(double margin);

// Margins recomputed from `beta` by explicit presence tests.
std::vector<double> recompute_margins(const TrainState& state, const BinaryData& data,
                                      const FeatureSpace& space);

// Gradient of the total logistic loss for a feature present in exactly the
// sequences `docs` (ascending). Accumulated as (negative-class weight sum)
// minus (positive-class weight sum).
double gradient_over(std::span<const std::uint32_t> docs, const TrainState& state,
                     const BinaryData& data);
double gradient(const KmerFeature& feature, const TrainState& state, const BinaryData& data,
                const FeatureSpace& space);

struct Occurrence {
  std::uint32_t sequence = 0;
  std::uint32_t end = 0;  // position of the last matched symbol
};

struct SearchNode {
  KmerFeature feature;
  std::vector<Occurrence> occurrences;  // sorted by (sequence, end)
  std::vector<std::uint32_t> doc_set;   // distinct sequences, ascending

  void refresh_doc_set();
};

// Upper bound on |gradient| of every feature whose document set is a subset
// of node.doc_set: the larger of the one-class weight sums.
double bound(const SearchNode& node, const TrainState& state, const BinaryData& data);

// Every node evaluated during a search, for verification.
struct SearchTrace {
  struct Entry {
    KmerFeature feature;
    double gradient = 0;
    double mu = 0;
    bool expanded = false;
    bool pruned = false;  // has descendants within max_len but was not expanded
  };
  std::vector<Entry> entries;
};

struct BestFeature {
  KmerFeature feature;
  double gradient = 0;
  std::vector<std::uint32_t> docs;
  std::size_t nodes_visited = 0;
};

// The k-mer of length <= max_len with the largest |gradient| among those
// occurring in the data; ties go to canonical_less. Exact.
BestFeature find_best_feature(const TrainState& state, const BinaryData& data,
                              const FeatureSpace& space, std::size_t max_len,
                              std::size_t threads = 1, SearchTrace* trace = nullptr);

enum class StepOutcome { kUpdated, kStalled, kNoOp };

// Line search on one coordinate along -sign(g): eta = 1, halved up to
// `max_halvings` times until the loss strictly decreases. `docs` are the
// sequences containing `feature`. On stall the state is unchanged.
StepOutcome coordinate_step(TrainState& state, const KmerFeature& feature, double g,
                            std::span<const std::uint32_t> docs, const BinaryData& data,
                            std::size_t max_halvings);
StepOutcome coordinate_step(TrainState& state, const KmerFeature& feature,
                            const BinaryData& data, const FeatureSpace& space,
                            std::size_t max_halvings);

enum class StopReason { kGradientBelowEps, kLossPlateau, kMaxIterations, kStalled };

std::string to_string(StopReason reason);
inline bool converged(StopReason r) { return r != StopReason::kMaxIterations; }

struct TrainResult {
  LinearModel model;
  StopReason reason = StopReason::kMaxIterations;
  std::size_t iterations = 0;
  std::vector<double> loss_history;       // loss before the first step, then after each
  std::vector<KmerFeature> selections;    // feature chosen at each step
};

// `space` must be built from the data's alphabet and config's groups.
TrainResult train(const BinaryData& data, std::shared_ptr<const FeatureSpace> space,
                  const LearnerConfig& config, std::string target_class,
                  std::string nontarget_label);

// Builds the feature space from `ds` and config, binarizes on `target` and
// trains. The non-target label is the other class for two-class data and
// NOT_<target> otherwise. A dataset already labeled +1/-1 may pass "+1".
TrainResult train(const SequenceDataset& ds, const std::string& target,
                  const LearnerConfig& config);

}  // namespace embseql
