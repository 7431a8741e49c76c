#include "embseql/learner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

#include "embseql/error.hpp"

namespace embseql {

bool BinaryData::has_both_classes() const {
  bool pos = false;
  bool neg = false;
  for (const int y : labels) (y > 0 ? pos : neg) = true;
  return pos && neg;
}

BinaryData to_binary(const SequenceDataset& ds) {
  BinaryData data;
  data.sequences.reserve(ds.items.size());
  data.labels.reserve(ds.items.size());
  for (const auto& item : ds.items) {
    int y = 0;
    if (item.label == kPositiveLabel) {
      y = 1;
    } else if (item.label == kNegativeLabel) {
      y = -1;
    } else {
      throw DataError("label '" + item.label + "' is not +1 or -1; binarize the dataset first");
    }
    data.sequences.push_back(item.symbols);
    data.labels.push_back(y);
  }
  return data;
}

double logistic_loss(double margin) {
  // log(1 + e^-m) = max(-m, 0) + log1p(e^-|m|)
  return std::max(-margin, 0.0) + std::log1p(std::exp(-std::abs(margin)));
}

double logistic_weight(double margin) {
  if (margin >= 0) {
    const double e = std::exp(-margin);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(margin));
}

TrainState TrainState::initial(const BinaryData& data) {
  TrainState state;
  state.margins.assign(data.size(), 0.0);
  state.loss = static_cast<double>(data.size()) * logistic_loss(0.0);
  return state;
}

std::vector<double> recompute_margins(const TrainState& state, const BinaryData& data,
                                      const FeatureSpace& space) {
  std::vector<double> margins(data.size(), 0.0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    double s = 0;
    for (const auto& [feature, w] : state.beta) {
      if (presence(feature, data.sequences[i], space)) s += w;
    }
    margins[i] = data.labels[i] * s;
  }
  return margins;
}

double gradient_over(std::span<const std::uint32_t> docs, const TrainState& state,
                     const BinaryData& data) {
  double pos = 0;
  double neg = 0;
  for (const auto i : docs) {
    const double w = logistic_weight(state.margins[i]);
    (data.labels[i] > 0 ? pos : neg) += w;
  }
  return neg - pos;
}

double gradient(const KmerFeature& feature, const TrainState& state, const BinaryData& data,
                const FeatureSpace& space) {
  std::vector<std::uint32_t> docs;
  for (std::uint32_t i = 0; i < data.size(); ++i) {
    if (presence(feature, data.sequences[i], space)) docs.push_back(i);
  }
  return gradient_over(docs, state, data);
}

void SearchNode::refresh_doc_set() {
  doc_set.clear();
  for (const auto& occ : occurrences) {
    if (doc_set.empty() || doc_set.back() != occ.sequence) doc_set.push_back(occ.sequence);
  }
}

double bound(const SearchNode& node, const TrainState& state, const BinaryData& data) {
  double pos = 0;
  double neg = 0;
  for (const auto i : node.doc_set) {
    const double w = logistic_weight(state.margins[i]);
    (data.labels[i] > 0 ? pos : neg) += w;
  }
  return std::max(pos, neg);
}

namespace {

struct Candidate {
  bool found = false;
  KmerFeature feature;
  double gradient = 0;
  double magnitude = 0;
  std::vector<std::uint32_t> docs;
};

// True when (magnitude, feature) should replace `best`.
bool improves(double magnitude, const KmerFeature& feature, const Candidate& best,
              const FeatureSpace& space) {
  if (!best.found || magnitude > best.magnitude) return true;
  return magnitude == best.magnitude && canonical_less(feature, best.feature, space);
}

void atomic_max(std::atomic<double>& target, double value) {
  double current = target.load(std::memory_order_relaxed);
  while (value > current &&
         !target.compare_exchange_weak(current, value, std::memory_order_relaxed)) {
  }
}

// Groups (extended symbol, occurrence) pairs into one child node per
// extended symbol, in extended-index order. Occurrence order within a child
// follows input order.
std::vector<SearchNode> bucket_children(std::vector<std::pair<std::size_t, Occurrence>>& pairs,
                                        const KmerFeature& prefix, const FeatureSpace& space) {
  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<SearchNode> children;
  for (std::size_t i = 0; i < pairs.size();) {
    std::size_t j = i;
    SearchNode child;
    child.feature = prefix;
    child.feature.symbols.push_back(space.from_extended_index(pairs[i].first));
    while (j < pairs.size() && pairs[j].first == pairs[i].first) {
      child.occurrences.push_back(pairs[j].second);
      ++j;
    }
    child.refresh_doc_set();
    children.push_back(std::move(child));
    i = j;
  }
  return children;
}

class Searcher {
 public:
  Searcher(const BinaryData& data, const FeatureSpace& space, const std::vector<double>& weights,
           std::size_t max_len, std::atomic<double>& shared_tau, SearchTrace* trace)
      : data_(data),
        space_(space),
        weights_(weights),
        max_len_(max_len),
        shared_tau_(shared_tau),
        trace_(trace) {}

  void visit(SearchNode& node) {
    ++visited_;
    double pos = 0;
    double neg = 0;
    for (const auto i : node.doc_set) (data_.labels[i] > 0 ? pos : neg) += weights_[i];
    const double g = neg - pos;
    const double mu = std::max(pos, neg);
    const double magnitude = std::abs(g);

    if (improves(magnitude, node.feature, best_, space_)) {
      best_.found = true;
      best_.feature = node.feature;
      best_.gradient = g;
      best_.magnitude = magnitude;
      best_.docs = node.doc_set;
      atomic_max(shared_tau_, magnitude);
    }

    SearchTrace::Entry* entry = nullptr;
    if (trace_) {
      trace_->entries.push_back({node.feature, g, mu, false, false});
      entry = &trace_->entries.back();
    }
    if (node.feature.length() >= max_len_) return;

    // Children cannot beat a value above mu. At exactly the incumbent value
    // they lose the tie-break once the incumbent is no longer than this node.
    const bool prune = mu < shared_tau_.load(std::memory_order_relaxed) ||
                       mu < best_.magnitude ||
                       (mu == best_.magnitude && best_.feature.length() <= node.feature.length());
    if (prune) {
      if (entry) entry->pruned = true;
      return;
    }
    if (entry) entry->expanded = true;

    std::vector<std::pair<std::size_t, Occurrence>> pairs;
    for (const auto& occ : node.occurrences) {
      const auto& seq = data_.sequences[occ.sequence];
      const std::uint32_t next = occ.end + 1;
      if (next >= seq.size()) continue;
      const SymbolId s = seq[next];
      const Occurrence child_occ{occ.sequence, next};
      pairs.emplace_back(space_.extended_index(ExtendedSymbol::base(s)), child_occ);
      for (const auto g_idx : space_.groups_matching(s)) {
        pairs.emplace_back(space_.extended_index(ExtendedSymbol::group(g_idx)), child_occ);
      }
    }
    // Release the parent's lists before descending.
    node.occurrences = {};
    auto children = bucket_children(pairs, node.feature, space_);
    pairs = {};
    for (auto& child : children) visit(child);
  }

  const Candidate& best() const { return best_; }
  std::size_t visited() const { return visited_; }

 private:
  const BinaryData& data_;
  const FeatureSpace& space_;
  const std::vector<double>& weights_;
  std::size_t max_len_;
  std::atomic<double>& shared_tau_;
  SearchTrace* trace_;
  Candidate best_;
  std::size_t visited_ = 0;
};

}  // namespace

BestFeature find_best_feature(const TrainState& state, const BinaryData& data,
                              const FeatureSpace& space, std::size_t max_len, std::size_t threads,
                              SearchTrace* trace) {
  if (!data.has_both_classes()) throw DataError("degenerate labels: both classes are required");
  if (max_len == 0) throw DataError("max_len must be at least 1");
  if (state.margins.size() != data.size()) throw DataError("state does not match data");

  std::vector<double> weights(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) weights[i] = logistic_weight(state.margins[i]);

  std::vector<std::pair<std::size_t, Occurrence>> pairs;
  for (std::uint32_t i = 0; i < data.size(); ++i) {
    const auto& seq = data.sequences[i];
    for (std::uint32_t p = 0; p < seq.size(); ++p) {
      pairs.emplace_back(space.extended_index(ExtendedSymbol::base(seq[p])), Occurrence{i, p});
      for (const auto g : space.groups_matching(seq[p])) {
        pairs.emplace_back(space.extended_index(ExtendedSymbol::group(g)), Occurrence{i, p});
      }
    }
  }
  auto roots = bucket_children(pairs, KmerFeature{}, space);
  pairs = {};

  std::atomic<double> shared_tau{0.0};
  const std::size_t workers = std::max<std::size_t>(1, std::min(threads, roots.size()));
  std::vector<Searcher> searchers;
  std::vector<SearchTrace> traces(workers);
  searchers.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    searchers.emplace_back(data, space, weights, max_len, shared_tau, trace ? &traces[w] : nullptr);
  }

  if (workers == 1) {
    for (auto& root : roots) searchers[0].visit(root);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t r = next++; r < roots.size(); r = next++) searchers[w].visit(roots[r]);
      });
    }
    for (auto& t : pool) t.join();
  }

  const Candidate* best = nullptr;
  BestFeature result;
  for (const auto& s : searchers) {
    result.nodes_visited += s.visited();
    if (s.best().found && (!best || improves(s.best().magnitude, s.best().feature, *best, space))) {
      best = &s.best();
    }
  }
  if (trace) {
    for (auto& t : traces) {
      for (auto& e : t.entries) trace->entries.push_back(std::move(e));
    }
  }
  if (!best) throw DataError("no features occur in the data");
  result.feature = best->feature;
  result.gradient = best->gradient;
  result.docs = best->docs;
  return result;
}

StepOutcome coordinate_step(TrainState& state, const KmerFeature& feature, double g,
                            std::span<const std::uint32_t> docs, const BinaryData& data,
                            std::size_t max_halvings) {
  if (g == 0.0 || docs.empty()) return StepOutcome::kNoOp;
  const double direction = g > 0 ? -1.0 : 1.0;
  double eta = 1.0;
  for (std::size_t attempt = 0; attempt <= max_halvings; ++attempt, eta *= 0.5) {
    const double delta_beta = eta * direction;
    double delta_loss = 0;
    for (const auto i : docs) {
      const double m = state.margins[i];
      delta_loss += logistic_loss(m + delta_beta * data.labels[i]) - logistic_loss(m);
    }
    if (delta_loss < 0) {
      auto it = state.beta.try_emplace(feature, 0.0).first;
      it->second += delta_beta;
      if (it->second == 0.0) state.beta.erase(it);
      for (const auto i : docs) state.margins[i] += delta_beta * data.labels[i];
      state.loss += delta_loss;
      ++state.iteration;
      return StepOutcome::kUpdated;
    }
  }
  return StepOutcome::kStalled;
}

StepOutcome coordinate_step(TrainState& state, const KmerFeature& feature,
                            const BinaryData& data, const FeatureSpace& space,
                            std::size_t max_halvings) {
  std::vector<std::uint32_t> docs;
  for (std::uint32_t i = 0; i < data.size(); ++i) {
    if (presence(feature, data.sequences[i], space)) docs.push_back(i);
  }
  return coordinate_step(state, feature, gradient_over(docs, state, data), docs, data,
                         max_halvings);
}

std::string to_string(StopReason reason) {
  switch (reason) {
    case StopReason::kGradientBelowEps:
      return "gradient_below_eps";
    case StopReason::kLossPlateau:
      return "loss_plateau";
    case StopReason::kMaxIterations:
      return "max_iterations";
    case StopReason::kStalled:
      return "line_search_stalled";
  }
  return "unknown";
}

TrainResult train(const BinaryData& data, std::shared_ptr<const FeatureSpace> space,
                  const LearnerConfig& config, std::string target_class,
                  std::string nontarget_label) {
  if (!data.has_both_classes()) throw DataError("degenerate labels: both classes are required");
  if (config.max_len == 0) throw DataError("max_len must be at least 1");
  if (!(config.convergence_eps >= 0)) throw DataError("convergence_eps must be non-negative");

  TrainState state = TrainState::initial(data);
  std::vector<double> history{state.loss};
  std::vector<KmerFeature> selections;
  StopReason reason = StopReason::kMaxIterations;

  for (std::size_t it = 0; it < config.max_iterations; ++it) {
    const auto best = find_best_feature(state, data, *space, config.max_len, config.threads);
    if (std::abs(best.gradient) < config.convergence_eps || best.gradient == 0.0) {
      reason = StopReason::kGradientBelowEps;
      break;
    }
    const double before = state.loss;
    const auto outcome =
        coordinate_step(state, best.feature, best.gradient, best.docs, data, config.line_search);
    if (outcome != StepOutcome::kUpdated) {
      reason = StopReason::kStalled;
      break;
    }
    selections.push_back(best.feature);
    history.push_back(state.loss);
    if ((before - state.loss) / before < config.convergence_eps) {
      reason = StopReason::kLossPlateau;
      break;
    }
  }

  std::vector<WeightedFeature> features;
  features.reserve(state.beta.size());
  for (const auto& [feature, w] : state.beta) features.push_back({feature, w});
  LinearModel model(std::move(space), std::move(features), std::move(target_class),
                    std::move(nontarget_label));
  return TrainResult{std::move(model), reason, selections.size(), std::move(history),
                     std::move(selections)};
}

TrainResult train(const SequenceDataset& ds, const std::string& target,
                  const LearnerConfig& config) {
  const bool already_binary =
      target == kPositiveLabel &&
      std::all_of(ds.classes.begin(), ds.classes.end(),
                  [](const std::string& c) { return c == kPositiveLabel || c == kNegativeLabel; });
  std::string nontarget;
  BinaryData data;
  if (already_binary) {
    nontarget = std::string(kNegativeLabel);
    data = to_binary(ds);
  } else {
    if (!ds.has_class(target)) throw DataError("target class '" + target + "' not in dataset");
    if (ds.classes.size() == 2) {
      nontarget = ds.classes[0] == target ? ds.classes[1] : ds.classes[0];
    } else {
      nontarget = nontarget_label_for(target);
    }
    data = to_binary(binarize_labels(ds, target));
  }
  auto space = std::make_shared<const FeatureSpace>(
      ds.alphabet, config.group_set ? *config.group_set : GroupSet{}, config.use_wildcard);
  return train(data, std::move(space), config, target, std::move(nontarget));
}

}  // namespace embseql
