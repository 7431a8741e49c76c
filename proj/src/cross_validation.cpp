#include "embseql/cross_validation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <numeric>
#include <ostream>
#include <random>
#include <thread>

#include "embseql/error.hpp"

namespace embseql {

std::vector<std::vector<std::size_t>> stratified_folds(const SequenceDataset& ds,
                                                       std::size_t folds, std::uint64_t seed) {
  if (folds < 2) throw DataError("cross-validation needs at least 2 folds");
  if (folds == ds.items.size()) {
    // Leave-one-out: stratification is moot with one item per fold.
    std::vector<std::vector<std::size_t>> out(folds);
    for (std::size_t i = 0; i < folds; ++i) out[i] = {i};
    return out;
  }
  std::map<std::string, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < ds.items.size(); ++i) by_class[ds.items[i].label].push_back(i);
  for (const auto& [label, members] : by_class) {
    if (members.size() < folds) {
      throw DataError("class '" + label + "' has " + std::to_string(members.size()) +
                      " items, fewer than " + std::to_string(folds) + " folds");
    }
  }
  std::mt19937_64 rng(seed);
  std::vector<std::vector<std::size_t>> out(folds);
  std::size_t next = 0;
  for (auto& [label, members] : by_class) {
    std::shuffle(members.begin(), members.end(), rng);
    for (const auto i : members) {
      out[next].push_back(i);
      next = (next + 1) % folds;
    }
  }
  for (auto& f : out) std::sort(f.begin(), f.end());
  return out;
}

OneVsAllModel train_one_vs_all(const SequenceDataset& ds, const LearnerConfig& config) {
  if (ds.classes.size() < 2) throw DataError("degenerate labels: one-vs-all needs two classes");
  OneVsAllModel ova;
  for (const auto& cls : ds.classes) {
    auto result = train(ds, cls, config);
    // Multiclass scores compare every class against the rest.
    LinearModel model(result.model.shared_space(), result.model.features(), cls,
                      nontarget_label_for(cls));
    ova.emplace(cls, std::move(model));
  }
  return ova;
}

FidelityConfig fidelity_config_for(const std::string& cls, const std::vector<std::string>& classes,
                                   const FidelitySetup& setup) {
  auto concept_of = [&](const std::string& c) {
    auto it = setup.class_concepts.find(c);
    return it == setup.class_concepts.end() ? c : it->second;
  };
  FidelityConfig cfg;
  cfg.target_concept = concept_of(cls);
  cfg.joiner = setup.joiner;
  cfg.missing_symbol_policy = setup.missing_symbol_policy;
  if (setup.nontarget_concept) {
    cfg.nontarget_concepts = {*setup.nontarget_concept};
  } else {
    for (const auto& c : classes) {
      if (c != cls) cfg.nontarget_concepts.push_back(concept_of(c));
    }
  }
  return cfg;
}

MeanStd mean_std(const std::vector<double>& values) {
  MeanStd out;
  out.count = values.size();
  if (values.empty()) return out;
  out.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  if (values.size() > 1) {
    double sq = 0;
    for (const double v : values) sq += (v - out.mean) * (v - out.mean);
    out.std = std::sqrt(sq / static_cast<double>(values.size() - 1));
  }
  return out;
}

namespace {

SequenceDataset subset(const SequenceDataset& ds, const std::vector<std::size_t>& indices) {
  SequenceDataset out;
  out.alphabet = ds.alphabet;
  out.items.reserve(indices.size());
  for (const auto i : indices) out.items.push_back(ds.items[i]);
  out.refresh_classes();
  return out;
}

FoldResult run_fold(const SequenceDataset& ds, const std::vector<std::vector<std::size_t>>& folds,
                    std::size_t k, const LearnerConfig& config, const CvOptions& options) {
  std::vector<std::size_t> train_idx;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    if (f != k) train_idx.insert(train_idx.end(), folds[f].begin(), folds[f].end());
  }
  std::sort(train_idx.begin(), train_idx.end());
  const auto train_set = subset(ds, train_idx);

  LearnerConfig fold_config = config;
  fold_config.threads = 1;
  const auto ova = train_one_vs_all(train_set, fold_config);

  std::vector<std::string> predictions;
  std::vector<std::string> gold;
  for (const auto i : folds[k]) {
    predictions.push_back(predict_multiclass(ova, ds.items[i].symbols));
    gold.push_back(ds.items[i].label);
  }
  FoldResult result;
  result.report = evaluate(predictions, gold, options.excluded_class);

  if (options.fidelity) {
    for (const auto& [cls, model] : ova) {
      std::optional<double> sf;
      if (!model.empty()) {
        const auto cfg = fidelity_config_for(cls, ds.classes, *options.fidelity);
        try {
          sf = semantic_fidelity(model, options.fidelity->table, cfg).sf;
        } catch (const DataError&) {
          // Nothing scorable in this fold's model.
          if (options.fidelity->missing_symbol_policy == MissingSymbolPolicy::kError) throw;
        }
      }
      result.sf.emplace(cls, sf);
    }
  }
  return result;
}

}  // namespace

CvReport cross_validate(const SequenceDataset& ds, const LearnerConfig& config,
                        const CvOptions& options) {
  if (ds.classes.size() < 2) throw DataError("degenerate labels: cross-validation needs two classes");
  const auto folds = stratified_folds(ds, options.folds, options.seed);

  if (options.fidelity) {
    // Fail early on unresolvable class concepts.
    for (const auto& cls : ds.classes) {
      const auto cfg = fidelity_config_for(cls, ds.classes, *options.fidelity);
      concept_vector({cfg.target_concept}, options.fidelity->table, cfg.joiner);
      concept_vector(cfg.nontarget_concepts, options.fidelity->table, cfg.joiner);
    }
  }

  CvReport report;
  report.folds = options.folds;
  report.seed = options.seed;
  report.excluded_class = options.excluded_class;
  report.per_fold.resize(folds.size());

  const std::size_t workers = std::max<std::size_t>(1, std::min(options.threads, folds.size()));
  if (workers == 1) {
    for (std::size_t k = 0; k < folds.size(); ++k) {
      report.per_fold[k] = run_fold(ds, folds, k, config, options);
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t k = next++; k < folds.size(); k = next++) {
          try {
            report.per_fold[k] = run_fold(ds, folds, k, config, options);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }

  std::vector<double> acc;
  std::vector<double> f1;
  std::map<std::string, std::vector<double>> sf;
  for (const auto& fold : report.per_fold) {
    acc.push_back(fold.report.accuracy);
    f1.push_back(fold.report.weighted_f1);
    for (const auto& [cls, value] : fold.sf) {
      if (value) sf[cls].push_back(*value);
    }
  }
  report.accuracy = mean_std(acc);
  report.weighted_f1 = mean_std(f1);
  if (options.fidelity) {
    std::vector<double> means;
    for (const auto& cls : ds.classes) {
      const auto ms = mean_std(sf[cls]);
      report.sf_per_class[cls] = ms;
      if (ms.count > 0) means.push_back(ms.mean);
    }
    if (!means.empty()) report.sf_mean = mean_std(means).mean;
  }
  return report;
}

void write_cv_report(std::ostream& out, const CvReport& report) {
  char buf[256];
  out << "folds=" << report.folds << " seed=" << report.seed << '\n';
  if (report.excluded_class) out << "excluded_class=" << *report.excluded_class << '\n';
  for (std::size_t k = 0; k < report.per_fold.size(); ++k) {
    const auto& r = report.per_fold[k].report;
    std::snprintf(buf, sizeof buf, "fold=%zu evaluated=%zu accuracy=%.6f weighted_f1=%.6f\n", k,
                  r.evaluated, r.accuracy, r.weighted_f1);
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "accuracy_mean=%.6f accuracy_std=%.6f\n", report.accuracy.mean,
                report.accuracy.std);
  out << buf;
  std::snprintf(buf, sizeof buf, "weighted_f1_mean=%.6f weighted_f1_std=%.6f\n",
                report.weighted_f1.mean, report.weighted_f1.std);
  out << buf;
  for (const auto& [cls, ms] : report.sf_per_class) {
    std::snprintf(buf, sizeof buf, " sf_mean=%.6f sf_std=%.6f scored_folds=%zu\n", ms.mean,
                  ms.std, ms.count);
    out << "class=" << cls << buf;
  }
  if (report.sf_mean) {
    std::snprintf(buf, sizeof buf, "sf_mean=%.6f\n", *report.sf_mean);
    out << buf;
  }
}

}  // namespace embseql
