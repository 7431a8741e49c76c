#pragma once

// Trained linear models over k-mer features: scoring, prediction,
// evaluation metrics and the model text format.

#include <cstddef>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "embseql/corpus.hpp"
#include "embseql/kmer.hpp"

namespace embseql {

struct WeightedFeature {
  KmerFeature feature;
  double weight = 0;
};

// A weighted list of k-mers. Features are kept in canonical order:
// descending |weight|, then shorter first, then by key. Scores are summed in
// that order.
class LinearModel {
 public:
  LinearModel(std::shared_ptr<const FeatureSpace> space, std::vector<WeightedFeature> features,
              std::string target_class, std::string nontarget_label);

  const FeatureSpace& space() const { return *space_; }
  std::shared_ptr<const FeatureSpace> shared_space() const { return space_; }
  const std::vector<WeightedFeature>& features() const { return features_; }
  const std::string& target_class() const { return target_; }
  const std::string& nontarget_label() const { return nontarget_; }
  bool empty() const { return features_.empty(); }

 private:
  std::shared_ptr<const FeatureSpace> space_;
  std::vector<WeightedFeature> features_;
  std::string target_;
  std::string nontarget_;
};

// Synthetic non-target label used for one-vs-all models.
std::string nontarget_label_for(std::string_view target);

double score(const LinearModel& model, const Sequence& seq);
// +1 for a positive score, -1 otherwise (a zero score is -1).
int predict_binary(const LinearModel& model, const Sequence& seq);
std::string predict_label(const LinearModel& model, const Sequence& seq);

// One binary model per class, keyed by class name.
using OneVsAllModel = std::map<std::string, LinearModel>;

// Class with the highest score; ties go to the smallest class name.
std::string predict_multiclass(const OneVsAllModel& ova, const Sequence& seq);

struct ClassMetrics {
  std::string label;
  std::size_t support = 0;  // gold count
  std::size_t predicted = 0;
  std::size_t true_positives = 0;
  double precision = 0;
  double recall = 0;
  double f1 = 0;
};

struct EvalReport {
  double accuracy = 0;
  double weighted_f1 = 0;
  std::size_t evaluated = 0;
  std::optional<std::string> excluded_class;
  std::vector<ClassMetrics> per_class;  // sorted by label
  // confusion[gold][predicted], indexed like per_class.
  std::vector<std::vector<std::size_t>> confusion;
};

// Drops items whose gold label is `excluded_class`, then computes accuracy
// and support-weighted F1.
EvalReport evaluate(const std::vector<std::string>& predictions,
                    const std::vector<std::string>& gold,
                    const std::optional<std::string>& excluded_class = std::nullopt);

void write_report(std::ostream& out, const EvalReport& report);

// Model text format:
//   #target <class>
//   #nontarget <label>
//   #alphabet <sym> <sym> ...
//   <weight>\t<feature display>
// Feature displays are space-separated symbols; groups render as (A|B) and
// the wildcard as `*`.
void write_model(std::ostream& out, const LinearModel& model);
void save_model(const std::string& path, const LinearModel& model);

// Resolves feature displays against the `#alphabet` line when present;
// otherwise symbols are interned as they appear. When `groups` is given,
// every group display must name one of its groups.
LinearModel read_model(std::istream& in, const std::string& source,
                       const GroupSet* groups = nullptr);
LinearModel load_model(const std::string& path, const GroupSet* groups = nullptr);

}  // namespace embseql
