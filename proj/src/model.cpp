#include "embseql/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <set>

#include "embseql/error.hpp"
#include "text_util.hpp"

namespace embseql {

LinearModel::LinearModel(std::shared_ptr<const FeatureSpace> space,
                         std::vector<WeightedFeature> features, std::string target_class,
                         std::string nontarget_label)
    : space_(std::move(space)),
      features_(std::move(features)),
      target_(std::move(target_class)),
      nontarget_(std::move(nontarget_label)) {
  if (!space_) throw DataError("model requires a feature space");
  std::set<KmerFeature> seen;
  for (const auto& wf : features_) {
    if (wf.weight == 0.0 || !std::isfinite(wf.weight)) {
      throw DataError("model weight for '" + space_->display(wf.feature) +
                      "' must be finite and non-zero");
    }
    if (wf.feature.symbols.empty()) throw DataError("model contains an empty feature");
    if (!seen.insert(wf.feature).second) {
      throw DataError("duplicate model feature '" + space_->display(wf.feature) + "'");
    }
  }
  std::sort(features_.begin(), features_.end(),
            [&](const WeightedFeature& a, const WeightedFeature& b) {
              const double wa = std::abs(a.weight);
              const double wb = std::abs(b.weight);
              if (wa != wb) return wa > wb;
              return canonical_less(a.feature, b.feature, *space_);
            });
}

std::string nontarget_label_for(std::string_view target) {
  return "NOT_" + std::string(target);
}

double score(const LinearModel& model, const Sequence& seq) {
  double s = 0;
  for (const auto& wf : model.features()) {
    if (presence(wf.feature, seq, model.space())) s += wf.weight;
  }
  return s;
}

int predict_binary(const LinearModel& model, const Sequence& seq) {
  return score(model, seq) > 0 ? 1 : -1;
}

std::string predict_label(const LinearModel& model, const Sequence& seq) {
  return predict_binary(model, seq) > 0 ? model.target_class() : model.nontarget_label();
}

std::string predict_multiclass(const OneVsAllModel& ova, const Sequence& seq) {
  if (ova.empty()) throw DataError("one-vs-all prediction needs at least one model");
  const std::string* best = nullptr;
  double best_score = 0;
  // std::map iterates in ascending name order, so strict > keeps the
  // smallest name on ties.
  for (const auto& [label, model] : ova) {
    const double s = score(model, seq);
    if (best == nullptr || s > best_score) {
      best = &label;
      best_score = s;
    }
  }
  return *best;
}

EvalReport evaluate(const std::vector<std::string>& predictions,
                    const std::vector<std::string>& gold,
                    const std::optional<std::string>& excluded_class) {
  if (predictions.size() != gold.size()) {
    throw DataError("evaluate: " + std::to_string(predictions.size()) + " predictions for " +
                    std::to_string(gold.size()) + " gold labels");
  }
  EvalReport report;
  report.excluded_class = excluded_class;

  std::vector<std::size_t> kept;
  std::set<std::string> labels;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (excluded_class && gold[i] == *excluded_class) continue;
    kept.push_back(i);
    labels.insert(gold[i]);
    labels.insert(predictions[i]);
  }
  for (const auto& l : labels) report.per_class.push_back({.label = l});
  const std::vector<std::string> order(labels.begin(), labels.end());
  auto index_of = [&](const std::string& l) {
    return static_cast<std::size_t>(std::lower_bound(order.begin(), order.end(), l) -
                                    order.begin());
  };
  report.confusion.assign(order.size(), std::vector<std::size_t>(order.size(), 0));

  std::size_t correct = 0;
  for (const auto i : kept) {
    const auto g = index_of(gold[i]);
    const auto p = index_of(predictions[i]);
    ++report.confusion[g][p];
    ++report.per_class[g].support;
    ++report.per_class[p].predicted;
    if (g == p) {
      ++report.per_class[g].true_positives;
      ++correct;
    }
  }
  report.evaluated = kept.size();
  if (kept.empty()) return report;

  report.accuracy = static_cast<double>(correct) / static_cast<double>(kept.size());
  double weighted = 0;
  for (auto& c : report.per_class) {
    const double tp = static_cast<double>(c.true_positives);
    c.precision = c.predicted ? tp / static_cast<double>(c.predicted) : 0.0;
    c.recall = c.support ? tp / static_cast<double>(c.support) : 0.0;
    c.f1 = (c.precision + c.recall) > 0 ? 2 * c.precision * c.recall / (c.precision + c.recall)
                                        : 0.0;
    weighted += c.f1 * static_cast<double>(c.support);
  }
  report.weighted_f1 = weighted / static_cast<double>(kept.size());
  return report;
}

void write_report(std::ostream& out, const EvalReport& report) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "evaluated=%zu accuracy=%.6f weighted_f1=%.6f\n",
                report.evaluated, report.accuracy, report.weighted_f1);
  out << buf;
  if (report.excluded_class) out << "excluded_class=" << *report.excluded_class << '\n';
  for (const auto& c : report.per_class) {
    std::snprintf(buf, sizeof buf, " support=%zu precision=%.6f recall=%.6f f1=%.6f\n",
                  c.support, c.precision, c.recall, c.f1);
    out << "class=" << c.label << buf;
  }
  out << "confusion (rows gold, columns predicted):\n";
  for (std::size_t g = 0; g < report.confusion.size(); ++g) {
    out << report.per_class[g].label;
    for (const auto n : report.confusion[g]) out << '\t' << n;
    out << '\n';
  }
}

void write_model(std::ostream& out, const LinearModel& model) {
  out << "#target " << model.target_class() << '\n';
  out << "#nontarget " << model.nontarget_label() << '\n';
  out << "#alphabet";
  for (const auto& name : model.space().alphabet().names()) out << ' ' << name;
  out << '\n';
  char buf[64];
  for (const auto& wf : model.features()) {
    std::snprintf(buf, sizeof buf, "%.17g", wf.weight);
    out << buf << '\t' << model.space().display(wf.feature) << '\n';
  }
}

void save_model(const std::string& path, const LinearModel& model) {
  auto out = detail::open_output(path);
  write_model(out, model);
}

namespace {

struct PendingFeature {
  std::size_t line = 0;
  double weight = 0;
  std::vector<std::string> tokens;
};

}  // namespace

LinearModel read_model(std::istream& in, const std::string& source, const GroupSet* groups) {
  std::optional<std::string> target;
  std::optional<std::string> nontarget;
  std::optional<std::vector<std::string>> declared;
  std::vector<PendingFeature> pending;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = detail::strip_cr(line);
    if (detail::trim(text).empty()) continue;
    if (text.front() == '#') {
      const auto body = text.substr(1);
      const auto space = body.find(' ');
      const auto tag = body.substr(0, space);
      const auto value = space == std::string_view::npos ? std::string_view{}
                                                         : detail::trim(body.substr(space + 1));
      if (tag == "target") {
        target = std::string(value);
      } else if (tag == "nontarget") {
        nontarget = std::string(value);
      } else if (tag == "alphabet") {
        declared.emplace();
        for (const auto tok : detail::split_ws(value)) declared->emplace_back(tok);
      }
      continue;
    }
    const auto tab = text.find('\t');
    if (tab == std::string_view::npos) throw ParseError(source, line_no, "missing tab separator");
    const auto weight = detail::parse_double(detail::trim(text.substr(0, tab)));
    if (!weight) throw ParseError(source, line_no, "malformed weight");
    PendingFeature pf{line_no, *weight, {}};
    for (const auto tok : detail::split_ws(text.substr(tab + 1))) pf.tokens.emplace_back(tok);
    if (pf.tokens.empty()) throw ParseError(source, line_no, "empty feature");
    pending.push_back(std::move(pf));
  }
  if (!target) throw ParseError(source, 0, "missing #target header");
  if (!nontarget) throw ParseError(source, 0, "missing #nontarget header");

  Alphabet alphabet;
  const bool closed = declared.has_value();
  if (closed) {
    for (const auto& name : *declared) alphabet.intern(name);
  }
  auto resolve_base = [&](const std::string& name, std::size_t ln) -> SymbolId {
    if (!closed) return alphabet.intern(name);
    const auto id = alphabet.find(name);
    if (!id) throw DataError(source + ":" + std::to_string(ln) + ": unknown symbol '" + name + "'");
    return *id;
  };

  // Collect base symbols first so that group members and the wildcard see
  // the final alphabet.
  for (const auto& pf : pending) {
    for (const auto& tok : pf.tokens) {
      if (tok == "*") continue;
      if (tok.size() > 2 && tok.front() == '(' && tok.back() == ')') {
        for (const auto part : detail::split(std::string_view(tok).substr(1, tok.size() - 2), "|")) {
          if (part.empty()) throw ParseError(source, pf.line, "empty group member in " + tok);
          resolve_base(std::string(part), pf.line);
        }
      } else {
        resolve_base(tok, pf.line);
      }
    }
  }

  std::vector<Group> space_groups;
  std::map<std::string, std::size_t> group_slots;
  auto resolve_group = [&](const std::string& tok, std::size_t ln) -> std::size_t {
    Group g;
    if (tok == "*") {
      g = wildcard_group(alphabet);
    } else {
      std::vector<SymbolId> members;
      for (const auto part : detail::split(std::string_view(tok).substr(1, tok.size() - 2), "|")) {
        members.push_back(*alphabet.find(part));
      }
      const std::size_t distinct = std::set<SymbolId>(members.begin(), members.end()).size();
      if (distinct < 2) throw ParseError(source, ln, "group needs two distinct members: " + tok);
      g = make_group(std::move(members), alphabet);
      if (groups && !groups->find_by_key(g.key)) {
        throw DataError(source + ":" + std::to_string(ln) + ": unknown group " + tok);
      }
    }
    if (auto it = group_slots.find(g.display); it != group_slots.end()) return it->second;
    group_slots.emplace(g.display, space_groups.size());
    space_groups.push_back(std::move(g));
    return space_groups.size() - 1;
  };

  std::vector<WeightedFeature> features;
  for (const auto& pf : pending) {
    WeightedFeature wf;
    wf.weight = pf.weight;
    for (const auto& tok : pf.tokens) {
      if (tok == "*" || (tok.size() > 2 && tok.front() == '(' && tok.back() == ')')) {
        wf.feature.symbols.push_back(ExtendedSymbol::group(resolve_group(tok, pf.line)));
      } else {
        wf.feature.symbols.push_back(ExtendedSymbol::base(*alphabet.find(tok)));
      }
    }
    features.push_back(std::move(wf));
  }
  auto space = std::make_shared<const FeatureSpace>(std::move(alphabet), std::move(space_groups));
  return LinearModel(std::move(space), std::move(features), *target, *nontarget);
}

LinearModel load_model(const std::string& path, const GroupSet* groups) {
  auto in = detail::open_input(path);
  return read_model(in, path, groups);
}

}  // namespace embseql
