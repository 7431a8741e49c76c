#include "embseql/fidelity.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "embseql/error.hpp"

namespace embseql {

std::optional<Vector> feature_symbol_embedding(ExtendedSymbol sym, const FeatureSpace& space,
                                               const EmbeddingTable& table,
                                               const std::string& joiner) {
  if (!sym.is_group()) return symbol_embedding(space.alphabet().name(sym.index), table, joiner);
  Vector sum(table.dim(), 0.0);
  std::size_t found = 0;
  for (const auto m : space.group(sym.index).members) {
    if (auto v = symbol_embedding(space.alphabet().name(m), table, joiner)) {
      for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += (*v)[k];
      ++found;
    }
  }
  if (found == 0) return std::nullopt;
  for (auto& x : sum) x /= static_cast<double>(found);
  return sum;
}

std::optional<double> feature_distance(const KmerFeature& feature, const Vector& concept_vec,
                                       const FeatureSpace& space, const EmbeddingTable& table,
                                       const std::string& joiner) {
  if (feature.symbols.empty()) return std::nullopt;
  double total = 0;
  for (const auto sym : feature.symbols) {
    const auto e = feature_symbol_embedding(sym, space, table, joiner);
    if (!e) return std::nullopt;
    total += euclidean_distance(*e, concept_vec);
  }
  return total / static_cast<double>(feature.symbols.size());
}

Vector concept_vector(const std::vector<std::string>& names, const EmbeddingTable& table,
                      const std::string& joiner) {
  if (names.empty()) throw DataError("no concept given");
  Vector sum(table.dim(), 0.0);
  for (const auto& name : names) {
    const auto v = symbol_embedding(name, table, joiner);
    if (!v) throw DataError("concept '" + name + "' has no embedding");
    for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += (*v)[k];
  }
  for (auto& x : sum) x /= static_cast<double>(names.size());
  return sum;
}

FidelityReport semantic_fidelity(const LinearModel& model, const EmbeddingTable& table,
                                 const FidelityConfig& config) {
  if (!table.normalized()) throw DataError("semantic fidelity needs a normalized embedding table");
  if (config.nontarget_concepts.size() == 1 &&
      config.nontarget_concepts.front() == config.target_concept) {
    throw DataError("target and non-target concepts must differ");
  }
  const Vector target = concept_vector({config.target_concept}, table, config.joiner);
  const Vector nontarget = concept_vector(config.nontarget_concepts, table, config.joiner);

  double max_abs = 0;
  for (const auto& wf : model.features()) max_abs = std::max(max_abs, std::abs(wf.weight));

  FidelityReport report;
  double sum_h = 0;
  for (const auto& wf : model.features()) {
    const bool positive = wf.weight >= 0;
    const auto d = feature_distance(wf.feature, positive ? target : nontarget, model.space(),
                                    table, config.joiner);
    const auto display = model.space().display(wf.feature);
    if (!d) {
      if (config.missing_symbol_policy == MissingSymbolPolicy::kError) {
        throw DataError("feature '" + display + "' has a symbol without embedding");
      }
      report.skipped.push_back(display);
      continue;
    }
    FeatureFidelity row;
    row.feature = display;
    row.weight = wf.weight;
    row.normalized_weight = std::abs(wf.weight) / max_abs;
    row.distance = *d;
    row.contribution = row.normalized_weight * row.distance;
    sum_h += row.contribution;
    report.per_feature.push_back(std::move(row));
  }
  if (report.per_feature.empty()) throw DataError("no model feature could be scored");
  const double n = static_cast<double>(report.per_feature.size());
  report.sf = 1.0 - sum_h / (2.0 * n);
  return report;
}

void write_fidelity_records(std::ostream& out, const FidelityReport& report) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "sf=%.17g\n", report.sf);
  out << buf;
  for (const auto& row : report.per_feature) {
    std::snprintf(buf, sizeof buf, " w=%.17g d=%.17g h=%.17g\n", row.weight, row.distance,
                  row.contribution);
    out << "feature=" << row.feature << buf;
  }
  for (const auto& s : report.skipped) out << "skipped=" << s << '\n';
}

void write_fidelity_table(std::ostream& out, const FidelityReport& report) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "Semantic fidelity: %.6f (%zu scored, %zu skipped)\n", report.sf,
                report.per_feature.size(), report.skipped.size());
  out << buf;
  out << "  weight      w_norm    distance  h         feature\n";
  for (const auto& row : report.per_feature) {
    std::snprintf(buf, sizeof buf, "  %-10.4f  %-8.4f  %-8.4f  %-8.4f  ", row.weight,
                  row.normalized_weight, row.distance, row.contribution);
    out << buf << row.feature << '\n';
  }
  for (const auto& s : report.skipped) out << "  (skipped, no embedding)  " << s << '\n';
}

}  // namespace embseql
