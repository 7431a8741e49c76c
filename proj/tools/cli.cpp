#include "cli.hpp"

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <json.hpp>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "embseql/corpus.hpp"
#include "embseql/cross_validation.hpp"
#include "embseql/embeddings.hpp"
#include "embseql/error.hpp"
#include "embseql/fidelity.hpp"
#include "embseql/learner.hpp"
#include "embseql/model.hpp"

namespace embseql::cli {
namespace {

using nlohmann::json;

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 15];
  while (in) {
    in.read(buf, sizeof buf);
    EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return hex.str();
}

// Records config, input hashes and outputs of one run.
class Manifest {
 public:
  explicit Manifest(std::string command) { doc_["command"] = std::move(command); }

  template <typename T>
  void set(const std::string& key, const T& value) {
    doc_["config"][key] = value;
  }
  void input(const std::string& path) { doc_["inputs"][path] = sha256_file(path); }
  void output(const std::string& path) { doc_["outputs"].push_back(path); }

  void write(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);
    out << doc_.dump(2) << '\n';
  }

 private:
  json doc_ = json::object();
};

std::string manifest_path(const std::string& explicit_path, const std::string& beside) {
  if (!explicit_path.empty()) return explicit_path;
  return beside + ".manifest.json";
}

std::vector<std::string> read_alphabet_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::string> names;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream tokens(line);
    std::string tok;
    if (!line.empty() && line.front() == '#') continue;
    while (tokens >> tok) names.push_back(tok);
  }
  return names;
}

struct TrainFlags {
  std::size_t max_len = 5;
  std::string groups;
  bool wildcard = false;
  double eps = 1e-4;
  std::size_t max_iters = 1000;
  std::size_t line_search = 30;
  std::size_t threads = 1;

  void add_to(CLI::App* app) {
    app->add_option("--max-len", max_len, "Maximum k-mer length")->check(CLI::PositiveNumber);
    app->add_option("--groups", groups, "Groups file extending the alphabet");
    app->add_flag("--wildcard", wildcard, "Add the * wildcard symbol");
    app->add_option("--eps", eps, "Convergence threshold")->check(CLI::NonNegativeNumber);
    app->add_option("--max-iters", max_iters, "Iteration limit");
    app->add_option("--line-search", line_search, "Maximum step halvings");
    app->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  }

  LearnerConfig config(Alphabet& alphabet) const {
    LearnerConfig cfg;
    cfg.max_len = max_len;
    cfg.use_wildcard = wildcard;
    cfg.convergence_eps = eps;
    cfg.max_iterations = max_iters;
    cfg.line_search = line_search;
    cfg.threads = threads;
    if (!groups.empty()) cfg.group_set = load_groups(groups, alphabet);
    return cfg;
  }

  void record(Manifest& m) const {
    m.set("max_len", max_len);
    m.set("groups", groups);
    m.set("wildcard", wildcard);
    m.set("eps", eps);
    m.set("max_iters", max_iters);
    m.set("line_search", line_search);
    m.set("threads", threads);
    if (!groups.empty()) m.input(groups);
  }
};

// ---- groups -------------------------------------------------------------

struct GroupsCmd {
  std::string embeddings;
  std::string data;
  std::string alphabet_file;
  double radius = -1;
  std::vector<double> scan;
  std::string out;
  std::string joiner = "_";
  bool stats = false;
  std::string manifest;

  void add_to(CLI::App& app) {
    auto* cmd = app.add_subcommand("groups", "Derive symbol groups from embeddings");
    cmd->add_option("--embeddings", embeddings, "Embedding text file")->required();
    auto* d = cmd->add_option("--data", data, "Corpus defining the alphabet");
    auto* a = cmd->add_option("--alphabet", alphabet_file, "File of symbols, whitespace separated");
    d->excludes(a);
    cmd->add_option("--radius", radius, "Grouping radius")->check(CLI::NonNegativeNumber);
    cmd->add_option("--scan", scan, "Print statistics for each of these radii");
    cmd->add_option("--out", out, "Groups file to write (default stdout)");
    cmd->add_option("--joiner", joiner, "Composite symbol joiner");
    cmd->add_flag("--stats", stats, "Print group count and size histogram");
    cmd->add_option("--manifest", manifest, "Manifest path");
  }

  int run(std::ostream& out_stream, std::ostream& err) {
    if (data.empty() && alphabet_file.empty()) throw CLI::ValidationError("--data or --alphabet is required");
    if (radius < 0 && scan.empty()) throw CLI::ValidationError("--radius or --scan is required");
    auto loaded = load_embeddings(embeddings);
    if (loaded.duplicates > 0) {
      err << "warning: " << loaded.duplicates << " duplicate embedding names; last one kept\n";
    }
    const auto table = loaded.table.normalize();
    Alphabet alphabet;
    if (!data.empty()) {
      alphabet = load_dataset(data).alphabet;
    } else {
      for (const auto& name : read_alphabet_file(alphabet_file)) alphabet.intern(name);
    }

    auto print_stats = [&](double r, const GroupSet& gs) {
      const auto st = group_stats(gs);
      char buf[160];
      std::snprintf(buf, sizeof buf, "radius=%.6g groups=%zu symbols_covered=%zu/%zu histogram=",
                    r, st.groups, st.symbols_covered, alphabet.size());
      std::ostream& s = out.empty() && radius >= 0 ? err : out_stream;
      s << buf;
      bool first = true;
      for (const auto& [size, count] : st.size_histogram) {
        s << (first ? "" : ",") << size << ':' << count;
        first = false;
      }
      s << '\n';
    };
    for (const double r : scan) print_stats(r, generate_groups(alphabet, table, r, joiner));

    if (radius < 0) return kOk;
    const auto groups = generate_groups(alphabet, table, radius, joiner);
    if (stats) print_stats(radius, groups);
    if (out.empty()) {
      write_groups(out_stream, groups, alphabet);
      return kOk;
    }
    save_groups(out, groups, alphabet);
    Manifest m("groups");
    m.set("embeddings", embeddings);
    m.set("data", data);
    m.set("alphabet", alphabet_file);
    m.set("radius", radius);
    m.set("joiner", joiner);
    m.input(embeddings);
    if (!data.empty()) m.input(data);
    if (!alphabet_file.empty()) m.input(alphabet_file);
    m.output(out);
    m.write(manifest_path(manifest, out));
    return kOk;
  }
};

// ---- train --------------------------------------------------------------

struct TrainCmd {
  std::string input;
  std::string target = std::string(kPositiveLabel);
  std::string model_out;
  std::string manifest;
  TrainFlags flags;

  void add_to(CLI::App& app) {
    auto* cmd = app.add_subcommand("train", "Train a binary model");
    cmd->add_option("--input", input, "Training corpus")->required();
    cmd->add_option("--target", target, "Positive class (default +1)");
    cmd->add_option("--model-out", model_out, "Model file to write")->required();
    cmd->add_option("--manifest", manifest, "Manifest path");
    flags.add_to(cmd);
  }

  int run(std::ostream& out, std::ostream&) {
    auto ds = load_dataset(input);
    const auto config = flags.config(ds.alphabet);
    const auto result = train(ds, target, config);
    save_model(model_out, result.model);

    char buf[200];
    std::snprintf(buf, sizeof buf, "stop=%s iterations=%zu features=%zu loss=%.9g\n",
                  to_string(result.reason).c_str(), result.iterations,
                  result.model.features().size(), result.loss_history.back());
    out << buf;

    Manifest m("train");
    m.set("input", input);
    m.set("target", target);
    flags.record(m);
    m.set("stop", to_string(result.reason));
    m.input(input);
    m.output(model_out);
    m.write(manifest_path(manifest, model_out));
    return converged(result.reason) ? kOk : kNotConverged;
  }
};

// ---- predict / eval -----------------------------------------------------

struct PredictCmd {
  bool with_report = false;
  std::vector<std::string> models;
  std::string input;
  std::string exclude_class;
  std::string out;
  std::string manifest;

  void add_to(CLI::App& app, bool report) {
    with_report = report;
    auto* cmd = app.add_subcommand(report ? "eval" : "predict",
                                   report ? "Predict and report accuracy and weighted F1"
                                          : "Predict labels for a corpus");
    cmd->add_option("--model", models, "Model file; several for one-vs-all")->required();
    cmd->add_option("--input", input, "Corpus to label")->required();
    cmd->add_option("--exclude-class", exclude_class, "Gold class left out of the metrics");
    cmd->add_option("--out", out, "Predictions TSV (default stdout for predict)");
    cmd->add_option("--manifest", manifest, "Manifest path");
  }

  int run(std::ostream& out_stream, std::ostream&) {
    std::vector<LinearModel> loaded;
    for (const auto& path : models) loaded.push_back(load_model(path));
    for (const auto& m : loaded) {
      if (!(m.space().alphabet() == loaded.front().space().alphabet())) {
        throw DataError("alphabet mismatch between model files");
      }
    }
    const Alphabet& model_alphabet = loaded.front().space().alphabet();
    const auto ds = load_dataset(input, model_alphabet);
    if (!model_alphabet.empty() && ds.alphabet.size() > model_alphabet.size()) {
      bool shared = false;
      for (const auto& item : ds.items) {
        for (const auto s : item.symbols) shared = shared || s < model_alphabet.size();
      }
      if (!shared) throw DataError("alphabet mismatch: corpus shares no symbol with the model");
    }

    std::optional<std::string> excluded;
    if (!exclude_class.empty()) excluded = exclude_class;

    OneVsAllModel ova;
    if (loaded.size() > 1) {
      for (const auto& m : loaded) {
        if (!ova.emplace(m.target_class(), m).second) {
          throw DataError("two models share target class " + m.target_class());
        }
      }
    }

    std::ostringstream tsv;
    tsv << "#gold\tpredicted";
    if (ova.empty()) {
      tsv << "\tscore";
    } else {
      for (const auto& [cls, m] : ova) tsv << "\tscore:" << cls;
    }
    tsv << '\n';
    std::vector<std::string> predictions;
    std::vector<std::string> gold;
    char buf[64];
    for (const auto& item : ds.items) {
      std::string predicted;
      std::vector<double> scores;
      if (ova.empty()) {
        const auto& m = loaded.front();
        scores.push_back(score(m, item.symbols));
        predicted = predict_label(m, item.symbols);
        const bool keep = item.label == m.target_class() || (excluded && item.label == *excluded);
        gold.push_back(keep ? item.label : m.nontarget_label());
      } else {
        for (const auto& [cls, m] : ova) scores.push_back(score(m, item.symbols));
        predicted = predict_multiclass(ova, item.symbols);
        gold.push_back(item.label);
      }
      predictions.push_back(predicted);
      tsv << item.label << '\t' << predicted;
      for (const double s : scores) {
        std::snprintf(buf, sizeof buf, "\t%.17g", s);
        tsv << buf;
      }
      tsv << '\n';
    }

    if (!out.empty()) {
      std::ofstream f(out, std::ios::binary | std::ios::trunc);
      if (!f) throw IoError("cannot write " + out);
      f << tsv.str();
    } else if (!with_report) {
      out_stream << tsv.str();
    }
    if (with_report) write_report(out_stream, evaluate(predictions, gold, excluded));

    if (!out.empty() || !manifest.empty()) {
      Manifest m(with_report ? "eval" : "predict");
      m.set("models", models);
      m.set("input", input);
      m.set("exclude_class", exclude_class);
      for (const auto& path : models) m.input(path);
      m.input(input);
      if (!out.empty()) m.output(out);
      m.write(manifest_path(manifest, out));
    }
    return kOk;
  }
};

// ---- sf -----------------------------------------------------------------

struct SfCmd {
  std::string model;
  std::string embeddings;
  std::string target_concept;
  std::string nontarget_concept;
  std::string nontarget_mode;
  std::vector<std::string> concepts;
  std::string joiner = "_";
  std::string missing = "skip";

  void add_to(CLI::App& app) {
    auto* cmd = app.add_subcommand("sf", "Semantic fidelity of a model");
    cmd->add_option("--model", model, "Model file")->required();
    cmd->add_option("--embeddings", embeddings, "Embedding text file")->required();
    cmd->add_option("--target-concept", target_concept,
                    "Concept of the positive class (default: model target class)");
    auto* nc = cmd->add_option("--nontarget-concept", nontarget_concept, "Concept of the negative class");
    auto* nm = cmd->add_option("--nontarget", nontarget_mode,
                               "'centroid': mean of the --concepts other than the target")
                   ->check(CLI::IsMember({"centroid"}));
    nc->excludes(nm);
    cmd->add_option("--concepts", concepts, "All class concepts, for --nontarget centroid")
        ->delimiter(',');
    cmd->add_option("--joiner", joiner, "Composite symbol joiner");
    cmd->add_option("--missing", missing, "Features with unembedded symbols: skip or error")
        ->check(CLI::IsMember({"skip", "error"}));
  }

  int run(std::ostream& out, std::ostream& err) {
    const auto m = load_model(model);
    auto loaded = load_embeddings(embeddings);
    if (loaded.duplicates > 0) {
      err << "warning: " << loaded.duplicates << " duplicate embedding names; last one kept\n";
    }
    const auto table = loaded.table.normalize();
    FidelityConfig cfg;
    cfg.target_concept = target_concept.empty() ? m.target_class() : target_concept;
    cfg.joiner = joiner;
    cfg.missing_symbol_policy =
        missing == "error" ? MissingSymbolPolicy::kError : MissingSymbolPolicy::kSkipFeature;
    if (nontarget_mode == "centroid") {
      for (const auto& c : concepts) {
        if (c != cfg.target_concept) cfg.nontarget_concepts.push_back(c);
      }
      if (cfg.nontarget_concepts.empty()) {
        throw CLI::ValidationError("--nontarget centroid needs --concepts besides the target");
      }
    } else if (!nontarget_concept.empty()) {
      cfg.nontarget_concepts = {nontarget_concept};
    } else {
      throw CLI::ValidationError("--nontarget-concept or --nontarget centroid is required");
    }
    const auto report = semantic_fidelity(m, table, cfg);
    write_fidelity_table(out, report);
    write_fidelity_records(out, report);
    return kOk;
  }
};

// ---- cv -----------------------------------------------------------------

struct CvCmd {
  std::string input;
  std::size_t folds = 10;
  std::uint64_t seed = 1;
  TrainFlags flags;
  std::string exclude_class;
  std::string embeddings;
  std::string concept_map;
  std::string nontarget_concept;
  std::string joiner = "_";
  std::string out;
  std::string manifest;

  void add_to(CLI::App& app) {
    auto* cmd = app.add_subcommand("cv", "Stratified one-vs-all cross-validation");
    cmd->add_option("--input", input, "Corpus")->required();
    cmd->add_option("--folds", folds, "Number of folds")->check(CLI::Range(2, 1 << 30));
    cmd->add_option("--seed", seed, "Shuffle seed");
    cmd->add_option("--exclude-class", exclude_class, "Gold class left out of the metrics");
    cmd->add_option("--embeddings", embeddings, "Embeddings for per-class semantic fidelity");
    cmd->add_option("--concept-map", concept_map, "TSV of class<TAB>concept");
    cmd->add_option("--nontarget-concept", nontarget_concept,
                    "Fixed non-target concept (default: centroid of other classes)");
    cmd->add_option("--joiner", joiner, "Composite symbol joiner");
    cmd->add_option("--out", out, "Report file (default stdout)");
    cmd->add_option("--manifest", manifest, "Manifest path");
    flags.add_to(cmd);
  }

  int run(std::ostream& out_stream, std::ostream&) {
    auto ds = load_dataset(input);
    const auto config = flags.config(ds.alphabet);
    CvOptions options;
    options.folds = folds;
    options.seed = seed;
    options.threads = flags.threads;
    if (!exclude_class.empty()) options.excluded_class = exclude_class;

    std::optional<FidelitySetup> fidelity;
    if (!embeddings.empty()) {
      fidelity.emplace();
      fidelity->table = load_embeddings(embeddings).table.normalize();
      fidelity->joiner = joiner;
      if (!nontarget_concept.empty()) fidelity->nontarget_concept = nontarget_concept;
      if (!concept_map.empty()) {
        std::ifstream in(concept_map);
        if (!in) throw IoError("cannot open " + concept_map);
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
          ++line_no;
          if (!line.empty() && line.back() == '\r') line.pop_back();
          if (line.empty() || line.front() == '#') continue;
          const auto tab = line.find('\t');
          if (tab == std::string::npos) throw ParseError(concept_map, line_no, "missing tab separator");
          fidelity->class_concepts[line.substr(0, tab)] = line.substr(tab + 1);
        }
      }
      options.fidelity = &*fidelity;
    }

    const auto report = cross_validate(ds, config, options);
    std::ostringstream text;
    write_cv_report(text, report);
    if (out.empty()) {
      out_stream << text.str();
    } else {
      std::ofstream f(out, std::ios::binary | std::ios::trunc);
      if (!f) throw IoError("cannot write " + out);
      f << text.str();
    }

    if (!out.empty() || !manifest.empty()) {
      Manifest m("cv");
      m.set("input", input);
      m.set("folds", folds);
      m.set("seed", seed);
      m.set("exclude_class", exclude_class);
      m.set("embeddings", embeddings);
      m.set("concept_map", concept_map);
      m.set("nontarget_concept", nontarget_concept);
      m.set("joiner", joiner);
      flags.record(m);
      m.input(input);
      if (!embeddings.empty()) m.input(embeddings);
      if (!concept_map.empty()) m.input(concept_map);
      if (!out.empty()) m.output(out);
      m.write(manifest_path(manifest, out));
    }
    return kOk;
  }
};

// ---- window -------------------------------------------------------------

struct WindowCmd {
  std::string input_csv;
  std::size_t size = 1000;
  std::size_t stride = 50;
  std::string joiner = "_";
  std::vector<std::string> drop_class;
  std::string out;
  std::string manifest;

  void add_to(CLI::App& app) {
    auto* cmd = app.add_subcommand("window", "Encode a recording and cut labeled windows");
    cmd->add_option("--input-csv", input_csv, "Recording CSV with header; last column is the label")
        ->required();
    cmd->add_option("--size", size, "Window length in symbols")->check(CLI::PositiveNumber);
    cmd->add_option("--stride", stride, "Window stride")->check(CLI::PositiveNumber);
    cmd->add_option("--joiner", joiner, "Composite symbol joiner");
    cmd->add_option("--drop-class", drop_class, "Drop windows with this majority label");
    cmd->add_option("--out", out, "Corpus TSV to write (default stdout)");
    cmd->add_option("--manifest", manifest, "Manifest path");
  }

  int run(std::ostream& out_stream, std::ostream& err) {
    const auto rec = load_recording_csv(input_csv);
    SequenceDataset ds;
    const auto encoded = encode_frames(rec, joiner, ds.alphabet);
    std::size_t dropped = 0;
    for (auto& w : window_dataset(encoded.symbols, encoded.labels, size, stride)) {
      if (std::find(drop_class.begin(), drop_class.end(), w.label) != drop_class.end()) {
        ++dropped;
        continue;
      }
      ds.items.push_back(std::move(w));
    }
    ds.refresh_classes();
    err << "frames=" << rec.frames.size() << " symbols=" << encoded.symbols.size()
        << " alphabet=" << ds.alphabet.size() << " windows=" << ds.items.size()
        << " dropped=" << dropped << '\n';
    if (out.empty()) {
      write_dataset(out_stream, ds);
      return kOk;
    }
    save_dataset(out, ds);
    Manifest m("window");
    m.set("input_csv", input_csv);
    m.set("size", size);
    m.set("stride", stride);
    m.set("joiner", joiner);
    m.set("drop_class", drop_class);
    m.input(input_csv);
    m.output(out);
    m.write(manifest_path(manifest, out));
    return kOk;
  }
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Interpretable k-mer sequence classification with embedding-derived symbol groups"};
  app.name("embseql");
  app.require_subcommand(1);

  GroupsCmd groups;
  TrainCmd train_cmd;
  PredictCmd predict;
  PredictCmd eval;
  SfCmd sf;
  CvCmd cv;
  WindowCmd window;
  groups.add_to(app);
  train_cmd.add_to(app);
  predict.add_to(app, false);
  eval.add_to(app, true);
  sf.add_to(app);
  cv.add_to(app);
  window.add_to(app);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
    const auto* cmd = app.get_subcommands().front();
    const std::string name = cmd->get_name();
    if (name == "groups") return groups.run(out, err);
    if (name == "train") return train_cmd.run(out, err);
    if (name == "predict") return predict.run(out, err);
    if (name == "eval") return eval.run(out, err);
    if (name == "sf") return sf.run(out, err);
    if (name == "cv") return cv.run(out, err);
    if (name == "window") return window.run(out, err);
    return kUsage;
  } catch (const CLI::Error& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
}

}  // namespace embseql::cli
