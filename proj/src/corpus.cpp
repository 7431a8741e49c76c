#include "embseql/corpus.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <unordered_set>

#include "embseql/error.hpp"
#include "text_util.hpp"

namespace embseql {

SymbolId Alphabet::intern(std::string_view name) {
  std::string key(name);
  if (auto it = ids_.find(key); it != ids_.end()) return it->second;
  const auto id = static_cast<SymbolId>(names_.size());
  ids_.emplace(key, id);
  names_.push_back(std::move(key));
  return id;
}

std::optional<SymbolId> Alphabet::find(std::string_view name) const {
  if (auto it = ids_.find(std::string(name)); it != ids_.end()) return it->second;
  return std::nullopt;
}

void SequenceDataset::refresh_classes() {
  classes.clear();
  std::unordered_set<std::string> seen;
  for (const auto& item : items) {
    if (seen.insert(item.label).second) classes.push_back(item.label);
  }
}

bool SequenceDataset::has_class(std::string_view label) const {
  return std::find(classes.begin(), classes.end(), label) != classes.end();
}

SequenceDataset read_dataset(std::istream& in, const std::string& source, Alphabet alphabet,
                             AlphabetMode mode) {
  SequenceDataset ds;
  ds.alphabet = std::move(alphabet);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = detail::strip_cr(line);
    if (detail::trim(text).empty() || text.front() == '#') continue;
    const auto tab = text.find('\t');
    if (tab == std::string_view::npos) throw ParseError(source, line_no, "missing tab separator");
    const auto label = detail::trim(text.substr(0, tab));
    if (label.empty()) throw ParseError(source, line_no, "empty label");
    const auto tokens = detail::split_ws(text.substr(tab + 1));
    if (tokens.empty()) throw ParseError(source, line_no, "empty symbol list");

    LabeledSequence item;
    item.label = std::string(label);
    item.symbols.reserve(tokens.size());
    for (const auto tok : tokens) {
      if (mode == AlphabetMode::kClosed) {
        const auto id = ds.alphabet.find(tok);
        if (!id) {
          throw DataError(source + ":" + std::to_string(line_no) + ": unknown symbol '" +
                          std::string(tok) + "'");
        }
        item.symbols.push_back(*id);
      } else {
        item.symbols.push_back(ds.alphabet.intern(tok));
      }
    }
    ds.items.push_back(std::move(item));
  }
  if (ds.items.empty()) throw DataError(source + ": no sequences");
  ds.refresh_classes();
  return ds;
}

SequenceDataset load_dataset(const std::string& path, Alphabet alphabet, AlphabetMode mode) {
  auto in = detail::open_input(path);
  return read_dataset(in, path, std::move(alphabet), mode);
}

void write_dataset(std::ostream& out, const SequenceDataset& ds) {
  for (const auto& item : ds.items) {
    out << item.label << '\t';
    for (std::size_t i = 0; i < item.symbols.size(); ++i) {
      if (i > 0) out << ' ';
      out << ds.alphabet.name(item.symbols[i]);
    }
    out << '\n';
  }
}

void save_dataset(const std::string& path, const SequenceDataset& ds) {
  auto out = detail::open_output(path);
  write_dataset(out, ds);
}

namespace {

std::vector<std::string> split_csv_row(std::string_view row) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < row.size(); ++i) {
    const char c = row[i];
    if (quoted) {
      if (c == '"' && i + 1 < row.size() && row[i + 1] == '"') {
        cell.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cell.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(std::move(cell));
      cell.clear();
    } else {
      cell.push_back(c);
    }
  }
  cells.push_back(std::move(cell));
  return cells;
}

}  // namespace

MultivariateRecording read_recording_csv(std::istream& in, const std::string& source) {
  MultivariateRecording rec;
  std::string line;
  std::size_t line_no = 0;
  std::size_t columns = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = detail::strip_cr(line);
    if (detail::trim(text).empty()) continue;
    auto cells = split_csv_row(text);
    if (columns == 0) {
      if (cells.size() < 2) {
        throw ParseError(source, line_no, "header needs at least one channel and a label column");
      }
      columns = cells.size();
      continue;
    }
    if (cells.size() != columns) {
      throw ParseError(source, line_no,
                       "expected " + std::to_string(columns) + " columns, got " +
                           std::to_string(cells.size()));
    }
    rec.frame_labels.push_back(std::move(cells.back()));
    cells.pop_back();
    rec.frames.push_back(std::move(cells));
  }
  if (columns == 0) throw ParseError(source, 0, "missing header row");
  return rec;
}

MultivariateRecording load_recording_csv(const std::string& path) {
  auto in = detail::open_input(path);
  return read_recording_csv(in, path);
}

EncodedStream encode_frames(const MultivariateRecording& rec, std::string_view joiner,
                            Alphabet& alphabet) {
  if (rec.frames.size() != rec.frame_labels.size()) {
    throw DataError("recording has " + std::to_string(rec.frames.size()) + " frames but " +
                    std::to_string(rec.frame_labels.size()) + " labels");
  }
  EncodedStream out;
  std::string composite;
  std::optional<SymbolId> previous;
  for (std::size_t f = 0; f < rec.frames.size(); ++f) {
    const auto& frame = rec.frames[f];
    if (frame.size() != rec.frames.front().size()) {
      throw DataError("frame " + std::to_string(f) + " has arity " +
                      std::to_string(frame.size()) + ", expected " +
                      std::to_string(rec.frames.front().size()));
    }
    composite.clear();
    for (std::size_t c = 0; c < frame.size(); ++c) {
      if (c > 0) composite.append(joiner);
      composite.append(frame[c]);
    }
    const SymbolId id = alphabet.intern(composite);
    if (previous && *previous == id) continue;
    out.symbols.push_back(id);
    out.labels.push_back(rec.frame_labels[f]);
    previous = id;
  }
  return out;
}

std::vector<LabeledSequence> window_dataset(const Sequence& seq,
                                            const std::vector<std::string>& pos_labels,
                                            std::size_t size, std::size_t stride) {
  if (size == 0 || stride == 0) throw DataError("window size and stride must be positive");
  if (seq.size() != pos_labels.size()) {
    throw DataError("sequence and position labels differ in length");
  }
  std::vector<LabeledSequence> windows;
  const std::size_t n = seq.size();
  for (std::size_t start = 0; start < n; start += stride) {
    const std::size_t end = std::min(n, start + size);
    LabeledSequence w;
    w.symbols.assign(seq.begin() + static_cast<std::ptrdiff_t>(start),
                     seq.begin() + static_cast<std::ptrdiff_t>(end));

    // Labels in first-occurrence order with their counts.
    std::vector<std::pair<std::string_view, std::size_t>> counts;
    for (std::size_t i = start; i < end; ++i) {
      auto it = std::find_if(counts.begin(), counts.end(),
                             [&](const auto& c) { return c.first == pos_labels[i]; });
      if (it == counts.end()) {
        counts.emplace_back(pos_labels[i], 1);
      } else {
        ++it->second;
      }
    }
    auto best = counts.begin();
    for (auto it = counts.begin(); it != counts.end(); ++it) {
      if (it->second > best->second) best = it;
    }
    w.label = std::string(best->first);
    windows.push_back(std::move(w));
    if (end == n) break;
  }
  return windows;
}

SequenceDataset binarize_labels(const SequenceDataset& ds, std::string_view target) {
  if (!ds.has_class(target)) {
    throw DataError("target class '" + std::string(target) + "' not present in dataset");
  }
  SequenceDataset out;
  out.alphabet = ds.alphabet;
  out.items.reserve(ds.items.size());
  for (const auto& item : ds.items) {
    out.items.push_back({item.symbols, std::string(item.label == target ? kPositiveLabel
                                                                        : kNegativeLabel)});
  }
  out.refresh_classes();
  return out;
}

}  // namespace embseql
