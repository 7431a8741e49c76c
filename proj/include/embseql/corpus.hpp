#pragma once

// Symbol interning, labeled sequence corpora and the frame/window
// preprocessing used to turn multichannel recordings into sequences.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace embseql {

using SymbolId = std::uint32_t;
using Sequence = std::vector<SymbolId>;

// Bijection between surface strings and dense ids 0..size()-1.
class Alphabet {
 public:
  Alphabet() = default;

  // Returns the id of `name`, adding it if absent.
  SymbolId intern(std::string_view name);
  std::optional<SymbolId> find(std::string_view name) const;
  const std::string& name(SymbolId id) const { return names_.at(id); }
  std::size_t size() const { return names_.size(); }
  bool empty() const { return names_.empty(); }
  const std::vector<std::string>& names() const { return names_; }

  friend bool operator==(const Alphabet& a, const Alphabet& b) { return a.names_ == b.names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, SymbolId> ids_;
};

struct LabeledSequence {
  Sequence symbols;
  std::string label;
};

struct SequenceDataset {
  Alphabet alphabet;
  std::vector<LabeledSequence> items;
  // Distinct labels in order of first occurrence.
  std::vector<std::string> classes;

  // Recomputes `classes` from `items`.
  void refresh_classes();
  bool has_class(std::string_view label) const;
};

// Labels used by binary learners.
inline constexpr std::string_view kPositiveLabel = "+1";
inline constexpr std::string_view kNegativeLabel = "-1";

enum class AlphabetMode {
  kOpen,    // unknown symbols are interned
  kClosed,  // unknown symbols are a DataError
};

// Reads `label<TAB>sym1 sym2 ...` lines. Blank lines and lines starting
// with '#' are skipped. `source` names the input in error messages.
SequenceDataset read_dataset(std::istream& in, const std::string& source, Alphabet alphabet = {},
                             AlphabetMode mode = AlphabetMode::kOpen);
SequenceDataset load_dataset(const std::string& path, Alphabet alphabet = {},
                             AlphabetMode mode = AlphabetMode::kOpen);

void write_dataset(std::ostream& out, const SequenceDataset& ds);
void save_dataset(const std::string& path, const SequenceDataset& ds);

// Raw multichannel stream, one tuple of channel values per frame.
struct MultivariateRecording {
  std::vector<std::vector<std::string>> frames;
  std::vector<std::string> frame_labels;
};

// CSV with a header row; every column but the last is a channel, the last
// column is the frame label.
MultivariateRecording read_recording_csv(std::istream& in, const std::string& source);
MultivariateRecording load_recording_csv(const std::string& path);

struct EncodedStream {
  Sequence symbols;
  std::vector<std::string> labels;  // one per symbol
};

// Joins each frame into a composite symbol and collapses runs of identical
// adjacent composites; a collapsed run keeps the label of its first frame.
EncodedStream encode_frames(const MultivariateRecording& rec, std::string_view joiner,
                            Alphabet& alphabet);

// Slices [start, start + size) for start = 0, stride, 2*stride, ...
// Windows are truncated at the end of the sequence and the scan stops after
// the first window that reaches the end. Each window is labeled with its
// most frequent position label, ties going to the label seen first.
std::vector<LabeledSequence> window_dataset(const Sequence& seq,
                                            const std::vector<std::string>& pos_labels,
                                            std::size_t size, std::size_t stride);

// Relabels `target` as "+1" and every other class as "-1".
SequenceDataset binarize_labels(const SequenceDataset& ds, std::string_view target);

}  // namespace embseql
