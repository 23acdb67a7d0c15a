#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace datasel {

struct Slot {
  std::string name;
  std::string value;

  bool operator==(const Slot&) const = default;
};

enum class Source { existing, wsl, synthetic };

std::string_view to_string(Source source);
Source parse_source(std::string_view text);

// One labeled utterance. `count` is the number of identical copies this row
// stands for; strategies treat it as `count` selectable instances.
struct Example {
  std::string id;
  std::string text;
  std::string domain;
  std::string intent;
  std::vector<Slot> slots;
  std::optional<double> nlu_score;  // in (0, 1] when present
  std::int64_t count = 1;
  Source source = Source::existing;

  bool operator==(const Example&) const = default;
};

// Immutable, insertion-ordered collection of examples over a label set.
class Dataset {
 public:
  Dataset() = default;

  // Validates unique ids, count >= 1, nlu_score in (0,1], and that every
  // example's domain is in `label_set` (which must itself be duplicate free).
  Dataset(std::string name, std::vector<Example> examples,
          std::vector<std::string> label_set);

  // Label set is the sorted union of the examples' domains.
  static Dataset with_sorted_labels(std::string name,
                                    std::vector<Example> examples);

  const std::string& name() const { return name_; }
  const std::vector<Example>& examples() const { return examples_; }
  const std::vector<std::string>& label_set() const { return label_set_; }

  std::size_t size() const { return examples_.size(); }
  bool empty() const { return examples_.empty(); }
  const Example& operator[](std::size_t i) const { return examples_[i]; }
  auto begin() const { return examples_.begin(); }
  auto end() const { return examples_.end(); }

  // Sum of Example::count.
  std::int64_t total_multiplicity() const;

  std::optional<std::size_t> label_index(std::string_view domain) const;
  std::optional<std::size_t> index_of(std::string_view id) const;

  // Order-sensitive FNV digest over ids, used to check that artefacts refer
  // to the same pool.
  std::string fingerprint() const;

  bool operator==(const Dataset& other) const {
    return name_ == other.name_ && examples_ == other.examples_ &&
           label_set_ == other.label_set_;
  }

 private:
  std::string name_;
  std::vector<Example> examples_;
  std::vector<std::string> label_set_;
  std::unordered_map<std::string, std::size_t> id_index_;
  std::unordered_map<std::string, std::size_t> label_index_;
};

// JSON Lines record codec.
Example parse_example(std::string_view json_line, std::size_t line_number = 0);
std::string serialize_example(const Example& example);

Dataset read_dataset(std::istream& in, std::string name);
Dataset load_dataset(const std::filesystem::path& path, std::string name);
void write_dataset(const Dataset& dataset, std::ostream& out);
void save_dataset(const Dataset& dataset, const std::filesystem::path& path);

// Keeps examples with a present nlu_score inside the closed band [lo, hi].
Dataset filter_by_nlu_band(const Dataset& dataset, double lo, double hi);

using DomainHistogram = std::map<std::string, std::int64_t>;

// Multiplicity-weighted count per domain; domains with no examples are absent.
DomainHistogram domain_histogram(const Dataset& dataset);

// CSV with header `domain,count`, rows in key order.
void write_histogram_csv(const DomainHistogram& histogram, std::ostream& out);

// Concatenates datasets; ids must stay unique. Label set is the sorted union.
Dataset concat(std::string name, const std::vector<const Dataset*>& parts);

}  // namespace datasel
