#include "datasel/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <json.hpp>

#include "datasel/csv.hpp"
#include "datasel/error.hpp"
#include "datasel/text.hpp"

namespace datasel {

using nlohmann::json;

std::string_view to_string(Source source) {
  switch (source) {
    case Source::existing: return "existing";
    case Source::wsl: return "wsl";
    case Source::synthetic: return "synthetic";
  }
  return "existing";
}

Source parse_source(std::string_view text) {
  if (text == "existing") return Source::existing;
  if (text == "wsl") return Source::wsl;
  if (text == "synthetic") return Source::synthetic;
  throw InvalidArgument("unknown source tag '" + std::string(text) + "'");
}

Dataset::Dataset(std::string name, std::vector<Example> examples,
                 std::vector<std::string> label_set)
    : name_(std::move(name)),
      examples_(std::move(examples)),
      label_set_(std::move(label_set)) {
  for (std::size_t i = 0; i < label_set_.size(); ++i) {
    if (!label_index_.emplace(label_set_[i], i).second) {
      throw InvalidArgument("duplicate label '" + label_set_[i] + "'");
    }
  }
  id_index_.reserve(examples_.size());
  for (std::size_t i = 0; i < examples_.size(); ++i) {
    const Example& ex = examples_[i];
    if (!id_index_.emplace(ex.id, i).second) {
      throw InvalidArgument("duplicate example id '" + ex.id + "'");
    }
    if (ex.count < 1) {
      throw InvalidArgument("example '" + ex.id + "' has count < 1");
    }
    if (ex.nlu_score && !(*ex.nlu_score > 0.0 && *ex.nlu_score <= 1.0)) {
      throw InvalidArgument("example '" + ex.id + "' has nlu_score outside (0,1]");
    }
    if (!label_index_.contains(ex.domain)) {
      throw InvalidArgument("example '" + ex.id + "' has domain '" + ex.domain +
                            "' not in label set");
    }
    for (const Slot& s : ex.slots) {
      if (s.name.empty()) {
        throw InvalidArgument("example '" + ex.id + "' has an empty slot name");
      }
    }
  }
}

Dataset Dataset::with_sorted_labels(std::string name,
                                    std::vector<Example> examples) {
  std::set<std::string> labels;
  for (const Example& ex : examples) labels.insert(ex.domain);
  return Dataset(std::move(name), std::move(examples),
                 std::vector<std::string>(labels.begin(), labels.end()));
}

std::int64_t Dataset::total_multiplicity() const {
  std::int64_t total = 0;
  for (const Example& ex : examples_) total += ex.count;
  return total;
}

std::optional<std::size_t> Dataset::label_index(std::string_view domain) const {
  auto it = label_index_.find(std::string(domain));
  if (it == label_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> Dataset::index_of(std::string_view id) const {
  auto it = id_index_.find(std::string(id));
  if (it == id_index_.end()) return std::nullopt;
  return it->second;
}

std::string Dataset::fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const Example& ex : examples_) {
    h ^= fnv1a64(ex.id);
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

namespace {

std::string required_string(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw Error(std::string("missing field '") + key + "'");
  if (!it->is_string()) throw Error(std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

}  // namespace

Example parse_example(std::string_view json_line, std::size_t line_number) {
  try {
    const json obj = json::parse(json_line);
    if (!obj.is_object()) throw Error("record is not a JSON object");
    Example ex;
    ex.id = required_string(obj, "id");
    ex.text = required_string(obj, "text");
    ex.domain = required_string(obj, "domain");
    ex.intent = obj.contains("intent") ? required_string(obj, "intent") : "";
    if (ex.id.empty()) throw Error("empty id");
    if (ex.domain.empty()) throw Error("empty domain");
    if (auto it = obj.find("slots"); it != obj.end() && !it->is_null()) {
      if (!it->is_array()) throw Error("field 'slots' must be an array");
      for (const json& s : *it) {
        Slot slot{required_string(s, "name"), required_string(s, "value")};
        if (slot.name.empty()) throw Error("empty slot name");
        ex.slots.push_back(std::move(slot));
      }
    }
    if (auto it = obj.find("nlu_score"); it != obj.end() && !it->is_null()) {
      if (!it->is_number()) throw Error("field 'nlu_score' must be a number or null");
      const double v = it->get<double>();
      if (!(v > 0.0 && v <= 1.0)) throw Error("nlu_score outside (0,1]");
      ex.nlu_score = v;
    }
    if (auto it = obj.find("count"); it != obj.end() && !it->is_null()) {
      if (!it->is_number_integer()) throw Error("field 'count' must be an integer");
      ex.count = it->get<std::int64_t>();
      if (ex.count < 1) throw Error("count must be >= 1");
    }
    if (auto it = obj.find("source"); it != obj.end() && !it->is_null()) {
      if (!it->is_string()) throw Error("field 'source' must be a string");
      ex.source = parse_source(it->get<std::string>());
    }
    return ex;
  } catch (const json::exception& e) {
    throw ParseError(line_number, e.what());
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(line_number, e.what());
  }
}

std::string serialize_example(const Example& example) {
  // Field order is fixed by ordered_json so files are byte-stable.
  nlohmann::ordered_json obj;
  obj["id"] = example.id;
  obj["text"] = example.text;
  obj["domain"] = example.domain;
  obj["intent"] = example.intent;
  obj["slots"] = nlohmann::ordered_json::array();
  for (const Slot& s : example.slots) {
    nlohmann::ordered_json so;
    so["name"] = s.name;
    so["value"] = s.value;
    obj["slots"].push_back(std::move(so));
  }
  if (example.nlu_score) {
    obj["nlu_score"] = *example.nlu_score;
  } else {
    obj["nlu_score"] = nullptr;
  }
  obj["count"] = example.count;
  obj["source"] = std::string(to_string(example.source));
  return obj.dump();
}

Dataset read_dataset(std::istream& in, std::string name) {
  std::vector<Example> examples;
  std::unordered_map<std::string, std::size_t> seen;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Example ex = parse_example(line, line_number);
    if (auto [it, fresh] = seen.emplace(ex.id, line_number); !fresh) {
      throw ParseError(line_number, "duplicate id '" + ex.id +
                                        "' (first seen on line " +
                                        std::to_string(it->second) + ")");
    }
    examples.push_back(std::move(ex));
  }
  return Dataset::with_sorted_labels(std::move(name), std::move(examples));
}

Dataset load_dataset(const std::filesystem::path& path, std::string name) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dataset file " + path.string());
  return read_dataset(in, std::move(name));
}

void write_dataset(const Dataset& dataset, std::ostream& out) {
  for (const Example& ex : dataset) out << serialize_example(ex) << '\n';
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write dataset file " + path.string());
  write_dataset(dataset, out);
}

Dataset filter_by_nlu_band(const Dataset& dataset, double lo, double hi) {
  if (!(lo > 0.0 && lo <= hi && hi <= 1.0)) {
    throw InvalidArgument("nlu band requires 0 < lo <= hi <= 1");
  }
  std::vector<Example> kept;
  for (const Example& ex : dataset) {
    if (ex.nlu_score && *ex.nlu_score >= lo && *ex.nlu_score <= hi) {
      kept.push_back(ex);
    }
  }
  return Dataset(dataset.name(), std::move(kept), dataset.label_set());
}

DomainHistogram domain_histogram(const Dataset& dataset) {
  DomainHistogram hist;
  for (const Example& ex : dataset) hist[ex.domain] += ex.count;
  return hist;
}

void write_histogram_csv(const DomainHistogram& histogram, std::ostream& out) {
  out << "domain,count\n";
  for (const auto& [domain, count] : histogram) {
    out << csv::escape(domain) << ',' << count << '\n';
  }
}

Dataset concat(std::string name, const std::vector<const Dataset*>& parts) {
  std::vector<Example> all;
  std::set<std::string> labels;
  for (const Dataset* part : parts) {
    all.insert(all.end(), part->begin(), part->end());
    labels.insert(part->label_set().begin(), part->label_set().end());
  }
  return Dataset(std::move(name), std::move(all),
                 std::vector<std::string>(labels.begin(), labels.end()));
}

}  // namespace datasel
