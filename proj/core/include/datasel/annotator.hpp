#pragma once

#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "datasel/corpus.hpp"

namespace datasel {

struct Interpretation {
  std::string intent;
  std::vector<Slot> slots;
};

// Rule-based intent/slot tagger conditioned on a domain hypothesis.
//
// Per domain it holds a trigger-token -> intent table, a value-token ->
// slot-name table, and a fallback intent. The first trigger token in text
// order decides the intent; every token found in the slot table becomes a
// slot, in text order.
class Annotator {
 public:
  struct DomainLexicon {
    std::string default_intent;
    std::unordered_map<std::string, std::string> triggers;
    std::unordered_map<std::string, std::string> slot_values;
  };

  void add_domain(const std::string& domain, DomainLexicon lexicon);

  // Learns lexicons from labeled data: a token is a trigger when it was seen
  // at least twice in the domain and >= 90% of those uses carry one intent.
  static Annotator from_dataset(const Dataset& labeled);

  // Unknown domains yield an empty intent and no slots.
  Interpretation annotate(std::string_view text, std::string_view domain) const;

  const DomainLexicon* lexicon(std::string_view domain) const;

 private:
  std::map<std::string, DomainLexicon, std::less<>> lexicons_;
};

}  // namespace datasel
