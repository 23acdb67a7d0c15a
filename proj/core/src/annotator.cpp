#include "datasel/annotator.hpp"

#include <algorithm>

#include "datasel/text.hpp"

namespace datasel {

void Annotator::add_domain(const std::string& domain, DomainLexicon lexicon) {
  lexicons_[domain] = std::move(lexicon);
}

const Annotator::DomainLexicon* Annotator::lexicon(std::string_view domain) const {
  auto it = lexicons_.find(domain);
  return it == lexicons_.end() ? nullptr : &it->second;
}

Annotator Annotator::from_dataset(const Dataset& labeled) {
  struct Tally {
    std::map<std::string, std::int64_t> intent_count;
    std::map<std::string, std::map<std::string, std::int64_t>> token_intents;
    std::map<std::string, std::map<std::string, std::int64_t>> value_slots;
  };
  std::map<std::string, Tally> per_domain;
  for (const Example& ex : labeled) {
    Tally& t = per_domain[ex.domain];
    if (!ex.intent.empty()) {
      t.intent_count[ex.intent] += ex.count;
      for (const std::string& tok : tokenize(ex.text)) {
        t.token_intents[tok][ex.intent] += ex.count;
      }
    }
    for (const Slot& s : ex.slots) {
      for (const std::string& tok : tokenize(s.value)) {
        t.value_slots[tok][s.name] += ex.count;
      }
    }
  }

  // Ties resolve to the lexicographically smallest key (std::map order).
  auto top = [](const std::map<std::string, std::int64_t>& counts) {
    auto best = counts.begin();
    for (auto it = counts.begin(); it != counts.end(); ++it) {
      if (it->second > best->second) best = it;
    }
    return best;
  };

  Annotator annotator;
  for (const auto& [domain, t] : per_domain) {
    DomainLexicon lex;
    if (!t.intent_count.empty()) lex.default_intent = top(t.intent_count)->first;
    for (const auto& [tok, intents] : t.token_intents) {
      std::int64_t total = 0;
      for (const auto& [_, c] : intents) total += c;
      auto best = top(intents);
      if (total >= 2 && best->second * 10 >= total * 9) {
        lex.triggers.emplace(tok, best->first);
      }
    }
    for (const auto& [tok, names] : t.value_slots) {
      lex.slot_values.emplace(tok, top(names)->first);
    }
    annotator.add_domain(domain, std::move(lex));
  }
  return annotator;
}

Interpretation Annotator::annotate(std::string_view text,
                                   std::string_view domain) const {
  Interpretation out;
  const DomainLexicon* lex = lexicon(domain);
  if (!lex) return out;
  bool have_intent = false;
  for (const std::string& tok : tokenize(text)) {
    if (!have_intent) {
      if (auto it = lex->triggers.find(tok); it != lex->triggers.end()) {
        out.intent = it->second;
        have_intent = true;
      }
    }
    if (auto it = lex->slot_values.find(tok); it != lex->slot_values.end()) {
      out.slots.push_back(Slot{it->second, tok});
    }
  }
  if (!have_intent) out.intent = lex->default_intent;
  return out;
}

}  // namespace datasel
