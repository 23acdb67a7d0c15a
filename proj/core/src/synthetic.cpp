#include "datasel/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <unordered_set>

#include "datasel/error.hpp"
#include "datasel/rng.hpp"

namespace datasel {

namespace {

constexpr std::size_t kIntentsPerDomain = 3;
constexpr std::size_t kSlotTypesPerDomain = 2;
constexpr std::size_t kValuesPerSlot = 25;
constexpr std::size_t kFillerWords = 40;
constexpr double kTriggerRate = 0.85;
constexpr double kTailMass = 0.40;

// Stream ids for mix_seed.
constexpr std::uint64_t kTrainStream = 11;
constexpr std::uint64_t kPoolStream = 12;
constexpr std::uint64_t kTestStream = 13;

constexpr const char* kSyllables[16] = {"ba", "ke", "lo", "mi", "nu", "ra",
                                        "so", "ti", "vo", "ze", "da", "fi",
                                        "gu", "ha", "jo", "pe"};

// Distinct ids map to distinct words: fixed-width syllables, and words of
// different syllable counts cannot coincide.
std::string pseudo_word(std::size_t id) {
  std::string digits;
  std::size_t v = id;
  do {
    digits += kSyllables[v % 16];
    v /= 16;
  } while (v);
  while (digits.size() < 6) digits += kSyllables[0];
  return digits;
}

struct Lexicon {
  std::vector<std::string> domains;
  std::vector<std::vector<std::string>> content;    // [domain][word]
  std::vector<std::vector<std::string>> triggers;   // [domain][intent]
  std::vector<std::vector<std::string>> intents;    // [domain][intent]
  std::vector<std::vector<std::string>> slot_names; // [domain][type]
  std::vector<std::vector<std::vector<std::string>>> slot_values;  // [d][t][v]
  std::vector<std::string> filler;

  explicit Lexicon(const SyntheticSpec& spec)
      : domains(synthetic_domain_names(spec.num_domains)) {
    std::size_t next_id = 0;
    for (std::size_t i = 0; i < kFillerWords; ++i) filler.push_back(pseudo_word(next_id++));
    const std::size_t n = spec.num_domains;
    content.resize(n);
    triggers.resize(n);
    intents.resize(n);
    slot_names.resize(n);
    slot_values.resize(n);
    for (std::size_t d = 0; d < n; ++d) {
      for (std::size_t w = 0; w < spec.vocab_per_domain; ++w) {
        content[d].push_back(pseudo_word(next_id++));
      }
      for (std::size_t i = 0; i < kIntentsPerDomain; ++i) {
        triggers[d].push_back(pseudo_word(next_id++));
        intents[d].push_back(domains[d] + ".intent_" + std::to_string(i));
      }
      slot_values[d].resize(kSlotTypesPerDomain);
      for (std::size_t t = 0; t < kSlotTypesPerDomain; ++t) {
        slot_names[d].push_back(domains[d] + ".slot_" + std::to_string(t));
        for (std::size_t v = 0; v < kValuesPerSlot; ++v) {
          slot_values[d][t].push_back(pseudo_word(next_id++));
        }
      }
    }
  }
};

struct Samplers {
  DiscreteSampler content;
  DiscreteSampler filler;
  DiscreteSampler intent;
  DiscreteSampler slot_value;
  DiscreteSampler slot_count;

  explicit Samplers(const SyntheticSpec& spec)
      : content(zipf_weights(spec.vocab_per_domain, 1.0)),
        filler(zipf_weights(kFillerWords, 1.0)),
        intent(zipf_weights(kIntentsPerDomain, 1.0)),
        slot_value(zipf_weights(kValuesPerSlot, 1.0)),
        slot_count({0.30, 0.45, 0.25}) {}
};

struct Utterance {
  std::string text;
  std::string intent;
  std::vector<Slot> slots;
  double ambiguity = 0.0;
};

// Text drawn from `content_domain`; the intent and slots describe that text.
Utterance make_utterance(const Lexicon& lex, const Samplers& samplers,
                         std::size_t content_domain, Rng& rng) {
  const std::size_t n = lex.domains.size();
  const std::size_t d = content_domain;
  Utterance u;
  const double draw = rng.uniform();
  u.ambiguity = 0.9 * draw * draw;

  // Confuser domain: Zipf over the other domains in rank order.
  std::vector<std::size_t> others;
  for (std::size_t k = 0; k < n; ++k) {
    if (k != d) others.push_back(k);
  }
  const std::size_t confuser =
      others[DiscreteSampler(zipf_weights(others.size(), 1.0))(rng)];

  struct Token {
    std::string word;
    int slot_type = -1;
  };
  std::vector<Token> tokens;
  const std::size_t n_filler = 1 + rng.below(2);
  for (std::size_t i = 0; i < n_filler; ++i) {
    tokens.push_back({lex.filler[samplers.filler(rng)]});
  }
  const std::size_t intent = samplers.intent(rng);
  u.intent = lex.intents[d][intent];
  if (rng.bernoulli(kTriggerRate)) tokens.push_back({lex.triggers[d][intent]});
  const std::size_t n_content = 2 + rng.below(4);
  for (std::size_t i = 0; i < n_content; ++i) {
    const bool confused = rng.bernoulli(u.ambiguity);
    const std::size_t src = confused ? confuser : d;
    tokens.push_back({lex.content[src][samplers.content(rng)]});
  }
  const std::size_t n_slots = samplers.slot_count(rng);
  for (std::size_t i = 0; i < n_slots; ++i) {
    const std::size_t type = rng.below(kSlotTypesPerDomain);
    tokens.push_back({lex.slot_values[d][type][samplers.slot_value(rng)],
                      static_cast<int>(type)});
  }
  rng.shuffle(tokens);
  for (const Token& t : tokens) {
    if (!u.text.empty()) u.text += ' ';
    u.text += t.word;
    if (t.slot_type >= 0) {
      u.slots.push_back(Slot{lex.slot_names[d][static_cast<std::size_t>(t.slot_type)], t.word});
    }
  }
  return u;
}

// Draws until the text is new to `seen`; after a bounded number of attempts a
// disambiguating filler is appended.
Utterance make_distinct(const Lexicon& lex, const Samplers& samplers,
                        std::size_t content_domain, Rng& rng,
                        std::unordered_set<std::string>& seen) {
  for (int attempt = 0; attempt < 64; ++attempt) {
    Utterance u = make_utterance(lex, samplers, content_domain, rng);
    if (seen.insert(u.text).second) return u;
  }
  Utterance u = make_utterance(lex, samplers, content_domain, rng);
  for (std::size_t k = 0;; ++k) {
    std::string candidate = u.text + " " + pseudo_word(1000000 + k);
    if (seen.insert(candidate).second) {
      u.text = std::move(candidate);
      return u;
    }
  }
}

std::string make_id(const char* prefix, std::size_t i) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%s-%07zu", prefix, i);
  return buf;
}

}  // namespace

void SyntheticSpec::validate() const {
  if (num_domains < 2) throw InvalidArgument("synthetic spec: num_domains must be >= 2");
  if (!(head_skew >= 0.0)) throw InvalidArgument("synthetic spec: head_skew must be >= 0");
  if (pool_size == 0 || train_size == 0 || test_size == 0) {
    throw InvalidArgument("synthetic spec: sizes must be > 0");
  }
  if (!(duplicate_rate >= 0.0 && duplicate_rate < 1.0)) {
    throw InvalidArgument("synthetic spec: duplicate_rate must be in [0,1)");
  }
  if (!(label_noise >= 0.0 && label_noise < 1.0)) {
    throw InvalidArgument("synthetic spec: label_noise must be in [0,1)");
  }
  if (vocab_per_domain == 0) {
    throw InvalidArgument("synthetic spec: vocab_per_domain must be > 0");
  }
}

double simulated_nlu_score(double ambiguity, bool label_flipped) {
  const double raw = 0.97 - 0.75 * ambiguity - (label_flipped ? 0.30 : 0.0);
  return std::clamp(raw, 0.02, 1.0);
}

std::vector<std::string> synthetic_domain_names(std::size_t num_domains) {
  static const char* kNames[] = {"Music",         "Video",    "HomeAutomation",
                                 "Global",        "Notifications", "Weather",
                                 "Communications", "Shopping", "Books",
                                 "Calendar",      "Knowledge", "Sports"};
  std::vector<std::string> names;
  for (std::size_t i = 0; i < num_domains; ++i) {
    names.push_back(i < std::size(kNames) ? kNames[i] : "Domain" + std::to_string(i));
  }
  return names;
}

Annotator synthetic_annotator(const SyntheticSpec& spec) {
  spec.validate();
  const Lexicon lex(spec);
  Annotator annotator;
  for (std::size_t d = 0; d < lex.domains.size(); ++d) {
    Annotator::DomainLexicon dl;
    dl.default_intent = lex.intents[d][0];
    for (std::size_t i = 0; i < kIntentsPerDomain; ++i) {
      dl.triggers.emplace(lex.triggers[d][i], lex.intents[d][i]);
    }
    for (std::size_t t = 0; t < kSlotTypesPerDomain; ++t) {
      for (const std::string& v : lex.slot_values[d][t]) {
        dl.slot_values.emplace(v, lex.slot_names[d][t]);
      }
    }
    annotator.add_domain(lex.domains[d], std::move(dl));
  }
  return annotator;
}

std::vector<std::int64_t> allocate_counts(const std::vector<double>& weights,
                                          std::int64_t total) {
  const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (weights.empty() || !(sum > 0.0)) throw InvalidArgument("allocate_counts: empty weights");
  std::vector<std::int64_t> counts(weights.size());
  std::vector<double> remainder(weights.size());
  std::int64_t assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double exact = static_cast<double>(total) * weights[i] / sum;
    counts[i] = static_cast<std::int64_t>(std::floor(exact));
    remainder[i] = exact - static_cast<double>(counts[i]);
    assigned += counts[i];
  }
  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return remainder[a] > remainder[b];
  });
  for (std::size_t k = 0; assigned < total; ++k, ++assigned) {
    ++counts[order[k % order.size()]];
  }
  return counts;
}

std::vector<std::size_t> tail_ranks(const std::vector<double>& weights,
                                    double mass_fraction) {
  const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<std::size_t> tail;
  double cumulative = 0.0;
  for (std::size_t r = weights.size(); r-- > 0;) {
    const double share = weights[r] / sum;
    if (!tail.empty() && cumulative + share > mass_fraction + 1e-12) break;
    cumulative += share;
    tail.push_back(r);
    if (cumulative > mass_fraction + 1e-12) break;
  }
  std::reverse(tail.begin(), tail.end());
  return tail;
}

SyntheticCorpus generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  spec.validate();
  const Lexicon lex(spec);
  const Samplers samplers(spec);
  const std::size_t n = spec.num_domains;
  const std::vector<double> weights = zipf_weights(n, spec.head_skew);

  SyntheticCorpus out;
  out.domains_by_rank = lex.domains;
  const std::vector<std::string> label_set = lex.domains;

  // Existing training data: same head skew, clean labels, distinct texts.
  {
    Rng rng(mix_seed(seed, kTrainStream));
    const auto counts = allocate_counts(weights, static_cast<std::int64_t>(spec.train_size));
    std::unordered_set<std::string> seen;
    std::vector<Example> rows;
    for (std::size_t d = 0; d < n; ++d) {
      for (std::int64_t k = 0; k < counts[d]; ++k) {
        Utterance u = make_distinct(lex, samplers, d, rng, seen);
        Example ex;
        ex.text = std::move(u.text);
        ex.domain = lex.domains[d];
        ex.intent = std::move(u.intent);
        ex.slots = std::move(u.slots);
        ex.source = Source::existing;
        rows.push_back(std::move(ex));
      }
    }
    rng.shuffle(rows);
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i].id = make_id("train", i);
    out.train = Dataset("train", std::move(rows), label_set);
  }

  // Weakly labeled pool. Labeled-domain counts follow the exact Zipf
  // apportionment; duplicates and label flips leave those counts unchanged.
  {
    Rng rng(mix_seed(seed, kPoolStream));
    const auto counts = allocate_counts(weights, static_cast<std::int64_t>(spec.pool_size));
    std::vector<std::int64_t> originals(n), duplicates(n);
    std::int64_t total_originals = 0;
    for (std::size_t d = 0; d < n; ++d) {
      duplicates[d] = static_cast<std::int64_t>(
          std::floor(spec.duplicate_rate * static_cast<double>(counts[d])));
      originals[d] = counts[d] - duplicates[d];
      if (originals[d] == 0 && counts[d] > 0) {
        originals[d] = 1;
        duplicates[d] = counts[d] - 1;
      }
      total_originals += originals[d];
    }

    std::vector<std::size_t> order(static_cast<std::size_t>(total_originals));
    std::iota(order.begin(), order.end(), 0);
    const auto n_flipped = static_cast<std::size_t>(
        std::llround(spec.label_noise * static_cast<double>(total_originals)));
    rng.partial_shuffle(order, n_flipped);
    std::vector<char> flipped(order.size(), 0);
    for (std::size_t i = 0; i < n_flipped; ++i) flipped[order[i]] = 1;

    std::unordered_set<std::string> seen;
    std::vector<Example> rows;
    std::size_t global = 0;
    for (std::size_t d = 0; d < n; ++d) {
      const std::size_t first = rows.size();
      for (std::int64_t k = 0; k < originals[d]; ++k, ++global) {
        const bool flip = flipped[global] != 0;
        std::size_t content_domain = d;
        if (flip) {
          content_domain = static_cast<std::size_t>(rng.below(n - 1));
          if (content_domain >= d) ++content_domain;
        }
        Utterance u = make_distinct(lex, samplers, content_domain, rng, seen);
        Example ex;
        ex.text = std::move(u.text);
        ex.domain = lex.domains[d];
        if (flip) {
          // The weak label is the wrong domain's default reading.
          ex.intent = lex.intents[d][0];
        } else {
          ex.intent = std::move(u.intent);
          ex.slots = std::move(u.slots);
        }
        ex.nlu_score = simulated_nlu_score(u.ambiguity, flip);
        ex.source = Source::wsl;
        rows.push_back(std::move(ex));
      }
      // Verbatim repeats concentrate on popular utterances (Zipf over the
      // domain's originals in generation order).
      const std::size_t n_orig = rows.size() - first;
      if (duplicates[d] > 0) {
        const DiscreteSampler pick(zipf_weights(n_orig, 1.0));
        for (std::int64_t k = 0; k < duplicates[d]; ++k) {
          Example copy = rows[first + pick(rng)];
          rows.push_back(std::move(copy));
        }
      }
      out.pool_tally[lex.domains[d]] = counts[d];
    }
    rng.shuffle(rows);
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i].id = make_id("pool", i);
    out.pool = Dataset("pool", std::move(rows), label_set);
  }

  // Tail test set: domains holding the lowest 40% of pool mass, sized in
  // proportion to that mass, clean labels.
  {
    Rng rng(mix_seed(seed, kTestStream));
    const std::vector<std::size_t> tail = tail_ranks(weights, kTailMass);
    std::vector<double> tail_weights;
    for (std::size_t r : tail) {
      tail_weights.push_back(weights[r]);
      out.tail_domains.push_back(lex.domains[r]);
    }
    const auto counts = allocate_counts(tail_weights, static_cast<std::int64_t>(spec.test_size));
    std::unordered_set<std::string> seen;
    std::vector<Example> rows;
    for (std::size_t i = 0; i < tail.size(); ++i) {
      for (std::int64_t k = 0; k < counts[i]; ++k) {
        Utterance u = make_distinct(lex, samplers, tail[i], rng, seen);
        Example ex;
        ex.text = std::move(u.text);
        ex.domain = lex.domains[tail[i]];
        ex.intent = std::move(u.intent);
        ex.slots = std::move(u.slots);
        ex.source = Source::synthetic;
        rows.push_back(std::move(ex));
      }
    }
    rng.shuffle(rows);
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i].id = make_id("test", i);
    out.test_tail = Dataset("test_tail", std::move(rows), label_set);
  }
  return out;
}

}  // namespace datasel
