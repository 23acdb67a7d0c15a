#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "datasel/annotator.hpp"
#include "datasel/corpus.hpp"

namespace datasel {

// Parameters of the desk-scale synthetic corpus. Domain rank 0 is the head.
struct SyntheticSpec {
  std::size_t num_domains = 7;
  double head_skew = 1.2;  // Zipf exponent over domain rank
  std::size_t pool_size = 20000;
  std::size_t train_size = 5000;
  std::size_t test_size = 2000;
  double duplicate_rate = 0.1;
  double label_noise = 0.05;
  std::size_t vocab_per_domain = 300;

  void validate() const;
};

struct SyntheticCorpus {
  Dataset train;      // "existing" training data
  Dataset pool;       // weakly labeled candidate pool, carries nlu_score
  Dataset test_tail;  // drawn from tail domains only
  DomainHistogram pool_tally;              // generator's own draw tally
  std::vector<std::string> domains_by_rank;
  std::vector<std::string> tail_domains;   // rank order
};

// Pure function of (spec, seed).
//
// Every utterance mixes filler words, an optional intent trigger, slot
// values, and content words. An ambiguity level a = 0.9 u^2 (u uniform) sets
// the chance that each content word comes from a confuser domain instead of
// the utterance's own domain. Pool rows flipped by label noise carry text
// from one domain under another domain's label.
SyntheticCorpus generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

// Simulated NLU confidence, decreasing in both ambiguity and label noise:
//   clamp(0.97 - 0.75 * ambiguity - (flipped ? 0.30 : 0), 0.02, 1).
double simulated_nlu_score(double ambiguity, bool label_flipped);

// Domain names assigned by rank.
std::vector<std::string> synthetic_domain_names(std::size_t num_domains);

// Annotator carrying the generator's exact trigger and slot-value tables.
Annotator synthetic_annotator(const SyntheticSpec& spec);

// Largest-remainder apportionment of `total` proportional to `weights`;
// remainders tie-break toward the lower index.
std::vector<std::int64_t> allocate_counts(const std::vector<double>& weights,
                                          std::int64_t total);

// Lowest-mass domains (as rank indices, head first) whose cumulative share of
// `weights` stays within `mass_fraction`; never empty.
std::vector<std::size_t> tail_ranks(const std::vector<double>& weights,
                                    double mass_fraction);

}  // namespace datasel
