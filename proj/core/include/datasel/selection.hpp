#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "datasel/corpus.hpp"
#include "datasel/scoring.hpp"

namespace datasel {

enum class Strategy { random, entropy, entropy_filtered, el2n_mixture };

std::string_view to_string(Strategy strategy);
Strategy parse_strategy(std::string_view text);

struct EntropyFilterParams {
  static constexpr std::int64_t kUnlimited = std::numeric_limits<std::int64_t>::max();

  std::int64_t repetition_cap = 20;  // P: copies allowed per unique text
  double min_domain_share = 0.005;   // R: floor as a share of target_size

  void validate(std::size_t num_domains) const;
  bool operator==(const EntropyFilterParams&) const = default;
};

struct El2nMixtureParams {
  double easy_threshold = 0.15;
  double hard_threshold = 0.6;
  double hard_fraction = 0.1;

  void validate() const;
  bool operator==(const El2nMixtureParams&) const = default;
};

// Everything needed to audit and re-run a selection.
struct SelectionParams {
  std::optional<std::uint64_t> seed;
  std::optional<EntropyFilterParams> filter;
  std::optional<El2nMixtureParams> mixture;
  std::int64_t hard_deficit = 0;  // hard quota not met, moved to easy
  std::int64_t easy_deficit = 0;  // easy quota not met, moved to hard
  std::vector<std::string> warnings;

  bool operator==(const SelectionParams&) const = default;
};

struct Selection {
  std::string example_id;
  std::int64_t multiplicity = 0;

  bool operator==(const Selection&) const = default;
};

// Selections are listed in pool order.
struct CuratedDataset {
  Strategy strategy = Strategy::random;
  SelectionParams params;
  std::vector<Selection> selections;
  std::int64_t target_size = 0;
  bool shortfall = false;  // pool could not supply target_size instances
  std::string pool_name;
  std::string pool_fingerprint;

  std::int64_t total_selected() const;
  bool operator==(const CuratedDataset&) const = default;
};

// Human-readable candidate name, e.g. "EL2N (10% Hard + 90% Easy)".
std::string display_name(const CuratedDataset& curated);

// round(fraction * base), at least 1.
std::int64_t target_size_from_fraction(std::int64_t base, double fraction);

// Uniform sample without replacement over pool instances.
CuratedDataset select_random(const Dataset& pool, std::int64_t target_size,
                             std::uint64_t seed);

// Highest-entropy instances; ties by ascending example id, then instance
// ordinal.
CuratedDataset select_entropy_topk(std::span<const ScoreRecord> records,
                                   const Dataset& pool, std::int64_t target_size);

// Entropy ranking with a per-text repetition cap and per-domain floors of
// ceil(R * target_size) instances. Floors are met by backfilling from the
// domain's best remaining instances and evicting the lowest-entropy
// instances of domains above their floor.
CuratedDataset select_entropy_filtered(std::span<const ScoreRecord> records,
                                       const Dataset& pool, std::int64_t target_size,
                                       const EntropyFilterParams& params);

// Random draws from the hard (el2n >= hard_threshold) and easy
// (el2n <= easy_threshold) subsets; mid-band instances are never chosen.
CuratedDataset select_el2n_mixture(std::span<const ScoreRecord> records,
                                   const Dataset& pool, std::int64_t target_size,
                                   const El2nMixtureParams& params, std::uint64_t seed);

// 100 * |ids(a) & ids(b)| / min(|ids(a)|, |ids(b)|) over unique example ids.
double overlap_percent(const CuratedDataset& a, const CuratedDataset& b);

// Selected pool examples with count set to their multiplicity.
Dataset materialize(const CuratedDataset& curated, const Dataset& pool);

// JSON Lines `{"example_id": ..., "multiplicity": ...}`.
void write_curated(const CuratedDataset& curated, std::ostream& out);
// Sidecar JSON with strategy, target, shortfall, pool identity and params.
void write_curated_params(const CuratedDataset& curated, std::ostream& out);
CuratedDataset read_curated(std::istream& selections, std::istream& params);

}  // namespace datasel
