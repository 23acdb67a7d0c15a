#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "datasel/corpus.hpp"
#include "datasel/scoring.hpp"
#include "datasel/selection.hpp"

namespace datasel {

// Pearson and Spearman are nullopt (undefined) when either input is constant.
struct CorrelationReport {
  std::optional<double> pearson;
  std::optional<double> spearman;
  double kendall_tau_a = 0.0;
  std::size_t n = 0;
};

std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

// 1-based ranks; tied values share the average of their positions.
std::vector<double> average_ranks(std::span<const double> values);

// (concordant - discordant) / (n (n - 1) / 2) with no tie correction.
// O(n log n) by merge-sort inversion counting.
double kendall_tau_a(std::span<const double> x, std::span<const double> y);

CorrelationReport correlation_suite(std::span<const double> x, std::span<const double> y);

// CSV `coefficient,value,n`.
void write_correlation_csv(const CorrelationReport& report, std::ostream& out);

// Equal-width bins over [lo, hi]; the last bin is closed and values outside
// the range are clamped into the end bins.
struct Histogram {
  std::vector<double> edges;
  std::vector<std::int64_t> counts;
};

Histogram make_histogram(std::span<const double> values, std::span<const std::int64_t> weights,
                         double lo, double hi, std::size_t bins);

// CSV `bin_lo,bin_hi,count`.
void write_histogram_csv(const Histogram& histogram, std::ostream& out);

struct AnalysisConfig {
  std::size_t top_k_domains = 7;
  std::size_t bins = 20;
  std::optional<double> entropy_max;  // default log2(number of labels)
  double el2n_max = 1.4142135623730951;
};

struct StrategyProfile {
  std::string name;
  std::vector<std::pair<std::string, std::int64_t>> top_domains;  // pool-mass order
  std::optional<Histogram> entropy;
  std::optional<Histogram> el2n;
};

struct StrategyComparison {
  std::vector<std::string> names;
  std::vector<std::vector<double>> overlap;  // percent, symmetric, 100 diagonal
  std::vector<std::string> top_domains;
  std::vector<StrategyProfile> profiles;
};

// `records` may be empty, in which case score histograms are omitted.
StrategyComparison compare_strategies(std::span<const CuratedDataset> curated,
                                      const Dataset& pool,
                                      std::span<const ScoreRecord> records,
                                      const AnalysisConfig& config = {});

// CSV: header `strategy,<name>...`, one row per strategy.
void write_overlap_csv(const StrategyComparison& comparison, std::ostream& out);

// overlap.csv plus domains_<slug>.csv, entropy_hist_<slug>.csv and
// el2n_hist_<slug>.csv per strategy.
void write_comparison(const StrategyComparison& comparison, const std::filesystem::path& dir);

// Lowercase alphanumerics with '_' separators, for file names.
std::string slugify(std::string_view name);

}  // namespace datasel
