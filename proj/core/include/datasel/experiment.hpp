#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "datasel/analysis.hpp"
#include "datasel/classifier.hpp"
#include "datasel/config.hpp"
#include "datasel/evaluation.hpp"
#include "datasel/scoring.hpp"
#include "datasel/selection.hpp"
#include "datasel/synthetic.hpp"

namespace datasel {

struct ExperimentConfig {
  // Corpus: the synthetic generator unless all three files are given.
  SyntheticSpec synthetic;
  std::filesystem::path train_file;
  std::filesystem::path pool_file;
  std::filesystem::path test_file;

  TrainConfig train;
  int num_replicates = 5;
  double nlu_band_lo = 0.3;
  double nlu_band_hi = 0.85;
  double target_fraction = 0.05;  // of existing training multiplicity
  EntropyFilterParams filter;     // P = 20, R = 0.5%
  double easy_threshold = 0.15;
  double hard_threshold = 0.6;
  std::vector<double> hard_fractions{0.1, 0.9};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::size_t top_k_domains = 7;
  std::size_t histogram_bins = 20;
  std::filesystem::path output_dir;  // not part of render_config()

  bool uses_files() const { return !train_file.empty(); }
  void validate() const;
};

SyntheticSpec parse_synthetic_spec(const KeyValueConfig& kv, const std::string& prefix = "");
ExperimentConfig parse_experiment_config(const KeyValueConfig& kv);

// Every field as `key = value` lines, parseable by parse_experiment_config.
std::string render_config(const ExperimentConfig& cfg);

struct CandidateResult {
  std::string name;
  CuratedDataset curated;
  EvalReport report;
  DeltaReport delta;  // against the random baseline
};

struct SeedResult {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;  // diagnostic when !ok

  std::int64_t target_size = 0;
  std::size_t pool_size = 0;           // after the NLU band filter
  std::vector<ScoreRecord> scores;
  ScoreStats entropy_stats;
  ScoreStats el2n_stats;
  CorrelationReport correlation;       // entropy vs nlu_score over the pool
  std::vector<CandidateResult> candidates;  // random baseline first
  std::optional<StrategyComparison> comparison;
};

struct AggregateDelta {
  std::string model;
  std::string metric;
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::size_t n_seeds = 0;
};

struct ExperimentBundle {
  std::vector<SeedResult> seeds;
  std::vector<AggregateDelta> aggregate;
};

// Per seed: corpus, band filter, replicate training, pool scoring, the
// random / entropy / entropy-filtered / EL2N-mixture curations at one target
// size, retraining on train + curated, tail-set evaluation and deltas.
// A failing seed is recorded and the others still run.
ExperimentBundle run_experiment(const ExperimentConfig& cfg);

// Writes the bundle (see README, "Experiment bundle"). No timestamps or
// host details, so identical inputs give identical bytes.
void write_bundle(const ExperimentBundle& bundle, const ExperimentConfig& cfg,
                  const std::filesystem::path& dir);

}  // namespace datasel
