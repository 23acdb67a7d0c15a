#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "datasel/classifier.hpp"
#include "datasel/corpus.hpp"
#include "datasel/distribution.hpp"

namespace datasel {

// Shannon entropy in bits, with 0 log 0 = 0.
double entropy(const DomainDistribution& dist);

// L2 distance between `dist` and the one-hot vector at `label_index`.
double el2n(const DomainDistribution& dist, std::size_t label_index);

// Mean of el2n over replicate distributions of one example.
double mean_el2n(std::span<const DomainDistribution> dists, std::size_t label_index);

struct ScoreRecord {
  std::string example_id;
  double entropy_bits = 0.0;
  double el2n = 0.0;
  int num_replicates = 0;
  std::size_t label_index = 0;
};

// Entropy comes from `entropy_model`; EL2N is averaged over `el2n_models`.
// All models must share one label set that contains every pool domain.
std::vector<ScoreRecord> score_pool(const ClassifierModel& entropy_model,
                                    std::span<const ClassifierModel> el2n_models,
                                    const Dataset& pool);

// Same, with models.front() as the entropy model.
std::vector<ScoreRecord> score_pool(std::span<const ClassifierModel> models,
                                    const Dataset& pool);

struct ScoreStats {
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double std = 0.0;
  std::size_t n_total = 0;
  std::size_t n_outliers_removed = 0;
};

// Drops values with |z| > 3 (population mean/std of the full sample), then
// summarises what is left.
ScoreStats score_stats(std::span<const double> values);

// CSV `example_id,entropy_bits,el2n,num_replicates`, reals at 17 significant
// digits, dataset order.
void write_scores_csv(std::span<const ScoreRecord> records, std::ostream& out);

// Reads a score CSV; label_index is recovered from `pool`, which must
// contain every id.
std::vector<ScoreRecord> read_scores_csv(std::istream& in, const Dataset& pool);

}  // namespace datasel
