#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "datasel/corpus.hpp"
#include "datasel/distribution.hpp"

namespace datasel {

struct TrainConfig {
  int epochs = 10;
  double learning_rate = 0.1;
  std::size_t feature_dim = 1u << 14;  // power of two
  int el2n_epoch = 2;                  // checkpoint used for EL2N

  void validate() const;
};

// Hashed bag-of-words: token counts bucketed by fnv1a64(token) & (dim - 1),
// entries sorted by bucket.
struct SparseFeatures {
  std::vector<std::pair<std::uint32_t, double>> entries;
};

SparseFeatures featurize(std::string_view text, std::size_t feature_dim);

// Multinomial softmax regression over hashed features.
class ClassifierModel {
 public:
  ClassifierModel() = default;

  // Zero-initialised model.
  ClassifierModel(std::vector<std::string> label_set, std::size_t feature_dim,
                  std::uint64_t seed);

  std::size_t num_classes() const { return label_set_.size(); }
  std::size_t feature_dim() const { return feature_dim_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<std::string>& label_set() const { return label_set_; }

  // Row-major (num_classes x feature_dim).
  std::span<const double> weights() const { return weights_; }
  std::span<double> weights() { return weights_; }
  std::span<const double> bias() const { return bias_; }
  std::span<double> bias() { return bias_; }

  double weight(std::size_t cls, std::size_t feature) const {
    return weights_[cls * feature_dim_ + feature];
  }
  double& weight(std::size_t cls, std::size_t feature) {
    return weights_[cls * feature_dim_ + feature];
  }

  std::vector<double> logits(const SparseFeatures& x) const;
  DomainDistribution distribution(const SparseFeatures& x) const;

  bool operator==(const ClassifierModel&) const = default;

 private:
  std::vector<std::string> label_set_;
  std::size_t feature_dim_ = 0;
  std::uint64_t seed_ = 0;
  std::vector<double> weights_;
  std::vector<double> bias_;
};

DomainDistribution predict_proba(const ClassifierModel& model, std::string_view text);

// Cross-entropy of one example, -log p[label].
double cross_entropy(const ClassifierModel& model, const SparseFeatures& x,
                     std::size_t label);

// Gradient of cross_entropy for one example. For softmax regression it is
// d/dW[c][f] = residual[c] * x[f] and d/db[c] = residual[c] with
// residual = p - onehot(label).
struct ExampleGradient {
  std::vector<double> residual;
  const SparseFeatures* features = nullptr;

  double d_bias(std::size_t cls) const { return residual[cls]; }
  double d_weight(std::size_t cls, std::uint32_t feature) const;
};

ExampleGradient cross_entropy_gradient(const ClassifierModel& model,
                                       const SparseFeatures& x, std::size_t label);

// One SGD step: params -= lr * gradient.
void apply_gradient(ClassifierModel& model, const ExampleGradient& grad,
                    double learning_rate);

struct TrainRun {
  ClassifierModel final_model;
  ClassifierModel el2n_checkpoint;  // snapshot after cfg.el2n_epoch epochs
  std::vector<double> epoch_loss;   // mean training cross-entropy per epoch
};

// Plain SGD. Weights start at N(0, 0.01^2) and each epoch visits every
// instance (examples expanded by count) in a seed-keyed shuffled order.
TrainRun train_run(const Dataset& data, const TrainConfig& cfg, std::uint64_t seed);

ClassifierModel train(const Dataset& data, const TrainConfig& cfg, std::uint64_t seed);

// Models at cfg.el2n_epoch for seeds base_seed .. base_seed + n - 1.
std::vector<ClassifierModel> train_replicates(const Dataset& data, const TrainConfig& cfg,
                                              int num_replicates, std::uint64_t base_seed);

// Full runs for the same seeds, for callers that also need final models.
std::vector<TrainRun> train_replicate_runs(const Dataset& data, const TrainConfig& cfg,
                                           int num_replicates, std::uint64_t base_seed);

// Mean cross-entropy over the dataset's instances.
double dataset_loss(const ClassifierModel& model, const Dataset& data);

// Text model format, see README ("Model file").
void write_model(const ClassifierModel& model, std::ostream& out);
ClassifierModel read_model(std::istream& in);
void save_model(const ClassifierModel& model, const std::filesystem::path& path);
ClassifierModel load_model(const std::filesystem::path& path);

}  // namespace datasel
