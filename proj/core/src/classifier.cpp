#include "datasel/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "datasel/error.hpp"
#include "datasel/rng.hpp"
#include "datasel/text.hpp"

namespace datasel {

namespace {

constexpr double kInitStddev = 0.01;
constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kOrderStream = 2;
constexpr const char* kModelMagic = "datasel-model 1";

std::size_t label_of(const Dataset& data, const Example& ex) {
  auto idx = data.label_index(ex.domain);
  if (!idx) throw InvalidArgument("domain '" + ex.domain + "' not in label set");
  return *idx;
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw InvalidArgument("train config: epochs must be >= 1");
  if (!(learning_rate > 0.0)) throw InvalidArgument("train config: learning_rate must be > 0");
  if (feature_dim == 0 || (feature_dim & (feature_dim - 1)) != 0) {
    throw InvalidArgument("train config: feature_dim must be a power of two");
  }
  if (el2n_epoch < 1 || el2n_epoch > epochs) {
    throw InvalidArgument("train config: el2n_epoch must be in [1, epochs]");
  }
}

SparseFeatures featurize(std::string_view text, std::size_t feature_dim) {
  const std::uint64_t mask = feature_dim - 1;
  std::vector<std::uint32_t> buckets;
  for (const std::string& tok : tokenize(text)) {
    buckets.push_back(static_cast<std::uint32_t>(fnv1a64(tok) & mask));
  }
  std::sort(buckets.begin(), buckets.end());
  SparseFeatures x;
  for (std::uint32_t b : buckets) {
    if (!x.entries.empty() && x.entries.back().first == b) {
      x.entries.back().second += 1.0;
    } else {
      x.entries.emplace_back(b, 1.0);
    }
  }
  return x;
}

ClassifierModel::ClassifierModel(std::vector<std::string> label_set,
                                 std::size_t feature_dim, std::uint64_t seed)
    : label_set_(std::move(label_set)),
      feature_dim_(feature_dim),
      seed_(seed),
      weights_(label_set_.size() * feature_dim, 0.0),
      bias_(label_set_.size(), 0.0) {}

std::vector<double> ClassifierModel::logits(const SparseFeatures& x) const {
  std::vector<double> z(bias_.begin(), bias_.end());
  for (std::size_t c = 0; c < z.size(); ++c) {
    const double* row = weights_.data() + c * feature_dim_;
    for (const auto& [f, v] : x.entries) z[c] += row[f] * v;
  }
  return z;
}

DomainDistribution ClassifierModel::distribution(const SparseFeatures& x) const {
  const std::vector<double> z = logits(x);
  return softmax(z);
}

DomainDistribution predict_proba(const ClassifierModel& model, std::string_view text) {
  return model.distribution(featurize(text, model.feature_dim()));
}

double cross_entropy(const ClassifierModel& model, const SparseFeatures& x,
                     std::size_t label) {
  const std::vector<double> z = model.logits(x);
  const double top = *std::max_element(z.begin(), z.end());
  double total = 0.0;
  for (double v : z) total += std::exp(v - top);
  return -(z[label] - top - std::log(total));
}

double ExampleGradient::d_weight(std::size_t cls, std::uint32_t feature) const {
  for (const auto& [f, v] : features->entries) {
    if (f == feature) return residual[cls] * v;
  }
  return 0.0;
}

ExampleGradient cross_entropy_gradient(const ClassifierModel& model,
                                       const SparseFeatures& x, std::size_t label) {
  ExampleGradient g;
  g.residual = model.distribution(x).probs;
  g.residual[label] -= 1.0;
  g.features = &x;
  return g;
}

void apply_gradient(ClassifierModel& model, const ExampleGradient& grad,
                    double learning_rate) {
  auto w = model.weights();
  auto b = model.bias();
  const std::size_t dim = model.feature_dim();
  for (std::size_t c = 0; c < grad.residual.size(); ++c) {
    const double step = learning_rate * grad.residual[c];
    if (step == 0.0) continue;
    b[c] -= step;
    double* row = w.data() + c * dim;
    for (const auto& [f, v] : grad.features->entries) row[f] -= step * v;
  }
}

double dataset_loss(const ClassifierModel& model, const Dataset& data) {
  double total = 0.0;
  std::int64_t n = 0;
  for (const Example& ex : data) {
    const SparseFeatures x = featurize(ex.text, model.feature_dim());
    total += static_cast<double>(ex.count) * cross_entropy(model, x, label_of(data, ex));
    n += ex.count;
  }
  return n ? total / static_cast<double>(n) : 0.0;
}

TrainRun train_run(const Dataset& data, const TrainConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (data.empty()) throw InvalidArgument("train: dataset is empty");
  std::set<std::string_view> present;
  for (const Example& ex : data) present.insert(ex.domain);
  if (present.size() < 2) throw InvalidArgument("train: need at least 2 distinct domains");

  std::vector<SparseFeatures> features;
  std::vector<std::size_t> labels;
  std::vector<std::uint32_t> instances;
  features.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    features.push_back(featurize(data[i].text, cfg.feature_dim));
    labels.push_back(label_of(data, data[i]));
    for (std::int64_t k = 0; k < data[i].count; ++k) {
      instances.push_back(static_cast<std::uint32_t>(i));
    }
  }

  ClassifierModel model(data.label_set(), cfg.feature_dim, seed);
  {
    Rng init(mix_seed(seed, kInitStream));
    for (double& w : model.weights()) w = kInitStddev * init.normal();
  }
  Rng order(mix_seed(seed, kOrderStream));

  TrainRun run;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    order.shuffle(instances);
    for (std::uint32_t i : instances) {
      const ExampleGradient g = cross_entropy_gradient(model, features[i], labels[i]);
      apply_gradient(model, g, cfg.learning_rate);
    }
    double loss = 0.0;
    for (std::uint32_t i : instances) loss += cross_entropy(model, features[i], labels[i]);
    run.epoch_loss.push_back(loss / static_cast<double>(instances.size()));
    if (epoch == cfg.el2n_epoch) run.el2n_checkpoint = model;
  }
  run.final_model = std::move(model);
  return run;
}

ClassifierModel train(const Dataset& data, const TrainConfig& cfg, std::uint64_t seed) {
  return train_run(data, cfg, seed).final_model;
}

std::vector<TrainRun> train_replicate_runs(const Dataset& data, const TrainConfig& cfg,
                                           int num_replicates, std::uint64_t base_seed) {
  if (num_replicates < 1) throw InvalidArgument("train_replicates: need >= 1 replicate");
  std::vector<TrainRun> runs;
  runs.reserve(static_cast<std::size_t>(num_replicates));
  for (int r = 0; r < num_replicates; ++r) {
    runs.push_back(train_run(data, cfg, base_seed + static_cast<std::uint64_t>(r)));
  }
  return runs;
}

std::vector<ClassifierModel> train_replicates(const Dataset& data, const TrainConfig& cfg,
                                              int num_replicates, std::uint64_t base_seed) {
  // Stopping at the checkpoint epoch is equivalent to truncating a full run.
  TrainConfig truncated = cfg;
  truncated.validate();
  truncated.epochs = cfg.el2n_epoch;
  std::vector<ClassifierModel> models;
  for (TrainRun& run : train_replicate_runs(data, truncated, num_replicates, base_seed)) {
    models.push_back(std::move(run.el2n_checkpoint));
  }
  return models;
}

void write_model(const ClassifierModel& model, std::ostream& out) {
  char buf[64];
  out << kModelMagic << '\n';
  out << "labels " << model.num_classes() << '\n';
  for (const std::string& label : model.label_set()) out << label << '\n';
  out << "feature_dim " << model.feature_dim() << '\n';
  out << "seed " << model.seed() << '\n';
  out << "bias";
  for (double b : model.bias()) {
    std::snprintf(buf, sizeof(buf), " %a", b);
    out << buf;
  }
  out << "\nweights\n";
  const auto w = model.weights();
  for (std::size_t c = 0; c < model.num_classes(); ++c) {
    for (std::size_t f = 0; f < model.feature_dim(); ++f) {
      std::snprintf(buf, sizeof(buf), f ? " %a" : "%a", w[c * model.feature_dim() + f]);
      out << buf;
    }
    out << '\n';
  }
}

namespace {

double parse_hex_double(const std::string& token, std::size_t line) {
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (end == token.c_str() || *end != '\0') {
    throw ParseError(line, "bad number '" + token + "' in model file");
  }
  return v;
}

}  // namespace

ClassifierModel read_model(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  auto next = [&](const char* what) {
    if (!std::getline(in, line)) throw ParseError(line_no, std::string("model file truncated before ") + what);
    ++line_no;
    return line;
  };
  auto keyed = [&](const std::string& key) {
    next(key.c_str());
    if (line.rfind(key + " ", 0) != 0) throw ParseError(line_no, "expected '" + key + "'");
    return line.substr(key.size() + 1);
  };

  if (next("header") != kModelMagic) throw ParseError(line_no, "not a datasel model file");
  const std::size_t num_labels = std::stoull(keyed("labels"));
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < num_labels; ++i) labels.push_back(next("label"));
  const std::size_t dim = std::stoull(keyed("feature_dim"));
  const std::uint64_t seed = std::stoull(keyed("seed"));
  ClassifierModel model(std::move(labels), dim, seed);

  std::istringstream bias_in(keyed("bias"));
  std::string tok;
  for (std::size_t c = 0; c < num_labels; ++c) {
    if (!(bias_in >> tok)) throw ParseError(line_no, "short bias row");
    model.bias()[c] = parse_hex_double(tok, line_no);
  }
  if (next("weights") != "weights") throw ParseError(line_no, "expected 'weights'");
  for (std::size_t c = 0; c < num_labels; ++c) {
    std::istringstream row(next("weight row"));
    for (std::size_t f = 0; f < dim; ++f) {
      if (!(row >> tok)) throw ParseError(line_no, "short weight row");
      model.weight(c, f) = parse_hex_double(tok, line_no);
    }
  }
  return model;
}

void save_model(const ClassifierModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write model file " + path.string());
  write_model(model, out);
}

ClassifierModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open model file " + path.string());
  return read_model(in);
}

}  // namespace datasel
