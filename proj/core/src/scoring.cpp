#include "datasel/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include "datasel/csv.hpp"
#include "datasel/error.hpp"
#include "datasel/text.hpp"

namespace datasel {

double entropy(const DomainDistribution& dist) {
  validate(dist);
  double h = 0.0;
  for (double p : dist.probs) {
    if (p > 0.0) h -= p * std::log2(p);
  }
  // Rounding can leave a tiny negative value for one-hot inputs.
  return std::max(h, 0.0);
}

double el2n(const DomainDistribution& dist, std::size_t label_index) {
  validate(dist);
  if (label_index >= dist.size()) {
    throw InvalidArgument("el2n: label index " + std::to_string(label_index) +
                          " out of range for " + std::to_string(dist.size()) + " classes");
  }
  double sq = 0.0;
  for (std::size_t j = 0; j < dist.size(); ++j) {
    const double d = dist.probs[j] - (j == label_index ? 1.0 : 0.0);
    sq += d * d;
  }
  return std::sqrt(sq);
}

double mean_el2n(std::span<const DomainDistribution> dists, std::size_t label_index) {
  if (dists.empty()) throw InvalidArgument("mean_el2n: no distributions");
  const std::size_t n = dists.front().size();
  double total = 0.0;
  for (const DomainDistribution& d : dists) {
    if (d.size() != n) throw InvalidArgument("mean_el2n: distributions differ in length");
    total += el2n(d, label_index);
  }
  return total / static_cast<double>(dists.size());
}

std::vector<ScoreRecord> score_pool(const ClassifierModel& entropy_model,
                                    std::span<const ClassifierModel> el2n_models,
                                    const Dataset& pool) {
  if (el2n_models.empty()) throw InvalidArgument("score_pool: need at least one model");
  const auto& labels = entropy_model.label_set();
  for (const ClassifierModel& m : el2n_models) {
    if (m.label_set() != labels) throw InvalidArgument("score_pool: models disagree on label set");
  }
  std::vector<ScoreRecord> out;
  out.reserve(pool.size());
  std::vector<DomainDistribution> dists(el2n_models.size());
  for (const Example& ex : pool) {
    auto it = std::find(labels.begin(), labels.end(), ex.domain);
    if (it == labels.end()) {
      throw InvalidArgument("score_pool: example '" + ex.id + "' has domain '" +
                            ex.domain + "' outside the model label set");
    }
    ScoreRecord rec;
    rec.example_id = ex.id;
    rec.label_index = static_cast<std::size_t>(it - labels.begin());
    const SparseFeatures x = featurize(ex.text, entropy_model.feature_dim());
    rec.entropy_bits = entropy(entropy_model.distribution(x));
    for (std::size_t r = 0; r < el2n_models.size(); ++r) {
      const ClassifierModel& m = el2n_models[r];
      dists[r] = m.feature_dim() == entropy_model.feature_dim()
                     ? m.distribution(x)
                     : predict_proba(m, ex.text);
    }
    rec.el2n = mean_el2n(dists, rec.label_index);
    rec.num_replicates = static_cast<int>(el2n_models.size());
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<ScoreRecord> score_pool(std::span<const ClassifierModel> models,
                                    const Dataset& pool) {
  if (models.empty()) throw InvalidArgument("score_pool: need at least one model");
  return score_pool(models.front(), models, pool);
}

ScoreStats score_stats(std::span<const double> values) {
  if (values.size() < 2) throw InvalidArgument("score_stats: need at least 2 values");
  auto moments = [](const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    // One correction pass removes the rounding left by the plain sum.
    double residual = 0.0;
    for (double x : v) residual += x - mean;
    mean += residual / static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    return std::pair{mean, std::sqrt(var / static_cast<double>(v.size()))};
  };
  const std::vector<double> all(values.begin(), values.end());
  const auto [mean, sd] = moments(all);
  std::vector<double> kept;
  kept.reserve(all.size());
  for (double x : all) {
    if (sd == 0.0 || std::abs((x - mean) / sd) <= 3.0) kept.push_back(x);
  }
  ScoreStats s;
  s.n_total = all.size();
  s.n_outliers_removed = all.size() - kept.size();
  const auto [kmean, ksd] = moments(kept);
  s.mean = kmean;
  s.std = ksd;
  const auto [lo, hi] = std::minmax_element(kept.begin(), kept.end());
  s.min = *lo;
  s.max = *hi;
  return s;
}

void write_scores_csv(std::span<const ScoreRecord> records, std::ostream& out) {
  out << "example_id,entropy_bits,el2n,num_replicates\n";
  for (const ScoreRecord& r : records) {
    out << csv::escape(r.example_id) << ',' << format_real(r.entropy_bits) << ','
        << format_real(r.el2n) << ',' << r.num_replicates << '\n';
  }
}

std::vector<ScoreRecord> read_scores_csv(std::istream& in, const Dataset& pool) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError(1, "score file is empty");
  ++line_no;
  if (csv::split(line) !=
      std::vector<std::string>{"example_id", "entropy_bits", "el2n", "num_replicates"}) {
    throw ParseError(1, "unexpected score file header");
  }
  std::vector<ScoreRecord> out;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = csv::split(line);
    if (fields.size() != 4) throw ParseError(line_no, "expected 4 fields");
    ScoreRecord r;
    r.example_id = fields[0];
    try {
      r.entropy_bits = std::stod(fields[1]);
      r.el2n = std::stod(fields[2]);
      r.num_replicates = std::stoi(fields[3]);
    } catch (const std::exception&) {
      throw ParseError(line_no, "malformed number");
    }
    const auto idx = pool.index_of(r.example_id);
    if (!idx) throw ParseError(line_no, "id '" + r.example_id + "' not in pool");
    r.label_index = *pool.label_index(pool[*idx].domain);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace datasel
