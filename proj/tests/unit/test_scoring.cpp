#include <doctest.h>

#include <cmath>
#include <sstream>

#include "datasel/error.hpp"
#include "datasel/rng.hpp"
#include "datasel/scoring.hpp"
#include "test_support.hpp"

using namespace datasel;
using test::example;

namespace {

DomainDistribution dist(std::vector<double> p) { return DomainDistribution{std::move(p)}; }

// Model whose output ignores the text: softmax(log p) = p.
ClassifierModel constant_model(const std::vector<std::string>& labels, const std::vector<double>& p,
                               std::uint64_t seed = 0) {
  ClassifierModel m(labels, 16, seed);
  for (std::size_t k = 0; k < p.size(); ++k) m.bias()[k] = std::log(p[k]);
  return m;
}

}  // namespace

TEST_CASE("entropy examples") {
  CHECK(entropy(dist({1, 0, 0, 0})) == 0.0);
  CHECK(entropy(dist({0.25, 0.25, 0.25, 0.25})) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(entropy(dist({0.5, 0.25, 0.25})) == doctest::Approx(1.5).epsilon(1e-12));
  CHECK_THROWS_AS(entropy(dist({0.5, 0.6})), InvalidArgument);
}

TEST_CASE("entropy is permutation invariant") {
  CHECK(entropy(dist({0.1, 0.2, 0.7})) == doctest::Approx(entropy(dist({0.7, 0.1, 0.2}))));
}

TEST_CASE("el2n examples") {
  CHECK(el2n(dist({0, 1, 0}), 1) == 0.0);
  CHECK(el2n(dist({0, 1}), 0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  CHECK(el2n(dist({0.5, 0.5}), 0) == doctest::Approx(0.70710678118654752).epsilon(1e-12));
  CHECK_THROWS_AS(el2n(dist({0.5, 0.5}), 2), InvalidArgument);
  CHECK_THROWS_AS(el2n(dist({0.9, 0.5}), 0), InvalidArgument);
}

TEST_CASE("el2n decreases as mass moves onto the label") {
  const std::vector<double> start = {0.1, 0.6, 0.3};
  double prev = el2n(dist(start), 0);
  for (int step = 1; step <= 10; ++step) {
    const double t = step / 10.0;
    std::vector<double> p = {start[0] + t * (1 - start[0]), (1 - t) * start[1], (1 - t) * start[2]};
    const double e = el2n(dist(p), 0);
    CHECK(e < prev);
    prev = e;
  }
  CHECK(prev == doctest::Approx(0.0));
  // Permutations that fix the true label leave el2n unchanged.
  CHECK(el2n(dist({0.1, 0.6, 0.3}), 0) == doctest::Approx(el2n(dist({0.1, 0.3, 0.6}), 0)));
}

TEST_CASE("mean_el2n") {
  const double s = std::sqrt(2.0);
  const std::vector<DomainDistribution> two = {dist({1 - 0.2 / s, 0.2 / s}), dist({1 - 0.4 / s, 0.4 / s})};
  CHECK(mean_el2n(two, 0) == doctest::Approx(0.3).epsilon(1e-12));
  const std::vector<DomainDistribution> same(4, dist({0.3, 0.7}));
  CHECK(mean_el2n(same, 1) == doctest::Approx(el2n(dist({0.3, 0.7}), 1)).epsilon(1e-15));
  CHECK_THROWS(mean_el2n(std::vector<DomainDistribution>{}, 0));
  const std::vector<DomainDistribution> mixed = {dist({0.5, 0.5}), dist({0.2, 0.3, 0.5})};
  CHECK_THROWS(mean_el2n(mixed, 0));
}

TEST_CASE("score_pool on hand-computed distributions") {
  const std::vector<std::string> labels = {"A", "B", "C"};
  const auto m1 = constant_model(labels, {0.5, 0.25, 0.25}, 1);
  const auto m2 = constant_model(labels, {1.0 / 3, 1.0 / 3, 1.0 / 3}, 2);
  const Dataset pool("p", {example("x", "hello", "A"), example("y", "world", "C")}, labels);
  const std::vector<ClassifierModel> models = {m1, m2};
  const auto recs = score_pool(models, pool);
  REQUIRE(recs.size() == 2);
  CHECK(recs[0].example_id == "x");
  CHECK(recs[1].example_id == "y");
  CHECK(recs[0].num_replicates == 2);
  CHECK(recs[1].label_index == 2);
  CHECK(recs[0].entropy_bits == doctest::Approx(1.5));
  // label A: (sqrt(0.25 + 0.0625 + 0.0625) + sqrt(4/9 + 1/9 + 1/9)) / 2
  CHECK(recs[0].el2n == doctest::Approx((std::sqrt(0.375) + std::sqrt(6.0 / 9)) / 2));
  // label C: (sqrt(0.25 + 0.0625 + 0.5625) + sqrt(1/9 + 1/9 + 4/9)) / 2
  CHECK(recs[1].el2n == doctest::Approx((std::sqrt(0.875) + std::sqrt(6.0 / 9)) / 2));

  // Entropy model is separate from the EL2N models.
  const std::vector<ClassifierModel> el2n_only = {m1};
  const auto split = score_pool(m2, el2n_only, pool);
  CHECK(split[0].entropy_bits == doctest::Approx(std::log2(3.0)));
  CHECK(split[0].el2n == doctest::Approx(std::sqrt(0.375)));
  CHECK(split[0].num_replicates == 1);
}

TEST_CASE("score_pool single model, single example") {
  const auto m = constant_model({"A", "B"}, {0.5, 0.5});
  const Dataset pool("p", {example("only", "t", "B")}, {"A", "B"});
  const std::vector<ClassifierModel> models = {m};
  const auto recs = score_pool(models, pool);
  REQUIRE(recs.size() == 1);
  CHECK(recs[0].num_replicates == 1);
}

TEST_CASE("score_pool errors") {
  const auto m = constant_model({"A", "B"}, {0.5, 0.5});
  const Dataset pool("p", {example("stray", "t", "Z")}, {"Z"});
  const std::vector<ClassifierModel> models = {m};
  try {
    score_pool(models, pool);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("stray") != std::string::npos);
  }
  CHECK_THROWS(score_pool(std::vector<ClassifierModel>{}, pool));
  const std::vector<ClassifierModel> mismatched = {m, constant_model({"B", "A"}, {0.5, 0.5})};
  const Dataset ok("p", {example("a", "t", "A")}, {"A", "B"});
  CHECK_THROWS(score_pool(mismatched, ok));
}

TEST_CASE("replicate EL2N equals a brute-force average") {
  Rng rng(8);
  std::vector<Example> rows;
  for (int i = 0; i < 30; ++i) {
    std::string text;
    for (int k = 0; k < 3; ++k) text += "t" + std::to_string(rng.below(9)) + " ";
    rows.push_back(example("e" + std::to_string(i), text, i % 3 == 0 ? "A" : (i % 3 == 1 ? "B" : "C")));
  }
  const Dataset d = Dataset::with_sorted_labels("d", rows);
  TrainConfig cfg;
  cfg.feature_dim = 256;
  cfg.epochs = 4;
  const auto reps = train_replicates(d, cfg, 5, 40);
  const auto recs = score_pool(reps, d);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const std::size_t label = *d.label_index(d[i].domain);
    double sum = 0;
    for (const auto& m : reps) {
      const auto p = predict_proba(m, d[i].text);
      double sq = 0;
      for (std::size_t k = 0; k < p.size(); ++k) {
        const double diff = p.probs[k] - (k == label ? 1.0 : 0.0);
        sq += diff * diff;
      }
      sum += std::sqrt(sq);
    }
    CHECK(recs[i].el2n == doctest::Approx(sum / 5).epsilon(1e-12));
    CHECK(recs[i].entropy_bits >= 0.0);
    CHECK(recs[i].entropy_bits <= std::log2(3.0) + 1e-9);
  }
}

TEST_CASE("score_stats") {
  const std::vector<double> constant(10, 0.4);
  const auto c = score_stats(constant);
  CHECK(c.std == 0.0);
  CHECK(c.n_outliers_removed == 0);
  CHECK(c.mean == doctest::Approx(0.4));

  std::vector<double> spiked(100, 0.0);
  spiked.push_back(1000.0);
  const auto s = score_stats(spiked);
  CHECK(s.n_total == 101);
  CHECK(s.n_outliers_removed == 1);
  CHECK(s.max == 0.0);
  CHECK(s.mean == 0.0);

  const std::vector<double> plain = {1, 2, 3, 4};
  const auto p = score_stats(plain);
  CHECK(p.mean == doctest::Approx(2.5));
  CHECK(p.std == doctest::Approx(std::sqrt(1.25)));
  CHECK(p.min <= p.mean);
  CHECK(p.mean <= p.max);

  CHECK_THROWS(score_stats(std::vector<double>{1.0}));
}

TEST_CASE("score CSV round-trip") {
  const std::vector<std::string> labels = {"A", "B"};
  const Dataset pool("p", {example("a,1", "t", "A"), example("b", "u", "B")}, labels);
  std::vector<ScoreRecord> recs = {{"a,1", 0.1 + 1e-17, 1.0 / 3.0, 5, 0}, {"b", 0.0, 1.4142135623730951, 5, 1}};
  std::stringstream ss;
  write_scores_csv(recs, ss);
  CHECK(ss.str().rfind("example_id,entropy_bits,el2n,num_replicates\n", 0) == 0);
  const auto back = read_scores_csv(ss, pool);
  REQUIRE(back.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(back[i].example_id == recs[i].example_id);
    CHECK(back[i].entropy_bits == recs[i].entropy_bits);
    CHECK(back[i].el2n == recs[i].el2n);
    CHECK(back[i].num_replicates == 5);
    CHECK(back[i].label_index == recs[i].label_index);
  }
  std::istringstream missing("example_id,entropy_bits,el2n,num_replicates\nzzz,0,0,1\n");
  CHECK_THROWS(read_scores_csv(missing, pool));
}
