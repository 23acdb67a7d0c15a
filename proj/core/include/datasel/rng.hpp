#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace datasel {

// Derives an independent stream seed from (seed, stream) with splitmix64.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

// Seeded random source with platform-independent draws.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the
// standard. The standard distributions are implementation-defined, so the
// conversions below are done by hand to keep outputs byte-identical across
// standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform();

  // Uniform integer in [0, n); n must be > 0.
  std::uint64_t below(std::uint64_t n);

  // Standard normal (Box-Muller).
  double normal();

  bool bernoulli(double p) { return uniform() < p; }

  // Fisher-Yates.
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  // Moves a uniform sample of size k (without replacement) into the first k
  // positions of `items` via a partial Fisher-Yates pass.
  template <typename T>
  void partial_shuffle(std::vector<T>& items, std::size_t k) {
    const std::size_t n = items.size();
    for (std::size_t i = 0; i < k && i < n; ++i) {
      std::size_t j = i + static_cast<std::size_t>(below(n - i));
      std::swap(items[i], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Samples an index from a fixed discrete distribution by inverse CDF.
class DiscreteSampler {
 public:
  explicit DiscreteSampler(const std::vector<double>& weights);

  std::size_t operator()(Rng& rng) const;
  std::size_t size() const { return cumulative_.size(); }

 private:
  std::vector<double> cumulative_;
};

// Zipf weights 1/(rank+1)^exponent for ranks 0..n-1.
std::vector<double> zipf_weights(std::size_t n, double exponent);

}  // namespace datasel
