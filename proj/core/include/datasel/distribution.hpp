#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace datasel {

// Softmax probability vector over a label set, in label_set order.
struct DomainDistribution {
  std::vector<double> probs;

  std::size_t size() const { return probs.size(); }
  std::size_t argmax() const;
};

// Sum tolerance used by validate().
inline constexpr double kDistributionTolerance = 1e-6;

// Throws InvalidArgument unless every entry is in [0,1] and the entries sum
// to 1 within kDistributionTolerance.
void validate(const DomainDistribution& dist);

// Numerically stable softmax.
DomainDistribution softmax(std::span<const double> logits);

}  // namespace datasel
