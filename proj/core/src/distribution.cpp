#include "datasel/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "datasel/error.hpp"

namespace datasel {

std::size_t DomainDistribution::argmax() const {
  return static_cast<std::size_t>(
      std::max_element(probs.begin(), probs.end()) - probs.begin());
}

void validate(const DomainDistribution& dist) {
  if (dist.probs.empty()) throw InvalidArgument("distribution is empty");
  double sum = 0.0;
  for (double p : dist.probs) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw InvalidArgument("distribution entry outside [0,1]: " +
                            std::to_string(p));
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > kDistributionTolerance) {
    throw InvalidArgument("distribution does not sum to 1: " +
                          std::to_string(sum));
  }
}

DomainDistribution softmax(std::span<const double> logits) {
  DomainDistribution out;
  out.probs.resize(logits.size());
  if (logits.empty()) return out;
  const double top = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out.probs[i] = std::exp(logits[i] - top);
    total += out.probs[i];
  }
  for (double& p : out.probs) p /= total;
  return out;
}

}  // namespace datasel
