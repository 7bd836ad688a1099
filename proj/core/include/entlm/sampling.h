// Copyright 2026 The entlm Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ENTLM_SAMPLING_H_
#define ENTLM_SAMPLING_H_

#include <vector>

#include "entlm/rng.h"

namespace entlm {

inline constexpr double kDefaultSamplingAlpha = 0.7;

struct LanguageSamplingSpec {
  std::vector<double> counts;  // n_i, one per language
  double alpha = kDefaultSamplingAlpha;

  // Throws ContractError unless every n_i > 0 and 0 < alpha <= 1.
  void validate() const;
};

// p_i = n_i^alpha / sum_k n_k^alpha.
std::vector<double> language_distribution(const LanguageSamplingSpec& spec);

// Draws indices from a fixed categorical distribution by inverse CDF.
class CategoricalSampler {
 public:
  explicit CategoricalSampler(std::vector<double> probabilities);

  int sample(Rng& rng) const;
  const std::vector<double>& probabilities() const { return probs_; }

 private:
  std::vector<double> probs_;
  std::vector<double> cdf_;
};

}  // namespace entlm

#endif  // ENTLM_SAMPLING_H_
