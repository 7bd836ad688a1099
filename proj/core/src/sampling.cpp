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

#include "entlm/sampling.h"

#include <algorithm>
#include <cmath>

#include "entlm/error.h"

namespace entlm {

void LanguageSamplingSpec::validate() const {
  if (counts.empty()) throw ContractError("language sampling: no languages");
  for (double n : counts) {
    if (!(n > 0.0) || !std::isfinite(n)) {
      throw ContractError("language sampling: counts must be positive");
    }
  }
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw ContractError("language sampling: alpha must be in (0, 1]");
  }
}

std::vector<double> language_distribution(const LanguageSamplingSpec& spec) {
  spec.validate();
  // Scale by the largest count first so huge n_i cannot overflow pow().
  const double top = *std::max_element(spec.counts.begin(), spec.counts.end());
  std::vector<double> p;
  p.reserve(spec.counts.size());
  double total = 0.0;
  for (double n : spec.counts) {
    p.push_back(std::pow(n / top, spec.alpha));
    total += p.back();
  }
  for (double& v : p) v /= total;
  return p;
}

CategoricalSampler::CategoricalSampler(std::vector<double> probabilities)
    : probs_(std::move(probabilities)) {
  if (probs_.empty()) throw ContractError("sampler: empty distribution");
  double acc = 0.0;
  for (double p : probs_) {
    if (!(p >= 0.0)) throw ContractError("sampler: negative probability");
    acc += p;
    cdf_.push_back(acc);
  }
  if (!(acc > 0.0)) throw ContractError("sampler: zero total probability");
  for (double& c : cdf_) c /= acc;
  cdf_.back() = 1.0;
}

int CategoricalSampler::sample(Rng& rng) const {
  const double u = rng.uniform();
  auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  return static_cast<int>(std::min<std::ptrdiff_t>(
      it - cdf_.begin(), static_cast<std::ptrdiff_t>(cdf_.size()) - 1));
}

}  // namespace entlm
