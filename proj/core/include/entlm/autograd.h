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

#ifndef ENTLM_AUTOGRAD_H_
#define ENTLM_AUTOGRAD_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "entlm/rng.h"
#include "entlm/tensor.h"

namespace entlm {

// A named trainable tensor with its accumulated gradient.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
};

// Owns model parameters keyed by stable names. Iteration is in name order,
// and element addresses stay valid while the store is alive.
class ParameterStore {
 public:
  using Map = std::map<std::string, Parameter, std::less<>>;

  Parameter& add(std::string name, Tensor value);
  // Replaces the value (and resets the gradient) of an existing parameter.
  Parameter& reset(std::string_view name, Tensor value);
  void remove(std::string_view name);

  Parameter& get(std::string_view name);
  const Parameter& get(std::string_view name) const;
  Parameter* find(std::string_view name);
  const Parameter* find(std::string_view name) const;
  bool contains(std::string_view name) const { return find(name) != nullptr; }

  void zero_grad();
  std::size_t size() const { return params_.size(); }
  std::size_t element_count() const;

  Map::iterator begin() { return params_.begin(); }
  Map::iterator end() { return params_.end(); }
  Map::const_iterator begin() const { return params_.begin(); }
  Map::const_iterator end() const { return params_.end(); }

 private:
  Map params_;
};

class Graph;

// Handle to a node in a Graph. Cheap to copy; only valid while its graph is.
class Var {
 public:
  Var() = default;
  Var(Graph* graph, std::size_t id) : graph_(graph), id_(id) {}

  const Tensor& value() const;
  Graph* graph() const { return graph_; }
  std::size_t id() const { return id_; }
  bool valid() const { return graph_ != nullptr; }

 private:
  Graph* graph_ = nullptr;
  std::size_t id_ = 0;
};

// Tape of operations for reverse-mode differentiation. Nodes are appended in
// creation order, which is a topological order of the computation.
class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, std::size_t self)>;

  // With track_gradients == false, parameters enter as constants and no
  // backward state is retained (inference mode).
  explicit Graph(bool track_gradients = true)
      : track_gradients_(track_gradients) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Tensor value);
  Var param(Parameter& p);

  // Accumulates d(loss)/d(param) into Parameter::grad for every parameter
  // reachable from loss. The loss must be a single value. `seed` scales the
  // output gradient.
  void backward(Var loss, double seed = 1.0);

  std::size_t size() const { return nodes_.size(); }
  const Tensor& value(std::size_t id) const {
    const Node& n = nodes_[id];
    return n.param != nullptr ? n.param->value : n.value;
  }
  std::string_view op_name(std::size_t id) const { return nodes_[id].op; }
  // Identity of the first node holding a non-finite value, if any.
  std::optional<std::string> first_non_finite() const;

  // Kernel-facing API.
  Var record(const char* op, Tensor value, std::vector<std::size_t> parents,
             BackwardFn backward);
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  // Gradient slot of a node, allocated as zeros on first use.
  Tensor& grad(std::size_t id);

 private:
  struct Node {
    const char* op = "";
    Tensor value;
    Tensor grad;
    std::vector<std::size_t> parents;
    BackwardFn backward;
    Parameter* param = nullptr;
    bool requires_grad = false;
  };
  std::vector<Node> nodes_;
  bool track_gradients_ = true;
};

enum class Reduction { kSum, kMean };

// Label value excluded from cross-entropy.
inline constexpr int kIgnoreLabel = -100;

// Kernels. Every kernel checks operand shapes and throws DimensionError
// naming itself and the offending axes.
Var matmul(Var a, Var b);
Var transpose(Var a);
// Elementwise add; `b` may also be a rank-1 row broadcast over rows of `a`.
Var add(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
Var gather_rows(Var table, std::span<const int> ids);
// Row i of the result is the sum (or mean) of table rows in index_sets[i].
Var bag_rows(Var table, const std::vector<std::vector<int>>& index_sets,
             bool mean);
Var layer_norm(Var x, Var gamma, Var beta, double eps = 1e-5);
Var gelu(Var x);
Var softmax_rows(Var x);
Var log_softmax_rows(Var x);
// Inverted dropout; identity when p == 0.
Var dropout(Var x, double p, Rng& rng);
Var concat_rows(std::span<const Var> parts);
Var concat_cols(std::span<const Var> parts);
Var slice_rows(Var x, std::size_t begin, std::size_t count);
Var slice_cols(Var x, std::size_t begin, std::size_t count);
Var sum(Var x);
// Reduces over `axis` of a matrix, yielding a rank-1 tensor.
Var sum_axis(Var x, std::size_t axis);
Var mean_axis(Var x, std::size_t axis);
// Cross-entropy of row-wise logits against integer labels. Rows labelled
// kIgnoreLabel are skipped; with no labelled rows the result is 0.
Var cross_entropy(Var logits, std::span<const int> labels,
                  Reduction reduction = Reduction::kMean);

// Plain-value helpers used outside graphs.
Tensor softmax_rows(const Tensor& x);
Tensor log_softmax_rows(const Tensor& x);

struct GradCheckOptions {
  double eps = 1e-5;
  // Coordinates sampled per parameter; 0 checks every coordinate.
  std::size_t coords_per_param = 0;
  std::uint64_t seed = 0;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t coords_checked = 0;
};

// Compares reverse-mode gradients of `build` (which must return a scalar)
// with central finite differences. Relative error per coordinate is
// |a - n| / max(|a|, |n|, 1e-12).
GradCheckResult grad_check(const std::function<Var(Graph&)>& build,
                           std::span<Parameter* const> params,
                           const GradCheckOptions& options = {});

}  // namespace entlm

#endif  // ENTLM_AUTOGRAD_H_
