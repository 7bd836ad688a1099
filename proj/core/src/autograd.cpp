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

#include "entlm/autograd.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "entlm/error.h"

namespace entlm {
namespace {

std::string dims(const Tensor& t) { return shape_string(t.shape()); }

void require_rank2(const char* op, const Tensor& t, const char* operand) {
  if (t.rank() != 2) {
    throw DimensionError(std::string(op) + ": " + operand +
                         " must be rank 2, got " + dims(t));
  }
}

Graph& same_graph(const char* op, Var a, Var b) {
  if (!a.valid() || !b.valid()) {
    throw ContractError(std::string(op) + ": invalid variable");
  }
  if (a.graph() != b.graph()) {
    throw ContractError(std::string(op) + ": operands from different graphs");
  }
  return *a.graph();
}

Graph& graph_of(const char* op, Var a) {
  if (!a.valid()) throw ContractError(std::string(op) + ": invalid variable");
  return *a.graph();
}

void accumulate(Tensor& into, const Tensor& from) {
  auto dst = into.data();
  auto src = from.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

}  // namespace

// ---------------------------------------------------------------------------
// ParameterStore

Parameter& ParameterStore::add(std::string name, Tensor value) {
  if (params_.count(name) != 0) {
    throw ContractError("ParameterStore: duplicate parameter '" + name + "'");
  }
  Tensor grad(value.shape(), 0.0);
  auto [it, _] = params_.emplace(
      name, Parameter{name, std::move(value), std::move(grad)});
  return it->second;
}

Parameter& ParameterStore::reset(std::string_view name, Tensor value) {
  Parameter& p = get(name);
  p.grad = Tensor(value.shape(), 0.0);
  p.value = std::move(value);
  return p;
}

void ParameterStore::remove(std::string_view name) {
  auto it = params_.find(name);
  if (it != params_.end()) params_.erase(it);
}

Parameter& ParameterStore::get(std::string_view name) {
  Parameter* p = find(name);
  if (p == nullptr) {
    throw ContractError("ParameterStore: no parameter '" + std::string(name) +
                        "'");
  }
  return *p;
}

const Parameter& ParameterStore::get(std::string_view name) const {
  const Parameter* p = find(name);
  if (p == nullptr) {
    throw ContractError("ParameterStore: no parameter '" + std::string(name) +
                        "'");
  }
  return *p;
}

Parameter* ParameterStore::find(std::string_view name) {
  auto it = params_.find(name);
  return it == params_.end() ? nullptr : &it->second;
}

const Parameter* ParameterStore::find(std::string_view name) const {
  auto it = params_.find(name);
  return it == params_.end() ? nullptr : &it->second;
}

void ParameterStore::zero_grad() {
  for (auto& [_, p] : params_) {
    if (p.grad.shape() != p.value.shape()) {
      p.grad = Tensor(p.value.shape(), 0.0);
    } else {
      p.grad.fill(0.0);
    }
  }
}

std::size_t ParameterStore::element_count() const {
  std::size_t n = 0;
  for (const auto& [_, p] : params_) n += p.value.size();
  return n;
}

// ---------------------------------------------------------------------------
// Graph

const Tensor& Var::value() const {
  if (graph_ == nullptr) throw ContractError("Var: invalid variable");
  return graph_->value(id_);
}

Var Graph::constant(Tensor value) {
  Node node;
  node.op = "constant";
  node.value = std::move(value);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Graph::param(Parameter& p) {
  Node node;
  node.op = "param";
  node.param = &p;
  node.requires_grad = track_gradients_;
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Graph::record(const char* op, Tensor value,
                  std::vector<std::size_t> parents, BackwardFn backward) {
  Node node;
  node.op = op;
  node.value = std::move(value);
  for (std::size_t p : parents) {
    if (nodes_[p].requires_grad) node.requires_grad = true;
  }
  node.parents = std::move(parents);
  if (node.requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Tensor& Graph::grad(std::size_t id) {
  Node& node = nodes_[id];
  if (node.param != nullptr) {
    Parameter& p = *node.param;
    if (p.grad.shape() != p.value.shape()) p.grad = Tensor(p.value.shape());
    return p.grad;
  }
  if (node.grad.shape() != node.value.shape() || node.grad.size() == 0) {
    node.grad = Tensor(node.value.shape(), 0.0);
  }
  return node.grad;
}

void Graph::backward(Var loss, double seed) {
  if (loss.graph() != this) {
    throw ContractError("backward: loss does not belong to this graph");
  }
  const std::size_t root = loss.id();
  if (value(root).size() != 1) {
    throw ContractError("backward: loss must be scalar, got shape " +
                        shape_string(value(root).shape()));
  }
  std::vector<char> reachable(root + 1, 0);
  reachable[root] = 1;
  for (std::size_t i = root + 1; i-- > 0;) {
    if (!reachable[i]) continue;
    for (std::size_t p : nodes_[i].parents) reachable[p] = 1;
  }
  for (std::size_t i = 0; i <= root; ++i) {
    if (nodes_[i].param == nullptr) nodes_[i].grad = Tensor();
  }
  if (!nodes_[root].requires_grad) return;
  grad(root).data()[0] += seed;
  for (std::size_t i = root + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!reachable[i] || !node.requires_grad || !node.backward) continue;
    if (node.grad.size() == 0 && value(i).size() != 0) continue;
    node.backward(*this, i);
  }
}

std::optional<std::string> Graph::first_non_finite() const {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!value(i).all_finite()) {
      std::ostringstream out;
      out << "node #" << i << " (" << nodes_[i].op;
      if (nodes_[i].param != nullptr) out << " " << nodes_[i].param->name;
      out << ")";
      return out.str();
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Kernels

Var matmul(Var a, Var b) {
  Graph& g = same_graph("matmul", a, b);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  require_rank2("matmul", A, "lhs");
  require_rank2("matmul", B, "rhs");
  const std::size_t n = A.rows(), k = A.cols(), m = B.cols();
  if (B.rows() != k) {
    throw DimensionError("matmul: lhs axis 1 (" + std::to_string(k) +
                         ") != rhs axis 0 (" + std::to_string(B.rows()) + ")");
  }
  Tensor C({n, m}, 0.0);
  const double* adata = A.data().data();
  for (std::size_t i = 0; i < n; ++i) {
    double* crow = C.data().data() + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = adata[i * k + p];
      if (av == 0.0) continue;
      const double* brow = B.data().data() + p * m;
      for (std::size_t j = 0; j < m; ++j) crow[j] += av * brow[j];
    }
  }
  const std::size_t ia = a.id(), ib = b.id();
  return g.record("matmul", std::move(C), {ia, ib},
                  [ia, ib, n, k, m](Graph& g, std::size_t self) {
                    const Tensor& dC = g.grad(self);
                    const double* dc = dC.data().data();
                    if (g.requires_grad(ia)) {
                      const double* bv = g.value(ib).data().data();
                      double* da = g.grad(ia).data().data();
                      for (std::size_t i = 0; i < n; ++i) {
                        for (std::size_t p = 0; p < k; ++p) {
                          const double* crow = dc + i * m;
                          const double* brow = bv + p * m;
                          double s = 0.0;
                          for (std::size_t j = 0; j < m; ++j) s += crow[j] * brow[j];
                          da[i * k + p] += s;
                        }
                      }
                    }
                    if (g.requires_grad(ib)) {
                      const double* av = g.value(ia).data().data();
                      double* db = g.grad(ib).data().data();
                      for (std::size_t i = 0; i < n; ++i) {
                        for (std::size_t p = 0; p < k; ++p) {
                          const double x = av[i * k + p];
                          if (x == 0.0) continue;
                          const double* crow = dc + i * m;
                          double* brow = db + p * m;
                          for (std::size_t j = 0; j < m; ++j) brow[j] += x * crow[j];
                        }
                      }
                    }
                  });
}

Var transpose(Var a) {
  Graph& g = graph_of("transpose", a);
  const Tensor& A = a.value();
  require_rank2("transpose", A, "input");
  const std::size_t r = A.rows(), c = A.cols();
  Tensor T({c, r});
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) T.at(j, i) = A.at(i, j);
  }
  const std::size_t ia = a.id();
  return g.record("transpose", std::move(T), {ia},
                  [ia, r, c](Graph& g, std::size_t self) {
                    const Tensor& dT = g.grad(self);
                    Tensor& dA = g.grad(ia);
                    for (std::size_t i = 0; i < r; ++i) {
                      for (std::size_t j = 0; j < c; ++j) {
                        dA.at(i, j) += dT.at(j, i);
                      }
                    }
                  });
}

Var add(Var a, Var b) {
  Graph& g = same_graph("add", a, b);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  const std::size_t ia = a.id(), ib = b.id();
  if (A.shape() == B.shape()) {
    Tensor C = A;
    auto c = C.data();
    auto bv = B.data();
    for (std::size_t i = 0; i < c.size(); ++i) c[i] += bv[i];
    return g.record("add", std::move(C), {ia, ib},
                    [ia, ib](Graph& g, std::size_t self) {
                      const Tensor& dC = g.grad(self);
                      if (g.requires_grad(ia)) accumulate(g.grad(ia), dC);
                      if (g.requires_grad(ib)) accumulate(g.grad(ib), dC);
                    });
  }
  if (A.rank() == 2 && B.rank() == 1 && B.size() == A.cols()) {
    const std::size_t rows = A.rows(), cols = A.cols();
    Tensor C = A;
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < cols; ++j) C.at(i, j) += B[j];
    }
    return g.record("add", std::move(C), {ia, ib},
                    [ia, ib, rows, cols](Graph& g, std::size_t self) {
                      const Tensor& dC = g.grad(self);
                      if (g.requires_grad(ia)) accumulate(g.grad(ia), dC);
                      if (g.requires_grad(ib)) {
                        Tensor& dB = g.grad(ib);
                        for (std::size_t i = 0; i < rows; ++i) {
                          for (std::size_t j = 0; j < cols; ++j) {
                            dB[j] += dC.at(i, j);
                          }
                        }
                      }
                    });
  }
  throw DimensionError("add: shapes " + dims(A) + " and " + dims(B) +
                       " do not conform (need equal shapes or a row vector "
                       "matching axis 1)");
}

Var mul(Var a, Var b) {
  Graph& g = same_graph("mul", a, b);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (A.shape() != B.shape()) {
    throw DimensionError("mul: shapes " + dims(A) + " and " + dims(B) +
                         " differ");
  }
  Tensor C = A;
  for (std::size_t i = 0; i < C.size(); ++i) C[i] *= B[i];
  const std::size_t ia = a.id(), ib = b.id();
  return g.record("mul", std::move(C), {ia, ib},
                  [ia, ib](Graph& g, std::size_t self) {
                    const Tensor& dC = g.grad(self);
                    if (g.requires_grad(ia)) {
                      const Tensor& B = g.value(ib);
                      Tensor& dA = g.grad(ia);
                      for (std::size_t i = 0; i < dA.size(); ++i) {
                        dA[i] += dC[i] * B[i];
                      }
                    }
                    if (g.requires_grad(ib)) {
                      const Tensor& A = g.value(ia);
                      Tensor& dB = g.grad(ib);
                      for (std::size_t i = 0; i < dB.size(); ++i) {
                        dB[i] += dC[i] * A[i];
                      }
                    }
                  });
}

Var scale(Var a, double factor) {
  Graph& g = graph_of("scale", a);
  Tensor C = a.value();
  for (double& v : C.data()) v *= factor;
  const std::size_t ia = a.id();
  return g.record("scale", std::move(C), {ia},
                  [ia, factor](Graph& g, std::size_t self) {
                    const Tensor& dC = g.grad(self);
                    Tensor& dA = g.grad(ia);
                    for (std::size_t i = 0; i < dA.size(); ++i) {
                      dA[i] += factor * dC[i];
                    }
                  });
}

Var gather_rows(Var table, std::span<const int> ids) {
  Graph& g = graph_of("gather_rows", table);
  const Tensor& T = table.value();
  require_rank2("gather_rows", T, "table");
  const std::size_t vocab = T.rows(), cols = T.cols();
  Tensor out({ids.size(), cols});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= vocab) {
      throw DimensionError("gather_rows: index " + std::to_string(ids[i]) +
                           " outside table axis 0 (" + std::to_string(vocab) +
                           ")");
    }
    auto src = T.row(ids[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  const std::size_t it = table.id();
  std::vector<int> idx(ids.begin(), ids.end());
  return g.record("gather_rows", std::move(out), {it},
                  [it, idx = std::move(idx), cols](Graph& g, std::size_t self) {
                    const Tensor& dOut = g.grad(self);
                    Tensor& dT = g.grad(it);
                    for (std::size_t i = 0; i < idx.size(); ++i) {
                      auto src = dOut.row(i);
                      auto dst = dT.row(idx[i]);
                      for (std::size_t j = 0; j < cols; ++j) dst[j] += src[j];
                    }
                  });
}

Var bag_rows(Var table, const std::vector<std::vector<int>>& index_sets,
             bool mean) {
  Graph& g = graph_of("bag_rows", table);
  const Tensor& T = table.value();
  require_rank2("bag_rows", T, "table");
  const std::size_t vocab = T.rows(), cols = T.cols();
  Tensor out({index_sets.size(), cols});
  for (std::size_t i = 0; i < index_sets.size(); ++i) {
    const auto& set = index_sets[i];
    if (set.empty()) {
      throw ContractError("bag_rows: index set " + std::to_string(i) +
                          " is empty");
    }
    const double w = mean ? 1.0 / static_cast<double>(set.size()) : 1.0;
    auto dst = out.row(i);
    for (int id : set) {
      if (id < 0 || static_cast<std::size_t>(id) >= vocab) {
        throw DimensionError("bag_rows: index " + std::to_string(id) +
                             " outside table axis 0 (" +
                             std::to_string(vocab) + ")");
      }
      auto src = T.row(id);
      for (std::size_t j = 0; j < cols; ++j) dst[j] += w * src[j];
    }
  }
  const std::size_t it = table.id();
  return g.record(
      "bag_rows", std::move(out), {it},
      [it, sets = index_sets, mean, cols](Graph& g, std::size_t self) {
        const Tensor& dOut = g.grad(self);
        Tensor& dT = g.grad(it);
        for (std::size_t i = 0; i < sets.size(); ++i) {
          const double w =
              mean ? 1.0 / static_cast<double>(sets[i].size()) : 1.0;
          auto src = dOut.row(i);
          for (int id : sets[i]) {
            auto dst = dT.row(id);
            for (std::size_t j = 0; j < cols; ++j) dst[j] += w * src[j];
          }
        }
      });
}

Var layer_norm(Var x, Var gamma, Var beta, double eps) {
  Graph& g = same_graph("layer_norm", x, gamma);
  same_graph("layer_norm", x, beta);
  const Tensor& X = x.value();
  require_rank2("layer_norm", X, "input");
  const std::size_t rows = X.rows(), cols = X.cols();
  if (gamma.value().shape() != Shape{cols} ||
      beta.value().shape() != Shape{cols}) {
    throw DimensionError("layer_norm: gamma " + dims(gamma.value()) +
                         " / beta " + dims(beta.value()) +
                         " must match input axis 1 (" + std::to_string(cols) +
                         ")");
  }
  const Tensor& G = gamma.value();
  const Tensor& B = beta.value();
  Tensor Y({rows, cols});
  Tensor xhat({rows, cols});
  std::vector<double> rstd(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    auto xr = X.row(i);
    double mu = 0.0;
    for (double v : xr) mu += v;
    mu /= static_cast<double>(cols);
    double var = 0.0;
    for (double v : xr) var += (v - mu) * (v - mu);
    var /= static_cast<double>(cols);
    rstd[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < cols; ++j) {
      const double h = (xr[j] - mu) * rstd[i];
      xhat.at(i, j) = h;
      Y.at(i, j) = h * G[j] + B[j];
    }
  }
  const std::size_t ix = x.id(), ig = gamma.id(), ib = beta.id();
  return g.record(
      "layer_norm", std::move(Y), {ix, ig, ib},
      [ix, ig, ib, rows, cols, xhat = std::move(xhat),
       rstd = std::move(rstd)](Graph& g, std::size_t self) {
        const Tensor& dY = g.grad(self);
        if (g.requires_grad(ig)) {
          Tensor& dG = g.grad(ig);
          for (std::size_t i = 0; i < rows; ++i) {
            for (std::size_t j = 0; j < cols; ++j) {
              dG[j] += dY.at(i, j) * xhat.at(i, j);
            }
          }
        }
        if (g.requires_grad(ib)) {
          Tensor& dB = g.grad(ib);
          for (std::size_t i = 0; i < rows; ++i) {
            for (std::size_t j = 0; j < cols; ++j) dB[j] += dY.at(i, j);
          }
        }
        if (g.requires_grad(ix)) {
          const Tensor& G = g.value(ig);
          Tensor& dX = g.grad(ix);
          const double inv_n = 1.0 / static_cast<double>(cols);
          for (std::size_t i = 0; i < rows; ++i) {
            double mean_d = 0.0, mean_dx = 0.0;
            for (std::size_t j = 0; j < cols; ++j) {
              const double d = dY.at(i, j) * G[j];
              mean_d += d;
              mean_dx += d * xhat.at(i, j);
            }
            mean_d *= inv_n;
            mean_dx *= inv_n;
            for (std::size_t j = 0; j < cols; ++j) {
              const double d = dY.at(i, j) * G[j];
              dX.at(i, j) += rstd[i] * (d - mean_d - xhat.at(i, j) * mean_dx);
            }
          }
        }
      });
}

Var gelu(Var x) {
  Graph& g = graph_of("gelu", x);
  Tensor Y = x.value();
  for (double& v : Y.data()) {
    v = 0.5 * v * (1.0 + std::erf(v * std::numbers::sqrt2 / 2.0));
  }
  const std::size_t ix = x.id();
  return g.record("gelu", std::move(Y), {ix}, [ix](Graph& g, std::size_t self) {
    const Tensor& dY = g.grad(self);
    const Tensor& X = g.value(ix);
    Tensor& dX = g.grad(ix);
    const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
    for (std::size_t i = 0; i < X.size(); ++i) {
      const double v = X[i];
      const double cdf = 0.5 * (1.0 + std::erf(v * std::numbers::sqrt2 / 2.0));
      const double pdf = inv_sqrt_2pi * std::exp(-0.5 * v * v);
      dX[i] += dY[i] * (cdf + v * pdf);
    }
  });
}

Tensor softmax_rows(const Tensor& x) {
  if (x.rank() != 2 && x.rank() != 1) {
    throw DimensionError("softmax_rows: input must be rank 1 or 2, got " +
                         dims(x));
  }
  Tensor y = x;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto r = y.row(i);
    if (r.empty()) continue;
    const double mx = *std::max_element(r.begin(), r.end());
    double s = 0.0;
    for (double& v : r) {
      v = std::exp(v - mx);
      s += v;
    }
    for (double& v : r) v /= s;
  }
  return y;
}

Tensor log_softmax_rows(const Tensor& x) {
  if (x.rank() != 2 && x.rank() != 1) {
    throw DimensionError("log_softmax_rows: input must be rank 1 or 2, got " +
                         dims(x));
  }
  Tensor y = x;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto r = y.row(i);
    if (r.empty()) continue;
    const double mx = *std::max_element(r.begin(), r.end());
    double s = 0.0;
    for (double v : r) s += std::exp(v - mx);
    const double lse = mx + std::log(s);
    for (double& v : r) v -= lse;
  }
  return y;
}

Var softmax_rows(Var x) {
  Graph& g = graph_of("softmax_rows", x);
  Tensor Y = softmax_rows(x.value());
  const std::size_t ix = x.id();
  return g.record("softmax_rows", std::move(Y), {ix},
                  [ix](Graph& g, std::size_t self) {
                    const Tensor& dY = g.grad(self);
                    const Tensor& Y = g.value(self);
                    Tensor& dX = g.grad(ix);
                    for (std::size_t i = 0; i < Y.rows(); ++i) {
                      auto y = Y.row(i);
                      auto dy = dY.row(i);
                      auto dx = dX.row(i);
                      double dot = 0.0;
                      for (std::size_t j = 0; j < y.size(); ++j) {
                        dot += dy[j] * y[j];
                      }
                      for (std::size_t j = 0; j < y.size(); ++j) {
                        dx[j] += y[j] * (dy[j] - dot);
                      }
                    }
                  });
}

Var log_softmax_rows(Var x) {
  Graph& g = graph_of("log_softmax_rows", x);
  Tensor Y = log_softmax_rows(x.value());
  const std::size_t ix = x.id();
  return g.record("log_softmax_rows", std::move(Y), {ix},
                  [ix](Graph& g, std::size_t self) {
                    const Tensor& dY = g.grad(self);
                    const Tensor& Y = g.value(self);
                    Tensor& dX = g.grad(ix);
                    for (std::size_t i = 0; i < Y.rows(); ++i) {
                      auto y = Y.row(i);
                      auto dy = dY.row(i);
                      auto dx = dX.row(i);
                      double s = 0.0;
                      for (double v : dy) s += v;
                      for (std::size_t j = 0; j < y.size(); ++j) {
                        dx[j] += dy[j] - std::exp(y[j]) * s;
                      }
                    }
                  });
}

Var dropout(Var x, double p, Rng& rng) {
  Graph& g = graph_of("dropout", x);
  if (!(p >= 0.0 && p <= 1.0)) {
    throw ContractError("dropout: probability must lie in [0, 1]");
  }
  if (p == 0.0) return x;
  const Tensor& X = x.value();
  std::vector<double> mask(X.size());
  const double keep_scale = p < 1.0 ? 1.0 / (1.0 - p) : 0.0;
  for (double& m : mask) m = rng.uniform() >= p ? keep_scale : 0.0;
  Tensor Y = X;
  for (std::size_t i = 0; i < Y.size(); ++i) Y[i] *= mask[i];
  const std::size_t ix = x.id();
  return g.record("dropout", std::move(Y), {ix},
                  [ix, mask = std::move(mask)](Graph& g, std::size_t self) {
                    const Tensor& dY = g.grad(self);
                    Tensor& dX = g.grad(ix);
                    for (std::size_t i = 0; i < dX.size(); ++i) {
                      dX[i] += dY[i] * mask[i];
                    }
                  });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw ContractError("concat_rows: no operands");
  Graph& g = graph_of("concat_rows", parts[0]);
  const std::size_t cols = parts[0].value().cols();
  std::size_t rows = 0;
  std::vector<std::size_t> ids, offsets;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    same_graph("concat_rows", parts[0], parts[k]);
    const Tensor& t = parts[k].value();
    require_rank2("concat_rows", t, "operand");
    if (t.cols() != cols) {
      throw DimensionError("concat_rows: operand " + std::to_string(k) +
                           " axis 1 (" + std::to_string(t.cols()) +
                           ") != " + std::to_string(cols));
    }
    ids.push_back(parts[k].id());
    offsets.push_back(rows);
    rows += t.rows();
  }
  Tensor out({rows, cols});
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& t = parts[k].value();
    std::copy(t.data().begin(), t.data().end(),
              out.data().begin() + offsets[k] * cols);
  }
  std::vector<std::size_t> parents = ids;
  return g.record("concat_rows", std::move(out), std::move(parents),
                  [ids, offsets, cols](Graph& g, std::size_t self) {
                    const Tensor& dOut = g.grad(self);
                    for (std::size_t k = 0; k < ids.size(); ++k) {
                      if (!g.requires_grad(ids[k])) continue;
                      Tensor& dP = g.grad(ids[k]);
                      const double* src = dOut.data().data() + offsets[k] * cols;
                      for (std::size_t i = 0; i < dP.size(); ++i) {
                        dP[i] += src[i];
                      }
                    }
                  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ContractError("concat_cols: no operands");
  Graph& g = graph_of("concat_cols", parts[0]);
  const std::size_t rows = parts[0].value().rows();
  std::size_t cols = 0;
  std::vector<std::size_t> ids, offsets, widths;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    same_graph("concat_cols", parts[0], parts[k]);
    const Tensor& t = parts[k].value();
    require_rank2("concat_cols", t, "operand");
    if (t.rows() != rows) {
      throw DimensionError("concat_cols: operand " + std::to_string(k) +
                           " axis 0 (" + std::to_string(t.rows()) +
                           ") != " + std::to_string(rows));
    }
    ids.push_back(parts[k].id());
    offsets.push_back(cols);
    widths.push_back(t.cols());
    cols += t.cols();
  }
  Tensor out({rows, cols});
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& t = parts[k].value();
    for (std::size_t i = 0; i < rows; ++i) {
      auto src = t.row(i);
      std::copy(src.begin(), src.end(), out.row(i).begin() + offsets[k]);
    }
  }
  std::vector<std::size_t> parents = ids;
  return g.record(
      "concat_cols", std::move(out), std::move(parents),
      [ids, offsets, widths, rows](Graph& g, std::size_t self) {
        const Tensor& dOut = g.grad(self);
        for (std::size_t k = 0; k < ids.size(); ++k) {
          if (!g.requires_grad(ids[k])) continue;
          Tensor& dP = g.grad(ids[k]);
          for (std::size_t i = 0; i < rows; ++i) {
            auto src = dOut.row(i).subspan(offsets[k], widths[k]);
            auto dst = dP.row(i);
            for (std::size_t j = 0; j < widths[k]; ++j) dst[j] += src[j];
          }
        }
      });
}

Var slice_rows(Var x, std::size_t begin, std::size_t count) {
  Graph& g = graph_of("slice_rows", x);
  const Tensor& X = x.value();
  require_rank2("slice_rows", X, "input");
  if (begin + count > X.rows()) {
    throw DimensionError("slice_rows: rows [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) +
                         ") exceed axis 0 (" + std::to_string(X.rows()) + ")");
  }
  const std::size_t cols = X.cols();
  Tensor out({count, cols});
  std::copy(X.data().begin() + begin * cols,
            X.data().begin() + (begin + count) * cols, out.data().begin());
  const std::size_t ix = x.id();
  return g.record("slice_rows", std::move(out), {ix},
                  [ix, begin, cols](Graph& g, std::size_t self) {
                    const Tensor& dOut = g.grad(self);
                    Tensor& dX = g.grad(ix);
                    double* dst = dX.data().data() + begin * cols;
                    for (std::size_t i = 0; i < dOut.size(); ++i) {
                      dst[i] += dOut[i];
                    }
                  });
}

Var slice_cols(Var x, std::size_t begin, std::size_t count) {
  Graph& g = graph_of("slice_cols", x);
  const Tensor& X = x.value();
  require_rank2("slice_cols", X, "input");
  if (begin + count > X.cols()) {
    throw DimensionError("slice_cols: cols [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) +
                         ") exceed axis 1 (" + std::to_string(X.cols()) + ")");
  }
  const std::size_t rows = X.rows();
  Tensor out({rows, count});
  for (std::size_t i = 0; i < rows; ++i) {
    auto src = X.row(i).subspan(begin, count);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  const std::size_t ix = x.id();
  return g.record("slice_cols", std::move(out), {ix},
                  [ix, begin, count, rows](Graph& g, std::size_t self) {
                    const Tensor& dOut = g.grad(self);
                    Tensor& dX = g.grad(ix);
                    for (std::size_t i = 0; i < rows; ++i) {
                      auto dst = dX.row(i).subspan(begin, count);
                      auto src = dOut.row(i);
                      for (std::size_t j = 0; j < count; ++j) dst[j] += src[j];
                    }
                  });
}

Var sum(Var x) {
  Graph& g = graph_of("sum", x);
  double s = 0.0;
  for (double v : x.value().data()) s += v;
  const std::size_t ix = x.id();
  return g.record("sum", Tensor::scalar(s), {ix},
                  [ix](Graph& g, std::size_t self) {
                    const double d = g.grad(self)[0];
                    for (double& v : g.grad(ix).data()) v += d;
                  });
}

namespace {

Var reduce_axis(const char* op, Var x, std::size_t axis, bool mean) {
  Graph& g = graph_of(op, x);
  const Tensor& X = x.value();
  require_rank2(op, X, "input");
  if (axis > 1) {
    throw DimensionError(std::string(op) + ": axis " + std::to_string(axis) +
                         " out of range for rank 2");
  }
  const std::size_t rows = X.rows(), cols = X.cols();
  const std::size_t n = axis == 0 ? rows : cols;
  if (mean && n == 0) {
    throw DimensionError(std::string(op) + ": mean over empty axis " +
                         std::to_string(axis));
  }
  const double w = mean ? 1.0 / static_cast<double>(n) : 1.0;
  Tensor out(Shape{axis == 0 ? cols : rows}, 0.0);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      out[axis == 0 ? j : i] += X.at(i, j);
    }
  }
  if (mean) {
    for (double& v : out.data()) v *= w;
  }
  const std::size_t ix = x.id();
  return g.record(op, std::move(out), {ix},
                  [ix, axis, rows, cols, w](Graph& g, std::size_t self) {
                    const Tensor& dOut = g.grad(self);
                    Tensor& dX = g.grad(ix);
                    for (std::size_t i = 0; i < rows; ++i) {
                      for (std::size_t j = 0; j < cols; ++j) {
                        dX.at(i, j) += w * dOut[axis == 0 ? j : i];
                      }
                    }
                  });
}

}  // namespace

Var sum_axis(Var x, std::size_t axis) {
  return reduce_axis("sum_axis", x, axis, false);
}

Var mean_axis(Var x, std::size_t axis) {
  return reduce_axis("mean_axis", x, axis, true);
}

Var cross_entropy(Var logits, std::span<const int> labels,
                  Reduction reduction) {
  Graph& g = graph_of("cross_entropy", logits);
  const Tensor& X = logits.value();
  require_rank2("cross_entropy", X, "logits");
  const std::size_t rows = X.rows(), classes = X.cols();
  if (labels.size() != rows) {
    throw DimensionError("cross_entropy: " + std::to_string(labels.size()) +
                         " labels for logits axis 0 (" + std::to_string(rows) +
                         ")");
  }
  Tensor logp = log_softmax_rows(X);
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < rows; ++i) {
    const int y = labels[i];
    if (y == kIgnoreLabel) continue;
    if (y < 0 || static_cast<std::size_t>(y) >= classes) {
      throw DimensionError("cross_entropy: label " + std::to_string(y) +
                           " outside class axis (" + std::to_string(classes) +
                           ")");
    }
    total -= logp.at(i, y);
    ++count;
  }
  const double norm = (reduction == Reduction::kMean && count > 0)
                          ? 1.0 / static_cast<double>(count)
                          : 1.0;
  const std::size_t ix = logits.id();
  std::vector<int> y(labels.begin(), labels.end());
  return g.record(
      "cross_entropy", Tensor::scalar(total * norm), {ix},
      [ix, norm, classes, y = std::move(y), logp = std::move(logp)](
          Graph& g, std::size_t self) {
        const double d = g.grad(self)[0] * norm;
        Tensor& dX = g.grad(ix);
        for (std::size_t i = 0; i < y.size(); ++i) {
          if (y[i] == kIgnoreLabel) continue;
          for (std::size_t j = 0; j < classes; ++j) {
            dX.at(i, j) += d * std::exp(logp.at(i, j));
          }
          dX.at(i, y[i]) -= d;
        }
      });
}

// ---------------------------------------------------------------------------
// Gradient check

namespace {

double evaluate_scalar(const std::function<Var(Graph&)>& build) {
  Graph g;
  Var out = build(g);
  if (auto bad = g.first_non_finite()) {
    throw NumericError("grad_check: non-finite value at " + *bad);
  }
  return out.value().item();
}

}  // namespace

GradCheckResult grad_check(const std::function<Var(Graph&)>& build,
                           std::span<Parameter* const> params,
                           const GradCheckOptions& options) {
  if (!(options.eps > 0.0)) {
    throw ContractError("grad_check: eps must be positive");
  }
  for (Parameter* p : params) {
    p->grad = Tensor(p->value.shape(), 0.0);
  }
  {
    Graph g;
    Var loss = build(g);
    if (auto bad = g.first_non_finite()) {
      throw NumericError("grad_check: non-finite value at " + *bad);
    }
    if (loss.value().size() != 1) {
      throw ContractError("grad_check: builder must return a scalar");
    }
    g.backward(loss);
  }
  Rng rng(options.seed);
  GradCheckResult result;
  for (Parameter* p : params) {
    const Tensor analytic = p->grad;
    const std::size_t n = p->value.size();
    std::vector<std::size_t> coords(n);
    std::iota(coords.begin(), coords.end(), 0);
    if (options.coords_per_param != 0 && options.coords_per_param < n) {
      for (std::size_t i = 0; i < options.coords_per_param; ++i) {
        const std::size_t j = i + rng.uniform_int(n - i);
        std::swap(coords[i], coords[j]);
      }
      coords.resize(options.coords_per_param);
    }
    for (std::size_t c : coords) {
      const double original = p->value[c];
      p->value[c] = original + options.eps;
      const double f_plus = evaluate_scalar(build);
      p->value[c] = original - options.eps;
      const double f_minus = evaluate_scalar(build);
      p->value[c] = original;
      const double numeric = (f_plus - f_minus) / (2.0 * options.eps);
      const double a = analytic[c];
      const double denom =
          std::max({std::abs(a), std::abs(numeric), 1e-12});
      const double rel = std::abs(a - numeric) / denom;
      ++result.coords_checked;
      if (result.worst_param.empty() || rel > result.max_rel_error) {
        result.max_rel_error = rel;
        result.worst_param = p->name;
        result.worst_index = c;
        result.analytic = a;
        result.numeric = numeric;
      }
    }
  }
  return result;
}

}  // namespace entlm
