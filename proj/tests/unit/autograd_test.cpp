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

#include <cmath>
#include <functional>
#include <string>

#include "doctest.h"
#include "entlm/error.h"
#include "entlm/rng.h"

namespace entlm {
namespace {

Tensor random_tensor(Shape shape, Rng& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = rng.normal(0.0, scale);
  return t;
}

TEST_CASE("softmax of equal logits is uniform") {
  Graph g;
  Var x = g.constant(Tensor::matrix(1, 2, {0, 0}));
  const Tensor& y = softmax_rows(x).value();
  CHECK(y[0] == 0.5);
  CHECK(y[1] == 0.5);
}

TEST_CASE("cross entropy of uniform logits is ln 2") {
  Graph g;
  Var x = g.constant(Tensor::matrix(1, 2, {0, 0}));
  const int label[] = {0};
  CHECK(cross_entropy(x, label).value().item() ==
        doctest::Approx(0.693147).epsilon(1e-6));
  CHECK(std::abs(cross_entropy(x, label).value().item() - std::log(2.0)) <
        1e-15);
}

TEST_CASE("layer norm of a constant row is zero") {
  Graph g;
  Var x = g.constant(Tensor::matrix(1, 4, {1, 1, 1, 1}));
  Var gamma = g.constant(Tensor(Shape{4}, 1.0));
  Var beta = g.constant(Tensor(Shape{4}, 0.0));
  const Tensor& y = layer_norm(x, gamma, beta).value();
  for (double v : y.data()) CHECK(v == 0.0);
}

TEST_CASE("softmax rows sum to one") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    Tensor x = random_tensor({4, 7}, rng, 5.0);
    Tensor y = softmax_rows(x);
    for (std::size_t r = 0; r < 4; ++r) {
      double s = 0.0;
      for (double v : y.row(r)) s += v;
      CHECK(std::abs(s - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("backward of sum of squares is 2x") {
  Parameter x{"x", Tensor::vector({1, 2}), Tensor(Shape{2})};
  Graph g;
  Var v = g.param(x);
  g.backward(sum(mul(v, v)));
  CHECK(x.grad[0] == 2.0);
  CHECK(x.grad[1] == 4.0);
}

TEST_CASE("parameters off the loss path get exactly zero gradient") {
  ParameterStore store;
  Parameter& used = store.add("used", Tensor::vector({1, 2}));
  Parameter& unused = store.add("unused", Tensor::vector({3, 4}));
  store.zero_grad();
  Graph g;
  Var u = g.param(used);
  Var w = g.param(unused);
  (void)scale(w, 3.0);  // recorded but not on the loss path
  g.backward(sum(u));
  CHECK(used.grad[0] == 1.0);
  CHECK(unused.grad[0] == 0.0);
  CHECK(unused.grad[1] == 0.0);
}

TEST_CASE("backward requires a scalar loss") {
  Parameter x{"x", Tensor::vector({1, 2}), Tensor(Shape{2})};
  Graph g;
  Var v = g.param(x);
  CHECK_THROWS_AS(g.backward(v), ContractError);
}

TEST_CASE("shape mismatch names the kernel and axes") {
  Graph g;
  Var a = g.constant(Tensor({2, 3}));
  Var b = g.constant(Tensor({4, 2}));
  try {
    matmul(a, b);
    FAIL("expected DimensionError");
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("matmul") != std::string::npos);
    CHECK(msg.find("axis 1 (3)") != std::string::npos);
    CHECK(msg.find("axis 0 (4)") != std::string::npos);
  }
  CHECK_THROWS_AS(add(a, b), DimensionError);
  CHECK_THROWS_AS(mul(a, b), DimensionError);
  Var t = g.constant(Tensor({3, 2}));
  const int bad[] = {5};
  CHECK_THROWS_AS(gather_rows(t, bad), DimensionError);
}

TEST_CASE("grad check of a linear function is exact") {
  // Central differences are exact for a linear map; only roundoff of f
  // remains, so the fixture keeps |f| small.
  Parameter w{"w", Tensor::matrix(1, 3, {0.5, 1.25, -0.25}), {}};
  const Tensor x = Tensor::matrix(3, 1, {1.5, -0.5, 0.75});
  Parameter* params[] = {&w};
  const auto result = grad_check(
      [&](Graph& g) { return sum(matmul(g.param(w), g.constant(x))); },
      params, {.eps = 1e-5});
  CHECK(result.coords_checked == 3);
  CHECK(result.max_rel_error < 1e-10);
}

TEST_CASE("grad check of softmax cross-entropy") {
  Rng rng(11);
  Parameter logits{"logits", random_tensor({3, 5}, rng), {}};
  const int labels[] = {1, kIgnoreLabel, 4};
  Parameter* params[] = {&logits};
  const auto result = grad_check(
      [&](Graph& g) { return cross_entropy(g.param(logits), labels); },
      params, {.eps = 1e-5});
  CHECK(result.max_rel_error < 1e-6);
}

TEST_CASE("grad check rejects non-positive eps") {
  Parameter w{"w", Tensor::vector({1.0}), {}};
  Parameter* params[] = {&w};
  auto build = [&](Graph& g) { return sum(g.param(w)); };
  CHECK_THROWS_AS(grad_check(build, params, {.eps = 0.0}), ContractError);
  CHECK_THROWS_AS(grad_check(build, params, {.eps = -1.0}), ContractError);
}

TEST_CASE("grad check reports the non-finite node") {
  Parameter w{"w", Tensor::vector({1.0, -1.0}), {}};
  Parameter* params[] = {&w};
  try {
    grad_check(
        [&](Graph& g) {
          Var v = g.param(w);
          return sum(scale(v, std::numeric_limits<double>::infinity()));
        },
        params);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("scale") != std::string::npos);
  }
}

// Every kernel composed into a scalar through a random projection, checked
// against central differences.
TEST_CASE("grad check passes on every kernel") {
  Rng rng(5);
  Parameter a{"a", random_tensor({3, 4}, rng), {}};
  Parameter b{"b", random_tensor({4, 3}, rng), {}};
  Parameter c{"c", random_tensor({3, 4}, rng), {}};
  Parameter row{"row", random_tensor({4}, rng), {}};
  Parameter gamma{"gamma", random_tensor({4}, rng), {}};
  Parameter beta{"beta", random_tensor({4}, rng), {}};
  Parameter table{"table", random_tensor({6, 4}, rng), {}};
  const Tensor proj34 = random_tensor({3, 4}, rng);
  const Tensor proj43 = random_tensor({4, 3}, rng);
  const Tensor proj33 = random_tensor({3, 3}, rng);
  const Tensor proj_vec4 = random_tensor({4}, rng);
  const Tensor proj_vec3 = random_tensor({3}, rng);
  const int ids[] = {5, 0, 5};
  const std::vector<std::vector<int>> sets = {{1, 2, 3}, {4}, {0, 0}};
  const int labels[] = {2, 0, kIgnoreLabel};

  auto project = [](Graph& g, Var v, const Tensor& w) {
    return sum(mul(v, g.constant(w)));
  };
  using Builder = std::function<Var(Graph&)>;
  const std::vector<std::pair<std::string, Builder>> kernels = {
      {"matmul",
       [&](Graph& g) {
         return project(g, matmul(g.param(a), g.param(b)), proj33);
       }},
      {"transpose",
       [&](Graph& g) { return project(g, transpose(g.param(a)), proj43); }},
      {"add",
       [&](Graph& g) {
         return project(g, add(g.param(a), g.param(c)), proj34);
       }},
      {"add_broadcast",
       [&](Graph& g) {
         return project(g, add(g.param(a), g.param(row)), proj34);
       }},
      {"mul",
       [&](Graph& g) {
         return project(g, mul(g.param(a), g.param(c)), proj34);
       }},
      {"scale",
       [&](Graph& g) { return project(g, scale(g.param(a), -2.5), proj34); }},
      {"gather_rows",
       [&](Graph& g) {
         return project(g, gather_rows(g.param(table), ids), proj34);
       }},
      {"bag_rows_sum",
       [&](Graph& g) {
         return project(g, bag_rows(g.param(table), sets, false), proj34);
       }},
      {"bag_rows_mean",
       [&](Graph& g) {
         return project(g, bag_rows(g.param(table), sets, true), proj34);
       }},
      {"layer_norm",
       [&](Graph& g) {
         return project(
             g, layer_norm(g.param(a), g.param(gamma), g.param(beta)), proj34);
       }},
      {"gelu",
       [&](Graph& g) { return project(g, gelu(g.param(a)), proj34); }},
      {"softmax_rows",
       [&](Graph& g) { return project(g, softmax_rows(g.param(a)), proj34); }},
      {"log_softmax_rows",
       [&](Graph& g) {
         return project(g, log_softmax_rows(g.param(a)), proj34);
       }},
      {"concat_rows",
       [&](Graph& g) {
         const Var parts[] = {g.param(a), g.param(c)};
         Var cat = concat_rows(parts);
         return project(g, slice_rows(cat, 2, 3), proj34);
       }},
      {"concat_cols",
       [&](Graph& g) {
         const Var parts[] = {g.param(a), g.param(c)};
         Var cat = concat_cols(parts);
         return project(g, slice_cols(cat, 2, 4), proj34);
       }},
      {"sum_axis0",
       [&](Graph& g) {
         return project(g, sum_axis(g.param(a), 0), proj_vec4);
       }},
      {"mean_axis1",
       [&](Graph& g) {
         return project(g, mean_axis(g.param(a), 1), proj_vec3);
       }},
      {"cross_entropy_mean",
       [&](Graph& g) { return cross_entropy(g.param(a), labels); }},
      {"cross_entropy_sum",
       [&](Graph& g) {
         return cross_entropy(g.param(a), labels, Reduction::kSum);
       }},
  };
  Parameter* params[] = {&a, &b, &c, &row, &gamma, &beta, &table};
  for (const auto& [name, build] : kernels) {
    CAPTURE(name);
    const auto result = grad_check(build, params, {.eps = 1e-5});
    CAPTURE(result.worst_param);
    CHECK(result.max_rel_error < 1e-6);
  }
}

TEST_CASE("dropout is inverted and seeded") {
  Graph g;
  Var x = g.constant(Tensor({1, 1000}, 1.0));
  Rng r1(9), r2(9);
  const Tensor y1 = dropout(x, 0.25, r1).value();
  const Tensor y2 = dropout(x, 0.25, r2).value();
  CHECK(bit_identical(y1, y2));
  double kept = 0.0;
  for (double v : y1.data()) {
    CHECK((v == 0.0 || std::abs(v - 1.0 / 0.75) < 1e-15));
    if (v != 0.0) kept += 1.0;
  }
  CHECK(kept / 1000.0 == doctest::Approx(0.75).epsilon(0.1));
  CHECK(dropout(x, 0.0, r1).id() == x.id());
  CHECK_THROWS_AS(dropout(x, 1.5, r1), ContractError);
}

TEST_CASE("cross entropy with no labelled rows is zero") {
  Parameter x{"x", Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6}), {}};
  Graph g;
  const int labels[] = {kIgnoreLabel, kIgnoreLabel};
  Var loss = cross_entropy(g.param(x), labels);
  CHECK(loss.value().item() == 0.0);
  g.backward(loss);
  for (double v : x.grad.data()) CHECK(v == 0.0);
}

TEST_CASE("identical inputs give bit-identical results") {
  Rng rng(1);
  const Tensor a = random_tensor({5, 6}, rng);
  const Tensor b = random_tensor({6, 5}, rng);
  auto run = [&] {
    Graph g;
    return softmax_rows(gelu(matmul(g.constant(a), g.constant(b)))).value();
  };
  CHECK(bit_identical(run(), run()));
}

}  // namespace
}  // namespace entlm
