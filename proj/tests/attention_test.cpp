// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "gha/attention.hpp"
#include "gha/gradcheck.hpp"

using namespace gha;
using ag::Tensor;
using Tape64 = ag::Tape<double>;

namespace {

Tensor<double> rand_t(ag::Shape shape, std::uint64_t seed, bool rg = false) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  auto t = Tensor<double>::zeros(shape, rg);
  for (auto& v : t.data()) v = dist(rng);
  return t;
}

}  // namespace

TEST_CASE("attend: identical cells make the output that cell for any query") {
  const std::size_t cells = 6, dv = 4, dc = 3, t = 2;
  std::vector<double> u = {0.3, -1.2, 0.8, 2.0};
  Tensor<double> grid = Tensor<double>::zeros({cells, dv});
  for (std::size_t i = 0; i < cells; ++i)
    for (std::size_t d = 0; d < dv; ++d) grid.data()[i * dv + d] = u[d];
  decoder::LinearParams<double> score{rand_t({dv, dc}, 1), rand_t({dv}, 2)};
  auto out = attention::attend<double>(nullptr, grid, rand_t({t, dc}, 3), score);
  for (std::size_t r = 0; r < t; ++r)
    for (std::size_t d = 0; d < dv; ++d)
      CHECK(out.vtilde.data()[r * dv + d] == doctest::Approx(u[d]).epsilon(1e-9));
}

TEST_CASE("attend: a dominating score selects that cell") {
  // one cell whose feature aligns with W c by a huge margin
  const std::size_t dv = 2, dc = 1;
  Tensor<double> grid = Tensor<double>::from_data({3, dv}, {0.01, 0.0, 1e4, 1.0, 0.0, 0.02});
  decoder::LinearParams<double> score{Tensor<double>::from_data({dv, dc}, {1.0, 0.0}),
                                      Tensor<double>::zeros({dv})};
  Tensor<double> c = Tensor<double>::from_data({1, dc}, {1.0});
  auto out = attention::attend<double>(nullptr, grid, c, score);
  CHECK(out.weights.data()[1] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(out.vtilde.data()[0] == doctest::Approx(1e4).epsilon(1e-6));
  CHECK(out.vtilde.data()[1] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("attend: 2x2 toy grid matches hand-computed softmax average") {
  // Dv=Dc=1, W=[w], bias 0: s_i = v_i * w * c / sqrt(1)
  const double w = 0.8, cq = 1.5;
  const double v[4] = {0.2, -0.4, 1.0, 0.6};
  Tensor<double> grid = Tensor<double>::from_data({4, 1}, {v[0], v[1], v[2], v[3]});
  decoder::LinearParams<double> score{Tensor<double>::from_data({1, 1}, {w}), Tensor<double>::zeros({1})};
  Tensor<double> c = Tensor<double>::from_data({1, 1}, {cq});
  auto out = attention::attend<double>(nullptr, grid, c, score);
  double e[4], z = 0.0;
  for (int i = 0; i < 4; ++i) {
    e[i] = std::exp(v[i] * w * cq);
    z += e[i];
  }
  double expect = 0.0;
  for (int i = 0; i < 4; ++i) expect += (e[i] / z) * v[i];
  CHECK(out.vtilde.data()[0] == doctest::Approx(expect).epsilon(1e-12));
  for (int i = 0; i < 4; ++i)
    CHECK(out.weights.data()[i] == doctest::Approx(e[i] / z).epsilon(1e-12));
}

TEST_CASE("attend: the scaling factor is 1/sqrt(Dc)") {
  const std::size_t dv = 1, dc = 4;
  Tensor<double> grid = Tensor<double>::from_data({2, dv}, {1.0, -1.0});
  decoder::LinearParams<double> score{Tensor<double>::full({dv, dc}, 1.0), Tensor<double>::zeros({dv})};
  Tensor<double> c = Tensor<double>::full({1, dc}, 1.0);
  auto out = attention::attend<double>(nullptr, grid, c, score);
  // scores are +-(dc)/sqrt(dc) = +-2; weights = softmax(+2, -2)
  const double p0 = std::exp(2.0) / (std::exp(2.0) + std::exp(-2.0));
  CHECK(out.weights.data()[0] == doctest::Approx(p0).epsilon(1e-12));
}

TEST_CASE("attend invariants: weights sum to one and vtilde stays in the hull") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t cells = 1 + rng() % 9, dv = 1 + rng() % 5, dc = 1 + rng() % 4, t = 1 + rng() % 6;
    auto grid = rand_t({cells, dv}, 500 + trial);
    decoder::LinearParams<double> score{rand_t({dv, dc}, 600 + trial), rand_t({dv}, 700 + trial)};
    auto out = attention::attend<double>(nullptr, grid, rand_t({t, dc}, 800 + trial), score);
    for (std::size_t r = 0; r < t; ++r) {
      double s = 0.0;
      for (std::size_t i = 0; i < cells; ++i) {
        CHECK(out.weights.data()[r * cells + i] >= 0.0);
        s += out.weights.data()[r * cells + i];
      }
      CHECK(s == doctest::Approx(1.0).epsilon(1e-6));
      for (std::size_t d = 0; d < dv; ++d) {
        double lo = grid.data()[d], hi = grid.data()[d];
        for (std::size_t i = 1; i < cells; ++i) {
          lo = std::min(lo, grid.data()[i * dv + d]);
          hi = std::max(hi, grid.data()[i * dv + d]);
        }
        const double v = out.vtilde.data()[r * dv + d];
        CHECK(v >= lo - 1e-9);
        CHECK(v <= hi + 1e-9);
      }
    }
  }
}

TEST_CASE("level_zero_attention equals attend with no gating") {
  auto grid = rand_t({9, 4}, 1001);
  auto emb = rand_t({3, 2}, 1002);
  decoder::LinearParams<double> score{rand_t({4, 2}, 1003), rand_t({4}, 1004)};
  auto a = attention::attend<double>(nullptr, grid, emb, score);
  auto z = attention::level_zero_attention<double>(nullptr, grid, emb, score);
  for (std::size_t i = 0; i < a.vtilde.size(); ++i) CHECK(a.vtilde.data()[i] == z.vtilde.data()[i]);
}

TEST_CASE("gate_combine") {
  const std::size_t t = 3, dv = 4, dh = 2;
  auto vtilde = rand_t({t, dv}, 2001);
  auto vhat_prev = rand_t({t, dv}, 2002);
  auto h = rand_t({t, dh}, 2003);

  SUBCASE("closed gate keeps only the current level") {
    decoder::LinearParams<double> vg{Tensor<double>::zeros({dv, dh}), Tensor<double>::full({dv}, -1e9)};
    auto out = attention::gate_combine<double>(nullptr, vtilde, vhat_prev, h, vg);
    for (std::size_t i = 0; i < out.vhat.size(); ++i) CHECK(out.vhat.data()[i] == vtilde.data()[i]);
    for (std::size_t i = 0; i < out.gate.size(); ++i) CHECK(out.gate.data()[i] == 0.0);
  }
  SUBCASE("open gate adds the carried feature") {
    decoder::LinearParams<double> vg{Tensor<double>::zeros({dv, dh}), Tensor<double>::full({dv}, 1e9)};
    auto out = attention::gate_combine<double>(nullptr, vtilde, vhat_prev, h, vg);
    for (std::size_t i = 0; i < out.vhat.size(); ++i)
      CHECK(out.vhat.data()[i] == doctest::Approx(vtilde.data()[i] + vhat_prev.data()[i]).epsilon(1e-12));
  }
  SUBCASE("scalar toy matches hand evaluation") {
    const double wv = 0.9, bv = -0.3, hv = 0.7, vt = 1.2, vp = -2.0;
    decoder::LinearParams<double> vg{Tensor<double>::from_data({1, 1}, {wv}),
                                     Tensor<double>::from_data({1}, {bv})};
    auto out = attention::gate_combine<double>(nullptr, Tensor<double>::from_data({1, 1}, {vt}),
                                               Tensor<double>::from_data({1, 1}, {vp}),
                                               Tensor<double>::from_data({1, 1}, {hv}), vg);
    const double g = 1.0 / (1.0 + std::exp(-(wv * hv + bv)));
    CHECK(out.vhat.data()[0] == doctest::Approx(vt + g * vp).epsilon(1e-12));
  }
}

TEST_CASE("attention path backpropagates correctly") {
  const std::size_t cells = 6, dv = 3, dc = 2, dh = 2, t = 3;
  auto grid = rand_t({cells, dv}, 3001, true);
  auto c = rand_t({t, dc}, 3002, true);
  auto h = rand_t({t, dh}, 3003, true);
  auto vhat_prev = rand_t({t, dv}, 3004, true);
  decoder::LinearParams<double> score{rand_t({dv, dc}, 3005, true), rand_t({dv}, 3006, true)};
  decoder::LinearParams<double> vg{rand_t({dv, dh}, 3007, true), rand_t({dv}, 3008, true)};

  auto build = [&](Tape64* tp) {
    auto att = attention::attend(tp, grid, c, score);
    auto comb = attention::gate_combine(tp, att.vtilde, vhat_prev, h, vg);
    return ag::sum(tp, ag::mul(tp, comb.vhat, comb.vhat));
  };
  for (auto& leaf : {grid, c, h, vhat_prev, score.weight, score.bias, vg.weight, vg.bias}) {
    leaf.zero_grad();
  }
  Tape64 tape;
  auto loss = build(&tape);
  tape.backward(loss);
  for (auto leaf : {grid, c, h, vhat_prev, score.weight, score.bias, vg.weight, vg.bias}) {
    std::vector<double> analytic(leaf.grad_view().begin(), leaf.grad_view().end());
    if (analytic.empty()) analytic.assign(leaf.size(), 0.0);
    auto rep = gradcheck::check_tensor([&]() { return build(static_cast<Tape64*>(nullptr)).item(); },
                                       leaf, analytic);
    INFO("max rel ", rep.max_rel);
    CHECK(rep.max_rel <= 1e-4);
  }
}
