// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "gha/fusing.hpp"
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

fusing::FusingParams<double> rand_params(std::size_t dh, std::size_t dv, std::size_t dc,
                                         std::uint64_t seed, bool rg = false) {
  const std::size_t in = dh + dv + dc;
  fusing::FusingParams<double> p;
  p.reset = {rand_t({dh, in}, seed + 0, rg), rand_t({dh}, seed + 1, rg)};
  p.update = {rand_t({dh, in}, seed + 2, rg), rand_t({dh}, seed + 3, rg)};
  p.candidate = {rand_t({dh, in}, seed + 4, rg), rand_t({dh}, seed + 5, rg)};
  return p;
}

double sig(double v) { return 1.0 / (1.0 + std::exp(-v)); }

// straight-line scalar GRU over (h, v, c) with weight rows laid out as
// [h | v | c]; the oracle for fuse_step and fuse_levels
double scalar_fuse(double h_prev, double v, double c, const double wr[3], double br,
                   const double wz[3], double bz, const double wh[3], double bh) {
  const double r = sig(wr[0] * h_prev + wr[1] * v + wr[2] * c + br);
  const double z = sig(wz[0] * h_prev + wz[1] * v + wz[2] * c + bz);
  const double cand = std::tanh(wh[0] * (r * h_prev) + wh[1] * v + wh[2] * c + bh);
  return (1.0 - z) * h_prev + z * cand;
}

}  // namespace

TEST_CASE("fuse_step zero state and zero input stay at zero") {
  const std::size_t dh = 3, dv = 2, dc = 2;
  fusing::FusingParams<double> p = rand_params(dh, dv, dc, 10);
  p.reset.bias = Tensor<double>::zeros({dh});
  p.update.bias = Tensor<double>::zeros({dh});
  p.candidate.bias = Tensor<double>::zeros({dh});
  auto out = fusing::fuse_step<double>(nullptr, Tensor<double>::zeros({2, dh}),
                                       Tensor<double>::zeros({2, dv}), Tensor<double>::zeros({2, dc}), p);
  for (auto v : out.h.data()) CHECK(v == 0.0);
}

TEST_CASE("closed update gate carries the previous state") {
  const std::size_t dh = 3, dv = 2, dc = 2;
  fusing::FusingParams<double> p = rand_params(dh, dv, dc, 20);
  p.update.weight = Tensor<double>::zeros({dh, dh + dv + dc});
  p.update.bias = Tensor<double>::full({dh}, -1e9);
  auto h_prev = rand_t({4, dh}, 21);
  auto out = fusing::fuse_step<double>(nullptr, h_prev, rand_t({4, dv}, 22), rand_t({4, dc}, 23), p);
  for (std::size_t i = 0; i < out.h.size(); ++i) CHECK(out.h.data()[i] == h_prev.data()[i]);
}

TEST_CASE("scalar toy matches the hand-evaluated recurrence") {
  const double wr[3] = {0.5, -0.3, 0.8}, wz[3] = {-0.6, 0.4, 0.1}, wh[3] = {0.9, 0.2, -0.7};
  const double br = 0.05, bz = -0.15, bh = 0.25;
  const double h0 = 0.3, v = -0.8, c = 1.1;
  fusing::FusingParams<double> p;
  p.reset = {Tensor<double>::from_data({1, 3}, {wr[0], wr[1], wr[2]}), Tensor<double>::from_data({1}, {br})};
  p.update = {Tensor<double>::from_data({1, 3}, {wz[0], wz[1], wz[2]}), Tensor<double>::from_data({1}, {bz})};
  p.candidate = {Tensor<double>::from_data({1, 3}, {wh[0], wh[1], wh[2]}), Tensor<double>::from_data({1}, {bh})};
  auto out = fusing::fuse_step<double>(nullptr, Tensor<double>::from_data({1, 1}, {h0}),
                                       Tensor<double>::from_data({1, 1}, {v}),
                                       Tensor<double>::from_data({1, 1}, {c}), p);
  CHECK(out.h.data()[0] == doctest::Approx(scalar_fuse(h0, v, c, wr, br, wz, bz, wh, bh)).epsilon(1e-12));
  CHECK(out.reset.data()[0] == doctest::Approx(sig(wr[0] * h0 + wr[1] * v + wr[2] * c + br)).epsilon(1e-12));
}

TEST_CASE("fuse_levels") {
  const std::size_t dh = 1, dv = 1, dc = 1, t = 3;
  const double wr[3] = {0.4, 0.7, -0.2}, wz[3] = {0.3, -0.5, 0.6}, wh[3] = {-0.8, 0.1, 0.9};
  fusing::FusingParams<double> p;
  p.reset = {Tensor<double>::from_data({1, 3}, {wr[0], wr[1], wr[2]}), Tensor<double>::zeros({1})};
  p.update = {Tensor<double>::from_data({1, 3}, {wz[0], wz[1], wz[2]}), Tensor<double>::zeros({1})};
  p.candidate = {Tensor<double>::from_data({1, 3}, {wh[0], wh[1], wh[2]}), Tensor<double>::zeros({1})};

  SUBCASE("one level equals a single step from zero") {
    std::vector<Tensor<double>> vh = {rand_t({t, dv}, 30)};
    std::vector<Tensor<double>> cs = {rand_t({t, dc}, 31)};
    auto stack = fusing::fuse_levels<double>(nullptr, vh, cs, p);
    REQUIRE(stack.size() == 1);
    auto direct = fusing::fuse_step<double>(nullptr, Tensor<double>::zeros({t, dh}), vh[0], cs[0], p);
    for (std::size_t i = 0; i < t; ++i) CHECK(stack[0].data()[i] == direct.h.data()[i]);
  }
  SUBCASE("three levels match the per-position scalar oracle") {
    std::vector<Tensor<double>> vh = {rand_t({t, dv}, 40), rand_t({t, dv}, 41), rand_t({t, dv}, 42)};
    std::vector<Tensor<double>> cs = {rand_t({t, dc}, 43), rand_t({t, dc}, 44), rand_t({t, dc}, 45)};
    auto stack = fusing::fuse_levels<double>(nullptr, vh, cs, p);
    REQUIRE(stack.size() == 3);
    for (std::size_t pos = 0; pos < t; ++pos) {
      double h = 0.0;
      for (std::size_t l = 0; l < 3; ++l) {
        h = scalar_fuse(h, vh[l].data()[pos], cs[l].data()[pos], wr, 0.0, wz, 0.0, wh, 0.0);
        CHECK(stack[l].data()[pos] == doctest::Approx(h).epsilon(1e-12));
      }
    }
  }
  SUBCASE("identical inputs at two positions give identical states") {
    auto vh0 = Tensor<double>::from_data({2, 1}, {0.4, 0.4});
    auto cs0 = Tensor<double>::from_data({2, 1}, {-0.9, -0.9});
    auto stack = fusing::fuse_levels<double>(nullptr, std::vector<Tensor<double>>{vh0},
                                             std::vector<Tensor<double>>{cs0}, p);
    CHECK(stack[0].data()[0] == stack[0].data()[1]);
  }
  SUBCASE("no information crosses positions") {
    auto vh0 = rand_t({t, dv}, 50);
    auto cs0 = rand_t({t, dc}, 51);
    auto base = fusing::fuse_levels<double>(nullptr, std::vector<Tensor<double>>{vh0},
                                            std::vector<Tensor<double>>{cs0}, p);
    auto cs1 = Tensor<double>::from_data({t, dc}, std::vector<double>(cs0.data().begin(), cs0.data().end()));
    cs1.data()[2] += 5.0;  // perturb the last position only
    auto pert = fusing::fuse_levels<double>(nullptr, std::vector<Tensor<double>>{vh0},
                                            std::vector<Tensor<double>>{cs1}, p);
    CHECK(base[0].data()[0] == pert[0].data()[0]);
    CHECK(base[0].data()[1] == pert[0].data()[1]);
  }
  SUBCASE("misaligned level counts raise") {
    std::vector<Tensor<double>> vh = {rand_t({t, dv}, 60)};
    std::vector<Tensor<double>> cs = {rand_t({t, dc}, 61), rand_t({t, dc}, 62)};
    CHECK_THROWS_AS(fusing::fuse_levels<double>(nullptr, vh, cs, p), std::invalid_argument);
  }
}

TEST_CASE("state stays inside the unit box and gates inside (0,1)") {
  std::mt19937_64 rng(7);
  const std::size_t dh = 4, dv = 3, dc = 3, t = 5;
  for (int trial = 0; trial < 10; ++trial) {
    auto p = rand_params(dh, dv, dc, 100 + 10 * static_cast<std::uint64_t>(trial));
    Tensor<double> h = Tensor<double>::zeros({t, dh});
    for (int level = 0; level < 6; ++level) {
      auto out = fusing::fuse_step<double>(nullptr, h,
                                           rand_t({t, dv}, rng()), rand_t({t, dc}, rng()), p);
      h = out.h;
      for (auto v : h.data()) CHECK(std::abs(v) < 1.0);
      for (auto v : out.reset.data()) {
        CHECK(v > 0.0);
        CHECK(v < 1.0);
      }
      for (auto v : out.update.data()) {
        CHECK(v > 0.0);
        CHECK(v < 1.0);
      }
    }
  }
}

TEST_CASE("gradients through three stacked fuse steps match finite differences") {
  const std::size_t dh = 2, dv = 2, dc = 2, t = 2;
  auto p = rand_params(dh, dv, dc, 200, true);
  std::vector<Tensor<double>> vh = {rand_t({t, dv}, 210, true), rand_t({t, dv}, 211, true),
                                    rand_t({t, dv}, 212, true)};
  std::vector<Tensor<double>> cs = {rand_t({t, dc}, 220, true), rand_t({t, dc}, 221, true),
                                    rand_t({t, dc}, 222, true)};
  auto build = [&](Tape64* tp) {
    auto stack = fusing::fuse_levels<double>(tp, vh, cs, p);
    return ag::sum(tp, ag::mul(tp, stack.back(), stack.back()));
  };
  std::vector<Tensor<double>> leaves = {p.reset.weight,     p.reset.bias, p.update.weight,
                                        p.update.bias,      p.candidate.weight, p.candidate.bias,
                                        vh[0], vh[1], vh[2], cs[0], cs[1], cs[2]};
  for (auto& leaf : leaves) leaf.zero_grad();
  Tape64 tape;
  tape.backward(build(&tape));
  for (auto& leaf : leaves) {
    std::vector<double> analytic(leaf.grad_view().begin(), leaf.grad_view().end());
    if (analytic.empty()) analytic.assign(leaf.size(), 0.0);
    auto rep = gradcheck::check_tensor([&]() { return build(static_cast<Tape64*>(nullptr)).item(); },
                                       leaf, analytic);
    INFO("max rel ", rep.max_rel);
    CHECK(rep.max_rel <= 1e-4);
  }
}
