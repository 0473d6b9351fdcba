// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "gha/decoder.hpp"
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

TEST_CASE("receptive field formula") {
  CHECK(decoder::receptive_field(6, 3) == 13);
  CHECK(decoder::receptive_field(6, 5) == 25);
  CHECK(decoder::receptive_field(6, 7) == 37);
  CHECK(decoder::receptive_field(10, 3) == 21);
  CHECK(decoder::receptive_field(1, 1) == 1);
}

TEST_CASE("bottleneck stack: 18 conv layers, 6 shortcuts, still sees 13 words") {
  decoder::DecoderConfig cfg;
  cfg.layers = 6;
  cfg.kernel = 3;
  cfg.bottleneck = true;
  CHECK(cfg.conv_layer_count() == 18);
  CHECK(cfg.receptive_field() == 13);  // only the k=3 stages widen the span
}

TEST_CASE("embedding rows") {
  Tensor<double> table = Tensor<double>::from_data({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  std::vector<int> ids = {2, 0, 2};
  auto c0 = decoder::embed<double>(nullptr, ids, table);
  CHECK(c0.data()[0 * 3 + 2] == 1.0);
  CHECK(c0.data()[1 * 3 + 0] == 1.0);
  for (std::size_t c = 0; c < 3; ++c) CHECK(c0.data()[0 * 3 + c] == c0.data()[2 * 3 + c]);
}

TEST_CASE("glu_layer gate saturation") {
  const std::size_t t = 4, dc = 3, dh = 2;
  auto c_prev = rand_t({t, dc}, 1);
  auto h = rand_t({t, dh}, 2);
  decoder::GluLayerParams<double> p;
  p.conv.kernel = rand_t({3, dc, dc}, 3);
  p.conv.bias = rand_t({dc}, 4);
  p.gate.weight = Tensor<double>::zeros({dc, dh});

  auto lin = ag::causal_conv1d<double>(nullptr, c_prev, p.conv.kernel, p.conv.bias);

  SUBCASE("large positive gate bias leaves the linear unit") {
    p.gate.bias = Tensor<double>::full({dc}, 1e9);
    auto out = decoder::glu_layer<double>(nullptr, c_prev, h, p);
    for (std::size_t i = 0; i < out.out.size(); ++i)
      CHECK(out.out.data()[i] == doctest::Approx(lin.data()[i]).epsilon(1e-12));
  }
  SUBCASE("large negative gate bias closes the layer") {
    p.gate.bias = Tensor<double>::full({dc}, -1e9);
    auto out = decoder::glu_layer<double>(nullptr, c_prev, h, p);
    for (std::size_t i = 0; i < out.out.size(); ++i) CHECK(out.out.data()[i] == 0.0);
  }
  SUBCASE("output magnitude never exceeds the linear unit") {
    p.gate.weight = rand_t({dc, dh}, 5);
    p.gate.bias = rand_t({dc}, 6);
    auto out = decoder::glu_layer<double>(nullptr, c_prev, h, p);
    for (std::size_t i = 0; i < out.out.size(); ++i)
      CHECK(std::abs(out.out.data()[i]) <= std::abs(lin.data()[i]));
  }
}

TEST_CASE("glu_layer scalar toy matches hand computation") {
  // T=2, k=2, Dc=Dh=1: out_t = (pad_or_prev*w0 + x_t*w1 + b) * sigmoid(wb*h_t + bb)
  const double w0 = 0.5, w1 = -1.25, b = 0.3, wb = 0.7, bb = -0.2;
  const double x0 = 1.5, x1 = -0.75, h0 = 0.4, h1 = -1.1;
  decoder::GluLayerParams<double> p;
  p.conv.kernel = Tensor<double>::from_data({2, 1, 1}, {w0, w1});
  p.conv.bias = Tensor<double>::from_data({1}, {b});
  p.gate.weight = Tensor<double>::from_data({1, 1}, {wb});
  p.gate.bias = Tensor<double>::from_data({1}, {bb});
  auto c_prev = Tensor<double>::from_data({2, 1}, {x0, x1});
  auto h = Tensor<double>::from_data({2, 1}, {h0, h1});
  auto out = decoder::glu_layer<double>(nullptr, c_prev, h, p);
  auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  CHECK(out.out.data()[0] == doctest::Approx((0.0 * w0 + x0 * w1 + b) * sig(wb * h0 + bb)).epsilon(1e-12));
  CHECK(out.out.data()[1] == doctest::Approx((x0 * w0 + x1 * w1 + b) * sig(wb * h1 + bb)).epsilon(1e-12));
  CHECK(out.gate.data()[0] == doctest::Approx(sig(wb * h0 + bb)).epsilon(1e-12));
}

TEST_CASE("baseline_glu_layer") {
  const std::size_t t = 5, dc = 2;
  auto c_prev = rand_t({t, dc}, 11);
  decoder::BaselineGluParams<double> p;
  p.conv.kernel = rand_t({3, dc, dc}, 12);
  p.conv.bias = rand_t({dc}, 13);

  SUBCASE("zero gate weights halve the linear unit") {
    p.gate.kernel = Tensor<double>::zeros({3, dc, dc});
    p.gate.bias = Tensor<double>::zeros({dc});
    auto lin = ag::causal_conv1d<double>(nullptr, c_prev, p.conv.kernel, p.conv.bias);
    auto out = decoder::baseline_glu_layer<double>(nullptr, c_prev, p);
    for (std::size_t i = 0; i < out.out.size(); ++i)
      CHECK(out.out.data()[i] == doctest::Approx(0.5 * lin.data()[i]).epsilon(1e-12));
  }
  SUBCASE("perturbing the last row leaves earlier output rows unchanged") {
    p.gate.kernel = rand_t({3, dc, dc}, 14);
    p.gate.bias = rand_t({dc}, 15);
    auto base = decoder::baseline_glu_layer<double>(nullptr, c_prev, p);
    auto c2 = Tensor<double>::from_data({t, dc}, std::vector<double>(c_prev.data().begin(), c_prev.data().end()));
    c2.data()[(t - 1) * dc] += 42.0;
    auto pert = decoder::baseline_glu_layer<double>(nullptr, c2, p);
    for (std::size_t i = 0; i < (t - 1) * dc; ++i) CHECK(base.out.data()[i] == pert.out.data()[i]);
  }
  SUBCASE("k=1 identity with an open gate is the identity map") {
    decoder::BaselineGluParams<double> q;
    q.conv.kernel = Tensor<double>::from_data({1, 2, 2}, {1, 0, 0, 1});
    q.conv.bias = Tensor<double>::zeros({2});
    q.gate.kernel = Tensor<double>::zeros({1, 2, 2});
    q.gate.bias = Tensor<double>::full({2}, 1e9);
    auto out = decoder::baseline_glu_layer<double>(nullptr, c_prev, q);
    for (std::size_t i = 0; i < out.out.size(); ++i)
      CHECK(out.out.data()[i] == doctest::Approx(c_prev.data()[i]).epsilon(1e-12));
  }
}

TEST_CASE("bottleneck layers") {
  const std::size_t t = 4, dc = 3, dh = 2;
  auto c_prev = rand_t({t, dc}, 21);
  auto h = rand_t({t, dh}, 22);
  decoder::BottleneckParams<double> p;
  p.in_proj.kernel = Tensor<double>::zeros({1, dc, dc});
  p.in_proj.bias = Tensor<double>::zeros({dc});
  p.mid.kernel = Tensor<double>::zeros({3, dc, dc});
  p.mid.bias = Tensor<double>::zeros({dc});
  p.out_proj.kernel = Tensor<double>::zeros({1, dc, dc});
  p.out_proj.bias = Tensor<double>::zeros({dc});

  SUBCASE("all-zero stages reduce to the shortcut") {
    decoder::LinearParams<double> gate{Tensor<double>::zeros({dc, dh}), Tensor<double>::zeros({dc})};
    auto out = decoder::bottleneck_layer<double>(nullptr, c_prev, h, p, gate);
    for (std::size_t i = 0; i < out.out.size(); ++i) CHECK(out.out.data()[i] == c_prev.data()[i]);
    for (std::size_t i = 0; i < out.gate.size(); ++i) CHECK(out.gate.data()[i] == 0.5);
  }
  SUBCASE("baseline variant: zero stages also reduce to the shortcut") {
    decoder::ConvParams<double> gate{Tensor<double>::zeros({1, dc, dc}), Tensor<double>::zeros({dc})};
    auto out = decoder::baseline_bottleneck_layer<double>(nullptr, c_prev, p, gate);
    for (std::size_t i = 0; i < out.out.size(); ++i) CHECK(out.out.data()[i] == c_prev.data()[i]);
  }
}

TEST_CASE("locality: a baseline stack sees exactly its receptive field") {
  // two k=3 layers: output row t depends on input rows >= t-4 only
  const std::size_t t = 9, dc = 3;
  auto x = rand_t({t, dc}, 61);
  decoder::BaselineGluParams<double> p1, p2;
  p1.conv.kernel = rand_t({3, dc, dc}, 62);
  p1.conv.bias = rand_t({dc}, 63);
  p1.gate.kernel = rand_t({3, dc, dc}, 64);
  p1.gate.bias = rand_t({dc}, 65);
  p2.conv.kernel = rand_t({3, dc, dc}, 66);
  p2.conv.bias = rand_t({dc}, 67);
  p2.gate.kernel = rand_t({3, dc, dc}, 68);
  p2.gate.bias = rand_t({dc}, 69);
  auto run = [&](const Tensor<double>& input) {
    auto l1 = decoder::baseline_glu_layer<double>(nullptr, input, p1);
    return decoder::baseline_glu_layer<double>(nullptr, l1.out, p2).out;
  };
  auto base = run(x);
  const std::size_t rf = decoder::receptive_field(2, 3);
  CHECK(rf == 5);
  // perturb a row outside the window of the last position
  auto x2 = Tensor<double>::from_data({t, dc}, std::vector<double>(x.data().begin(), x.data().end()));
  const std::size_t last = t - 1;
  const std::size_t outside = last - rf;  // strictly before t - rf + 1
  for (std::size_t c = 0; c < dc; ++c) x2.data()[outside * dc + c] += 7.0;
  auto pert = run(x2);
  for (std::size_t c = 0; c < dc; ++c) CHECK(base.data()[last * dc + c] == pert.data()[last * dc + c]);
  // and a row inside the window does change it
  auto x3 = Tensor<double>::from_data({t, dc}, std::vector<double>(x.data().begin(), x.data().end()));
  x3.data()[(last - rf + 1) * dc] += 7.0;
  auto moved = run(x3);
  bool changed = false;
  for (std::size_t c = 0; c < dc; ++c) changed = changed || base.data()[last * dc + c] != moved.data()[last * dc + c];
  CHECK(changed);
}

TEST_CASE("decoder layers backpropagate correctly") {
  const std::size_t t = 4, dc = 3, dh = 2;
  auto c_prev = rand_t({t, dc}, 31, true);
  auto h = rand_t({t, dh}, 32, true);
  decoder::GluLayerParams<double> p;
  p.conv.kernel = rand_t({3, dc, dc}, 33, true);
  p.conv.bias = rand_t({dc}, 34, true);
  p.gate.weight = rand_t({dc, dh}, 35, true);
  p.gate.bias = rand_t({dc}, 36, true);

  auto fd = [&](std::vector<Tensor<double>> leaves, auto build) {
    for (auto& leaf : leaves) leaf.zero_grad();
    Tape64 tape;
    auto loss = build(&tape);
    tape.backward(loss);
    for (auto& leaf : leaves) {
      std::vector<double> analytic(leaf.grad_view().begin(), leaf.grad_view().end());
      if (analytic.empty()) analytic.assign(leaf.size(), 0.0);
      auto rep = gradcheck::check_tensor(
          [&]() { return build(static_cast<Tape64*>(nullptr)).item(); }, leaf, analytic);
      CHECK(rep.max_rel <= 1e-4);
    }
  };

  SUBCASE("glu_layer") {
    fd({c_prev, h, p.conv.kernel, p.conv.bias, p.gate.weight, p.gate.bias}, [&](Tape64* tp) {
      auto out = decoder::glu_layer(tp, c_prev, h, p);
      return ag::sum(tp, ag::mul(tp, out.out, out.out));
    });
  }
  SUBCASE("bottleneck_layer") {
    decoder::BottleneckParams<double> bn;
    bn.in_proj.kernel = rand_t({1, dc, dc}, 41, true);
    bn.in_proj.bias = rand_t({dc}, 42, true);
    bn.mid.kernel = rand_t({3, dc, dc}, 43, true);
    bn.mid.bias = rand_t({dc}, 44, true);
    bn.out_proj.kernel = rand_t({1, dc, dc}, 45, true);
    bn.out_proj.bias = rand_t({dc}, 46, true);
    decoder::LinearParams<double> gate{rand_t({dc, dh}, 47, true), rand_t({dc}, 48, true)};
    fd({c_prev, h, bn.mid.kernel, bn.out_proj.kernel, gate.weight}, [&](Tape64* tp) {
      auto out = decoder::bottleneck_layer(tp, c_prev, h, bn, gate);
      return ag::sum(tp, ag::mul(tp, out.out, out.out));
    });
  }
}
