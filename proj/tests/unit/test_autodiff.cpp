#include <doctest.h>

#include <cmath>
#include <random>

#include "../support/gradcheck.hpp"
#include "grec/adam.hpp"
#include "grec/ops.hpp"

using namespace grec;
using grec::testing::check_gradients;
using grec::testing::kink_free_tensor;
using grec::testing::random_tensor;
using grec::testing::weighted_sum;

namespace {

Tensor<float> row3(std::vector<float> v) {
  const std::size_t n = v.size();
  return Tensor<float>::from_data({1, n, 1}, std::move(v));
}

ConvKernel<double> random_kernel(std::size_t k, std::size_t cin, std::size_t cout, int r,
                                 bool causal, std::mt19937_64& rng) {
  return {random_tensor({k, cin, cout}, rng), random_tensor({cout}, rng), r, causal};
}

constexpr double kOpTolerance = 1e-6;

}  // namespace

TEST_CASE("relu, lookup and pointwise basics") {
  auto y = relu(Tensor<float>::from_data({3}, {-1.f, 0.f, 2.f}));
  CHECK(y.data()[0] == 0.f);
  CHECK(y.data()[1] == 0.f);
  CHECK(y.data()[2] == 2.f);

  auto table = Tensor<float>::from_data({3, 2}, {1, 2, 3, 4, 5, 6});
  IdMatrix ids(1, 2);
  ids.at(0, 0) = 0;
  ids.at(0, 1) = 2;
  auto e = embedding_lookup(table, ids);
  CHECK(e.shape() == Shape{1, 2, 2});
  CHECK(e.data()[0] == 1.f);
  CHECK(e.data()[1] == 2.f);
  CHECK(e.data()[2] == 5.f);
  ids.at(0, 1) = 3;
  CHECK_THROWS_AS(embedding_lookup(table, ids), std::out_of_range);

  auto x = Tensor<float>::from_data({1, 2, 2}, {0.5f, -1.f, 3.f, 7.f});
  auto eye = Tensor<float>::from_data({2, 2}, {1, 0, 0, 1});
  auto same = pointwise(x, eye, Tensor<float>::zeros({2}));
  for (std::size_t i = 0; i < 4; ++i) CHECK(same.data()[i] == x.data()[i]);
}

TEST_CASE("conv1d hand examples") {
  SUBCASE("k=1 identity") {
    auto x = Tensor<float>::from_data({2, 3, 2}, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12});
    ConvKernel<float> k{Tensor<float>::from_data({1, 2, 2}, {1, 0, 0, 1}),
                        Tensor<float>::zeros({2}), 1, true};
    auto y = conv1d(x, k);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(y.data()[i] == x.data()[i]);
  }
  SUBCASE("causal k=3 r=1 running sum") {
    ConvKernel<float> k{Tensor<float>::from_data({3, 1, 1}, {1, 1, 1}),
                        Tensor<float>::zeros({1}), 1, true};
    auto y = conv1d(row3({1, 2, 3, 4}), k);
    CHECK(y.data()[0] == 1.f);
    CHECK(y.data()[1] == 3.f);
    CHECK(y.data()[2] == 6.f);
    CHECK(y.data()[3] == 9.f);
  }
  SUBCASE("causal k=3 r=2 only sees positions 1 and 2 at position 2") {
    ConvKernel<float> k{Tensor<float>::from_data({3, 1, 1}, {100, 10, 1}),
                        Tensor<float>::zeros({1}), 2, true};
    auto y = conv1d(row3({1, 2, 3, 4}), k);
    // Taps land on i-4, i-2, i: position 2 (1-based) reads only input 2.
    CHECK(y.data()[1] == 2.f);
    CHECK(y.data()[2] == 10.f * 1 + 3.f);
    CHECK(y.data()[3] == 10.f * 2 + 4.f);
  }
  SUBCASE("non-causal centres the middle tap") {
    ConvKernel<float> k{Tensor<float>::from_data({3, 1, 1}, {100, 10, 1}),
                        Tensor<float>::zeros({1}), 1, false};
    auto y = conv1d(row3({1, 2, 3, 4}), k);
    CHECK(y.data()[0] == 10.f * 1 + 2.f);
    CHECK(y.data()[1] == 100.f * 1 + 10.f * 2 + 3.f);
    CHECK(y.data()[3] == 100.f * 3 + 10.f * 4);
  }
  SUBCASE("errors") {
    ConvKernel<float> even{Tensor<float>::zeros({2, 1, 1}), Tensor<float>::zeros({1}), 1, false};
    CHECK_THROWS_AS(conv1d(row3({1, 2}), even), std::invalid_argument);
    ConvKernel<float> wide{Tensor<float>::zeros({3, 2, 1}), Tensor<float>::zeros({1}), 1, true};
    CHECK_THROWS_AS(conv1d(row3({1, 2}), wide), std::invalid_argument);
  }
}

TEST_CASE("causal conv ignores the future bit-exactly") {
  std::mt19937_64 rng(11);
  auto k = random_kernel(3, 4, 4, 2, true, rng);
  auto x = random_tensor({1, 12, 4}, rng, -1, 1, false);
  NoGradGuard guard;
  const auto base = conv1d(x, k);
  for (std::size_t i = 0; i < 12; ++i) {
    auto shifted = Tensor<double>::from_data(x.shape(), {x.data().begin(), x.data().end()});
    for (std::size_t p = i + 1; p < 12; ++p) {
      for (std::size_t c = 0; c < 4; ++c) shifted.mutable_data()[p * 4 + c] += 3.0;
    }
    const auto y = conv1d(shifted, k);
    for (std::size_t p = 0; p <= i; ++p) {
      for (std::size_t c = 0; c < 4; ++c) REQUIRE(y.data()[p * 4 + c] == base.data()[p * 4 + c]);
    }
  }
}

TEST_CASE("layer norm examples") {
  auto one = Tensor<float>::from_data({4}, {1, 1, 1, 1});
  auto zero = Tensor<float>::zeros({4});
  auto y = layer_norm(Tensor<float>::from_data({1, 4}, {5, 5, 5, 5}), one, zero);
  for (float v : y.data()) CHECK(v == 0.f);

  auto pair = layer_norm(Tensor<double>::from_data({1, 2}, {1, 3}),
                         Tensor<double>::from_data({2}, {1, 1}), Tensor<double>::zeros({2}));
  CHECK(pair.data()[0] == doctest::Approx(-1.0).epsilon(1e-7));
  CHECK(pair.data()[1] == doctest::Approx(1.0).epsilon(1e-7));

  auto shift = Tensor<float>::from_data({4}, {0.5f, -1.f, 2.f, 0.f});
  auto flat = layer_norm(Tensor<float>::from_data({1, 4}, {3, -2, 8, 1}), zero, shift);
  for (std::size_t i = 0; i < 4; ++i) CHECK(flat.data()[i] == shift.data()[i]);
}

TEST_CASE("softmax cross-entropy examples") {
  const std::vector<int> t1{2};
  auto uniform = masked_softmax_xent(Tensor<double>::from_data({1, 4}, {0.3, 0.3, 0.3, 0.3}),
                                     std::span<const int>(t1));
  CHECK(uniform.item() == doctest::Approx(std::log(4.0)).epsilon(1e-12));

  auto saturated = masked_softmax_xent(Tensor<double>::from_data({1, 4}, {0, 0, 1000, 0}),
                                       std::span<const int>(t1));
  CHECK(saturated.item() == doctest::Approx(0.0));

  const std::vector<double> a{0.1, -0.4, 2.0, 0.7}, b{1.5, 0.2, -0.3, 0.9};
  auto single = [](const std::vector<double>& row, int t) {
    const std::vector<int> target{t};
    return masked_softmax_xent(Tensor<double>::from_data({1, 4}, row),
                               std::span<const int>(target))
        .item();
  };
  std::vector<double> both(a);
  both.insert(both.end(), b.begin(), b.end());
  const std::vector<int> t2{3, 1};
  auto pair = masked_softmax_xent(Tensor<double>::from_data({2, 4}, both),
                                  std::span<const int>(t2));
  CHECK(pair.item() == doctest::Approx((single(a, 3) + single(b, 1)) / 2).epsilon(1e-14));

  const std::vector<int> pad{0}, mask{4};
  auto logits = Tensor<double>::zeros({1, 4});
  CHECK_THROWS_AS(masked_softmax_xent(logits, std::span<const int>(pad)), std::invalid_argument);
  CHECK_THROWS_AS(masked_softmax_xent(logits, std::span<const int>(mask)), std::invalid_argument);

  std::mt19937_64 rng(3);
  auto rows = random_tensor({5, 9}, rng, -20, 20, false);
  const auto p = softmax_rows<double>(rows.data(), 9);
  for (std::size_t r = 0; r < 5; ++r) {
    double s = 0;
    for (std::size_t c = 0; c < 9; ++c) s += p[r * 9 + c];
    CHECK(std::abs(s - 1.0) < 1e-6);
  }
}

TEST_CASE("backward basics") {
  auto w = Tensor<double>::from_data({3}, {0.5, -2, 4}, true);
  auto x = Tensor<double>::from_data({3}, {1.5, 3, -7});
  sum(mul(w, x)).backward();
  for (std::size_t i = 0; i < 3; ++i) CHECK(w.grad()[i] == x.data()[i]);
  CHECK_THROWS_AS(mul(w, x).backward(), std::invalid_argument);
}

TEST_CASE("adam") {
  auto p = Tensor<float>::from_data({3}, {1, -2, 3}, true);
  p.zero_grad();
  std::vector<Tensor<float>> params{p};
  Adam<float> adam;
  adam.step(params);
  CHECK(p.data()[0] == 1.f);
  CHECK(p.data()[1] == -2.f);
  CHECK(p.data()[2] == 3.f);
  CHECK(adam.steps() == 1);

  // First step moves each coordinate by lr against the gradient sign.
  p.mutable_grad()[0] = 0.5f;
  p.mutable_grad()[1] = -3.f;
  p.mutable_grad()[2] = 0.f;
  Adam<float> fresh;
  fresh.step(params);
  CHECK(p.data()[0] == doctest::Approx(1.0 - 1e-3).epsilon(1e-5));
  CHECK(p.data()[1] == doctest::Approx(-2.0 + 1e-3).epsilon(1e-5));
  CHECK(p.data()[2] == 3.f);

  auto q = Tensor<float>::zeros({2}, true);
  std::vector<Tensor<float>> missing{q};
  CHECK_THROWS(fresh.step(missing));
}

TEST_CASE("finite-difference checks per operator") {
  std::mt19937_64 rng(2024);

  SUBCASE("add and mul") {
    auto a = random_tensor({2, 3}, rng), b = random_tensor({2, 3}, rng);
    auto r = random_tensor({2, 3}, rng, -1, 1, false);
    auto res = check_gradients([&] { return weighted_sum(mul(add(a, b), a), r); }, {a, b});
    CHECK(res.max_rel_error < kOpTolerance);
  }
  SUBCASE("relu") {
    auto a = kink_free_tensor({4, 5}, rng);
    auto r = random_tensor({4, 5}, rng, -1, 1, false);
    auto res = check_gradients([&] { return weighted_sum(relu(a), r); }, {a});
    CHECK(res.max_rel_error < kOpTolerance);
  }
  SUBCASE("embedding lookup") {
    auto table = random_tensor({6, 3}, rng);
    IdMatrix ids(2, 4);
    const int v[] = {0, 5, 2, 2, 1, 3, 5, 0};
    std::copy(std::begin(v), std::end(v), ids.ids.begin());
    auto r = random_tensor({2, 4, 3}, rng, -1, 1, false);
    auto res = check_gradients([&] { return weighted_sum(embedding_lookup(table, ids), r); },
                               {table});
    CHECK(res.max_rel_error < kOpTolerance);
  }
  SUBCASE("conv1d causal and non-causal") {
    for (bool causal : {true, false}) {
      for (int dilation : {1, 2, 4}) {
        auto x = random_tensor({2, 7, 3}, rng);
        auto k = random_kernel(3, 3, 4, dilation, causal, rng);
        auto r = random_tensor({2, 7, 4}, rng, -1, 1, false);
        auto res = check_gradients([&] { return weighted_sum(conv1d(x, k), r); },
                                   {x, k.weight, k.bias});
        CHECK_MESSAGE(res.max_rel_error < kOpTolerance, "causal=" << causal << " r=" << dilation);
      }
    }
  }
  SUBCASE("layer norm") {
    auto x = random_tensor({3, 2, 5}, rng);
    auto gain = random_tensor({5}, rng, 0.5, 1.5), shift = random_tensor({5}, rng);
    auto r = random_tensor({3, 2, 5}, rng, -1, 1, false);
    auto res = check_gradients([&] { return weighted_sum(layer_norm(x, gain, shift), r); },
                               {x, gain, shift});
    CHECK(res.max_rel_error < kOpTolerance);
  }
  SUBCASE("pointwise") {
    auto x = random_tensor({2, 3, 4}, rng);
    auto w = random_tensor({4, 6}, rng), b = random_tensor({6}, rng);
    auto r = random_tensor({2, 3, 6}, rng, -1, 1, false);
    auto res = check_gradients([&] { return weighted_sum(pointwise(x, w, b), r); }, {x, w, b});
    CHECK(res.max_rel_error < kOpTolerance);
  }
  SUBCASE("gather positions and concat") {
    auto x = random_tensor({2, 4, 3}, rng), y = random_tensor({5, 2}, rng);
    const std::vector<std::size_t> idx{0, 7, 3, 3, 5};
    auto r = random_tensor({5, 5}, rng, -1, 1, false);
    auto res = check_gradients(
        [&] { return weighted_sum(concat_last(gather_positions(x, std::span(idx)), y), r); },
        {x, y});
    CHECK(res.max_rel_error < kOpTolerance);
  }
  SUBCASE("softmax cross-entropy") {
    auto logits = random_tensor({4, 7}, rng, -3, 3);
    const std::vector<int> targets{1, 6, 3, 3};
    auto res = check_gradients(
        [&] { return masked_softmax_xent(logits, std::span<const int>(targets)); }, {logits});
    CHECK(res.max_rel_error < kOpTolerance);
  }
}

TEST_CASE("forward and backward are deterministic") {
  auto run = [] {
    std::mt19937_64 rng(99);
    auto x = random_tensor({2, 9, 4}, rng);
    auto k = random_kernel(3, 4, 4, 2, true, rng);
    auto g = random_tensor({4}, rng), s = random_tensor({4}, rng);
    auto y = layer_norm(relu(conv1d(x, k)), g, s);
    auto r = random_tensor({2, 9, 4}, rng, -1, 1, false);
    weighted_sum(y, r).backward();
    std::vector<double> out(y.data().begin(), y.data().end());
    out.insert(out.end(), k.weight.grad().begin(), k.weight.grad().end());
    out.insert(out.end(), x.grad().begin(), x.grad().end());
    return out;
  };
  CHECK(run() == run());
}
