#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "lane/gradcheck.hpp"
#include "lane/ops.hpp"
#include "lane/optim.hpp"
#include "lane/rng.hpp"
#include "lane/tensor.hpp"

using namespace lane;

namespace {

Tensor random_tensor(std::vector<int64_t> shape, Rng& rng, bool grad = true, double s = 1.0) {
  int64_t n = 1;
  for (int64_t d : shape) n *= d;
  std::vector<double> data(static_cast<size_t>(n));
  for (double& x : data) x = s * rng.normal();
  return Tensor::from_data(std::move(shape), std::move(data), grad);
}

// Slow matmul in a different loop order than the production kernel.
std::vector<double> matmul_ref(const std::vector<double>& a, const std::vector<double>& b,
                               int64_t m, int64_t k, int64_t n) {
  std::vector<double> c(static_cast<size_t>(m * n), 0.0);
  for (int64_t j = 0; j < n; ++j) {
    for (int64_t i = 0; i < m; ++i) {
      double acc = 0.0;
      for (int64_t kk = 0; kk < k; ++kk) acc += a[i * k + kk] * b[kk * n + j];
      c[i * n + j] = acc;
    }
  }
  return c;
}

}  // namespace

TEST_CASE("matmul: matches slow reference") {
  Rng rng(1);
  const Tensor a = random_tensor({7, 5}, rng);
  const Tensor b = random_tensor({5, 9}, rng);
  const Tensor c = matmul(a, b);
  const auto ref = matmul_ref(a.data(), b.data(), 7, 5, 9);
  for (size_t i = 0; i < ref.size(); ++i) {
    CHECK(c.data()[i] == doctest::Approx(ref[i]).epsilon(1e-12));
  }
}

TEST_CASE("matmul: shape mismatch reports both shapes") {
  Rng rng(2);
  const Tensor a = random_tensor({3, 4}, rng);
  const Tensor b = random_tensor({5, 2}, rng);
  CHECK_THROWS_WITH_AS(matmul(a, b), doctest::Contains("[3,4]"), NumericError);
}

TEST_CASE("softmax: uniform logits and row sums") {
  const Tensor s = softmax_lastdim(Tensor::from_data({1, 3}, {0.0, 0.0, 0.0}));
  for (double v : s.data()) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  Rng rng(3);
  const Tensor x = random_tensor({6, 11}, rng, false, 3.0);
  const Tensor p = softmax_lastdim(x);
  for (int64_t i = 0; i < 6; ++i) {
    double sum = 0.0;
    for (int64_t j = 0; j < 11; ++j) sum += p.data()[i * 11 + j];
    CHECK(std::abs(sum - 1.0) <= 1e-12);
  }
}

TEST_CASE("cross_entropy: uniform logits give ln(vocab)") {
  const Tensor logits = Tensor::zeros({4, 517});
  const Tensor loss = cross_entropy(logits, {0, 99, 516, 42}, /*ignore_id=*/514);
  CHECK(loss.item() == doctest::Approx(std::log(517.0)).epsilon(1e-12));
}

TEST_CASE("cross_entropy: ignore id and hand-computed half-PAD fixture") {
  // Two active rows with logits [1,0,0] target 0 and [0,2,0] target 1;
  // expected mean of -log softmax by hand.
  std::vector<double> data = {1, 0, 0, 0, 2, 0, 5, 5, 5, 9, 9, 9};
  const Tensor logits = Tensor::from_data({4, 3}, std::move(data));
  const double l1 = -std::log(std::exp(1.0) / (std::exp(1.0) + 2.0));
  const double l2 = -std::log(std::exp(2.0) / (std::exp(2.0) + 2.0));
  const Tensor loss = cross_entropy(logits, {0, 1, 2, 2}, /*ignore_id=*/2);
  CHECK(loss.item() == doctest::Approx(0.5 * (l1 + l2)).epsilon(1e-12));

  CHECK_THROWS_WITH_AS(cross_entropy(logits, {2, 2, 2, 2}, 2), doctest::Contains("ignored"),
                       NumericError);
}

TEST_CASE("cross_entropy: near-one-hot logits give near-zero loss") {
  std::vector<double> data(2 * 5, 0.0);
  data[0 * 5 + 3] = 1e4;
  data[1 * 5 + 1] = 1e4;
  const Tensor loss = cross_entropy(Tensor::from_data({2, 5}, std::move(data)), {3, 1}, -1);
  CHECK(loss.item() < 1e-3);
}

TEST_CASE("attention: identity-like mask returns the attended V row") {
  Rng rng(4);
  const int64_t n = 5, d = 8;
  const Tensor q = random_tensor({n, d}, rng, false);
  const Tensor k = random_tensor({n, d}, rng, false);
  const Tensor v = random_tensor({n, d}, rng, false);
  BoolMask mask{n, n, std::vector<uint8_t>(static_cast<size_t>(n * n), 0)};
  for (int64_t i = 0; i < n; ++i) mask.set(i, (i + 2) % n, true);
  const Tensor out = attention(q, k, v, mask, 2);
  for (int64_t i = 0; i < n; ++i) {
    for (int64_t j = 0; j < d; ++j) {
      CHECK(out.data()[i * d + j] == doctest::Approx(v.data()[((i + 2) % n) * d + j]));
    }
  }
}

TEST_CASE("attention: output rows are convex combinations of V rows") {
  Rng rng(5);
  const Tensor q = random_tensor({4, 6}, rng, false);
  const Tensor k = random_tensor({7, 6}, rng, false);
  const Tensor v = random_tensor({7, 6}, rng, false);
  const Tensor out = attention(q, k, v, BoolMask::all_true(4, 7), 3);
  // Each head column of the output must lie within [min, max] of V's rows.
  for (int64_t j = 0; j < 6; ++j) {
    double lo = v.data()[j], hi = v.data()[j];
    for (int64_t r = 1; r < 7; ++r) {
      lo = std::min(lo, v.data()[r * 6 + j]);
      hi = std::max(hi, v.data()[r * 6 + j]);
    }
    for (int64_t i = 0; i < 4; ++i) {
      CHECK(out.data()[i * 6 + j] >= lo - 1e-12);
      CHECK(out.data()[i * 6 + j] <= hi + 1e-12);
    }
  }
}

TEST_CASE("attention: fully-masked row rejected") {
  Rng rng(6);
  const Tensor q = random_tensor({2, 4}, rng, false);
  const Tensor k = random_tensor({3, 4}, rng, false);
  const Tensor v = random_tensor({3, 4}, rng, false);
  BoolMask mask = BoolMask::all_true(2, 3);
  for (int64_t j = 0; j < 3; ++j) mask.set(1, j, false);
  CHECK_THROWS_WITH_AS(attention(q, k, v, mask, 2), doctest::Contains("fully-masked"),
                       NumericError);
}

TEST_CASE("non-finite results are reported with the op name") {
  const Tensor big = Tensor::from_data({1}, {1e308});
  CHECK_THROWS_WITH_AS(mul(big, big), doctest::Contains("mul"), NumericError);
}

TEST_CASE("gradcheck: every op") {
  Rng rng(7);
  const double tol = 1e-6;  // simple ops sit far below the 1e-4 gate

  SUBCASE("matmul") {
    auto f = [](const std::vector<Tensor>& in) { return mean_all(matmul(in[0], in[1])); };
    CHECK(gradcheck(f, {random_tensor({4, 3}, rng), random_tensor({3, 5}, rng)}).max_rel_error <
          tol);
  }
  SUBCASE("add/scale/mul") {
    auto f = [](const std::vector<Tensor>& in) {
      return mean_all(mul(add(in[0], in[1]), scale(in[0], 0.7)));
    };
    CHECK(gradcheck(f, {random_tensor({3, 4}, rng), random_tensor({3, 4}, rng)}).max_rel_error <
          tol);
  }
  SUBCASE("rowvec ops + reshape") {
    auto f = [](const std::vector<Tensor>& in) {
      return mean_all(add_rowvec(mul_rowvec(in[0], reshape(in[1], {4})), reshape(in[2], {4})));
    };
    CHECK(gradcheck(f, {random_tensor({3, 4}, rng), random_tensor({1, 4}, rng),
                        random_tensor({4}, rng)})
              .max_rel_error < tol);
  }
  SUBCASE("concat/slice") {
    auto f = [](const std::vector<Tensor>& in) {
      return mean_all(slice_rows(concat_rows(in[0], in[1]), 1, 4));
    };
    CHECK(gradcheck(f, {random_tensor({2, 3}, rng), random_tensor({3, 3}, rng)}).max_rel_error <
          tol);
  }
  SUBCASE("embedding") {
    auto f = [](const std::vector<Tensor>& in) {
      return mean_all(embedding(in[0], {2, 0, 2, 1}));
    };
    CHECK(gradcheck(f, {random_tensor({3, 4}, rng)}).max_rel_error < tol);
  }
  SUBCASE("softmax") {
    auto f = [](const std::vector<Tensor>& in) {
      return mean_all(mul(softmax_lastdim(in[0]), in[1]));
    };
    CHECK(gradcheck(f, {random_tensor({3, 6}, rng), random_tensor({3, 6}, rng)}).max_rel_error <
          tol);
  }
  SUBCASE("gelu") {
    auto f = [](const std::vector<Tensor>& in) { return mean_all(gelu(in[0])); };
    CHECK(gradcheck(f, {random_tensor({4, 4}, rng)}).max_rel_error < tol);
  }
  SUBCASE("linear") {
    auto f = [](const std::vector<Tensor>& in) {
      return mean_all(linear(in[0], in[1], reshape(in[2], {5})));
    };
    CHECK(gradcheck(f, {random_tensor({3, 4}, rng), random_tensor({4, 5}, rng),
                        random_tensor({5}, rng)})
              .max_rel_error < tol);
  }
  SUBCASE("layer_norm") {
    auto f = [](const std::vector<Tensor>& in) {
      return mean_all(mul(layer_norm(in[0], reshape(in[1], {6}), reshape(in[2], {6})), in[3]));
    };
    CHECK(gradcheck(f, {random_tensor({3, 6}, rng), random_tensor({6}, rng),
                        random_tensor({6}, rng), random_tensor({3, 6}, rng)})
              .max_rel_error < 1e-5);
  }
  SUBCASE("attention") {
    BoolMask mask = BoolMask::all_true(3, 5);
    mask.set(0, 4, false);
    mask.set(2, 1, false);
    mask.set(2, 2, false);
    auto f = [mask](const std::vector<Tensor>& in) {
      return mean_all(mul(attention(in[0], in[1], in[2], mask, 2), in[3]));
    };
    CHECK(gradcheck(f, {random_tensor({3, 6}, rng), random_tensor({5, 6}, rng),
                        random_tensor({5, 6}, rng), random_tensor({3, 6}, rng)})
              .max_rel_error < 1e-5);
  }
  SUBCASE("cross_entropy") {
    auto f = [](const std::vector<Tensor>& in) {
      return cross_entropy(in[0], {1, 3, 0, 2}, /*ignore_id=*/0);
    };
    CHECK(gradcheck(f, {random_tensor({4, 5}, rng)}).max_rel_error < 1e-5);
  }
  SUBCASE("sum_all") {
    auto f = [](const std::vector<Tensor>& in) { return sum_all(mul(in[0], in[0])); };
    CHECK(gradcheck(f, {random_tensor({5}, rng)}).max_rel_error < tol);
  }
}

TEST_CASE("gradcheck: analytic example f(x)=sum(x^2)") {
  Rng rng(8);
  const Tensor x = random_tensor({10}, rng);
  auto f = [](const std::vector<Tensor>& in) { return sum_all(mul(in[0], in[0])); };
  const auto report = gradcheck(f, {x});
  CHECK(report.max_rel_error < 1e-7);
  backward(f({x}));
  for (int64_t i = 0; i < 10; ++i) {
    CHECK(x.grad()[i] == doctest::Approx(2.0 * x.data()[i]).epsilon(1e-10));
  }
}

TEST_CASE("gradcheck: layer_norm at near-constant input stays finite via the floor") {
  std::vector<double> data(8, 0.5);
  for (size_t i = 0; i < data.size(); ++i) data[i] += 1e-7 * static_cast<double>(i);
  const Tensor x = Tensor::from_data({1, 8}, std::move(data), true);
  const Tensor g = Tensor::from_data({8}, std::vector<double>(8, 1.0), true);
  const Tensor b = Tensor::from_data({8}, std::vector<double>(8, 0.0), true);
  auto f = [](const std::vector<Tensor>& in) {
    return mean_all(mul(layer_norm(in[0], in[1], in[2]), in[0]));
  };
  CHECK(gradcheck(f, {x, g, b}, 1e-6).max_rel_error < 1e-4);
}

TEST_CASE("determinism: identical inputs give bitwise-identical results") {
  Rng rng(9);
  const Tensor a = random_tensor({6, 6}, rng, false);
  const Tensor b = random_tensor({6, 6}, rng, false);
  const Tensor c1 = attention(matmul(a, b), a, b, BoolMask::all_true(6, 6), 3);
  const Tensor c2 = attention(matmul(a, b), a, b, BoolMask::all_true(6, 6), 3);
  for (size_t i = 0; i < c1.data().size(); ++i) {
    CHECK(c1.data()[i] == c2.data()[i]);
  }
}

TEST_CASE("adam: zero gradients leave parameters unchanged") {
  ParamList params;
  params.emplace_back("w", Tensor::from_data({3}, {1.0, -2.0, 3.0}, true));
  params[0].second.zero_grad();
  AdamState state = AdamState::init(params, {});
  adam_step(params, state);
  CHECK(state.step == 1);
  CHECK(params[0].second.data() == std::vector<double>{1.0, -2.0, 3.0});
}

TEST_CASE("adam: unit gradient at step 1 moves by ~lr") {
  ParamList params;
  params.emplace_back("w", Tensor::from_data({1}, {0.0}, true));
  params[0].second.node()->grad = {1.0};
  AdamConfig cfg;
  cfg.lr_max = 1e-3;
  cfg.lr_min = 1e-3;
  AdamState state = AdamState::init(params, cfg);
  adam_step(params, state);
  CHECK(params[0].second.data()[0] == doctest::Approx(-1e-3).epsilon(1e-6));
}

TEST_CASE("adam: quadratic bowl converges") {
  ParamList params;
  params.emplace_back("x", Tensor::from_data({1}, {-4.0}, true));
  AdamConfig cfg;
  cfg.lr_max = 0.1;
  cfg.lr_min = 0.1;
  AdamState state = AdamState::init(params, cfg);
  for (int i = 0; i < 500; ++i) {
    Tensor x = params[0].second;
    x.zero_grad();
    const Tensor diff = add(x, Tensor::from_data({1}, {-3.0}));
    backward(mul(diff, diff));
    adam_step(params, state);
  }
  CHECK(std::abs(params[0].second.data()[0] - 3.0) < 0.01);
}

TEST_CASE("adam: NaN gradient aborts with the parameter name") {
  ParamList params;
  params.emplace_back("w.bad", Tensor::from_data({1}, {0.0}, true));
  params[0].second.node()->grad = {std::numeric_limits<double>::quiet_NaN()};
  AdamState state = AdamState::init(params, {});
  CHECK_THROWS_WITH_AS(adam_step(params, state), doctest::Contains("w.bad"), NumericError);
}

TEST_CASE("cosine schedule stays inside [lr_min, lr_max]") {
  AdamConfig cfg;
  cfg.lr_max = 1e-4;
  cfg.lr_min = 1e-6;
  cfg.total_steps = 1000;
  CHECK(cosine_lr(cfg, 1) == doctest::Approx(1e-4));
  CHECK(cosine_lr(cfg, 1000) == doctest::Approx(1e-6));
  for (int64_t s = 1; s <= 1200; ++s) {
    const double lr = cosine_lr(cfg, s);
    CHECK(lr >= 1e-6 - 1e-15);
    CHECK(lr <= 1e-4 + 1e-15);
    if (s > 1 && s <= 1000) CHECK(lr <= cosine_lr(cfg, s - 1) + 1e-18);
  }
}

TEST_CASE("activation meter tracks live metered tensors") {
  meter::reset_peak();
  const int64_t before = meter::current_bytes();
  {
    MeterScope scope;
    const Tensor a = Tensor::zeros({100});
    CHECK(meter::current_bytes() >= before + 800);
    {
      const Tensor b = Tensor::zeros({1000});
      CHECK(meter::peak_bytes() >= before + 8800);
    }
  }
  CHECK(meter::current_bytes() == before);
}
