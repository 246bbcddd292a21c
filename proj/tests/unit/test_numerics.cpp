#include <doctest.h>

#include <array>
#include <cmath>
#include <cstring>

#include "../support/grad_suite.hpp"
#include "xgen/error.hpp"
#include "xgen/gradcheck.hpp"
#include "xgen/layers.hpp"
#include "xgen/optim.hpp"
#include "xgen/rng.hpp"
#include "xgen/tensor.hpp"

using namespace xgen;

namespace {

// Reference xoshiro256** seeded through splitmix64, written from the
// published algorithm.
struct ReferenceXoshiro {
  std::array<std::uint64_t, 4> s{};
  explicit ReferenceXoshiro(std::uint64_t seed) {
    for (auto& w : s) {
      seed += 0x9e3779b97f4a7c15ULL;
      std::uint64_t z = seed;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
      w = z ^ (z >> 31);
    }
  }
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t next() {
    const std::uint64_t result = rotl(s[1] * 5, 7) * 9;
    const std::uint64_t t = s[1] << 17;
    s[2] ^= s[0];
    s[3] ^= s[1];
    s[1] ^= s[2];
    s[0] ^= s[3];
    s[2] ^= t;
    s[3] = rotl(s[3], 45);
    return result;
  }
};

std::vector<double> values(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

}  // namespace

TEST_SUITE("numerics") {

TEST_CASE("rng matches the reference generator") {
  for (std::uint64_t seed : {0ULL, 1ULL, 42ULL, 0xdeadbeefULL}) {
    Rng rng(seed);
    ReferenceXoshiro ref(seed);
    for (int i = 0; i < 100; ++i) CHECK(rng.next_u64() == ref.next());
  }
}

TEST_CASE("rng first output from a known state") {
  Rng rng;
  Rng::State st;
  st.s = {1, 2, 3, 4};
  rng.set_state(st);
  CHECK(rng.next_u64() == 11520u);
}

TEST_CASE("rng uniform and state round trip") {
  Rng a(9);
  for (int i = 0; i < 1000; ++i) {
    const double u = a.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  const auto st = a.state();
  const double x = a.normal();
  a.set_state(st);
  CHECK(a.normal() == x);
}

TEST_CASE("matmul with identity returns the input") {
  const Tensor a = Tensor::constant({2, 2}, {1, 2, 3, 4});
  const Tensor eye = Tensor::constant({2, 2}, {1, 0, 0, 1});
  CHECK(values(matmul(a, eye)) == std::vector<double>{1, 2, 3, 4});
}

TEST_CASE("softmax of zeros is uniform") {
  const Tensor s = softmax(Tensor::zeros({1, 3}));
  for (double v : s.data()) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("softmax rows sum to one and stay positive") {
  Rng rng(3);
  const Tensor x = scale(sample_gaussian(rng, {7, 11}), 20.0);
  const Tensor s = softmax(x);
  for (std::size_t r = 0; r < 7; ++r) {
    double total = 0.0;
    for (std::size_t c = 0; c < 11; ++c) {
      CHECK(s.at(r, c) > 0.0);
      total += s.at(r, c);
    }
    CHECK(std::abs(total - 1.0) < 1e-9);
  }
}

TEST_CASE("tanh at zero") {
  Tensor x = Tensor::parameter({1}, {0.0});
  const Tensor y = tanh(x);
  CHECK(y.item() == 0.0);
  backward(sum(y));
  CHECK(x.grad()[0] == doctest::Approx(1.0));
}

TEST_CASE("backward of sum of squares") {
  Tensor x = Tensor::parameter({3}, {1, 2, 3});
  backward(sum(mul(x, x)));
  CHECK(std::vector<double>(x.grad().begin(), x.grad().end()) == std::vector<double>{2, 4, 6});
}

TEST_CASE("backward of mean") {
  Tensor x = Tensor::parameter({4}, {5, -1, 2, 7});
  backward(mean(x));
  for (double g : x.grad()) CHECK(g == 0.25);
}

TEST_CASE("gradients accumulate until zeroed") {
  Tensor x = Tensor::parameter({2}, {1, 1});
  backward(sum(x));
  backward(sum(x));
  CHECK(x.grad()[0] == 2.0);
  x.zero_grad();
  CHECK(x.grad()[0] == 0.0);
}

TEST_CASE("non-scalar loss is rejected") {
  Tensor x = Tensor::parameter({3}, {1, 2, 3});
  CHECK_THROWS_AS(backward(mul(x, x)), ContractError);
  Tape::active().clear();
}

TEST_CASE("shape mismatch names the op and both shapes") {
  const Tensor a = Tensor::zeros({2, 3});
  const Tensor b = Tensor::zeros({4, 2});
  try {
    (void)matmul(a, b);
    FAIL("expected DimensionError");
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("matmul") != std::string::npos);
    CHECK(msg.find("[2,3]") != std::string::npos);
    CHECK(msg.find("[4,2]") != std::string::npos);
  }
  CHECK_THROWS_AS((void)add(Tensor::zeros({2, 3}), Tensor::zeros({2, 4})), DimensionError);
}

TEST_CASE("non-finite output raises a numeric error") {
  const Tensor big = Tensor::constant({2}, {1e200, 1.0});
  CHECK_THROWS_AS((void)mul(big, big), NumericError);
}

TEST_CASE("broadcast follows the trailing-dimension rule") {
  const Tensor a = Tensor::constant({2, 3}, {1, 2, 3, 4, 5, 6});
  CHECK(values(add(a, Tensor::constant({3}, {10, 20, 30}))) == std::vector<double>{11, 22, 33, 14, 25, 36});
  CHECK(values(mul(a, Tensor::constant({2, 1}, {2, 3}))) == std::vector<double>{2, 4, 6, 12, 15, 18});
  CHECK(values(sub(Tensor::constant({2, 1}, {1, 2}), Tensor::constant({1, 3}, {1, 2, 3}))) ==
        std::vector<double>{0, -1, -2, 1, 0, -1});
}

TEST_CASE("tape is cleared by backward and guards disable recording") {
  Tensor x = Tensor::parameter({2}, {1, 2});
  Tensor y = mul(x, x);
  CHECK(Tape::active().size() > 0);
  backward(sum(y));
  CHECK(Tape::active().size() == 0);
  {
    NoGradGuard guard;
    (void)mul(x, x);
    CHECK(Tape::active().size() == 0);
  }
}

TEST_CASE("grad_check examples") {
  Rng rng(5);
  Tensor x = random_parameter({4, 3}, rng);
  CHECK(grad_check([](const Tensor& t) { return sum(sigmoid(t)); }, x) < 1e-5);

  Tensor z = Tensor::parameter({1}, {0.0});
  CHECK(grad_check([](const Tensor& t) { return sum(mul(t, t)); }, z) == 0.0);

  Tensor w = random_parameter({5, 4}, rng);
  const Tensor in = sample_gaussian(rng, {3, 5});
  const std::vector<std::size_t> y{0, 3, 1};
  CHECK(grad_check([&](const Tensor& t) { return cross_entropy(matmul(in, t), y); }, w) < 1e-4);
}

TEST_CASE("grad_check on a random three-layer mlp") {
  Rng rng(17);
  const Mlp mlp = Mlp::init({5, 6, 6, 3}, rng);
  const Tensor x = sample_gaussian(rng, {4, 5});
  for (const auto& p : tensors_of(mlp.params()))
    CHECK(grad_check([&](const Tensor&) { return sum(square(mlp(x))); }, p) < 1e-4);
}

TEST_CASE("every op kind passes gradient checks") {
  for (const auto& r : xgen::testing::op_grad_checks(20, 101)) {
    INFO(r.name);
    CHECK(r.trials >= 20);
    CHECK(r.max_error < 1e-4);
  }
}

TEST_CASE("adam first step moves by the learning rate") {
  std::vector<Tensor> p{Tensor::parameter({1}, {0.0})};
  p[0].mutable_grad()[0] = 1.0;
  AdamState st;
  st.hyper.lr = 0.1;
  adam_step(p, st);
  CHECK(st.t == 1);
  CHECK(std::abs(p[0].item()) == doctest::Approx(0.1).epsilon(1e-6));
}

TEST_CASE("adam with zero gradients leaves parameters unchanged") {
  Rng rng(2);
  std::vector<Tensor> p{random_parameter({3, 2}, rng), random_parameter({4}, rng)};
  const auto before0 = values(p[0]);
  const auto before1 = values(p[1]);
  AdamState st;
  for (int i = 0; i < 10; ++i) adam_step(p, st);
  CHECK(values(p[0]) == before0);
  CHECK(values(p[1]) == before1);
  CHECK(st.t == 10);
}

TEST_CASE("adam rejects parameters without gradients") {
  std::vector<Tensor> p{Tensor::constant({1}, {0.0})};
  AdamState st;
  CHECK_THROWS_AS(adam_step(p, st), ContractError);
}

TEST_CASE("adam minimizes a convex quadratic") {
  std::vector<Tensor> w{Tensor::parameter({1}, {0.0})};
  AdamState st;
  st.hyper.lr = 0.05;
  int steps = 0;
  for (; steps < 2000 && std::abs(w[0].item() - 3.0) >= 1e-3; ++steps) {
    zero_grads(w);
    backward(sum(square(sub(w[0], Tensor::scalar(3.0)))));
    adam_step(w, st);
  }
  CHECK(std::abs(w[0].item() - 3.0) < 1e-3);
  CHECK(steps <= 2000);
}

TEST_CASE("clip_grad_norm examples") {
  std::vector<Tensor> p{Tensor::parameter({2}, {0, 0})};
  p[0].mutable_grad()[0] = 6.0;
  p[0].mutable_grad()[1] = 8.0;
  CHECK(clip_grad_norm(p, 5.0) == doctest::Approx(0.5));
  CHECK(global_grad_norm(p) == doctest::Approx(5.0));

  p[0].mutable_grad()[0] = 0.6;
  p[0].mutable_grad()[1] = 0.8;
  CHECK(clip_grad_norm(p, 5.0) == 1.0);
  CHECK(p[0].grad()[0] == 0.6);
  CHECK(p[0].grad()[1] == 0.8);
}

TEST_CASE("clip_grad_norm bounds random gradients") {
  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Tensor> p{random_parameter({3, 4}, rng), random_parameter({5}, rng)};
    for (auto& t : p)
      for (auto& g : t.mutable_grad()) g = 10.0 * rng.normal();
    const double max_norm = 0.1 + 5.0 * rng.uniform();
    clip_grad_norm(p, max_norm);
    CHECK(global_grad_norm(p) <= max_norm + 1e-9);
  }
}

TEST_CASE("sample_gaussian is deterministic and standard") {
  Rng a(11), b(11);
  const Tensor x = sample_gaussian(a, {2, 3});
  const Tensor y = sample_gaussian(b, {2, 3});
  CHECK(x.numel() == 6);
  CHECK(std::memcmp(x.data().data(), y.data().data(), 6 * sizeof(double)) == 0);

  Rng rng(12);
  const Tensor s = sample_gaussian(rng, {100000});
  double m = 0.0, v = 0.0;
  for (double d : s.data()) m += d;
  m /= 1e5;
  for (double d : s.data()) v += (d - m) * (d - m);
  v /= 1e5;
  CHECK(std::abs(m) < 0.02);
  CHECK(std::abs(v - 1.0) < 0.02);
}

TEST_CASE("identical seeds give bit-identical loss trajectories") {
  auto run = [] {
    Rng rng(21);
    const Mlp mlp = Mlp::init({4, 8, 3}, rng);
    auto params = tensors_of(mlp.params());
    AdamState st;
    std::vector<double> losses;
    for (int step = 0; step < 100; ++step) {
      const Tensor x = sample_gaussian(rng, {6, 4});
      std::vector<std::size_t> y(6);
      for (auto& v : y) v = rng.uniform_int(3);
      zero_grads(params);
      const Tensor loss = cross_entropy(mlp(x), y);
      losses.push_back(loss.item());
      backward(loss);
      adam_step(params, st);
    }
    return losses;
  };
  const auto a = run();
  const auto b = run();
  CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

}  // TEST_SUITE
