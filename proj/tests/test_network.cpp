#include "doctest.h"

#include <cmath>
#include <random>

#include "hjbnn/error.hpp"
#include "hjbnn/network.hpp"
#include "support.hpp"

using namespace hjbnn;

namespace {

Network zero_net(Architecture a) { return unpack(a, Vector(a.weight_count())); }

Vector random_pattern(std::size_t n, std::mt19937_64& gen) {
  Vector x = oracle::random_vector(n, gen, 0.0, 1.0);
  x[n - 1] = 1.0;
  return x;
}

}  // namespace

TEST_CASE("sigmoid values and limits") {
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(sigmoid(800.0) < 1.0);
  CHECK(sigmoid(800.0) > 0.999999);
  CHECK(sigmoid(-800.0) > 0.0);
  CHECK(sigmoid(-800.0) < 1e-300);
  CHECK(sigmoid(2.0) == doctest::Approx(oracle::logistic(2.0)));
  CHECK(sigmoid(-2.0) == doctest::Approx(oracle::logistic(-2.0)));
}

TEST_CASE("architecture parsing and validation") {
  const Architecture a = parse_architecture("3-4-1");
  CHECK(a == Architecture{3, 4, 1});
  CHECK(a.weight_count() == 16);
  CHECK(a.to_string() == "3-4-1");
  CHECK_THROWS_AS(parse_architecture("3-4"), ParseError);
  CHECK_THROWS_AS(parse_architecture("3-x-1"), ParseError);
  CHECK_THROWS_AS(parse_architecture("3-0-1"), ParameterError);
}

TEST_CASE("forward examples") {
  const auto z = forward(zero_net({3, 4, 2}), Vector{0.3, 0.7, 1.0});
  for (double v : z.hidden) CHECK(v == 0.5);
  for (double v : z.output) CHECK(v == 0.5);

  Network n = zero_net({1, 1, 1});
  n.w1(0, 0) = 1.0;
  n.w2(0, 0) = 1.0;
  const auto t = forward(n, Vector{0.0});
  CHECK(t.hidden[0] == 0.5);
  CHECK(t.output[0] == doctest::Approx(0.62246).epsilon(1e-5));

  CHECK_THROWS_AS(forward(n, Vector{0.0, 1.0}), DimensionError);
}

TEST_CASE("forward matches the layer equations") {
  std::mt19937_64 gen(1);
  for (int t = 0; t < 20; ++t) {
    const Network net = init_weights({4, 5, 3}, t, 2.0);
    const Vector x = random_pattern(4, gen);
    const auto got = forward(net, x).output;
    const auto want = oracle::forward(net, x);
    for (std::size_t o = 0; o < 3; ++o) CHECK(got[o] == doctest::Approx(want[o]).epsilon(1e-14));
  }
}

TEST_CASE("jacobian hand example") {
  Network n = zero_net({1, 1, 1});
  n.w1(0, 0) = 1.0;
  n.w2(0, 0) = 1.0;
  const Matrix j = jacobian(n, Vector{0.0});
  CHECK(j(0, 0) == doctest::Approx(0.11750).epsilon(1e-4));
  CHECK(j(0, 1) == 0.0);  // x = 0 kills the hidden-layer column
}

TEST_CASE("jacobian matches central differences") {
  std::mt19937_64 gen(2);
  for (const auto& arch : {Architecture{3, 4, 1}, Architecture{3, 6, 1}, Architecture{5, 3, 2},
                           Architecture{9, 30, 1}}) {
    for (int t = 0; t < 5; ++t) {
      const Network net = init_weights(arch, 100 + t);
      const Vector x = random_pattern(arch.n_input, gen);
      const Matrix analytic = jacobian(net, x);
      CHECK(analytic.rows() == arch.n_output);
      CHECK(analytic.cols() == arch.weight_count());
      CHECK(oracle::max_abs_diff(analytic, oracle::fd_jacobian(net, x)) <= 1e-8);
      CHECK(oracle::max_abs_diff(finite_difference_jacobian(net, x), oracle::fd_jacobian(net, x)) <=
            1e-9);
    }
  }
}

TEST_CASE("saturated output has a vanishing jacobian row") {
  Network n = unpack({2, 2, 1}, Vector(6, 40.0));
  const Matrix j = jacobian(n, Vector{1.0, 1.0});
  CHECK(max_abs(j) < 1e-12);
}

TEST_CASE("pack and unpack") {
  const Architecture a{3, 4, 1};
  CHECK(pack(zero_net(a)).size() == 16);
  const Network z = unpack(a, Vector(16));
  CHECK(max_abs(z.w1) == 0.0);
  CHECK(max_abs(z.w2) == 0.0);

  const Network n = init_weights({4, 3, 2}, 9);
  const Network back = unpack(n.arch, pack(n));
  CHECK(back.w1 == n.w1);
  CHECK(back.w2 == n.w2);
  CHECK_THROWS_AS(unpack(a, Vector(15)), DimensionError);

  // Output layer first, row-major.
  const Vector w = pack(n);
  CHECK(w[0] == n.w2(0, 0));
  CHECK(w[3] == n.w2(1, 0));
  CHECK(w[6] == n.w1(0, 0));
  CHECK(w[7] == n.w1(0, 1));
}

TEST_CASE("perturbing packed weight k moves the output along jacobian column k") {
  std::mt19937_64 gen(12);
  const Network n = init_weights({3, 4, 2}, 5);
  const Vector x = random_pattern(3, gen);
  const Matrix j = jacobian(n, x);
  const double h = 1e-7;
  for (std::size_t k = 0; k < n.arch.weight_count(); ++k) {
    Vector du(n.arch.weight_count());
    du[k] = 1.0;
    Network moved = n;
    add_scaled(moved, du, h);
    const auto y0 = forward(n, x).output;
    const auto y1 = forward(moved, x).output;
    for (std::size_t o = 0; o < 2; ++o) CHECK((y1[o] - y0[o]) / h == doctest::Approx(j(o, k)).epsilon(1e-5));
  }
}

TEST_CASE("init_weights determinism and support") {
  const Architecture a{3, 6, 1};
  CHECK(init_weights(a, 7) == init_weights(a, 7));
  CHECK(weight_hash(init_weights(a, 7)) == weight_hash(init_weights(a, 7)));
  CHECK_FALSE(pack(init_weights(a, 7)) == pack(init_weights(a, 8)));
  CHECK(weight_hash(init_weights(a, 7)) != weight_hash(init_weights(a, 8)));
  const Network half = init_weights({9, 50, 1}, 3, 0.5);
  CHECK(max_abs(pack(half)) < 0.5);
  CHECK(half.init.has_value());
  CHECK(half.init->seed == 3);
  CHECK_THROWS_AS(init_weights(a, 1, 0.0), ParameterError);
}

TEST_CASE("allocation-free kernels agree with the allocating versions") {
  std::mt19937_64 gen(6);
  const Network n = init_weights({4, 5, 2}, 1);
  const Vector x = random_pattern(4, gen);
  std::vector<double> hidden(5), output(2), jac(2 * n.arch.weight_count());
  forward_jacobian_into(n, x.span(), hidden, output, jac);
  const Matrix j = jacobian(n, x);
  for (std::size_t i = 0; i < jac.size(); ++i) CHECK(jac[i] == j.span()[i]);
  const auto t = forward(n, x);
  CHECK(output[0] == t.output[0]);
  CHECK(output[1] == t.output[1]);
}
