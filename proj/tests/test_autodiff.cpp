#include <doctest.h>

#include <cmath>

#include "phsysid/autodiff.hpp"
#include "phsysid/rng.hpp"

using namespace phsysid;
using ad::Var;

TEST_CASE("power rule") {
  const auto builder = [](ad::Tape&, const std::vector<Var>& th) { return th[0] * th[0]; };
  const ad::GradResult r = ad::grad(builder, {3.0});
  CHECK(r.loss == doctest::Approx(9.0));
  CHECK(r.grad[0] == doctest::Approx(6.0));
}

TEST_CASE("chain rule through sin(theta*t)") {
  const double pi = 3.14159265358979323846;
  const auto builder = [pi](ad::Tape&, const std::vector<Var>& th) {
    return ad::sin(th[0] * pi);
  };
  const ad::GradResult r = ad::grad(builder, {0.5});
  CHECK(r.loss == doctest::Approx(1.0));
  CHECK(r.grad[0] == doctest::Approx(pi * std::cos(pi / 2.0)).epsilon(1e-12));
}

TEST_CASE("finite_diff_check on a quadratic is exact up to rounding") {
  const auto builder = [](ad::Tape&, const std::vector<Var>& th) {
    Var acc = th[0] * th[0];
    acc = acc + th[1] * th[1] * 2.0;
    acc = acc + th[0] * th[1];
    return acc;
  };
  CHECK(ad::finite_diff_check(builder, {0.7, -1.3}, 1e-4) < 1e-9);
}

TEST_CASE("gradient of a batch sum equals the sum of per-sample gradients") {
  const Vec xs = {0.3, -1.2, 0.8, 2.1};
  const auto sample_builder = [](double x) {
    return [x](ad::Tape&, const std::vector<Var>& th) {
      return ad::sin(th[0] * x) + th[1] * th[1] * x;
    };
  };
  const std::vector<double> params = {0.4, -0.9};
  Vec total(2, 0.0);
  for (double x : xs) {
    const ad::GradResult r = ad::grad(sample_builder(x), params);
    total[0] += r.grad[0];
    total[1] += r.grad[1];
  }
  const auto batch_builder = [&xs](ad::Tape& tp, const std::vector<Var>& th) {
    Var acc = tp.constant(0.0);
    for (double x : xs) acc = acc + ad::sin(th[0] * x) + th[1] * th[1] * x;
    return acc;
  };
  const ad::GradResult rb = ad::grad(batch_builder, params);
  CHECK(rb.grad[0] == doctest::Approx(total[0]).epsilon(1e-12));
  CHECK(rb.grad[1] == doctest::Approx(total[1]).epsilon(1e-12));
}

TEST_CASE("pruned slots are hard-zeroed") {
  const auto builder = [](ad::Tape&, const std::vector<Var>& th) {
    return th[0] * th[1] + th[1];
  };
  const std::vector<std::uint8_t> mask = {0, 1};
  const ad::GradResult r = ad::grad(builder, {2.0, 0.0}, &mask);
  CHECK(r.grad[0] == 0.0);  // d/dth0 = th1 = 0
  CHECK(r.grad[1] == 0.0);  // masked, even though d/dth1 = 3
}

TEST_CASE("relu subgradient at 0 is 0") {
  const auto builder = [](ad::Tape&, const std::vector<Var>& th) { return ad::relu(th[0]); };
  CHECK(ad::grad(builder, {0.0}).grad[0] == 0.0);
  CHECK(ad::grad(builder, {1.5}).grad[0] == 1.0);
  CHECK(ad::grad(builder, {-1.5}).grad[0] == 0.0);
}

TEST_CASE("min/max select one branch, ties toward the first argument") {
  const auto min_builder = [](ad::Tape&, const std::vector<Var>& th) {
    return ad::vmin(th[0] * 2.0, th[1] * 3.0);
  };
  const auto max_builder = [](ad::Tape&, const std::vector<Var>& th) {
    return ad::vmax(th[0] * 2.0, th[1] * 3.0);
  };
  // tie at (3, 2): 2*3 == 3*2 == 6
  ad::GradResult r = ad::grad(min_builder, {3.0, 2.0});
  CHECK(r.grad[0] == 2.0);
  CHECK(r.grad[1] == 0.0);
  r = ad::grad(max_builder, {3.0, 2.0});
  CHECK(r.grad[0] == 2.0);
  CHECK(r.grad[1] == 0.0);
  // clear winner
  r = ad::grad(min_builder, {1.0, 5.0});
  CHECK(r.grad[0] == 2.0);
  CHECK(r.grad[1] == 0.0);
  r = ad::grad(max_builder, {1.0, 5.0});
  CHECK(r.grad[0] == 0.0);
  CHECK(r.grad[1] == 3.0);
}

TEST_CASE("abs composition has subgradient 0 at 0") {
  const auto builder = [](ad::Tape&, const std::vector<Var>& th) { return ad::abs_v(th[0]); };
  CHECK(ad::grad(builder, {0.0}).grad[0] == 0.0);
  CHECK(ad::grad(builder, {2.0}).grad[0] == 1.0);
  CHECK(ad::grad(builder, {-2.0}).grad[0] == -1.0);
}

TEST_CASE("pow_int gradient") {
  const auto builder = [](ad::Tape&, const std::vector<Var>& th) {
    return ad::pow_int(th[0], 4);
  };
  const ad::GradResult r = ad::grad(builder, {1.5});
  CHECK(r.loss == doctest::Approx(std::pow(1.5, 4)));
  CHECK(r.grad[0] == doctest::Approx(4.0 * std::pow(1.5, 3)));
}

TEST_CASE("fused MLP node matches finite differences") {
  Rng rng(11);
  const std::vector<int> layers = {3, 8, 5, 2};
  const int n = ad::mlp_param_count(layers);
  std::vector<double> params(n);
  for (double& v : params) v = rng.uniform(-0.7, 0.7);
  const Vec x = {0.4, -0.8, 0.2};
  const auto builder = [&](ad::Tape& tp, const std::vector<Var>& th) {
    (void)th;
    std::vector<Var> in(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) in[i] = tp.state(x[i]);
    const std::vector<Var> out = tp.mlp(layers, 0, in);
    Var acc = out[0] * out[0];
    for (std::size_t k = 1; k < out.size(); ++k) acc = acc + out[k] * out[k];
    return acc;
  };
  CHECK(ad::finite_diff_check(builder, params, 1e-6) < 1e-6);
}

TEST_CASE("MLP input gradients flow to upstream nodes") {
  // The net input is itself parameter-dependent; compare the full chain
  // against finite differences.
  Rng rng(13);
  const std::vector<int> layers = {2, 6, 1};
  const int n = ad::mlp_param_count(layers);
  std::vector<double> params(n);
  for (double& v : params) v = rng.uniform(-1.0, 1.0);
  params.push_back(0.37);  // the scalar feeding the inputs
  const auto builder = [&](ad::Tape&, const std::vector<Var>& th) {
    std::vector<Var> in = {th[n] * 1.0, th[n] * -2.0};
    return th[n].tape->mlp(layers, 0, in)[0];
  };
  CHECK(ad::finite_diff_check(builder, params, 1e-6) < 1e-6);
}

TEST_CASE("non-finite primal reports the node") {
  const auto builder = [](ad::Tape& tp, const std::vector<Var>& th) {
    return th[0] * (1.0 / 0.0) + tp.constant(1.0);
  };
  CHECK_THROWS_AS((void)ad::grad(builder, {1.0}), ad::NonFiniteError);
}
