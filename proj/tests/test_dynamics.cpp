#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "phsysid/dynamics.hpp"
#include "phsysid/io.hpp"
#include "phsysid/rng.hpp"

using namespace phsysid;

namespace {

Vec random_state(Rng& rng, int d, double lo = -1.0, double hi = 1.0) {
  Vec x(d);
  for (double& v : x) v = rng.uniform(lo, hi);
  return x;
}

double decomposition_residual(const OdeSystem& sys, const Vec& x, double t) {
  const Vec gh = sys.hamiltonian_gradient(x);
  Vec expected = matvec(sys.structure, gh);
  for (int i = 0; i < sys.dim; ++i) expected[i] -= sys.damping_truth[i] * gh[i];
  const Vec f = sys.force_truth(x, t);
  for (int i = 0; i < sys.dim; ++i) expected[i] += f[i];
  return inf_norm(sys.rhs(x, t) - expected);
}

}  // namespace

TEST_CASE("benchmark Hamiltonian values") {
  const OdeSystem hh = make_benchmark("henon_heiles");
  CHECK(hh.hamiltonian({0, 0, 0, 0}) == 0.0);
  CHECK(hh.hamiltonian({1, 0, 0, 0}) == doctest::Approx(0.5));

  const OdeSystem tanks = make_benchmark("tanks");
  // Table-3 truth: 1/(2J) = 25 for flows, g*rho/(2A) = 4.905 for volumes
  for (int i = 0; i < 5; ++i) {
    Vec x(9, 0.0);
    x[i] = 1.0;
    CHECK(tanks.hamiltonian(x) == doctest::Approx(25.0));
  }
  for (int j = 5; j < 9; ++j) {
    Vec x(9, 0.0);
    x[j] = 1.0;
    CHECK(tanks.hamiltonian(x) == doctest::Approx(4.905));
  }
}

TEST_CASE("eval_rhs examples") {
  const OdeSystem ms = make_benchmark("mass_spring");
  const Vec a = eval_rhs(ms, {1.0, 0.0}, 0.0);
  CHECK(a[0] == doctest::Approx(0.0));
  CHECK(a[1] == doctest::Approx(-1.0));
  const double pi = 3.14159265358979323846;
  const Vec b = eval_rhs(ms, {0.0, 0.0}, pi);
  CHECK(b[0] == doctest::Approx(0.0));
  CHECK(b[1] == doctest::Approx(2.0));  // alpha*sin(omega*pi) = 2*sin(pi/2)

  const OdeSystem hh = make_benchmark("henon_heiles");
  CHECK(inf_norm(eval_rhs(hh, {0, 0, 0, 0}, 0.0)) == 0.0);

  CHECK_THROWS_AS((void)eval_rhs(hh, {0, 0}, 0.0), std::invalid_argument);
}

TEST_CASE("make_benchmark errors") {
  CHECK_THROWS_AS((void)make_benchmark("unknown"), std::invalid_argument);
  SystemParams bad;
  bad["r_p"] = {0.1, 0.2};  // wrong arity
  CHECK_THROWS_AS((void)make_benchmark("tanks", bad), std::invalid_argument);
}

TEST_CASE("structure matrices are antisymmetric") {
  for (const char* name : {"henon_heiles", "nls", "mass_spring", "tanks"}) {
    const OdeSystem sys = make_benchmark(name);
    for (int i = 0; i < sys.dim; ++i)
      for (int j = 0; j < sys.dim; ++j) CHECK(sys.structure[i][j] == -sys.structure[j][i]);
  }
}

TEST_CASE("conservation: grad(H)^T S grad(H) vanishes") {
  Rng rng(17);
  for (const char* name : {"henon_heiles", "nls", "tanks"}) {
    const OdeSystem sys = make_benchmark(name);
    for (int k = 0; k < 1000; ++k) {
      const Vec x = random_state(rng, sys.dim);
      const Vec gh = sys.hamiltonian_gradient(x);
      CHECK(std::abs(dot(gh, matvec(sys.structure, gh))) < 1e-12);
    }
  }
}

TEST_CASE("hamiltonian gradient matches finite differences of H") {
  Rng rng(19);
  for (const char* name : {"henon_heiles", "nls", "mass_spring", "tanks"}) {
    const OdeSystem sys = make_benchmark(name);
    const double h = 1e-6;
    for (int k = 0; k < 50; ++k) {
      const Vec x = random_state(rng, sys.dim);
      const Vec g = sys.hamiltonian_gradient(x);
      for (int j = 0; j < sys.dim; ++j) {
        Vec xp = x, xm = x;
        xp[j] += h;
        xm[j] -= h;
        const double fd = (sys.hamiltonian(xp) - sys.hamiltonian(xm)) / (2.0 * h);
        CHECK(std::abs(g[j] - fd) < 1e-6 * std::max(1.0, std::abs(g[j])));
      }
    }
  }
}

TEST_CASE("pseudo-Hamiltonian decomposition consistency") {
  Rng rng(23);
  for (const char* name : {"henon_heiles", "nls", "mass_spring", "tanks"}) {
    const OdeSystem sys = make_benchmark(name);
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
      const Vec x = random_state(rng, sys.dim);
      const double t = rng.uniform(0.0, 10.0);
      worst = std::max(worst, decomposition_residual(sys, x, t));
    }
    CHECK(worst < 1e-10);
  }
}

TEST_CASE("truth coefficient tables match the hamiltonian") {
  // Evaluating the truth monomial table must reproduce H exactly.
  Rng rng(29);
  for (const char* name : {"henon_heiles", "nls", "mass_spring", "tanks"}) {
    const OdeSystem sys = make_benchmark(name);
    for (int k = 0; k < 100; ++k) {
      const Vec x = random_state(rng, sys.dim);
      double h = 0.0;
      for (const auto& [exps, coeff] : sys.truth_h_terms) {
        double v = coeff;
        for (int j = 0; j < sys.dim; ++j) v *= powi(x[j], exps[j]);
        h += v;
      }
      CHECK(h == doctest::Approx(sys.hamiltonian(x)).epsilon(1e-12));
    }
  }
}

TEST_CASE("tank leak variants") {
  const OdeSystem clamp = make_benchmark("tanks");
  SystemParams p;
  p["leak_literal"] = {1.0};
  const OdeSystem literal = make_benchmark("tanks", p);
  auto leak_of = [](const OdeSystem& sys, double mu4) {
    Vec x(9, 0.0);
    x[8] = mu4;
    return sys.force_truth(x, 0.0)[8];
  };
  // clamp reading: proportional to the level, saturating at 0.3
  CHECK(leak_of(clamp, 0.1) == doctest::Approx(-1.0));
  CHECK(leak_of(clamp, 0.5) == doctest::Approx(-3.0));
  CHECK(leak_of(clamp, -0.2) == doctest::Approx(0.0));
  // printed expression: constant
  CHECK(leak_of(literal, 0.1) == doctest::Approx(-3.0));
  CHECK(leak_of(literal, 0.5) == doctest::Approx(-3.0));
  CHECK(leak_of(literal, -0.2) == doctest::Approx(-3.0));
}

TEST_CASE("two_point_noise_std") {
  CHECK(two_point_noise_std(0.0) == 0.0);
  CHECK(two_point_noise_std(0.2) == doctest::Approx(0.1414213562).epsilon(1e-9));
  CHECK(two_point_noise_std(1.0) == doctest::Approx(0.7071067811).epsilon(1e-9));
  CHECK_THROWS_AS((void)two_point_noise_std(-0.1), std::invalid_argument);
}

TEST_CASE("endpoint averaging reduces noise by sqrt(2)") {
  Rng rng(31);
  const double sigma = 0.2;
  const int n = 100000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double avg = 0.5 * (sigma * rng.gaussian() + sigma * rng.gaussian());
    sum += avg;
    sum_sq += avg * avg;
  }
  const double mean = sum / n;
  const double std = std::sqrt(sum_sq / n - mean * mean);
  CHECK(std::abs(std - two_point_noise_std(sigma)) / two_point_noise_std(sigma) < 0.02);
}

TEST_CASE("generate_dataset shapes and determinism") {
  const OdeSystem hh = make_benchmark("henon_heiles");
  const Dataset pairs = generate_dataset(hh, 30, 0.1, 0.1, -1.0, 1.0, 0.02, 5);
  CHECK(pairs.trajectories.size() == 30);
  for (const Trajectory& t : pairs.trajectories) CHECK(t.size() == 2);

  const OdeSystem ms = make_benchmark("mass_spring");
  const Dataset msd = generate_dataset(ms, 5, 10.0, 0.1, -1.0, 1.0, 0.0, 5);
  CHECK(msd.trajectories.size() == 5);
  for (const Trajectory& t : msd.trajectories) CHECK(t.size() == 101);

  SUBCASE("zero noise equals the clean copy") {
    REQUIRE(msd.clean_copy.has_value());
    for (std::size_t k = 0; k < msd.trajectories.size(); ++k)
      for (std::size_t n = 0; n < msd.trajectories[k].size(); ++n)
        CHECK(msd.trajectories[k].states[n] == msd.clean_copy->at(k).states[n]);
  }
  SUBCASE("same seed is bit-identical") {
    const Dataset a = generate_dataset(hh, 7, 0.1, 0.1, -1.0, 1.0, 0.05, 99);
    const Dataset b = generate_dataset(hh, 7, 0.1, 0.1, -1.0, 1.0, 0.05, 99);
    for (std::size_t k = 0; k < a.trajectories.size(); ++k)
      for (std::size_t n = 0; n < a.trajectories[k].size(); ++n)
        CHECK(a.trajectories[k].states[n] == b.trajectories[k].states[n]);
  }
  SUBCASE("trajectory times are uniformly spaced") {
    for (const Trajectory& t : msd.trajectories)
      for (std::size_t n = 0; n + 1 < t.size(); ++n)
        CHECK(std::abs(t.times[n + 1] - t.times[n] - t.dt) < 1e-12);
  }
}

TEST_CASE("dataset CSV round trip is exact") {
  const OdeSystem ms = make_benchmark("mass_spring");
  const Dataset ds = generate_dataset(ms, 3, 1.0, 0.1, -1.0, 1.0, 0.1, 42);
  const std::string base =
      (std::filesystem::temp_directory_path() / "phsysid_ds_test").string();
  save_dataset_csv(ds, base, "mass_spring", {});
  std::string name;
  SystemParams params;
  const Dataset back = load_dataset_csv(base, &name, &params);
  CHECK(name == "mass_spring");
  CHECK(back.noise_sigma == ds.noise_sigma);
  CHECK(back.seed == ds.seed);
  CHECK(back.dt == ds.dt);
  REQUIRE(back.trajectories.size() == ds.trajectories.size());
  for (std::size_t k = 0; k < ds.trajectories.size(); ++k) {
    REQUIRE(back.trajectories[k].size() == ds.trajectories[k].size());
    for (std::size_t n = 0; n < ds.trajectories[k].size(); ++n) {
      CHECK(back.trajectories[k].times[n] == ds.trajectories[k].times[n]);
      CHECK(back.trajectories[k].states[n] == ds.trajectories[k].states[n]);
    }
  }
  REQUIRE(back.clean_copy.has_value());
  for (std::size_t k = 0; k < ds.clean_copy->size(); ++k)
    for (std::size_t n = 0; n < ds.clean_copy->at(k).size(); ++n)
      CHECK(back.clean_copy->at(k).states[n] == ds.clean_copy->at(k).states[n]);
}
