#include <doctest.h>

#include <cmath>
#include <functional>
#include <set>

#include "phsysid/basis.hpp"
#include "phsysid/rng.hpp"

using namespace phsysid;

namespace {

// Independent counting oracle: enumerate every exponent vector of total
// degree in [1, degree] explicitly.
long long count_monomials(int d, int degree) {
  std::set<std::vector<int>> seen;
  std::vector<int> e(d, 0);
  std::function<void(int)> rec = [&](int pos) {
    if (pos == d) {
      int total = 0;
      for (int v : e) total += v;
      if (total >= 1 && total <= degree) seen.insert(e);
      return;
    }
    for (int v = 0; v <= degree; ++v) {
      e[pos] = v;
      rec(pos + 1);
    }
    e[pos] = 0;
  };
  rec(0);
  return static_cast<long long>(seen.size());
}

void set_coeff(const BasisLibrary& lib, Vec& coeffs, const std::vector<int>& exps,
               double value) {
  for (int i = 0; i < lib.n_terms(); ++i)
    if (lib.terms[i].kind == TermKind::monomial && lib.terms[i].exponents == exps) {
      coeffs[lib.param_offsets[i]] = value;
      return;
    }
  FAIL("term not found");
}

Vec henon_heiles_coeffs(const BasisLibrary& lib) {
  Vec c(lib.total_params(), 0.0);
  set_coeff(lib, c, {2, 0, 0, 0}, 0.5);
  set_coeff(lib, c, {0, 2, 0, 0}, 0.5);
  set_coeff(lib, c, {0, 0, 2, 0}, 0.5);
  set_coeff(lib, c, {0, 0, 0, 2}, 0.5);
  set_coeff(lib, c, {2, 1, 0, 0}, 1.0);
  set_coeff(lib, c, {0, 3, 0, 0}, -1.0 / 3.0);
  return c;
}

}  // namespace

TEST_CASE("polynomial library sizes") {
  CHECK(build_polynomial_library(4, 3, false).n_terms() == 34);  // C(7,3)-1
  CHECK(build_polynomial_library(1, 2, false).n_terms() == 2);   // {q, q^2}
  CHECK(build_polynomial_library(2, 1, true).n_terms() == 3);    // {1, x1, x2}
}

TEST_CASE("library size formula matches enumeration for d<=6, n<=5") {
  for (int d = 1; d <= 6; ++d)
    for (int n = 1; n <= 5; ++n) {
      const long long expected = count_monomials(d, n);
      CHECK(build_polynomial_library(d, n, false).n_terms() == expected);
      CHECK(expected == binomial(d + n, n) - 1);
    }
}

TEST_CASE("bsi library size") {
  CHECK(bsi_library_size(4, 3) == 60);  // 4*C(6,2)
  CHECK(bsi_library_size(1, 1) == 1);
  CHECK(bsi_library_size(2, 2) == 6);  // 2*C(3,1)
  for (int d = 1; d <= 6; ++d)
    for (int n = 1; n <= 5; ++n) {
      // d components, each over all monomials of degree 0..n-1
      const long long per_comp = count_monomials(d, n - 1) + 1;  // + constant
      CHECK(bsi_library_size(d, n) == d * per_comp);
    }
}

TEST_CASE("library ordering is graded-lex and duplicate-free") {
  const BasisLibrary lib = build_polynomial_library(3, 4, false);
  std::set<std::vector<int>> seen;
  int prev_degree = 0;
  for (const Term& t : lib.terms) {
    CHECK(seen.insert(t.exponents).second);
    CHECK(t.total_degree() >= prev_degree);
    prev_degree = t.total_degree();
  }
}

TEST_CASE("library evaluation") {
  const BasisLibrary lib = build_polynomial_library(4, 3, false);
  const Vec coeffs = henon_heiles_coeffs(lib);
  CHECK(eval_library(lib, coeffs, {1.0, 0.0, 0.0, 0.0}, 0.0) == doctest::Approx(0.5));
  CHECK(eval_library(lib, Vec(lib.total_params(), 0.0), {0.3, -0.2, 0.9, 0.4}, 0.0) == 0.0);

  BasisLibrary trig_lib;
  trig_lib.dimension = 1;
  trig_lib.degree = 1;
  trig_lib.var_names = {"t"};
  add_trig_terms(trig_lib, true, false);
  const Vec tc = {2.0, 0.5};  // alpha, omega
  const double pi = 3.14159265358979323846;
  CHECK(eval_library(trig_lib, tc, {pi}, pi) == doctest::Approx(2.0));
}

TEST_CASE("analytic gradient") {
  SUBCASE("quadratic identity") {
    const BasisLibrary lib = build_polynomial_library(2, 2, false);
    Vec c(lib.total_params(), 0.0);
    set_coeff(lib, c, {2, 0}, 0.5);
    set_coeff(lib, c, {0, 2}, 0.5);
    const Vec g = eval_library_gradient(lib, c, {3.0, 4.0}, 0.0);
    CHECK(g[0] == doctest::Approx(3.0));
    CHECK(g[1] == doctest::Approx(4.0));
  }
  SUBCASE("Henon-Heiles hand power rule at (1,1,0,0)") {
    const BasisLibrary lib = build_polynomial_library(4, 3, false);
    const Vec c = henon_heiles_coeffs(lib);
    const Vec g = eval_library_gradient(lib, c, {1.0, 1.0, 0.0, 0.0}, 0.0);
    CHECK(g[0] == doctest::Approx(3.0));  // q1 + 2 q1 q2
    CHECK(g[1] == doctest::Approx(1.0));  // q2 + q1^2 - q2^2
    CHECK(g[2] == doctest::Approx(0.0));
    CHECK(g[3] == doctest::Approx(0.0));
  }
  SUBCASE("matches central differences on random libraries") {
    Rng rng(7);
    const BasisLibrary lib = build_polynomial_library(4, 3, false);
    Vec c(lib.total_params());
    for (double& v : c) v = rng.uniform(-1.0, 1.0);
    const double h = 1e-5;
    for (int probe = 0; probe < 100; ++probe) {
      Vec x(4);
      for (double& v : x) v = rng.uniform(-1.0, 1.0);
      const Vec g = eval_library_gradient(lib, c, x, 0.0);
      for (int j = 0; j < 4; ++j) {
        Vec xp = x, xm = x;
        xp[j] += h;
        xm[j] -= h;
        const double fd =
            (eval_library(lib, c, xp, 0.0) - eval_library(lib, c, xm, 0.0)) / (2.0 * h);
        CHECK(std::abs(g[j] - fd) / std::max({std::abs(g[j]), std::abs(fd), 1.0}) < 1e-7);
      }
    }
  }
}

TEST_CASE("evaluation is linear in monomial coefficients") {
  Rng rng(9);
  const BasisLibrary lib = build_polynomial_library(3, 3, false);
  Vec c1(lib.total_params()), c2(lib.total_params());
  for (double& v : c1) v = rng.uniform(-1.0, 1.0);
  for (double& v : c2) v = rng.uniform(-1.0, 1.0);
  for (int probe = 0; probe < 20; ++probe) {
    Vec x(3);
    for (double& v : x) v = rng.uniform(-1.0, 1.0);
    const double a = rng.uniform(-2.0, 2.0), b = rng.uniform(-2.0, 2.0);
    Vec mix(lib.total_params());
    for (int i = 0; i < lib.total_params(); ++i) mix[i] = a * c1[i] + b * c2[i];
    const double lhs = eval_library(lib, mix, x, 0.0);
    const double rhs = a * eval_library(lib, c1, x, 0.0) + b * eval_library(lib, c2, x, 0.0);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  }
}

TEST_CASE("term rendering") {
  BasisLibrary lib = build_polynomial_library(4, 3, false);
  int idx = -1;
  for (int i = 0; i < lib.n_terms(); ++i)
    if (lib.terms[i].exponents == std::vector<int>{2, 0, 0, 0}) idx = i;
  REQUIRE(idx >= 0);
  const double half = 0.5;
  CHECK(term_to_string(lib, idx, std::span<const double>(&half, 1)) == "0.5·x1^2");

  add_trig_terms(lib, true, false);
  const Vec tp = {2.0, 0.5};
  CHECK(term_to_string(lib, lib.n_terms() - 1, std::span<const double>(tp.data(), 2)) ==
        "2·sin(0.5·t)");
  CHECK(term_name(lib, idx) == "x1^2");
}
