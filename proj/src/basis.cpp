#include "phsysid/basis.hpp"

#include <algorithm>
#include <cstdio>
#include <functional>

namespace phsysid {

namespace {

// Exponent vectors of exact total degree `deg`, lexicographically descending
// ((2,0,..) before (1,1,..) before (0,2,..)).
void enumerate_degree(int d, int deg, std::vector<int>& current,
                      std::vector<std::vector<int>>& out) {
  const int pos = static_cast<int>(current.size());
  if (pos == d - 1) {
    current.push_back(deg);
    out.push_back(current);
    current.pop_back();
    return;
  }
  for (int e = deg; e >= 0; --e) {
    current.push_back(e);
    enumerate_degree(d, deg - e, current, out);
    current.pop_back();
  }
}

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

}  // namespace

long long binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  long long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

BasisLibrary build_polynomial_library(int d, int degree, bool include_constant) {
  if (d < 1) throw std::invalid_argument("build_polynomial_library: d must be >= 1");
  if (degree < 1) throw std::invalid_argument("build_polynomial_library: degree must be >= 1");
  BasisLibrary lib;
  lib.dimension = d;
  lib.degree = degree;
  lib.includes_constant = include_constant;
  if (include_constant) {
    Term c;
    c.kind = TermKind::monomial;
    c.exponents.assign(d, 0);
    lib.terms.push_back(c);
  }
  for (int deg = 1; deg <= degree; ++deg) {
    std::vector<std::vector<int>> exps;
    std::vector<int> scratch;
    enumerate_degree(d, deg, scratch, exps);
    for (auto& e : exps) {
      Term t;
      t.kind = TermKind::monomial;
      t.exponents = std::move(e);
      lib.terms.push_back(std::move(t));
    }
  }
  lib.var_names.resize(d);
  for (int j = 0; j < d; ++j) lib.var_names[j] = "x" + std::to_string(j + 1);
  lib.rebuild_offsets();
  return lib;
}

void add_trig_terms(BasisLibrary& lib, bool with_sin, bool with_cos) {
  if (with_sin) add_trig_slot(lib, TrigShape::sin, 1.0);
  if (with_cos) add_trig_slot(lib, TrigShape::cos, 1.0);
}

void add_trig_slot(BasisLibrary& lib, TrigShape shape, double init_frequency) {
  Term t;
  t.kind = TermKind::trig;
  t.trig_shape = shape;
  t.init_frequency = init_frequency;
  lib.terms.push_back(t);
  lib.rebuild_offsets();
}

long long bsi_library_size(int d, int n) {
  if (d < 1 || n < 1) throw std::invalid_argument("bsi_library_size: d, n must be >= 1");
  return static_cast<long long>(d) * binomial(d + n - 1, n - 1);
}

std::string term_to_string(const BasisLibrary& lib, int term_idx,
                           std::span<const double> term_params) {
  const Term& term = lib.terms.at(term_idx);
  if (term.kind == TermKind::trig) {
    const std::string fn = term.trig_shape == TrigShape::sin ? "sin" : "cos";
    return format_number(term_params[0]) + "·" + fn + "(" +
           format_number(term_params[1]) + "·t)";
  }
  std::string s = format_number(term_params[0]);
  for (int j = 0; j < lib.dimension; ++j) {
    const int e = term.exponents[j];
    if (e == 0) continue;
    s += "·" + lib.var_names[j];
    if (e > 1) s += "^" + std::to_string(e);
  }
  return s;
}

std::string term_name(const BasisLibrary& lib, int term_idx) {
  const Term& term = lib.terms.at(term_idx);
  if (term.kind == TermKind::trig)
    return term.trig_shape == TrigShape::sin ? "sin(w·t)" : "cos(w·t)";
  std::string s;
  for (int j = 0; j < lib.dimension; ++j) {
    const int e = term.exponents[j];
    if (e == 0) continue;
    if (!s.empty()) s += "·";
    s += lib.var_names[j];
    if (e > 1) s += "^" + std::to_string(e);
  }
  return s.empty() ? "1" : s;
}

double eval_library(const BasisLibrary& lib, const Vec& coeffs, const Vec& x, double t) {
  return library_value_t<double>(lib, std::span<const double>(coeffs), x, t);
}

Vec eval_library_gradient(const BasisLibrary& lib, const Vec& coeffs, const Vec& x, double t) {
  return library_gradient_t<double>(lib, std::span<const double>(coeffs), x, t);
}

}  // namespace phsysid
