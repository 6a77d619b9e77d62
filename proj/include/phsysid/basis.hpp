#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "phsysid/vec.hpp"

namespace phsysid {

enum class TermKind { monomial, trig };
enum class TrigShape { sin, cos };

/// One candidate term of a function library. Monomials are identified by an
/// exponent vector over the library inputs and carry a single coefficient;
/// trigonometric terms are alpha*sin(omega*t) / alpha*cos(omega*t) with both
/// amplitude and frequency trainable (two parameter slots).
struct Term {
  TermKind kind = TermKind::monomial;
  std::vector<int> exponents;  // monomial only, length = library dimension
  TrigShape trig_shape = TrigShape::sin;
  double init_frequency = 1.0;  // trig only: training start value for omega

  int n_params() const { return kind == TermKind::monomial ? 1 : 2; }
  int total_degree() const {
    int s = 0;
    for (int e : exponents) s += e;
    return s;
  }
};

/// Ordered candidate-term library. Monomials come first in graded
/// lexicographic order (degree ascending, then exponent vector descending),
/// then trig terms (sin before cos). Ordering is deterministic so that
/// coefficient tables and pruning masks are reproducible.
struct BasisLibrary {
  int dimension = 0;
  int degree = 0;
  bool includes_constant = false;
  std::vector<Term> terms;
  std::vector<std::string> var_names;  // defaults to x1..xd
  std::vector<int> param_offsets;      // per-term offset into the flat slot vector

  int total_params() const {
    return terms.empty() ? 0 : param_offsets.back() + terms.back().n_params();
  }
  int n_terms() const { return static_cast<int>(terms.size()); }

  void rebuild_offsets() {
    param_offsets.resize(terms.size());
    int off = 0;
    for (std::size_t i = 0; i < terms.size(); ++i) {
      param_offsets[i] = off;
      off += terms[i].n_params();
    }
  }
};

/// All monomials of total degree 1..degree over d variables (plus the
/// constant term first, if requested), graded-lex ordered.
BasisLibrary build_polynomial_library(int d, int degree, bool include_constant);

/// Appends trainable trig-in-t terms to a library (sin slot, then cos slot).
void add_trig_terms(BasisLibrary& lib, bool with_sin, bool with_cos);

/// Appends one trig slot with a chosen initial frequency. Several slots with
/// spread-out inits cover the nonconvex frequency search; pruning removes
/// the ones that lose.
void add_trig_slot(BasisLibrary& lib, TrigShape shape, double init_frequency);

/// Size of the search space when learning the right-hand side g directly at
/// one degree lower: d * C(d+n-1, n-1).
long long bsi_library_size(int d, int n);

long long binomial(int n, int k);

/// Renders one term with its parameters, e.g. "0.5·x1^2" or "2·sin(0.5·t)".
std::string term_to_string(const BasisLibrary& lib, int term_idx,
                           std::span<const double> term_params);

/// The bare term without its coefficient, e.g. "x1^2·x2", "1" (constant),
/// "sin(w·t)".
std::string term_name(const BasisLibrary& lib, int term_idx);

namespace detail {

template <class S>
S powi_t(const S& x, int e);

template <>
inline double powi_t<double>(const double& x, int e) {
  return powi(x, e);
}

}  // namespace detail

/// Value of the full library as a linear combination, generic in the scalar
/// type so the same formulas serve plain evaluation and tape recording.
/// `coeffs` is the flat parameter vector of the library (one slot per
/// monomial, two per trig term).
template <class S>
S library_value_t(const BasisLibrary& lib, std::span<const S> coeffs,
                  const std::vector<S>& x, double t) {
  if (static_cast<int>(coeffs.size()) != lib.total_params())
    throw std::invalid_argument("library_value: coefficient count mismatch");
  if (static_cast<int>(x.size()) != lib.dimension)
    throw std::invalid_argument("library_value: state dimension mismatch");
  using std::cos;
  using std::sin;
  S acc = x[0] * 0.0;  // zero of the right scalar kind
  for (std::size_t i = 0; i < lib.terms.size(); ++i) {
    const Term& term = lib.terms[i];
    const int off = lib.param_offsets[i];
    S v = coeffs[off];
    if (term.kind == TermKind::monomial) {
      for (int j = 0; j < lib.dimension; ++j) {
        const int e = term.exponents[j];
        if (e == 1)
          v = v * x[j];
        else if (e > 1)
          v = v * detail::powi_t<S>(x[j], e);
      }
    } else {
      const S& omega = coeffs[off + 1];
      v = v * (term.trig_shape == TrigShape::sin ? sin(omega * t) : cos(omega * t));
    }
    acc = acc + v;
  }
  return acc;
}

/// Analytic gradient of the library value with respect to the inputs x
/// (monomial power rule; trig terms depend on t only and contribute zero).
template <class S>
std::vector<S> library_gradient_t(const BasisLibrary& lib, std::span<const S> coeffs,
                                  const std::vector<S>& x, double /*t*/) {
  if (static_cast<int>(coeffs.size()) != lib.total_params())
    throw std::invalid_argument("library_gradient: coefficient count mismatch");
  if (static_cast<int>(x.size()) != lib.dimension)
    throw std::invalid_argument("library_gradient: state dimension mismatch");
  std::vector<S> grad(lib.dimension);
  std::vector<bool> touched(lib.dimension, false);
  for (std::size_t i = 0; i < lib.terms.size(); ++i) {
    const Term& term = lib.terms[i];
    if (term.kind != TermKind::monomial) continue;
    const S& c = coeffs[lib.param_offsets[i]];
    for (int j = 0; j < lib.dimension; ++j) {
      const int ej = term.exponents[j];
      if (ej == 0) continue;
      // d/dx_j of c * prod_k x_k^{e_k}
      S dv = c * double(ej);
      for (int k = 0; k < lib.dimension; ++k) {
        const int e = term.exponents[k] - (k == j ? 1 : 0);
        if (e == 1)
          dv = dv * x[k];
        else if (e > 1)
          dv = dv * detail::powi_t<S>(x[k], e);
      }
      if (touched[j])
        grad[j] = grad[j] + dv;
      else {
        grad[j] = dv;
        touched[j] = true;
      }
    }
  }
  for (int j = 0; j < lib.dimension; ++j) {
    if (!touched[j]) grad[j] = x[j] * 0.0;  // zero of the right scalar kind
  }
  return grad;
}

/// Double-path wrappers.
double eval_library(const BasisLibrary& lib, const Vec& coeffs, const Vec& x, double t);
Vec eval_library_gradient(const BasisLibrary& lib, const Vec& coeffs, const Vec& x, double t);

}  // namespace phsysid
