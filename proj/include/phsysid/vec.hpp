#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace phsysid {

using Vec = std::vector<double>;
using Mat = std::vector<std::vector<double>>;

inline Vec operator+(const Vec& a, const Vec& b) {
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}

inline Vec operator-(const Vec& a, const Vec& b) {
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

inline Vec operator*(double s, const Vec& a) {
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = s * a[i];
  return r;
}

inline void axpy(double s, const Vec& x, Vec& y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += s * x[i];
}

inline double inf_norm(const Vec& a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

inline double l2_norm_sq(const Vec& a) {
  double s = 0.0;
  for (double v : a) s += v * v;
  return s;
}

inline double l2_norm(const Vec& a) { return std::sqrt(l2_norm_sq(a)); }

inline double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline bool all_finite(const Vec& a) {
  for (double v : a) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

/// y = M x for a dense row-major matrix.
inline Vec matvec(const Mat& m, const Vec& x) {
  Vec y(m.size(), 0.0);
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m[i].size() != x.size()) throw std::invalid_argument("matvec: shape mismatch");
    for (std::size_t j = 0; j < x.size(); ++j) y[i] += m[i][j] * x[j];
  }
  return y;
}

/// Integer power by repeated multiplication; exponents here are small.
inline double powi(double x, int e) {
  double r = 1.0;
  for (int i = 0; i < e; ++i) r *= x;
  return r;
}

inline double relu(double x) { return x > 0.0 ? x : 0.0; }

/// Lifts a plain double into the scalar kind of `like` (identity here; the
/// autodiff overload records a constant on the tape).
inline double make_scalar(double v, const double& /*like*/) { return v; }

}  // namespace phsysid
