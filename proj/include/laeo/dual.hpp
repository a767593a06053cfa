#pragma once

#include <cmath>

namespace laeo {

// Forward-mode dual number: value plus one tangent. Gradients are taken by
// re-evaluating with the seed on each parameter in turn; parameter counts
// here are tiny (<= 6 per pair), so this beats taping.
//
// Subgradient conventions at kinks, shared with the hand-coded loss grads:
//   d|x|/dx = sign(x) with sign(0) = 0
//   d sqrt(x)/dx at x = 0 is taken as 0 (norms at their minimum)
struct Dual {
  double v = 0.0;
  double d = 0.0;

  Dual() = default;
  Dual(double value) : v(value), d(0.0) {}  // NOLINT: implicit constants
  Dual(double value, double deriv) : v(value), d(deriv) {}
};

inline Dual operator+(Dual a, Dual b) { return {a.v + b.v, a.d + b.d}; }
inline Dual operator-(Dual a, Dual b) { return {a.v - b.v, a.d - b.d}; }
inline Dual operator-(Dual a) { return {-a.v, -a.d}; }
inline Dual operator*(Dual a, Dual b) { return {a.v * b.v, a.d * b.v + a.v * b.d}; }
inline Dual operator/(Dual a, Dual b) {
  const double inv = 1.0 / b.v;
  return {a.v * inv, (a.d - a.v * inv * b.d) * inv};
}
inline Dual& operator+=(Dual& a, Dual b) { return a = a + b; }
inline Dual& operator-=(Dual& a, Dual b) { return a = a - b; }
inline Dual& operator*=(Dual& a, Dual b) { return a = a * b; }
inline Dual& operator/=(Dual& a, Dual b) { return a = a / b; }

inline bool operator<(Dual a, Dual b) { return a.v < b.v; }
inline bool operator>(Dual a, Dual b) { return a.v > b.v; }
inline bool operator<=(Dual a, Dual b) { return a.v <= b.v; }
inline bool operator>=(Dual a, Dual b) { return a.v >= b.v; }

inline double value_of(double x) { return x; }
inline double value_of(Dual x) { return x.v; }

inline double sign0(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

inline Dual abs(Dual a) { return {std::abs(a.v), sign0(a.v) * a.d}; }
inline Dual sqrt(Dual a) {
  const double s = std::sqrt(a.v);
  return {s, s > 0.0 ? a.d / (2.0 * s) : 0.0};
}
inline Dual sin(Dual a) { return {std::sin(a.v), std::cos(a.v) * a.d}; }
inline Dual cos(Dual a) { return {std::cos(a.v), -std::sin(a.v) * a.d}; }
inline Dual tan(Dual a) {
  const double c = std::cos(a.v);
  return {std::tan(a.v), a.d / (c * c)};
}
inline Dual exp(Dual a) {
  const double e = std::exp(a.v);
  return {e, e * a.d};
}
inline Dual log(Dual a) { return {std::log(a.v), a.d / a.v}; }
inline Dual tanh(Dual a) {
  const double t = std::tanh(a.v);
  return {t, (1.0 - t * t) * a.d};
}
inline Dual asin(Dual a) { return {std::asin(a.v), a.d / std::sqrt(1.0 - a.v * a.v)}; }
inline Dual atan2(Dual y, Dual x) {
  const double den = x.v * x.v + y.v * y.v;
  return {std::atan2(y.v, x.v), (x.v * y.d - y.v * x.d) / den};
}

}  // namespace laeo
