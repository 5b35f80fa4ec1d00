#pragma once

// Small numeric helpers shared by the plain-double code paths and the
// tape-based autodiff paths.  Every routine here is templated over the scalar
// type; branch decisions are made on the underlying double value (value_of),
// which is exactly the subgradient convention the reverse pass uses.

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

namespace hypflow {

// Raised when a computation degenerates numerically (NaN/Inf loss, zero
// scale in an inverse, ...).  Carries a human-readable location.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Floor used when dividing by a vector norm that may be exactly zero.
inline constexpr double kNormFloor = 1e-15;

// Below this threshold the ratio functions switch to their Taylor series.
inline constexpr double kSeriesCutoff = 1e-6;

// Default clamp applied to tangent-vector norms before exp/log maps during
// training, to keep cosh/sinh and their gradients finite.
inline constexpr double kMaxTangentNorm = 40.0;

inline double value_of(double x) { return x; }

inline double clamp_min(double x, double lo) { return x < lo ? lo : x; }

// sinh(t)/t, continuous through t == 0.
template <class T>
T sinh_ratio(const T& t) {
  using std::sinh;
  if (value_of(t) < kSeriesCutoff) {
    return 1.0 + t * t * (1.0 / 6.0);
  }
  return sinh(t) / t;
}

// log(sinh(t)/t) for t >= 0, continuous through t == 0 and safe for large t
// (log(sinh t) would overflow past ~710).
template <class T>
T log_sinh_ratio(const T& t) {
  using std::sinh;
  using std::log;
  double tv = value_of(t);
  if (tv < kSeriesCutoff) {
    return t * t * (1.0 / 6.0);
  }
  if (tv > 30.0) {
    // sinh t = e^t (1 - e^{-2t}) / 2; the correction is < 1e-26 here.
    return t - std::log(2.0) - log(t);
  }
  return log(sinh(t) / t);
}

// arccosh(a)/sqrt(a^2 - 1) for a >= 1, continuous through a == 1 where the
// limit is 1.  Series in u = a - 1: 1 - u/3 + 7u^2/90 - ...
template <class T>
T acosh_ratio(const T& a) {
  using std::acosh;
  using std::sqrt;
  double av = value_of(a);
  if (av < 1.0 + kSeriesCutoff) {
    T u = a - 1.0;
    return 1.0 - u * (1.0 / 3.0) + u * u * (7.0 / 90.0);
  }
  return acosh(a) / sqrt(a * a - 1.0);
}

// log(logistic(s)) computed without underflow for very negative s.
template <class T>
T log_logistic(const T& s) {
  using std::exp;
  using std::log;
  double sv = value_of(s);
  if (sv < -30.0) {
    // log(1/(1+e^{-s})) = s - log(1+e^s); the correction is < 1e-13 here.
    return s - exp(s);
  }
  return -log(1.0 + exp(-s));
}

}  // namespace hypflow
