#pragma once

#ifdef __FAST_MATH__
#error "double_double.hpp requires strict IEEE arithmetic; do not compile with -ffast-math"
#endif

#include <cmath>

namespace mcerr {

// Unevaluated sum of two doubles, ~106 bits of precision. Classic
// error-free transformations (Dekker/Knuth two-sum, FMA two-prod); only
// the handful of operations the oracle needs.
struct dd_real {
    double hi = 0.0;
    double lo = 0.0;

    dd_real() = default;
    dd_real(double v) : hi(v), lo(0.0) {}
    dd_real(double h, double l) : hi(h), lo(l) {}

    double value() const { return hi + lo; }
};

namespace dd {

inline dd_real two_sum(double a, double b) {
    const double s = a + b;
    const double bb = s - a;
    return {s, (a - (s - bb)) + (b - bb)};
}

// requires |a| >= |b|
inline dd_real quick_two_sum(double a, double b) {
    const double s = a + b;
    return {s, b - (s - a)};
}

inline dd_real two_prod(double a, double b) {
    const double p = a * b;
    return {p, std::fma(a, b, -p)};
}

} // namespace dd

inline dd_real operator+(dd_real a, dd_real b) {
    dd_real s = dd::two_sum(a.hi, b.hi);
    dd_real t = dd::two_sum(a.lo, b.lo);
    s.lo += t.hi;
    s = dd::quick_two_sum(s.hi, s.lo);
    s.lo += t.lo;
    return dd::quick_two_sum(s.hi, s.lo);
}

inline dd_real operator+(dd_real a, double b) {
    dd_real s = dd::two_sum(a.hi, b);
    s.lo += a.lo;
    return dd::quick_two_sum(s.hi, s.lo);
}

inline dd_real operator-(dd_real a) { return {-a.hi, -a.lo}; }
inline dd_real operator-(dd_real a, dd_real b) { return a + (-b); }
inline dd_real operator-(dd_real a, double b) { return a + (-b); }

inline dd_real operator*(dd_real a, dd_real b) {
    dd_real p = dd::two_prod(a.hi, b.hi);
    p.lo += a.hi * b.lo + a.lo * b.hi;
    return dd::quick_two_sum(p.hi, p.lo);
}

inline dd_real operator*(dd_real a, double b) {
    dd_real p = dd::two_prod(a.hi, b);
    p.lo += a.lo * b;
    return dd::quick_two_sum(p.hi, p.lo);
}

inline dd_real operator/(dd_real a, dd_real b) {
    // long division, two correction steps
    const double q1 = a.hi / b.hi;
    dd_real rem = a - b * q1;
    const double q2 = rem.hi / b.hi;
    rem = rem - b * q2;
    const double q3 = rem.hi / b.hi;
    dd_real q = dd::quick_two_sum(q1, q2);
    return q + q3;
}

inline dd_real operator/(dd_real a, double b) { return a / dd_real(b); }

inline dd_real& operator+=(dd_real& a, dd_real b) { return a = a + b; }
inline dd_real& operator+=(dd_real& a, double b) { return a = a + b; }

} // namespace mcerr
