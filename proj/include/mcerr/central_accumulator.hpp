#pragma once

#include <cmath>
#include <cstdint>

namespace mcerr {

// One-pass accumulator for weight statistics up to fourth order, in the
// centered form that avoids the large cancellations of raw power sums.
//
// State after n weights:
//   m = mean of the weights
//   p = second central moment  (sum (w - m)^2) / n
//   q = third central moment   (sum (w - m)^3) / n
//   r = (fourth central moment) - p^2
// p and r are exactly the quantities the variance estimators need:
//   E2        = n * p / (n falling 2)
//   E4-hat    = n * r / (n falling 4)
// Both are mathematically nonnegative; rounding can leave a tiny negative
// residue in r (and in p after a merge), which clamped_p()/clamped_r()
// strip at read-out.
//
// Update rules are the mean/variance recurrences of Chan, Golub & LeVeque
// extended to the third- and fourth-order combinations q and r. All terms
// in the updates are centered, so an additive offset in the weights never
// enters beyond the mean itself.
struct central_accumulator {
    std::uint64_t n = 0;
    double m = 0.0;
    double p = 0.0;
    double q = 0.0;
    double r = 0.0;

    void add(double w) {
        if (n == 0) {
            // first point: mean is the point, spread terms are exactly 0
            n = 1;
            m = w;
            p = q = r = 0.0;
            return;
        }
        const double nn = static_cast<double>(n + 1);
        const double u = w - m;
        const double f = static_cast<double>(n) / nn; // (N-1)/N
        const double u2 = u * u;
        const double g = (nn - 2.0) / nn;             // (N-2)/N

        const double t = p - g * u2;
        r = f * (r + (t * t) / nn - 4.0 * (q * u - (p * u2) / nn) / nn);
        q = f * (q + g * u2 * u / nn - 3.0 * p * u / nn);
        p = f * (p + u2 / nn);
        m = m + u / nn;
        n += 1;
    }

    std::uint64_t count() const { return n; }
    double mean() const { return m; }

    // read-out with the tiny-negative rounding residue clamped to zero
    double clamped_p() const {
        const double scale = m * m + p;
        return (p < 0.0 && p >= -1e-12 * scale) ? 0.0 : p;
    }
    double clamped_r() const {
        const double s = m * m + p;
        return (r < 0.0 && r >= -1e-12 * s * s) ? 0.0 : r;
    }

    bool finite() const {
        return std::isfinite(m) && std::isfinite(p) &&
               std::isfinite(q) && std::isfinite(r);
    }
};

// Combines two partial accumulators so that the result matches streaming
// the concatenated weight stream. Internally converts to central power
// sums C_k = n * (central moment k), applies the standard pairwise
// combination rules, and converts back.
inline central_accumulator merge(const central_accumulator& a,
                                 const central_accumulator& b) {
    if (a.n == 0) return b;
    if (b.n == 0) return a;

    const double na = static_cast<double>(a.n);
    const double nb = static_cast<double>(b.n);
    const double nc = na + nb;
    const double delta = b.m - a.m;
    const double d2 = delta * delta;

    const double c2a = na * a.p, c2b = nb * b.p;
    const double c3a = na * a.q, c3b = nb * b.q;
    const double c4a = na * (a.r + a.p * a.p);
    const double c4b = nb * (b.r + b.p * b.p);

    const double c2 = c2a + c2b + d2 * na * nb / nc;
    const double c3 = c3a + c3b + d2 * delta * na * nb * (na - nb) / (nc * nc)
                    + 3.0 * delta * (na * c2b - nb * c2a) / nc;
    const double c4 = c4a + c4b
                    + d2 * d2 * na * nb * (na * na - na * nb + nb * nb) / (nc * nc * nc)
                    + 6.0 * d2 * (na * na * c2b + nb * nb * c2a) / (nc * nc)
                    + 4.0 * delta * (na * c3b - nb * c3a) / nc;

    central_accumulator out;
    out.n = a.n + b.n;
    out.m = a.m + delta * nb / nc;
    out.p = c2 / nc;
    out.q = c3 / nc;
    out.r = c4 / nc - out.p * out.p;
    return out;
}

template <typename Range>
central_accumulator accumulate_central(const Range& weights) {
    central_accumulator acc;
    for (double w : weights) acc.add(w);
    return acc;
}

} // namespace mcerr
