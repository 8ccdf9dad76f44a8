#pragma once

#include <cmath>
#include <cstdint>

namespace mcerr {

// Running sums of weight powers, S_p = sum_j w_j^p for p = 1..4.
// This is the naive batch representation: linear-time, but the estimator
// combinations built from it (N*S2 - S1^2 etc.) cancel catastrophically
// when the weights sit on a large offset. central_accumulator is the
// stable counterpart; this one is kept for benign data and as the
// reference point of the stability study.
struct power_sums {
    std::uint64_t n = 0;
    double s1 = 0.0;
    double s2 = 0.0;
    double s3 = 0.0;
    double s4 = 0.0;

    // Overflow to infinity is allowed to propagate; report() flags it.
    void add(double w) {
        const double w2 = w * w;
        ++n;
        s1 += w;
        s2 += w2;
        s3 += w2 * w;
        s4 += w2 * w2;
    }

    bool finite() const {
        return std::isfinite(s1) && std::isfinite(s2) &&
               std::isfinite(s3) && std::isfinite(s4);
    }
};

template <typename Range>
power_sums accumulate_sums(const Range& weights) {
    power_sums s;
    for (double w : weights) s.add(w);
    return s;
}

} // namespace mcerr
