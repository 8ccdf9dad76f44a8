#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcerr/central_accumulator.hpp"
#include "mcerr/common.hpp"
#include "mcerr/power_sums.hpp"

namespace mcerr {

// Thrown when an estimator is requested below its minimum sample count
// (the falling power in its denominator would be zero).
struct undefined_estimate : std::domain_error {
    using std::domain_error::domain_error;
};

// n(n-1)...(n-k+1), evaluated in double to avoid integer overflow for
// large streams.
inline double falling_power(std::uint64_t n, int k) {
    double out = 1.0;
    for (int i = 0; i < k; ++i) out *= static_cast<double>(n) - i;
    return out;
}

namespace detail {
inline void require_count(const char* what, std::uint64_t n, std::uint64_t need) {
    if (n < need)
        throw undefined_estimate(std::string(what) + " needs at least " +
                                 std::to_string(need) + " weights, got " +
                                 std::to_string(n));
}
} // namespace detail

// ---- estimators from raw power sums (linear-time batch forms) ----

// integral estimate, S1/N
inline double e1(const power_sums& s) {
    detail::require_count("e1", s.n, 1);
    return s.s1 / static_cast<double>(s.n);
}

// Sigma2 = N*S2 - S1^2. Nonnegative in exact arithmetic; in native
// doubles the cancellation can leave garbage of either sign on offset
// data, which is precisely what the stability study demonstrates.
inline double sigma2(const power_sums& s) {
    detail::require_count("sigma2", s.n, 1);
    return static_cast<double>(s.n) * s.s2 - s.s1 * s.s1;
}

// Sigma4 = N*S4 - 4*S3*S1 + 3*S2^2
inline double sigma4(const power_sums& s) {
    detail::require_count("sigma4", s.n, 1);
    return static_cast<double>(s.n) * s.s4 - 4.0 * s.s3 * s.s1 + 3.0 * s.s2 * s.s2;
}

// first-order variance estimate, Sigma2 / (N^(2) * N); unbiased for Var(E1)
inline double e2(const power_sums& s) {
    detail::require_count("e2", s.n, 2);
    return sigma2(s) / (falling_power(s.n, 2) * static_cast<double>(s.n));
}

// Unbiased estimator of Var(E2). Can legitimately be negative (see
// counterexample()); kept alongside e4_hat for the unbiasedness checks.
inline double e4_unbiased(const power_sums& s) {
    detail::require_count("e4_unbiased", s.n, 4);
    const double n = static_cast<double>(s.n);
    const double n2f = falling_power(s.n, 2);
    const double n4f = falling_power(s.n, 4);
    const double sg2 = sigma2(s);
    const double sg4 = sigma4(s);
    return (n2f * sg4 - 4.0 * sg2 * sg2) / (n4f * n * n * n)
         + 2.0 * sg2 * sg2 / (n4f * n2f * n * n);
}

// Nonnegative replacement for e4_unbiased, biased at order 1/N:
// (N^2*Sigma4 - 4*Sigma2^2) / (N^(4) * N^3)
inline double e4_hat(const power_sums& s) {
    detail::require_count("e4_hat", s.n, 4);
    const double n = static_cast<double>(s.n);
    const double sg2 = sigma2(s);
    return (n * n * sigma4(s) - 4.0 * sg2 * sg2) / (falling_power(s.n, 4) * n * n * n);
}

// ---- estimators from the stable accumulator ----

inline double e1(const central_accumulator& a) {
    detail::require_count("e1", a.n, 1);
    return a.m;
}

// E2 = N*P / N^(2) = P / (N-1)
inline double e2(const central_accumulator& a) {
    detail::require_count("e2", a.n, 2);
    return a.clamped_p() / static_cast<double>(a.n - 1);
}

// E4-hat = N*R / N^(4)
inline double e4_hat(const central_accumulator& a) {
    detail::require_count("e4_hat", a.n, 4);
    return a.clamped_r() * static_cast<double>(a.n) / falling_power(a.n, 4);
}

// Signed unbiased form recovered from the central state via
// Sigma2 = N^2 * p and Sigma4 = N^2 * (r + 4 p^2).
inline double e4_unbiased(const central_accumulator& a) {
    detail::require_count("e4_unbiased", a.n, 4);
    const double n = static_cast<double>(a.n);
    const double n2f = falling_power(a.n, 2);
    const double n4f = falling_power(a.n, 4);
    const double p2 = a.p * a.p;
    return (n2f * (a.r + 4.0 * p2) - 4.0 * n * n * p2) / (n4f * n)
         + 2.0 * n * n * p2 / (n4f * n2f);
}

// ---- analytic variances from distribution moments ----

// Var(E1) = (J2 - J1^2) / n
inline double analytic_var_e1(double j1, double j2, std::uint64_t n) {
    detail::require_count("analytic_var_e1", n, 1);
    return (j2 - j1 * j1) / static_cast<double>(n);
}

// Var(E2) = (J4 - 4 J3 J1 + 3 J2^2 - 4 (J2 - J1^2)^2) / n^3
//         + 2 (J2 - J1^2)^2 / (n^(2) * n^2)
inline double analytic_var_e2(double j1, double j2, double j3, double j4,
                              std::uint64_t n) {
    detail::require_count("analytic_var_e2", n, 2);
    const double nd = static_cast<double>(n);
    const double v = j2 - j1 * j1;
    return (j4 - 4.0 * j3 * j1 + 3.0 * j2 * j2 - 4.0 * v * v) / (nd * nd * nd)
         + 2.0 * v * v / (falling_power(n, 2) * nd * nd);
}

// ---- the final report ----

// "result +- (first-order error +- second-order error)".
// Estimators below their minimum count are absent optionals, surfaced as
// flags; they are never NaN. second_order_error is the FOURTH root of
// e4_hat: e4_hat estimates the variance of a variance, so its square root
// has the units of e2, not of the error.
struct estimate_report {
    std::uint64_t n = 0;
    std::optional<double> e1;
    std::optional<double> e2;
    std::optional<double> e4_unbiased;
    std::optional<double> e4_hat;
    std::optional<double> first_order_error;
    std::optional<double> second_order_error;
    bool non_finite_input = false;

    std::vector<std::string> flags() const {
        std::vector<std::string> f;
        if (!e1) f.emplace_back("e1_undefined");
        if (!e2) f.emplace_back("e2_undefined");
        if (!e4_hat) f.emplace_back("e4_undefined");
        if (non_finite_input) f.emplace_back("non_finite_input");
        return f;
    }
};

inline estimate_report report(const central_accumulator& a) {
    estimate_report rep;
    rep.n = a.n;
    rep.non_finite_input = !a.finite();
    if (rep.non_finite_input) return rep;
    if (a.n >= 1) rep.e1 = e1(a);
    if (a.n >= 2) {
        rep.e2 = e2(a);
        rep.first_order_error = std::sqrt(*rep.e2);
    }
    if (a.n >= 4) {
        rep.e4_unbiased = e4_unbiased(a);
        rep.e4_hat = e4_hat(a);
        rep.second_order_error = std::sqrt(std::sqrt(*rep.e4_hat));
    }
    return rep;
}

// Fixed-schema JSON, 17 significant digits, undefined fields as null.
inline std::string to_json(const estimate_report& rep) {
    auto field = [](const std::optional<double>& v) {
        return v ? num_str(*v, 17) : std::string("null");
    };
    std::string out = "{";
    out += "\"n\":" + std::to_string(rep.n);
    out += ",\"e1\":" + field(rep.e1);
    out += ",\"e2\":" + field(rep.e2);
    out += ",\"e4_unbiased\":" + field(rep.e4_unbiased);
    out += ",\"e4_hat\":" + field(rep.e4_hat);
    out += ",\"first_order_error\":" + field(rep.first_order_error);
    out += ",\"second_order_error\":" + field(rep.second_order_error);
    out += ",\"flags\":[";
    bool first = true;
    for (const auto& f : rep.flags()) {
        if (!first) out += ',';
        out += '"' + f + '"';
        first = false;
    }
    out += "]}";
    return out;
}

// ---- the 0/1-weight counterexample ----

// 0/1 weight vectors make E4 negative once the one-fraction gets close
// enough to 1/2: with a = b(1-b), E4 < 0 exactly when a exceeds
// (n-1)^2 / (n(4n-6)). e4_hat stays nonnegative on the same stream.
struct counterexample_result {
    std::vector<double> weights; // ones first, then zeros
    double a = 0.0;              // realized b - b^2
    double threshold = 0.0;      // (n-1)^2 / (n(4n-6))
    bool negative = false;       // predicted sign(E4) < 0
};

inline counterexample_result counterexample(std::uint64_t n, double b) {
    detail::require_count("counterexample", n, 4);
    if (!(b >= 0.0 && b <= 1.0))
        throw std::invalid_argument("counterexample: b must lie in [0,1]");
    // round half to even, matching the default FP rounding mode
    const auto ones =
        static_cast<std::uint64_t>(std::nearbyint(b * static_cast<double>(n)));
    counterexample_result out;
    out.weights.assign(n, 0.0);
    for (std::uint64_t i = 0; i < ones && i < n; ++i) out.weights[i] = 1.0;
    const double nd = static_cast<double>(n);
    const double realized_b = static_cast<double>(ones) / nd;
    out.a = realized_b - realized_b * realized_b;
    out.threshold = (nd - 1.0) * (nd - 1.0) / (nd * (4.0 * nd - 6.0));
    out.negative = out.a > out.threshold;
    return out;
}

} // namespace mcerr
