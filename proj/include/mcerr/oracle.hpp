#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "mcerr/double_double.hpp"
#include "mcerr/estimators.hpp"
#include "mcerr/power_sums.hpp"

// Slow, trustworthy references. Everything here trades speed for
// exactness: brute-force multiple sums over distinct index tuples, the
// product-rule identity relating them to simple sums, and double-double
// batch accumulation for stability ground truth. Test support only.
namespace mcerr::oracle {

// Exponent tuple (p1,...,pk) of a multiple sum over distinct indices.
struct multi_index {
    std::vector<int> powers;
};

namespace detail {

// O(n^k) blow-up fails loudly instead of hanging.
inline constexpr std::size_t max_n_for_k[5] = {0, 1u << 20, 2048, 256, 64};

inline void validate(const multi_index& idx, std::size_t n) {
    const std::size_t k = idx.powers.size();
    if (k < 1 || k > 4)
        throw std::invalid_argument("multi_index: order k must be in 1..4");
    for (int p : idx.powers)
        if (p < 1) throw std::invalid_argument("multi_index: powers must be >= 1");
    if (n > max_n_for_k[k])
        throw std::length_error("multiple_sum: stream too long for order k=" +
                                std::to_string(k));
}

inline double pow_int(double w, int p) {
    double out = 1.0;
    for (int i = 0; i < p; ++i) out *= w;
    return out;
}

} // namespace detail

// Sum of w_{j1}^{p1} ... w_{jk}^{pk} over ordered tuples of pairwise
// DISTINCT indices; S_{1,1} over n points has n^2 - n terms, and any
// k > n gives 0. Exact whenever weights are integers small enough that
// every term and partial sum stays below 2^53.
inline double multiple_sum(std::span<const double> w, const multi_index& idx) {
    detail::validate(idx, w.size());
    const std::size_t n = w.size();
    const std::size_t k = idx.powers.size();
    if (k == 1) {
        double s = 0.0;
        for (double x : w) s += detail::pow_int(x, idx.powers[0]);
        return s;
    }
    if (k > n) return 0.0;

    double total = 0.0;
    std::vector<std::size_t> pick(k, 0);
    std::vector<char> used(n, 0);
    const auto descend = [&](auto&& self, std::size_t slot, double prod) -> void {
        if (slot == k) {
            total += prod;
            return;
        }
        for (std::size_t j = 0; j < n; ++j) {
            if (used[j]) continue;
            used[j] = 1;
            self(self, slot + 1, prod * detail::pow_int(w[j], idx.powers[slot]));
            used[j] = 0;
        }
    };
    descend(descend, 0, 1.0);
    return total;
}

// Checks S_{p1..pk} * S_q = sum_i S_{..,p_i+q,..} + S_{p1..pk,q}.
// rel_tol = 0 demands exact equality (integer weights).
inline bool verify_product_rule(std::span<const double> w, const multi_index& idx,
                                int q, double rel_tol = 0.0) {
    if (q < 1) throw std::invalid_argument("verify_product_rule: q must be >= 1");
    if (idx.powers.size() >= 4)
        throw std::invalid_argument("verify_product_rule: k must be <= 3");
    const double lhs = multiple_sum(w, idx) * multiple_sum(w, {{q}});
    double rhs = 0.0;
    for (std::size_t i = 0; i < idx.powers.size(); ++i) {
        multi_index bumped = idx;
        bumped.powers[i] += q;
        rhs += multiple_sum(w, bumped);
    }
    multi_index extended = idx;
    extended.powers.push_back(q);
    rhs += multiple_sum(w, extended);
    if (rel_tol == 0.0) return lhs == rhs;
    const double scale = std::max(std::abs(lhs), std::abs(rhs));
    return std::abs(lhs - rhs) <= rel_tol * scale;
}

// Power sums held in double-double. Plain doubles cannot serve as a
// stability reference: rounding S2 itself to 53 bits already destroys
// N*S2 - S1^2 on offset data.
struct dd_power_sums {
    std::uint64_t n = 0;
    dd_real s1, s2, s3, s4;

    power_sums rounded() const {
        return {n, s1.value(), s2.value(), s3.value(), s4.value()};
    }
};

// S1..S4 with error-free squares and compensated accumulation.
inline dd_power_sums compensated_sums(std::span<const double> w) {
    dd_power_sums out;
    for (double x : w) {
        const dd_real x2 = dd::two_prod(x, x); // exact
        out.n += 1;
        out.s1 += x;
        out.s2 += x2;
        out.s3 += x2 * x;
        out.s4 += x2 * x2;
    }
    return out;
}

struct reference_estimates {
    double e1 = 0.0;
    double e2 = 0.0;
    double e4_unbiased = 0.0;
    double e4_hat = 0.0;
};

namespace detail {

inline dd_real dd_falling_power(std::uint64_t n, int k) {
    dd_real out(1.0);
    for (int i = 0; i < k; ++i) out = out * (static_cast<double>(n) - i);
    return out;
}

inline reference_estimates estimates_from(std::uint64_t n, dd_real mean,
                                          dd_real sigma2, dd_real sigma4) {
    if (n < 4)
        throw undefined_estimate("oracle reference needs at least 4 weights");
    const dd_real nd(static_cast<double>(n));
    const dd_real n2f = dd_falling_power(n, 2);
    const dd_real n4f = dd_falling_power(n, 4);
    const dd_real s2sq = sigma2 * sigma2;
    reference_estimates out;
    out.e1 = mean.value();
    out.e2 = (sigma2 / (n2f * nd)).value();
    out.e4_unbiased = ((n2f * sigma4 - s2sq * 4.0) / (n4f * nd * nd * nd) +
                       (s2sq * 2.0) / (n4f * n2f * nd * nd)).value();
    out.e4_hat = ((nd * nd * sigma4 - s2sq * 4.0) / (n4f * nd * nd * nd)).value();
    return out;
}

} // namespace detail

// All estimators evaluated in double-double from compensated power sums.
// Enough for moderate offsets; for the full stability study prefer
// reference(), whose centered two-pass form cancels nothing at all.
inline reference_estimates estimates_from_sums(const dd_power_sums& s) {
    const dd_real nd(static_cast<double>(s.n));
    const dd_real sg2 = nd * s.s2 - s.s1 * s.s1;
    const dd_real sg4 = nd * s.s4 - (s.s3 * s.s1) * 4.0 + (s.s2 * s.s2) * 3.0;
    return detail::estimates_from(s.n, s.s1 / nd, sg2, sg4);
}

// Two-pass centered reference: mean first, then central power sums in
// double-double. Sigma2 = N*C2 and Sigma4 = N*C4 + 3*C2^2 recover the
// estimator inputs from quantities that carry no offset.
inline reference_estimates reference(std::span<const double> w) {
    const std::uint64_t n = w.size();
    if (n < 4) throw undefined_estimate("oracle reference needs at least 4 weights");
    dd_real sum;
    for (double x : w) sum += x;
    const dd_real mean = sum / static_cast<double>(n);

    dd_real c2, c4;
    for (double x : w) {
        const dd_real d = dd_real(x) - mean;
        const dd_real d2 = d * d;
        c2 += d2;
        c4 += d2 * d2;
    }
    const double nd = static_cast<double>(n);
    const dd_real sg2 = c2 * nd;
    const dd_real sg4 = c4 * nd + (c2 * c2) * 3.0;
    return detail::estimates_from(n, mean, sg2, sg4);
}

} // namespace mcerr::oracle
