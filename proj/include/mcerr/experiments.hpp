#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "mcerr/central_accumulator.hpp"
#include "mcerr/common.hpp"
#include "mcerr/estimators.hpp"
#include "mcerr/oracle.hpp"
#include "mcerr/power_sums.hpp"
#include "mcerr/sampling.hpp"

// Experiment drivers: convergence traces over a single growing stream,
// replica ensembles with Gaussian overlays and KS diagnostics, the CLT
// width prediction for mean squared weights, and the cancellation stress
// test comparing naive / stable / oracle paths.
namespace mcerr {

// ---- convergence traces ----

struct trace_row {
    std::uint64_t n = 0;
    double e1 = 0.0;
    double e2 = 0.0;
    double e4_hat = 0.0;
    double err1 = 0.0; // sqrt(e2)
    double err2 = 0.0; // e4_hat^(1/4)
};

struct convergence_trace {
    distribution_spec spec;
    std::uint64_t seed = 1;
    std::uint64_t stride = 1;
    std::uint64_t n_max = 0;
    std::vector<trace_row> rows;
};

// Streams n_max weights through one accumulator, recording a row every
// `stride` points. Rows with n < 4 are skipped: e4_hat has no value there.
inline convergence_trace run_convergence(distribution_spec spec, std::uint64_t n_max,
                                         std::uint64_t seed, std::uint64_t stride) {
    if (n_max < 4) throw std::invalid_argument("run_convergence: n_max must be >= 4");
    if (stride < 1) throw std::invalid_argument("run_convergence: stride must be >= 1");
    convergence_trace trace{spec, seed, stride, n_max, {}};
    trace.rows.reserve(n_max / stride + 1);
    weight_source src(spec, {seed, 0});
    central_accumulator acc;
    for (std::uint64_t i = 1; i <= n_max; ++i) {
        acc.add(src.next());
        if (i % stride == 0 && i >= 4) {
            trace_row row;
            row.n = i;
            row.e1 = e1(acc);
            row.e2 = e2(acc);
            row.e4_hat = e4_hat(acc);
            row.err1 = std::sqrt(row.e2);
            row.err2 = std::sqrt(std::sqrt(row.e4_hat));
            trace.rows.push_back(row);
        }
    }
    return trace;
}

// Least-squares slope of log(col) against log(n) over rows with
// n_lo <= n <= n_hi and col > 0.
inline double loglog_slope(const convergence_trace& trace, std::uint64_t n_lo,
                           std::uint64_t n_hi, double trace_row::* col) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t count = 0;
    for (const auto& row : trace.rows) {
        if (row.n < n_lo || row.n > n_hi) continue;
        const double y = row.*col;
        if (!(y > 0.0)) continue;
        const double lx = std::log(static_cast<double>(row.n));
        const double ly = std::log(y);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++count;
    }
    if (count < 2) throw std::invalid_argument("loglog_slope: fewer than 2 usable rows");
    const double denom = count * sxx - sx * sx;
    return (count * sxy - sx * sy) / denom;
}

inline void write_csv(std::ostream& os, const convergence_trace& trace) {
    os << "# mcerr " << version_string << " trace dist=" << trace.spec.str()
       << " seed=" << trace.seed << " stride=" << trace.stride
       << " nmax=" << trace.n_max << " rng=" << rng_id << '\n';
    os << "n,e1,e2,e4hat,err1,err2\n";
    for (const auto& r : trace.rows) {
        os << r.n << ',' << num_str(r.e1, 12) << ',' << num_str(r.e2, 12) << ','
           << num_str(r.e4_hat, 12) << ',' << num_str(r.err1, 12) << ','
           << num_str(r.err2, 12) << '\n';
    }
}

// ---- histograms and ensembles ----

struct histogram {
    double lo = 0.0;
    double hi = 0.0;
    std::vector<std::uint64_t> counts;
    std::vector<double> density; // counts / (total * bin width)
    std::vector<double> overlay; // Gaussian pdf at bin centers
    std::uint64_t out_of_range = 0;
};

inline histogram build_histogram(const std::vector<double>& values, double lo, double hi,
                                 std::size_t bins, double overlay_mean,
                                 double overlay_sigma) {
    if (bins < 1 || !(hi > lo)) throw std::invalid_argument("build_histogram: bad range");
    histogram h;
    h.lo = lo;
    h.hi = hi;
    h.counts.assign(bins, 0);
    const double width = (hi - lo) / static_cast<double>(bins);
    for (double v : values) {
        if (v < lo || v > hi) {
            ++h.out_of_range;
            continue;
        }
        auto bin = static_cast<std::size_t>((v - lo) / width);
        if (bin >= bins) bin = bins - 1; // v == hi
        ++h.counts[bin];
    }
    h.density.resize(bins);
    h.overlay.resize(bins);
    const double total = static_cast<double>(values.size());
    for (std::size_t i = 0; i < bins; ++i) {
        h.density[i] = static_cast<double>(h.counts[i]) / (total * width);
        const double center = lo + (static_cast<double>(i) + 0.5) * width;
        if (overlay_sigma > 0.0) {
            const double z = (center - overlay_mean) / overlay_sigma;
            h.overlay[i] = std::exp(-0.5 * z * z) /
                           (overlay_sigma * std::sqrt(2.0 * std::numbers::pi));
        } else {
            h.overlay[i] = 0.0;
        }
    }
    return h;
}

// meta goes after "# " on the first line
inline void write_csv(std::ostream& os, const histogram& h, const std::string& meta) {
    os << "# " << meta << '\n';
    os << "bin_lo,bin_hi,count,density,overlay\n";
    const double width = (h.hi - h.lo) / static_cast<double>(h.counts.size());
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
        os << num_str(h.lo + i * width, 12) << ',' << num_str(h.lo + (i + 1) * width, 12)
           << ',' << h.counts[i] << ',' << num_str(h.density[i], 12) << ','
           << num_str(h.overlay[i], 12) << '\n';
    }
}

// Kolmogorov-Smirnov distance of the standardized sample against N(0,1).
inline double ks_vs_normal(const std::vector<double>& sample) {
    if (sample.size() < 2) throw std::invalid_argument("ks_vs_normal: sample too small");
    const double m = static_cast<double>(sample.size());
    double mean = 0.0;
    for (double v : sample) mean += v;
    mean /= m;
    double var = 0.0;
    for (double v : sample) var += (v - mean) * (v - mean);
    var /= (m - 1.0);
    const double sd = std::sqrt(var);
    if (!(sd > 0.0)) throw std::invalid_argument("ks_vs_normal: zero spread");

    std::vector<double> z(sample.size());
    for (std::size_t i = 0; i < sample.size(); ++i) z[i] = (sample[i] - mean) / sd;
    std::sort(z.begin(), z.end());
    double d = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        const double cdf = 0.5 * std::erfc(-z[i] / std::sqrt(2.0));
        d = std::max(d, std::abs(cdf - static_cast<double>(i) / m));
        d = std::max(d, std::abs(static_cast<double>(i + 1) / m - cdf));
    }
    return d;
}

namespace detail {

// Deterministic regardless of worker count: chunks only write disjoint
// slots, reductions happen afterwards in index order.
template <typename Fn>
void parallel_for(std::uint64_t count, unsigned threads, Fn&& fn) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, count));
    if (threads <= 1) {
        fn(std::uint64_t{0}, count);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(threads);
    const std::uint64_t chunk = (count + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
        const std::uint64_t lo = t * chunk;
        const std::uint64_t hi = std::min(count, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
    }
    for (auto& th : pool) th.join();
}

struct mean_var {
    double mean = 0.0;
    double var = 0.0; // sample variance
};

inline mean_var summarize(const std::vector<double>& v) {
    const double m = static_cast<double>(v.size());
    mean_var out;
    for (double x : v) out.mean += x;
    out.mean /= m;
    for (double x : v) out.var += (x - out.mean) * (x - out.mean);
    out.var = v.size() > 1 ? out.var / (m - 1.0) : 0.0;
    return out;
}

} // namespace detail

struct ensemble_result {
    distribution_spec spec;
    std::uint64_t n = 0;
    std::uint64_t replicas = 0;
    std::uint64_t seed = 1;
    std::size_t bins = 100;

    double mean_e1 = 0, var_e1 = 0;
    double mean_e2 = 0, var_e2 = 0;
    double mean_e4 = 0, var_e4 = 0;
    double mean_e4hat = 0, var_e4hat = 0;
    double mean_x2 = 0, var_x2 = 0; // X = (1/n) sum w^2, CLT width check

    double overlay_sigma_e1 = 0; // sqrt(mean e2)
    double overlay_sigma_e2 = 0; // sqrt(mean e4_hat): SQUARE root here
    double ks_e1 = 0;
    double ks_e2 = 0;

    histogram hist_e1;
    histogram hist_e2;
};

// Runs `replicas` independent streams of n weights each (stream index =
// replica index), then histograms E1 and E2 over mean +- 5 sd with their
// Gaussian overlays. Replica seeds are fixed up front, so the result is
// identical for any worker count.
inline ensemble_result run_ensemble(distribution_spec spec, std::uint64_t n,
                                    std::uint64_t replicas, std::uint64_t seed,
                                    std::size_t bins = 100, unsigned threads = 0) {
    if (n < 4) throw std::invalid_argument("run_ensemble: n must be >= 4");
    if (replicas < 100) throw std::invalid_argument("run_ensemble: need >= 100 replicas");

    std::vector<double> ve1(replicas), ve2(replicas), ve4(replicas), ve4h(replicas),
        vx2(replicas);
    detail::parallel_for(replicas, threads, [&](std::uint64_t lo, std::uint64_t hi) {
        for (std::uint64_t i = lo; i < hi; ++i) {
            weight_source src(spec, {seed, i});
            central_accumulator acc;
            for (std::uint64_t j = 0; j < n; ++j) acc.add(src.next());
            ve1[i] = e1(acc);
            ve2[i] = e2(acc);
            ve4[i] = e4_unbiased(acc);
            ve4h[i] = e4_hat(acc);
            vx2[i] = acc.p + acc.m * acc.m; // = S2/n exactly
        }
    });

    ensemble_result out;
    out.spec = spec;
    out.n = n;
    out.replicas = replicas;
    out.seed = seed;
    out.bins = bins;

    const auto s1 = detail::summarize(ve1);
    const auto s2 = detail::summarize(ve2);
    const auto s4 = detail::summarize(ve4);
    const auto s4h = detail::summarize(ve4h);
    const auto sx = detail::summarize(vx2);
    out.mean_e1 = s1.mean;
    out.var_e1 = s1.var;
    out.mean_e2 = s2.mean;
    out.var_e2 = s2.var;
    out.mean_e4 = s4.mean;
    out.var_e4 = s4.var;
    out.mean_e4hat = s4h.mean;
    out.var_e4hat = s4h.var;
    out.mean_x2 = sx.mean;
    out.var_x2 = sx.var;

    out.overlay_sigma_e1 = std::sqrt(std::max(0.0, out.mean_e2));
    out.overlay_sigma_e2 = std::sqrt(std::max(0.0, out.mean_e4hat));
    out.ks_e1 = ks_vs_normal(ve1);
    out.ks_e2 = ks_vs_normal(ve2);

    const double sd1 = std::sqrt(s1.var), sd2 = std::sqrt(s2.var);
    out.hist_e1 = build_histogram(ve1, s1.mean - 5 * sd1, s1.mean + 5 * sd1, bins,
                                  s1.mean, out.overlay_sigma_e1);
    out.hist_e2 = build_histogram(ve2, s2.mean - 5 * sd2, s2.mean + 5 * sd2, bins,
                                  s2.mean, out.overlay_sigma_e2);
    return out;
}

// ---- CLT width prediction ----

// For X = (1/N) sum w_j^2: lambda0 = <w^2> locates the peak and
// Var(X) = tau0 / N with tau0 = <w^4> - <w^2>^2.
struct clt_prediction {
    double lambda0 = 0.0;
    double tau0 = 0.0;
    double predicted_var = 0.0;
};

inline clt_prediction clt_predict(double second_moment, double fourth_moment,
                                  std::uint64_t n) {
    if (!std::isfinite(second_moment) || !std::isfinite(fourth_moment) || n == 0)
        throw std::invalid_argument("clt_predict: moments must be finite, n >= 1");
    clt_prediction out;
    out.lambda0 = second_moment;
    out.tau0 = fourth_moment - second_moment * second_moment;
    if (out.tau0 < 0.0)
        throw std::invalid_argument("clt_predict: <w^4> < <w^2>^2 is impossible");
    out.predicted_var = out.tau0 / static_cast<double>(n);
    return out;
}

// ---- cancellation stress test ----

struct stability_report {
    double offset = 0.0;
    std::uint64_t n = 0;
    std::uint64_t seed = 1;
    double e2_naive = 0, e2_acc = 0, e2_oracle = 0;
    double e4hat_naive = 0, e4hat_acc = 0, e4hat_oracle = 0;
    double rel_e2_naive = 0, rel_e2_acc = 0;
    double rel_e4hat_naive = 0, rel_e4hat_acc = 0;
};

// Streams w = offset + u with u uniform on (0,1] and computes E2 and
// E4-hat through naive power sums, the stable accumulator, and the
// centered double-double oracle. Deviations are relative to the oracle.
inline stability_report run_stability(double offset, std::uint64_t n,
                                      std::uint64_t seed) {
    if (n < 4) throw std::invalid_argument("run_stability: n must be >= 4");
    std::vector<double> w(n);
    weight_source src(distribution_spec::uniform01(), {seed, 0});
    for (auto& x : w) x = offset + src.next();

    power_sums naive;
    central_accumulator acc;
    for (double x : w) {
        naive.add(x);
        acc.add(x);
    }
    const auto ref = oracle::reference(w);

    stability_report out;
    out.offset = offset;
    out.n = n;
    out.seed = seed;
    out.e2_naive = e2(naive);
    out.e4hat_naive = e4_hat(naive);
    out.e2_acc = e2(acc);
    out.e4hat_acc = e4_hat(acc);
    out.e2_oracle = ref.e2;
    out.e4hat_oracle = ref.e4_hat;
    const auto rel = [](double x, double reference) {
        return std::abs(x - reference) / std::abs(reference);
    };
    out.rel_e2_naive = rel(out.e2_naive, out.e2_oracle);
    out.rel_e2_acc = rel(out.e2_acc, out.e2_oracle);
    out.rel_e4hat_naive = rel(out.e4hat_naive, out.e4hat_oracle);
    out.rel_e4hat_acc = rel(out.e4hat_acc, out.e4hat_oracle);
    return out;
}

} // namespace mcerr
