#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

#include "mcerr/common.hpp"

namespace mcerr {

// Generator identity, recorded in every output header. Streams are
// mt19937_64 engines seeded through seed_seq over the 32-bit words of
// (seed, index); both the engine and seed_seq are fully specified by the
// standard, so a (seed, index) pair names one weight sequence, bit for
// bit, on every platform.
inline constexpr std::string_view rng_id = "mt19937_64/seed_seq(seed,index)";

enum class dist_kind { uniform01, power_integrand, exponential, exp_integral };

// One of the four test weight distributions:
//   uniform      w = x,              x uniform on (0,1]
//   power:<a>    w = (1+a) x^a,      x uniform on (0,1], -1 < a <= 0
//   exp          w = x,              x ~ exp(-x) on [0,inf)
//   expint       w = x,              x ~ E1(x) on (0,inf)
// The power family integrates to 1 for every valid alpha but loses
// quartic integrability at alpha <= -1/4 and quadratic at alpha <= -1/2;
// moment() reports the divergent cases as empty.
struct distribution_spec {
    dist_kind kind = dist_kind::uniform01;
    double alpha = 0.0;

    static distribution_spec uniform01() { return {dist_kind::uniform01, 0.0}; }
    static distribution_spec exponential() { return {dist_kind::exponential, 0.0}; }
    static distribution_spec exp_integral() { return {dist_kind::exp_integral, 0.0}; }
    static distribution_spec power(double alpha) {
        if (!(alpha > -1.0 && alpha <= 0.0))
            throw std::invalid_argument("power integrand: alpha must be in (-1, 0]");
        return {dist_kind::power_integrand, alpha};
    }

    // "uniform" | "power:<alpha>" | "exp" | "expint"
    static distribution_spec parse(std::string_view text) {
        if (text == "uniform") return uniform01();
        if (text == "exp") return exponential();
        if (text == "expint") return exp_integral();
        constexpr std::string_view prefix = "power:";
        if (text.starts_with(prefix)) {
            const std::string num(text.substr(prefix.size()));
            std::size_t used = 0;
            double a = 0.0;
            try {
                a = std::stod(num, &used);
            } catch (const std::exception&) {
                throw std::invalid_argument("bad distribution spec: " + std::string(text));
            }
            if (used != num.size())
                throw std::invalid_argument("bad distribution spec: " + std::string(text));
            return power(a);
        }
        throw std::invalid_argument("bad distribution spec: " + std::string(text));
    }

    std::string str() const {
        switch (kind) {
            case dist_kind::uniform01: return "uniform";
            case dist_kind::exponential: return "exp";
            case dist_kind::exp_integral: return "expint";
            case dist_kind::power_integrand: return "power:" + num_str(alpha, 12);
        }
        return "?";
    }

    // J_p = <w^p>, p in 1..4; empty when the moment diverges.
    std::optional<double> moment(int p) const {
        if (p < 1 || p > 4) throw std::invalid_argument("moment: p must be in 1..4");
        static constexpr double factorial[5] = {1, 1, 2, 6, 24};
        switch (kind) {
            case dist_kind::uniform01:
                return 1.0 / (p + 1);
            case dist_kind::power_integrand: {
                const double pa = p * alpha;
                if (pa <= -1.0) return std::nullopt; // divergent
                return std::pow(1.0 + alpha, p) / (pa + 1.0);
            }
            case dist_kind::exponential:
                return factorial[p];
            case dist_kind::exp_integral:
                // mixture U*T: E[U^p] E[T^p] = p!/(p+1)
                return factorial[p] / (p + 1);
        }
        return std::nullopt;
    }
};

// Labels one reproducible pseudorandom stream.
struct stream_key {
    std::uint64_t seed = 1;
    std::uint64_t index = 0;
};

// Draws weights from a distribution_spec. For the power family the
// underlying uniform x is drawn first, so traces with different alpha but
// the same key see identical x sequences and their singular samples land
// at the same positions.
class weight_source {
public:
    weight_source(distribution_spec spec, stream_key key) : spec_(spec) {
        std::seed_seq seq{
            static_cast<std::uint32_t>(key.seed),
            static_cast<std::uint32_t>(key.seed >> 32),
            static_cast<std::uint32_t>(key.index),
            static_cast<std::uint32_t>(key.index >> 32)};
        engine_.seed(seq);
    }

    const distribution_spec& spec() const { return spec_; }

    // uniform on (0,1], zero excluded so x^alpha stays finite
    double next_uniform() {
        return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
    }

    double next() {
        switch (spec_.kind) {
            case dist_kind::uniform01:
                return next_uniform();
            case dist_kind::power_integrand: {
                const double x = next_uniform();
                return (1.0 + spec_.alpha) * std::pow(x, spec_.alpha);
            }
            case dist_kind::exponential:
                return -std::log(next_uniform());
            case dist_kind::exp_integral: {
                // X = U*T reproduces the E1(x) density exactly; T = 0
                // (probability 2^-53) is redrawn to keep X strictly positive
                const double u = next_uniform();
                double t;
                do {
                    t = -std::log(next_uniform());
                } while (t == 0.0);
                return u * t;
            }
        }
        return 0.0; // unreachable
    }

private:
    distribution_spec spec_;
    std::mt19937_64 engine_;
};

} // namespace mcerr
