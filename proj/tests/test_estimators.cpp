#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include <json.hpp>

#include "mcerr/central_accumulator.hpp"
#include "mcerr/estimators.hpp"
#include "mcerr/power_sums.hpp"

using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using mcerr::central_accumulator;
using mcerr::power_sums;

namespace {

power_sums sums_of(const std::vector<double>& w) {
    power_sums s;
    for (double x : w) s.add(x);
    return s;
}

central_accumulator acc_of(const std::vector<double>& w) {
    central_accumulator a;
    for (double x : w) a.add(x);
    return a;
}

} // namespace

TEST_CASE("falling powers") {
    CHECK(mcerr::falling_power(4, 2) == 12.0);
    CHECK(mcerr::falling_power(4, 4) == 24.0);
    CHECK(mcerr::falling_power(10, 1) == 10.0);
    CHECK(mcerr::falling_power(10, 0) == 1.0);
    CHECK(mcerr::falling_power(100000, 2) == 100000.0 * 99999.0);
}

TEST_CASE("e1 is the sample mean") {
    CHECK(mcerr::e1(sums_of({1.0, 2.0})) == 1.5);
    CHECK(mcerr::e1(sums_of({5.0})) == 5.0);
    CHECK_THAT(mcerr::e1(acc_of({1.0, 2.0, 3.0})), WithinAbs(2.0, 1e-15));
}

TEST_CASE("hand values for e2") {
    // [1,2]: centered sum 0.5, n(n-1) = 2 -> 0.25
    CHECK_THAT(mcerr::e2(sums_of({1.0, 2.0})), WithinAbs(0.25, 1e-16));
    CHECK_THAT(mcerr::e2(sums_of({0.0, 1.0})), WithinAbs(0.25, 1e-16));
    CHECK_THAT(mcerr::e2(sums_of({1.0, 2.0, 3.0})), WithinAbs(1.0 / 3.0, 1e-16));
    CHECK_THAT(mcerr::e2(acc_of({1.0, 2.0, 3.0})), WithinAbs(1.0 / 3.0, 1e-15));
}

TEST_CASE("hand values for the fourth-order pair on [0,0,1,1]") {
    const auto s = sums_of({0.0, 0.0, 1.0, 1.0});
    CHECK_THAT(mcerr::e2(s), WithinAbs(1.0 / 12.0, 1e-16));
    CHECK_THAT(mcerr::e4_unbiased(s), WithinAbs(-1.0 / 288.0, 1e-18));
    CHECK(mcerr::e4_hat(s) == 0.0);

    const auto a = acc_of({0.0, 0.0, 1.0, 1.0});
    CHECK_THAT(mcerr::e2(a), WithinAbs(1.0 / 12.0, 1e-15));
    CHECK_THAT(mcerr::e4_unbiased(a), WithinAbs(-1.0 / 288.0, 1e-17));
    CHECK(mcerr::e4_hat(a) == 0.0);
}

TEST_CASE("hand values for the fourth-order pair on [1,2,3,4]") {
    const auto s = sums_of({1.0, 2.0, 3.0, 4.0});
    CHECK_THAT(mcerr::sigma2(s), WithinAbs(20.0, 1e-12));
    CHECK_THAT(mcerr::sigma4(s), WithinAbs(116.0, 1e-12));
    CHECK_THAT(mcerr::e4_unbiased(s), WithinAbs(11.0 / 288.0, 1e-15));
    CHECK_THAT(mcerr::e4_hat(s), WithinAbs(1.0 / 6.0, 1e-15));

    const auto a = acc_of({1.0, 2.0, 3.0, 4.0});
    CHECK_THAT(mcerr::e4_unbiased(a), WithinRel(11.0 / 288.0, 1e-13));
    CHECK_THAT(mcerr::e4_hat(a), WithinRel(1.0 / 6.0, 1e-13));
}

TEST_CASE("estimators below their minimum count throw") {
    CHECK_THROWS_AS(mcerr::e1(power_sums{}), mcerr::undefined_estimate);
    CHECK_THROWS_AS(mcerr::e2(sums_of({1.0})), mcerr::undefined_estimate);
    CHECK_THROWS_AS(mcerr::e4_unbiased(sums_of({1.0, 2.0, 3.0})),
                    mcerr::undefined_estimate);
    CHECK_THROWS_AS(mcerr::e4_hat(sums_of({1.0, 2.0, 3.0})),
                    mcerr::undefined_estimate);
    CHECK_THROWS_AS(mcerr::e2(acc_of({1.0})), mcerr::undefined_estimate);
    CHECK_THROWS_AS(mcerr::e4_hat(acc_of({1.0, 2.0, 3.0})),
                    mcerr::undefined_estimate);
}

TEST_CASE("power-sum and accumulator paths agree on random streams") {
    std::mt19937_64 eng(3);
    std::uniform_real_distribution<double> value(-10.0, 10.0);
    std::uniform_int_distribution<int> length(4, 60);
    for (int rep = 0; rep < 5000; ++rep) {
        std::vector<double> w(length(eng));
        for (double& x : w) x = value(eng);
        const auto s = sums_of(w);
        const auto a = acc_of(w);
        CHECK_THAT(mcerr::e1(a), WithinRel(mcerr::e1(s), 1e-12) ||
                                     WithinAbs(mcerr::e1(s), 1e-12));
        CHECK_THAT(mcerr::e2(a), WithinRel(mcerr::e2(s), 1e-9) ||
                                     WithinAbs(mcerr::e2(s), 1e-12));
        CHECK_THAT(mcerr::e4_unbiased(a),
                   WithinRel(mcerr::e4_unbiased(s), 1e-8) ||
                       WithinAbs(mcerr::e4_unbiased(s), 1e-10));
        CHECK_THAT(mcerr::e4_hat(a), WithinRel(mcerr::e4_hat(s), 1e-8) ||
                                         WithinAbs(mcerr::e4_hat(s), 1e-10));
    }
}

TEST_CASE("scale equivariance: w -> c*w scales e1, e2, e4 by c, c^2, c^4") {
    const std::vector<double> w{0.3, 1.7, -0.4, 2.2, 0.9, 1.1};
    const double c = 3.5;
    std::vector<double> scaled(w.size());
    std::transform(w.begin(), w.end(), scaled.begin(),
                   [&](double x) { return c * x; });
    const auto s0 = sums_of(w);
    const auto s1 = sums_of(scaled);
    CHECK_THAT(mcerr::e1(s1), WithinRel(c * mcerr::e1(s0), 1e-12));
    CHECK_THAT(mcerr::e2(s1), WithinRel(c * c * mcerr::e2(s0), 1e-12));
    CHECK_THAT(mcerr::e4_unbiased(s1),
               WithinRel(c * c * c * c * mcerr::e4_unbiased(s0), 1e-11));
    CHECK_THAT(mcerr::e4_hat(s1),
               WithinRel(c * c * c * c * mcerr::e4_hat(s0), 1e-11));
}

TEST_CASE("offset invariance of the accumulator-path e2") {
    const std::vector<double> w{0.3, 1.7, -0.4, 2.2, 0.9, 1.1};
    std::vector<double> shifted(w.size());
    std::transform(w.begin(), w.end(), shifted.begin(),
                   [](double x) { return x + 1000.0; });
    CHECK_THAT(mcerr::e2(acc_of(shifted)),
               WithinRel(mcerr::e2(acc_of(w)), 1e-9));
}

TEST_CASE("analytic variances for the uniform weight") {
    // j_p = 1/(p+1)
    CHECK_THAT(mcerr::analytic_var_e1(0.5, 1.0 / 3.0, 100),
               WithinRel(1.0 / 1200.0, 1e-14));
    CHECK_THAT(mcerr::analytic_var_e2(0.5, 1.0 / 3.0, 0.25, 0.2, 10),
               WithinRel(23.0 / 3240000.0, 1e-12));
}

TEST_CASE("report contents at full count") {
    const auto rep = mcerr::report(acc_of({0.0, 0.0, 1.0, 1.0}));
    CHECK(rep.n == 4);
    REQUIRE(rep.e1);
    REQUIRE(rep.e2);
    REQUIRE(rep.e4_unbiased);
    REQUIRE(rep.e4_hat);
    REQUIRE(rep.first_order_error);
    REQUIRE(rep.second_order_error);
    CHECK_THAT(*rep.e1, WithinAbs(0.5, 1e-15));
    CHECK_THAT(*rep.e2, WithinAbs(1.0 / 12.0, 1e-15));
    CHECK_THAT(*rep.e4_unbiased, WithinAbs(-1.0 / 288.0, 1e-17));
    CHECK(*rep.e4_hat == 0.0);
    CHECK_THAT(*rep.first_order_error, WithinAbs(std::sqrt(1.0 / 12.0), 1e-15));
    CHECK(*rep.second_order_error == 0.0);
    CHECK(rep.flags().empty());
}

TEST_CASE("report flags undersized streams instead of throwing") {
    const auto one = mcerr::report(acc_of({5.0}));
    CHECK(one.n == 1);
    CHECK(one.e1);
    CHECK_FALSE(one.e2);
    CHECK_FALSE(one.e4_hat);
    CHECK(one.flags() == std::vector<std::string>{"e2_undefined", "e4_undefined"});

    const auto three = mcerr::report(acc_of({1.0, 2.0, 3.0}));
    CHECK(three.e2);
    CHECK_FALSE(three.e4_hat);
    CHECK(three.flags() == std::vector<std::string>{"e4_undefined"});
}

TEST_CASE("report flags non-finite input and withholds all values") {
    central_accumulator acc;
    acc.add(1.0);
    acc.add(std::numeric_limits<double>::infinity());
    acc.add(2.0);
    acc.add(3.0);
    const auto rep = mcerr::report(acc);
    CHECK(rep.n == 4);
    CHECK_FALSE(rep.e1);
    CHECK_FALSE(rep.e2);
    CHECK_FALSE(rep.e4_hat);
    const auto f = rep.flags();
    CHECK(std::find(f.begin(), f.end(), "non_finite_input") != f.end());
}

TEST_CASE("JSON report round-trips through a parser") {
    const auto rep = mcerr::report(acc_of({0.0, 0.0, 1.0, 1.0}));
    const std::string text = mcerr::to_json(rep);
    const auto j = nlohmann::json::parse(text);
    CHECK(j["n"].get<std::uint64_t>() == 4);
    CHECK_THAT(j["e1"].get<double>(), WithinAbs(0.5, 1e-15));
    CHECK_THAT(j["e2"].get<double>(), WithinAbs(1.0 / 12.0, 1e-15));
    CHECK_THAT(j["e4_unbiased"].get<double>(), WithinAbs(-1.0 / 288.0, 1e-17));
    CHECK(j["e4_hat"].get<double>() == 0.0);
    CHECK_THAT(j["first_order_error"].get<double>(),
               WithinAbs(0.28867513459481287, 1e-15));
    CHECK(j["flags"].is_array());
    CHECK(j["flags"].empty());

    // fixed field order
    const auto pos = [&](const char* key) { return text.find(key); };
    CHECK(pos("\"n\"") < pos("\"e1\""));
    CHECK(pos("\"e1\"") < pos("\"e2\""));
    CHECK(pos("\"e2\"") < pos("\"e4_unbiased\""));
    CHECK(pos("\"e4_unbiased\"") < pos("\"e4_hat\""));
    CHECK(pos("\"e4_hat\"") < pos("\"first_order_error\""));
    CHECK(pos("\"first_order_error\"") < pos("\"second_order_error\""));
    CHECK(pos("\"second_order_error\"") < pos("\"flags\""));
}

TEST_CASE("JSON report uses null for undefined estimates") {
    const auto j = nlohmann::json::parse(mcerr::to_json(mcerr::report(acc_of({5.0}))));
    CHECK(j["n"].get<std::uint64_t>() == 1);
    CHECK(j["e1"].get<double>() == 5.0);
    CHECK(j["e2"].is_null());
    CHECK(j["e4_hat"].is_null());
    CHECK(j["flags"] == nlohmann::json::array({"e2_undefined", "e4_undefined"}));
}

TEST_CASE("JSON report keeps 17 significant digits") {
    central_accumulator acc;
    acc.add(0.1);
    acc.add(0.2);
    acc.add(0.3);
    acc.add(0.4);
    const auto j = nlohmann::json::parse(mcerr::to_json(mcerr::report(acc)));
    // bit-exact round trip through text
    CHECK(j["e1"].get<double>() == mcerr::e1(acc));
    CHECK(j["e2"].get<double>() == mcerr::e2(acc));
    CHECK(j["e4_hat"].get<double>() == mcerr::e4_hat(acc));
}

TEST_CASE("counterexample hand values at n = 4, b = 1/2") {
    const auto res = mcerr::counterexample(4, 0.5);
    REQUIRE(res.weights.size() == 4);
    CHECK(std::count(res.weights.begin(), res.weights.end(), 1.0) == 2);
    CHECK(std::count(res.weights.begin(), res.weights.end(), 0.0) == 2);
    CHECK_THAT(res.a, WithinAbs(0.25, 1e-16));
    CHECK_THAT(res.threshold, WithinAbs(0.225, 1e-16));
    CHECK(res.negative);
    CHECK(mcerr::e4_unbiased(sums_of(res.weights)) < 0.0);
}

TEST_CASE("counterexample threshold values") {
    CHECK_THAT(mcerr::counterexample(10, 0.0).threshold,
               WithinAbs(81.0 / 340.0, 1e-15));
    CHECK_THAT(mcerr::counterexample(4, 0.0).threshold,
               WithinAbs(9.0 / 40.0, 1e-15));
}

TEST_CASE("counterexample rejects bad arguments") {
    CHECK_THROWS_AS(mcerr::counterexample(3, 0.5), mcerr::undefined_estimate);
    CHECK_THROWS_AS(mcerr::counterexample(10, 1.5), std::invalid_argument);
    CHECK_THROWS_AS(mcerr::counterexample(10, -0.1), std::invalid_argument);
}

TEST_CASE("counterexample sign prediction matches e4 across the full grid") {
    for (std::uint64_t n = 4; n <= 50; ++n) {
        for (std::uint64_t k = 0; k <= n; ++k) {
            const double b = static_cast<double>(k) / static_cast<double>(n);
            const auto res = mcerr::counterexample(n, b);
            REQUIRE(static_cast<std::uint64_t>(std::count(
                        res.weights.begin(), res.weights.end(), 1.0)) == k);

            // exact integer form of a > threshold:
            //   k(n-k)(4n-6)n > (n-1)^2 n^2
            const std::uint64_t lhs = k * (n - k) * (4 * n - 6) * n;
            const std::uint64_t rhs = (n - 1) * (n - 1) * n * n;
            if (lhs == rhs) continue; // sign boundary: e4 is exactly zero
            const bool expect_negative = lhs > rhs;

            CHECK(res.negative == expect_negative);
            const double e4 = mcerr::e4_unbiased(sums_of(res.weights));
            CHECK((e4 < 0.0) == expect_negative);
            CHECK(mcerr::e4_hat(sums_of(res.weights)) >= 0.0);
        }
    }
}

TEST_CASE("counterexample e4_hat stays nonnegative while e4 dips negative") {
    // odd n: b = 1/2 rounds to (n +- 1)/2 ones
    for (std::uint64_t n : {4, 5, 10, 11, 20, 49}) {
        const auto res = mcerr::counterexample(n, 0.5);
        const auto s = sums_of(res.weights);
        CHECK(mcerr::e4_unbiased(s) < 0.0);
        CHECK(mcerr::e4_hat(s) >= 0.0);
    }
}
