// mcerr command line front end.
//
// Subcommands: estimate, converge, ensemble, counterexample, stability.
// All output is a pure function of the flags: rerunning with the same
// arguments (and MCERR_OUTDIR) reproduces files byte for byte.
// Exit codes: 0 on success, 2 on usage or input errors.

#include <cerrno>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "mcerr/central_accumulator.hpp"
#include "mcerr/common.hpp"
#include "mcerr/estimators.hpp"
#include "mcerr/experiments.hpp"
#include "mcerr/power_sums.hpp"
#include "mcerr/sampling.hpp"

namespace {

namespace fs = std::filesystem;

int fail(const std::string& msg) {
    std::cerr << "mcerr: error: " << msg << '\n';
    return 2;
}

// Relative output paths land under $MCERR_OUTDIR when it is set; parent
// directories are created as needed.
fs::path resolve_output(const std::string& raw) {
    fs::path p(raw);
    if (p.is_relative()) {
        if (const char* dir = std::getenv("MCERR_OUTDIR"); dir && *dir) {
            p = fs::path(dir) / p;
        }
    }
    if (p.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(p.parent_path(), ec);
    }
    return p;
}

// Compact single-line JSON, 17 significant digits, fixed field order.
class json_object {
public:
    json_object& raw(const std::string& key, const std::string& value) {
        body_ += body_.empty() ? "" : ",";
        body_ += '"' + key + "\":" + value;
        return *this;
    }
    json_object& num(const std::string& key, double v) {
        return raw(key, mcerr::num_str(v, 17));
    }
    json_object& num(const std::string& key, std::uint64_t v) {
        return raw(key, std::to_string(v));
    }
    json_object& str(const std::string& key, const std::string& v) {
        return raw(key, '"' + v + '"');
    }
    json_object& boolean(const std::string& key, bool v) {
        return raw(key, v ? "true" : "false");
    }
    std::string done() const { return "{" + body_ + "}"; }

private:
    std::string body_;
};

// Accepts anything strtod consumes entirely (including inf/nan, which the
// report flags downstream); rejects trailing garbage.
bool parse_weight(const std::string& line, double& out) {
    const char* s = line.c_str();
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(s, &end);
    if (end == s) return false;
    while (*end == ' ' || *end == '\t' || *end == '\r') ++end;
    if (*end != '\0') return false;
    out = v;
    return true;
}

int run_estimate(const std::string& input) {
    std::ifstream file;
    std::istream* in = &std::cin;
    if (input != "-") {
        file.open(input);
        if (!file) return fail("cannot open input file '" + input + "'");
        in = &file;
    }
    mcerr::central_accumulator acc;
    std::string line;
    std::uint64_t line_no = 0;
    while (std::getline(*in, line)) {
        ++line_no;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        double w = 0.0;
        if (!parse_weight(line, w))
            return fail("line " + std::to_string(line_no) + ": not a number: '" +
                        line + "'");
        acc.add(w);
    }
    if (acc.n == 0) return fail("empty input: no weights found");
    std::cout << mcerr::to_json(mcerr::report(acc)) << '\n';
    return 0;
}

int run_converge(const std::string& dist, std::uint64_t n_max, std::uint64_t seed,
                 std::uint64_t stride, const std::string& out,
                 const std::string& format) {
    const auto spec = mcerr::distribution_spec::parse(dist);
    if (n_max < 4) return fail("converge: --n must be at least 4");
    if (stride < 1) return fail("converge: --stride must be at least 1");
    const auto trace = mcerr::run_convergence(spec, n_max, seed, stride);

    const fs::path path = resolve_output(out);
    std::ofstream os(path);
    if (!os) return fail("cannot open output file '" + path.string() + "'");
    if (format == "csv") {
        mcerr::write_csv(os, trace);
    } else {
        std::string rows;
        for (const auto& r : trace.rows) {
            if (!rows.empty()) rows += ',';
            rows += json_object()
                        .num("n", r.n)
                        .num("e1", r.e1)
                        .num("e2", r.e2)
                        .num("e4hat", r.e4_hat)
                        .num("err1", r.err1)
                        .num("err2", r.err2)
                        .done();
        }
        os << json_object()
                  .str("dist", trace.spec.str())
                  .num("seed", trace.seed)
                  .num("stride", trace.stride)
                  .num("n_max", trace.n_max)
                  .str("rng", std::string(mcerr::rng_id))
                  .str("version", std::string(mcerr::version_string))
                  .raw("rows", "[" + rows + "]")
                  .done()
           << '\n';
    }
    if (!os) return fail("write failed for '" + path.string() + "'");
    return 0;
}

int run_ensemble(const std::string& dist, std::uint64_t n, std::uint64_t replicas,
                 std::uint64_t seed, std::uint64_t bins, unsigned threads,
                 const std::string& out) {
    const auto spec = mcerr::distribution_spec::parse(dist);
    if (n < 4) return fail("ensemble: --n must be at least 4");
    if (replicas < 2) return fail("ensemble: --replicas must be at least 2");
    if (bins < 1) return fail("ensemble: --bins must be at least 1");
    const auto res = mcerr::run_ensemble(spec, n, replicas, seed,
                                         static_cast<std::size_t>(bins), threads);

    const auto meta = [&](const char* which) {
        return "mcerr " + std::string(mcerr::version_string) + " ensemble " +
               std::string(which) + " dist=" + res.spec.str() +
               " n=" + std::to_string(res.n) +
               " replicas=" + std::to_string(res.replicas) +
               " seed=" + std::to_string(res.seed) +
               " bins=" + std::to_string(res.bins) +
               " rng=" + std::string(mcerr::rng_id);
    };

    const fs::path e1_path = resolve_output(out + "_e1.csv");
    std::ofstream e1_os(e1_path);
    if (!e1_os) return fail("cannot open output file '" + e1_path.string() + "'");
    mcerr::write_csv(e1_os, res.hist_e1, meta("e1"));

    const fs::path e2_path = resolve_output(out + "_e2.csv");
    std::ofstream e2_os(e2_path);
    if (!e2_os) return fail("cannot open output file '" + e2_path.string() + "'");
    mcerr::write_csv(e2_os, res.hist_e2, meta("e2"));

    const fs::path sum_path = resolve_output(out + "_summary.json");
    std::ofstream sum_os(sum_path);
    if (!sum_os) return fail("cannot open output file '" + sum_path.string() + "'");
    sum_os << json_object()
                  .str("dist", res.spec.str())
                  .num("n", res.n)
                  .num("replicas", res.replicas)
                  .num("seed", res.seed)
                  .num("bins", static_cast<std::uint64_t>(res.bins))
                  .str("rng", std::string(mcerr::rng_id))
                  .str("version", std::string(mcerr::version_string))
                  .num("mean_e1", res.mean_e1)
                  .num("var_e1", res.var_e1)
                  .num("mean_e2", res.mean_e2)
                  .num("var_e2", res.var_e2)
                  .num("mean_e4_unbiased", res.mean_e4)
                  .num("var_e4_unbiased", res.var_e4)
                  .num("mean_e4_hat", res.mean_e4hat)
                  .num("var_e4_hat", res.var_e4hat)
                  .num("mean_x2", res.mean_x2)
                  .num("var_x2", res.var_x2)
                  .num("overlay_sigma_e1", res.overlay_sigma_e1)
                  .num("overlay_sigma_e2", res.overlay_sigma_e2)
                  .num("ks_e1", res.ks_e1)
                  .num("ks_e2", res.ks_e2)
                  .done()
           << '\n';
    if (!e1_os || !e2_os || !sum_os) return fail("write failed under '" + out + "'");
    return 0;
}

int run_counterexample(std::uint64_t n, double b) {
    const auto res = mcerr::counterexample(n, b);
    mcerr::power_sums sums;
    for (double w : res.weights) sums.add(w);
    std::cout << json_object()
                     .num("n", n)
                     .num("b", b)
                     .num("a", res.a)
                     .num("threshold", res.threshold)
                     .num("e4", mcerr::e4_unbiased(sums))
                     .num("e4_hat", mcerr::e4_hat(sums))
                     .boolean("negative", res.negative)
                     .done()
              << '\n';
    return 0;
}

int run_stability(double offset, std::uint64_t n, std::uint64_t seed) {
    if (n < 4) return fail("stability: --n must be at least 4");
    const auto rep = mcerr::run_stability(offset, n, seed);
    std::cout << json_object()
                     .num("offset", rep.offset)
                     .num("n", rep.n)
                     .num("seed", rep.seed)
                     .num("e2_naive", rep.e2_naive)
                     .num("e2_accumulator", rep.e2_acc)
                     .num("e2_oracle", rep.e2_oracle)
                     .num("e4hat_naive", rep.e4hat_naive)
                     .num("e4hat_accumulator", rep.e4hat_acc)
                     .num("e4hat_oracle", rep.e4hat_oracle)
                     .num("rel_e2_naive", rep.rel_e2_naive)
                     .num("rel_e2_accumulator", rep.rel_e2_acc)
                     .num("rel_e4hat_naive", rep.rel_e4hat_naive)
                     .num("rel_e4hat_accumulator", rep.rel_e4hat_acc)
                     .done()
              << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monte Carlo integration with first- and second-order error "
                 "estimates"};
    app.require_subcommand(1);

    std::string input = "-";
    auto* estimate = app.add_subcommand(
        "estimate", "Stream a weight file (one number per line) into a JSON "
                    "report on stdout");
    estimate->add_option("--input", input,
                         "weight file, or '-' for stdin (default)");

    std::string dist = "uniform";
    std::uint64_t n = 0, seed = 1, stride = 1, replicas = 0, bins = 100;
    unsigned threads = 0;
    std::string out, format = "csv";
    double b = 0.5, offset = 1e8;

    auto* converge = app.add_subcommand(
        "converge", "Single-stream convergence trace of e1/e2/e4hat vs n");
    converge->add_option("--dist", dist,
                         "distribution: uniform | power:<alpha> | exp | expint");
    converge->add_option("--n", n, "largest sample size")->required();
    converge->add_option("--seed", seed, "stream seed (default 1)");
    converge->add_option("--stride", stride, "record every stride-th n");
    converge->add_option("--out", out, "output file")->required();
    converge->add_option("--format", format, "csv (default) or json")
        ->check(CLI::IsMember({"csv", "json"}));

    auto* ensemble = app.add_subcommand(
        "ensemble", "Replicated estimates: histogram CSVs plus a summary JSON");
    ensemble->add_option("--dist", dist,
                         "distribution: uniform | power:<alpha> | exp | expint");
    ensemble->add_option("--n", n, "weights per replica")->required();
    ensemble->add_option("--replicas", replicas, "number of replicas")->required();
    ensemble->add_option("--seed", seed, "master seed (default 1)");
    ensemble->add_option("--bins", bins, "histogram bins (default 100)");
    ensemble->add_option("--threads", threads,
                         "worker threads, 0 = hardware (result is identical "
                         "for any value)");
    ensemble->add_option("--out", out, "output prefix: writes <out>_e1.csv, "
                                       "<out>_e2.csv, <out>_summary.json")
        ->required();

    auto* counterex = app.add_subcommand(
        "counterexample", "0/1-weight stream with negative unbiased e4");
    counterex->add_option("--n", n, "stream length (>= 4)")->required();
    counterex->add_option("--b", b, "fraction of one-weights (default 0.5)");

    auto* stability = app.add_subcommand(
        "stability", "Offset-weight comparison of naive sums, the "
                     "accumulator, and a compensated oracle");
    stability->add_option("--offset", offset, "weight offset (default 1e8)");
    stability->add_option("--n", n, "stream length (default 100000)");
    stability->add_option("--seed", seed, "stream seed (default 1)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*estimate) return run_estimate(input);
        if (*converge) return run_converge(dist, n, seed, stride, out, format);
        if (*ensemble)
            return run_ensemble(dist, n, replicas, seed, bins, threads, out);
        if (*counterex) return run_counterexample(n, b);
        if (*stability)
            return run_stability(offset, stability->count("--n") ? n : 100000,
                                 seed);
    } catch (const std::exception& e) {
        return fail(e.what());
    }
    return fail("no subcommand selected");
}
