#include "sievekit/cli.hpp"

#include "sievekit/arith.hpp"
#include "sievekit/buchstab.hpp"
#include "sievekit/dhr.hpp"
#include "sievekit/errors.hpp"
#include "sievekit/io.hpp"
#include "sievekit/tuples.hpp"
#include "sievekit/weighted_bound.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <ostream>
#include <sstream>

namespace sievekit::cli {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::pair<double, double> parse_range(const std::string& text, const std::string& flag) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) {
        throw CLI::ValidationError(flag, "expected lo:hi, got '" + text + "'");
    }
    try {
        std::size_t used = 0;
        const std::string lo_text = text.substr(0, colon);
        const std::string hi_text = text.substr(colon + 1);
        const double lo = std::stod(lo_text, &used);
        if (used != lo_text.size()) {
            throw std::invalid_argument(lo_text);
        }
        const double hi = std::stod(hi_text, &used);
        if (used != hi_text.size()) {
            throw std::invalid_argument(hi_text);
        }
        return {lo, hi};
    } catch (const std::exception&) {
        throw CLI::ValidationError(flag, "expected lo:hi, got '" + text + "'");
    }
}

// "0.0009765625" or "1/1024".
double parse_step(const std::string& text) {
    try {
        std::size_t used = 0;
        const auto slash = text.find('/');
        double value = 0.0;
        if (slash == std::string::npos) {
            value = std::stod(text, &used);
            if (used != text.size()) {
                throw std::invalid_argument(text);
            }
        } else {
            const std::string num = text.substr(0, slash);
            const std::string den = text.substr(slash + 1);
            const double a = std::stod(num, &used);
            if (used != num.size()) {
                throw std::invalid_argument(text);
            }
            const double b = std::stod(den, &used);
            if (used != den.size()) {
                throw std::invalid_argument(text);
            }
            value = a / b;
        }
        if (!(value > 0.0) || !std::isfinite(value)) {
            throw std::invalid_argument(text);
        }
        return value;
    } catch (const std::exception&) {
        throw CLI::ValidationError("--step", "expected a positive step such as 1/1024, got '" + text + "'");
    }
}

std::string fmt(double x) { return format_real(x); }

// Flat key/value records for text and CSV output.
using Row = std::vector<std::pair<std::string, std::string>>;

void emit_rows(std::ostream& out, const Row& row, Output output) {
    if (output == Output::csv) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            out << (i ? "," : "") << row[i].first;
        }
        out << "\n";
        for (std::size_t i = 0; i < row.size(); ++i) {
            out << (i ? "," : "") << row[i].second;
        }
        out << "\n";
        return;
    }
    std::size_t width = 0;
    for (const auto& [key, value] : row) {
        width = std::max(width, key.size());
    }
    for (const auto& [key, value] : row) {
        out << key << std::string(width + 2 - key.size(), ' ') << value << "\n";
    }
}

void emit_json(std::ostream& out, const ordered_json& j) { out << j.dump(2) << "\n"; }

TableOptions table_options(const RunConfig& c) {
    TableOptions options;
    options.step = c.step.value_or(default_step);
    options.cache_dir = c.cache_dir;
    return options;
}

ordered_json report_json(const BoundReport& r) {
    ordered_json j;
    j["k"] = r.params.k.value();
    j["u"] = r.params.u;
    j["v"] = r.params.v;
    j["I1"] = r.I1;
    j["I2"] = r.I2;
    j["S4_term"] = r.S4_term;
    j["N"] = r.N;
    j["old"] = r.old_value;
    j["r"] = r.r;
    j["err_estimate"] = r.err_estimate;
    j["borderline"] = r.borderline;
    return j;
}

Row report_row(const BoundReport& r, bool with_old, Output output) {
    auto num = [output](double x) { return output == Output::csv ? format_exact(x) : fmt(x); };
    Row row{{"k", std::to_string(r.params.k.value())},
            {"u", num(r.params.u)},
            {"v", num(r.params.v)},
            {"I1", num(r.I1)},
            {"I2", num(r.I2)},
            {"S4_term", num(r.S4_term)},
            {"N", num(r.N)}};
    if (with_old) {
        row.emplace_back("old", num(r.old_value));
    }
    row.emplace_back("r", std::to_string(r.r));
    row.emplace_back("err_estimate", num(r.err_estimate));
    row.emplace_back("borderline", r.borderline ? "true" : "false");
    return row;
}

int run_buchstab(const RunConfig& c, std::ostream& out) {
    const double u = *c.u;
    const BuchstabTable table(std::max(default_buchstab_max, std::ceil(u)), c.step.value_or(default_step));
    const double w = table(u);
    if (c.output == Output::json) {
        emit_json(out, ordered_json{{"u", u}, {"w", w}});
    } else if (c.output == Output::csv) {
        out << "u,w\n" << format_exact(u) << "," << format_exact(w) << "\n";
    } else {
        out << format_exact(w) << "\n";
    }
    return 0;
}

int run_dhr(const RunConfig& c, std::ostream& out) {
    const SieveDimension k(*c.k);
    DhrOptions options;
    options.step = c.step.value_or(default_step);
    const double u = c.u.value_or(0.0);
    std::filesystem::create_directories(c.cache_dir);
    const DhrPair pair = DhrCache(c.cache_dir).obtain(k, default_dhr_u_max(k, u), options);
    ordered_json j{{"k", k.value()}};
    Row row{{"k", std::to_string(k.value())}};
    auto num = [&c](double x) { return c.output == Output::csv ? format_exact(x) : fmt(x); };
    if (c.u) {
        j["u"] = u;
        row.emplace_back("u", num(u));
        if (c.which.empty() || c.which == "F") {
            j["F"] = pair.F(u);
            row.emplace_back("F", num(pair.F(u)));
        }
        if (c.which.empty() || c.which == "f") {
            j["f"] = pair.f(u);
            row.emplace_back("f", num(pair.f(u)));
        }
    }
    if (c.which.empty() || c.which == "beta") {
        j["alpha"] = pair.alpha;
        j["beta"] = pair.beta;
        row.emplace_back("alpha", num(pair.alpha));
        row.emplace_back("beta", num(pair.beta));
    }
    if (c.output == Output::json) {
        emit_json(out, j);
    } else {
        emit_rows(out, row, c.output);
    }
    return 0;
}

int run_bound(const RunConfig& c, std::ostream& out) {
    const BoundParams params{SieveDimension(*c.k), *c.u, *c.v};
    const BoundReport report = compute_bound(params, table_options(c));
    if (c.output == Output::json) {
        emit_json(out, report_json(report));
    } else {
        emit_rows(out, report_row(report, c.old || c.output == Output::csv, c.output), c.output);
    }
    return 0;
}

int run_optimize(const RunConfig& c, std::ostream& out) {
    const SieveDimension k(*c.k);
    const BoundTables tables = BoundTables::build(k, std::max(c.v_hi, c.v_lo), table_options(c));
    const Objective objective = c.objective == "unmixed" ? Objective::unmixed : Objective::mixed;
    const SearchResult result = optimize_bound({c.u_lo, c.u_hi, c.v_lo, c.v_hi, c.grid}, objective, tables, c.threads);
    if (c.output == Output::json) {
        ordered_json j{{"objective", c.objective},
                       {"value", result.objective},
                       {"valid_points", result.valid_points},
                       {"best", report_json(result.best)}};
        emit_json(out, j);
    } else {
        Row row{{"objective", c.objective},
                {"value", c.output == Output::csv ? format_exact(result.objective) : fmt(result.objective)},
                {"valid_points", std::to_string(result.valid_points)}};
        const Row best = report_row(result.best, true, c.output);
        row.insert(row.end(), best.begin(), best.end());
        emit_rows(out, row, c.output);
    }
    return 0;
}

int run_tuple_check(const RunConfig& c, std::ostream& out) {
    const LinearTuple t = LinearTuple::parse(c.tuple);
    std::string reason;
    const bool normal = satisfies_hypothesis(t, &reason);
    std::vector<std::pair<std::uint64_t, int>> counts;
    for (std::uint64_t p : primes_below(c.primes_up_to + 1)) {
        counts.emplace_back(p, v_p(t, p));
    }
    std::ostringstream A;
    A << t.A();
    if (c.output == Output::json) {
        ordered_json vp = ordered_json::object();
        for (auto [p, n] : counts) {
            vp[std::to_string(p)] = n;
        }
        ordered_json j{{"tuple", t.to_string()},
                       {"k", t.size()},
                       {"admissible", t.admissible()},
                       {"hypothesis", normal},
                       {"reason", normal ? "" : reason},
                       {"A", A.str()},
                       {"v_p", vp}};
        emit_json(out, j);
        return 0;
    }
    if (c.output == Output::csv) {
        out << "p,v_p\n";
        for (auto [p, n] : counts) {
            out << p << "," << n << "\n";
        }
        return 0;
    }
    std::string vp;
    for (auto [p, n] : counts) {
        vp += (vp.empty() ? "" : " ") + std::to_string(p) + ":" + std::to_string(n);
    }
    emit_rows(out,
              {{"tuple", t.to_string()},
               {"admissible", t.admissible() ? "yes" : "no"},
               {"normal form", normal ? "yes" : "no (" + reason + ")"},
               {"A", A.str()},
               {"v_p", vp}},
              c.output);
    return 0;
}

int run_normalize(const RunConfig& c, std::ostream& out) {
    const Normalization n = normalize(LinearTuple::parse(c.tuple));
    if (c.output == Output::json) {
        emit_json(out, ordered_json{{"tuple", n.tuple.to_string()}, {"A", n.A}, {"B", n.B}});
    } else if (c.output == Output::csv) {
        out << "a,b\n";
        for (const auto& f : n.tuple.forms()) {
            out << f.a << "," << f.b << "\n";
        }
    } else {
        out << n.tuple.to_string() << " (A=" << n.A << ", B=" << n.B << ")\n";
    }
    return 0;
}

int run_scan(const RunConfig& c, std::ostream& out, std::ostream& err) {
    LinearTuple t = LinearTuple::parse(c.tuple);
    if (!satisfies_hypothesis(t)) {
        const Normalization n = normalize(t);
        err << "note: scanning the normal form " << n.tuple.to_string() << " (x -> " << n.A << "x+" << n.B << ")\n";
        t = n.tuple;
    }
    ScanOptions options;
    options.max_witnesses = c.max_witnesses;
    options.threads = c.threads;
    const ScanReport r = scan_S(t, c.N, c.z, c.tau, options);
    if (c.output == Output::json) {
        ordered_json witnesses = ordered_json::array();
        for (const auto& w : r.witnesses) {
            witnesses.push_back(ordered_json{{"n", w.n}, {"omega", w.omega}});
        }
        emit_json(out, ordered_json{{"tuple", t.to_string()},
                                    {"N", r.N},
                                    {"z", r.z},
                                    {"tau", r.tau},
                                    {"S", r.S},
                                    {"survivors", r.survivors},
                                    {"truncated", r.truncated},
                                    {"witnesses", witnesses}});
    } else if (c.output == Output::csv) {
        out << "n,omega\n";
        for (const auto& w : r.witnesses) {
            out << w.n << "," << w.omega << "\n";
        }
    } else {
        emit_rows(out,
                  {{"tuple", t.to_string()},
                   {"N", std::to_string(r.N)},
                   {"z", std::to_string(r.z)},
                   {"tau", fmt(r.tau)},
                   {"S", fmt(r.S)},
                   {"survivors", std::to_string(r.survivors)},
                   {"witnesses", std::to_string(r.witnesses.size()) + (r.truncated ? " (truncated)" : "")}},
                  c.output);
        for (const auto& w : r.witnesses) {
            out << "  n=" << w.n << " Omega=" << w.omega << "\n";
        }
    }
    return 0;
}

}  // namespace

RunConfig parse_args(const std::vector<std::string>& args) {
    RunConfig c;
    CLI::App app{"Sieve functions, weighted-sieve bounds and linear k-tuple tools", "sievekit"};
    app.require_subcommand(1);
    bool json_out = false;
    bool csv_out = false;
    std::string cache;
    std::string step;
    auto* json_flag = app.add_flag("--json", json_out, "Machine-readable JSON output");
    app.add_flag("--csv", csv_out, "CSV output")->excludes(json_flag);
    app.add_option("--cache-dir", cache, "Table cache directory (default $SIEVEKIT_CACHE or ./.sievekit-cache)");
    app.add_option("--step", step, "DDE grid step, e.g. 1/1024");

    auto positive_k = CLI::Range(1, 8);

    auto* buchstab = app.add_subcommand("buchstab", "Buchstab's function w(u)");
    buchstab->add_option("--u", c.u, "Argument, u >= 1")->required();

    auto* dhr = app.add_subcommand("dhr", "DHR sieve functions F_k, f_k and the sifting limit");
    dhr->add_option("--k", c.k, "Sieve dimension 1..8")->required()->check(positive_k);
    dhr->add_option("--u", c.u, "Argument u > 0");
    dhr->add_option("--which", c.which, "F, f or beta")->check(CLI::IsMember({"F", "f", "beta"}));

    auto* bound = app.add_subcommand("bound", "Weighted-sieve bound N(u, v; k)");
    bound->add_option("--k", c.k, "Sieve dimension 2..8")->required()->check(CLI::Range(2, 8));
    bound->add_option("--u", c.u, "u with v/(v-1) < u < v")->required();
    bound->add_option("--v", c.v, "v above the sifting limit")->required();
    bound->add_flag("--old", c.old, "Also print the unmixed comparison value");

    std::string u_range;
    std::string v_range;
    auto* optimize = app.add_subcommand("optimize", "Grid search for the best (u, v)");
    optimize->add_option("--k", c.k, "Sieve dimension 2..8")->required()->check(CLI::Range(2, 8));
    optimize->add_option("--u-range", u_range, "lo:hi")->required();
    optimize->add_option("--v-range", v_range, "lo:hi")->required();
    optimize->add_option("--grid", c.grid, "Points per axis")->check(CLI::Range(2, 4096));
    optimize->add_option("--objective", c.objective, "mixed or unmixed")->check(CLI::IsMember({"mixed", "unmixed"}));
    optimize->add_option("--threads", c.threads, "Worker threads (0 = all cores)");

    auto* tuple_check = app.add_subcommand("tuple-check", "Admissibility and normal-form report for a tuple");
    tuple_check->add_option("--tuple", c.tuple, "Forms such as \"x,x+2,x+6\"")->required();
    tuple_check->add_option("--primes-up-to", c.primes_up_to, "List v_p for p up to this bound")
        ->check(CLI::Range(std::uint64_t{2}, std::uint64_t{100000}));

    auto* normalize_cmd = app.add_subcommand("normalize", "Substitute x -> Ax + B to reach the normal form");
    normalize_cmd->add_option("--tuple", c.tuple, "Forms such as \"x,x+2,x+6\"")->required();

    auto* scan = app.add_subcommand("scan", "Exact S(tau; N, z) over n in [N, 2N)");
    scan->add_option("--tuple", c.tuple, "Forms such as \"6x+5,6x+7,6x+11\"")->required();
    scan->add_option("--N", c.N, "Start of the range")->required();
    scan->add_option("--z", c.z, "Sifting bound")->required();
    scan->add_option("--tau", c.tau, "Weight threshold")->required();
    scan->add_option("--max-witnesses", c.max_witnesses, "Cap on listed witnesses");
    scan->add_option("--threads", c.threads, "Worker threads (0 = all cores)");

    for (auto* sub : app.get_subcommands({})) {
        sub->fallthrough();
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
        if (optimize->parsed()) {
            std::tie(c.u_lo, c.u_hi) = parse_range(u_range, "--u-range");
            std::tie(c.v_lo, c.v_hi) = parse_range(v_range, "--v-range");
        }
        if (!step.empty()) {
            c.step = parse_step(step);
        }
        if (dhr->parsed() && !c.u && c.which != "beta") {
            throw CLI::RequiredError("--u (needed unless --which beta)");
        }
    } catch (const CLI::ParseError& e) {
        std::ostringstream out;
        std::ostringstream err;
        const int code = app.exit(e, out, err);
        throw UsageExit{code == 0 ? 0 : 2, out.str() + err.str()};
    }

    if (buchstab->parsed()) c.command = Command::buchstab;
    if (dhr->parsed()) c.command = Command::dhr;
    if (bound->parsed()) c.command = Command::bound;
    if (optimize->parsed()) c.command = Command::optimize;
    if (tuple_check->parsed()) c.command = Command::tuple_check;
    if (normalize_cmd->parsed()) c.command = Command::normalize;
    if (scan->parsed()) c.command = Command::scan;
    c.output = json_out ? Output::json : csv_out ? Output::csv : Output::text;
    if (!cache.empty()) {
        c.cache_dir = cache;
    } else if (const char* env = std::getenv("SIEVEKIT_CACHE"); env && *env) {
        c.cache_dir = env;
    } else {
        c.cache_dir = ".sievekit-cache";
    }
    return c;
}

int run(const RunConfig& config, std::ostream& out, std::ostream& err) {
    try {
        switch (config.command) {
        case Command::buchstab:
            return run_buchstab(config, out);
        case Command::dhr:
            return run_dhr(config, out);
        case Command::bound:
            return run_bound(config, out);
        case Command::optimize:
            return run_optimize(config, out);
        case Command::tuple_check:
            return run_tuple_check(config, out);
        case Command::normalize:
            return run_normalize(config, out);
        case Command::scan:
            return run_scan(config, out, err);
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

int main_entry(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    RunConfig config;
    try {
        config = parse_args(args);
    } catch (const UsageExit& e) {
        (e.exit_code == 0 ? out : err) << e.message;
        return e.exit_code;
    }
    return run(config, out, err);
}

}  // namespace sievekit::cli
