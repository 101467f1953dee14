#include "sievekit/dde.hpp"

#include "sievekit/errors.hpp"
#include "sievekit/io.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace sievekit {

namespace {

constexpr double grid_tolerance = 1e-9;
constexpr double breakpoint_merge = 1e-12;

// Lagrange interpolation over the available nodes, choosing the stencil inside the smooth
// piece (between consecutive breakpoints) that contains u.
double interpolate_nodes(const GridSpec& grid, std::span<const double> values, std::span<const double> breakpoints,
                         double u) {
    const std::size_t n = values.size();
    if (n == 1) {
        return values[0];
    }
    const double h = grid.step;
    const double t = (u - grid.u_min) / h;
    auto cell = static_cast<long>(std::max(0.0, std::floor(t)));
    cell = std::min(cell, static_cast<long>(n) - 2);
    if (grid.node(static_cast<std::size_t>(cell)) == u) {
        return values[static_cast<std::size_t>(cell)];
    }
    if (grid.node(static_cast<std::size_t>(cell + 1)) == u) {
        return values[static_cast<std::size_t>(cell + 1)];
    }

    long j_lo = 0;
    long j_hi = static_cast<long>(n) - 1;
    const auto upper = std::lower_bound(breakpoints.begin(), breakpoints.end(), u);
    if (upper != breakpoints.begin()) {
        const double lower = *(upper - 1);
        j_lo = std::max(j_lo, static_cast<long>(std::ceil((lower - grid.u_min) / h - grid_tolerance)));
    }
    if (upper != breakpoints.end()) {
        j_hi = std::min(j_hi, static_cast<long>(std::floor((*upper - grid.u_min) / h + grid_tolerance)));
    }
    if (j_hi - j_lo + 1 < 2) {
        // piece narrower than two nodes; fall back to the unconstrained stencil
        j_lo = 0;
        j_hi = static_cast<long>(n) - 1;
    }
    const long m = std::min<long>(4, j_hi - j_lo + 1);
    long j0 = cell - (m - 1) / 2;
    j0 = std::clamp(j0, j_lo, j_hi - m + 1);

    const double x = (u - grid.node(static_cast<std::size_t>(j0))) / h;
    double sum = 0.0;
    for (long q = 0; q < m; ++q) {
        double weight = 1.0;
        for (long r = 0; r < m; ++r) {
            if (r != q) {
                weight *= (x - static_cast<double>(r)) / static_cast<double>(q - r);
            }
        }
        sum += weight * values[static_cast<std::size_t>(j0 + q)];
    }
    return sum;
}

// Evaluation used for delayed arguments: the closed form is accepted on its closed interval
// (so a power law may be read at u = 0), otherwise nodes are interpolated.
double history_value(const GridSpec& grid, const InitialSegment& initial, std::span<const double> values,
                     std::span<const double> breakpoints, double u) {
    if (u < initial.lo() - breakpoint_merge) {
        throw DomainError("delayed argument " + format_real(u) + " lies below the initial segment");
    }
    if (u <= initial.hi()) {
        return initial(u);
    }
    if (values.empty() || u > grid.node(values.size() - 1) + breakpoint_merge) {
        throw std::logic_error("history read ahead of integration front");
    }
    return interpolate_nodes(grid, values, breakpoints, u);
}

struct Equation {
    const DelayProblem* problem = nullptr;
    double start = 0.0;
    std::vector<double> values;
    std::vector<double> breakpoints;
    std::size_t filled = 0;
    double accumulated = 0.0;  // u^power * y at the last integrated point
    bool started = false;
};

double seed_value(const Equation& eq, double u) {
    const auto& p = *eq.problem;
    if (u <= p.initial.hi()) {
        return p.initial(u);
    }
    return p.prefill(u);
}

double resolved_start(const DelayProblem& p) {
    return std::isnan(p.start) ? p.initial.hi() : p.start;
}

void validate(const DelayProblem& p, const GridSpec& grid) {
    if (!(p.delay > 0.0)) {
        throw ConfigError("delay must be positive");
    }
    if (grid.step > p.delay / 8.0 * (1.0 + grid_tolerance)) {
        throw ConfigError("step " + format_real(grid.step) + " exceeds delay/8");
    }
    if (grid.u_min < p.initial.lo() || grid.u_min > p.initial.hi()) {
        throw ConfigError("grid must start inside the initial segment");
    }
    const double start = resolved_start(p);
    if (start < p.initial.hi() || start >= grid.u_max) {
        throw ConfigError("integration start must lie in [initial.hi, u_max)");
    }
    if (start > p.initial.hi() && !p.prefill) {
        throw ConfigError("a prefill is required when integration starts beyond the initial segment");
    }
}

std::vector<double> propagate(std::span<const double> seeds, double delay, std::size_t first_multiple,
                              const GridSpec& grid) {
    std::vector<double> out;
    for (double s : seeds) {
        for (std::size_t m = first_multiple;; ++m) {
            const double b = s + static_cast<double>(m) * delay;
            if (b > grid.u_max) {
                break;
            }
            if (b > grid.u_min) {
                out.push_back(b);
            }
        }
    }
    return out;
}

void finalize_breakpoints(std::vector<double>& bps) {
    std::sort(bps.begin(), bps.end());
    auto last = std::unique(bps.begin(), bps.end(),
                            [](double a, double b) { return std::abs(a - b) <= breakpoint_merge; });
    bps.erase(last, bps.end());
}

std::vector<double> own_seeds(const DelayProblem& p) {
    std::vector<double> seeds = p.breakpoint_seeds;
    seeds.push_back(resolved_start(p));
    return seeds;
}

class Integrator {
public:
    Integrator(std::vector<const DelayProblem*> problems, const GridSpec& grid) : grid_(grid) {
        for (const auto* p : problems) {
            validate(*p, grid);
            Equation eq;
            eq.problem = p;
            eq.start = resolved_start(*p);
            eq.values.assign(grid.size(), 0.0);
            equations_.push_back(std::move(eq));
        }
        for (std::size_t e = 0; e < equations_.size(); ++e) {
            check_coverage(e);
            build_breakpoints(e);
        }
    }

    std::vector<SolutionTable> run() {
        const std::size_t n = grid_.size();
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t e = 0; e < equations_.size(); ++e) {
                advance(e, i);
            }
        }
        std::vector<SolutionTable> out;
        for (auto& eq : equations_) {
            const auto& p = *eq.problem;
            TableMeta meta{p.power, p.delay, p.sign, eq.start};
            out.emplace_back(grid_, p.initial, meta, std::move(eq.values), std::move(eq.breakpoints));
        }
        return out;
    }

private:
    const Equation& partner_of(std::size_t e) const { return equations_[1 - e]; }

    void check_coverage(std::size_t e) {
        const auto& eq = equations_[e];
        const auto& p = *eq.problem;
        const double earliest = eq.start - p.delay;
        switch (p.source.kind()) {
            case DelaySource::Kind::self:
                if (earliest < p.initial.lo() - breakpoint_merge) {
                    throw DomainError("initial segment does not cover the first delayed argument");
                }
                break;
            case DelaySource::Kind::partner: {
                if (equations_.size() != 2) {
                    throw ConfigError("partner source requires a coupled pair");
                }
                const auto& other = *partner_of(e).problem;
                if (other.delay != p.delay) {
                    throw ConfigError("coupled equations must share the delay");
                }
                if (earliest < other.initial.lo() - breakpoint_merge) {
                    throw DomainError("partner initial segment does not cover the first delayed argument");
                }
                break;
            }
            case DelaySource::Kind::table: {
                const auto& src = p.source.source_table();
                if (!src) {
                    throw ConfigError("missing source table");
                }
                if (earliest < src->u_lo() - breakpoint_merge || src->u_max() < grid_.u_max - p.delay) {
                    throw DomainError("source table does not cover [" + format_real(earliest) + ", " +
                                      format_real(grid_.u_max - p.delay) + "]");
                }
                break;
            }
        }
    }

    void build_breakpoints(std::size_t e) {
        auto& eq = equations_[e];
        const auto& p = *eq.problem;
        const auto seeds = own_seeds(p);
        eq.breakpoints = propagate(seeds, p.delay, 0, grid_);
        if (p.source.kind() == DelaySource::Kind::partner) {
            const auto other = own_seeds(*partner_of(e).problem);
            const auto extra = propagate(other, p.delay, 1, grid_);
            eq.breakpoints.insert(eq.breakpoints.end(), extra.begin(), extra.end());
        } else if (p.source.kind() == DelaySource::Kind::table) {
            const auto& src = *p.source.source_table();
            std::vector<double> shifted(src.breakpoints().begin(), src.breakpoints().end());
            shifted.push_back(src.initial().hi());
            for (double b : shifted) {
                const double moved = b + p.delay;
                if (moved > grid_.u_min && moved <= grid_.u_max) {
                    eq.breakpoints.push_back(moved);
                }
            }
        }
        finalize_breakpoints(eq.breakpoints);
    }

    double delayed(std::size_t e, double x) const {
        const auto& p = *equations_[e].problem;
        switch (p.source.kind()) {
            case DelaySource::Kind::self: {
                const auto& eq = equations_[e];
                return history_value(grid_, p.initial, std::span(eq.values.data(), eq.filled), eq.breakpoints, x);
            }
            case DelaySource::Kind::partner: {
                const auto& other = partner_of(e);
                return history_value(grid_, other.problem->initial, std::span(other.values.data(), other.filled),
                                     other.breakpoints, x);
            }
            case DelaySource::Kind::table: {
                const auto& src = *p.source.source_table();
                if (x <= src.initial().hi() && x >= src.initial().lo()) {
                    return src.initial()(x);
                }
                return src.query(x);
            }
        }
        return 0.0;
    }

    double rhs(std::size_t e, double u) const {
        const auto& p = *equations_[e].problem;
        if (p.power == 0.0) {
            return 0.0;
        }
        return p.sign * p.power * std::pow(u, p.power - 1.0) * delayed(e, u - p.delay);
    }

    double simpson(std::size_t e, double a, double b) const {
        const double mid = 0.5 * (a + b);
        return (b - a) / 6.0 * (rhs(e, a) + 4.0 * rhs(e, mid) + rhs(e, b));
    }

    void advance(std::size_t e, std::size_t i) {
        auto& eq = equations_[e];
        const auto& p = *eq.problem;
        const double x = grid_.node(i);
        double value;
        if (x <= eq.start) {
            value = seed_value(eq, x);
            if (x == eq.start) {
                eq.accumulated = std::pow(x, p.power) * value;
                eq.started = true;
            }
        } else {
            double a;
            if (!eq.started) {
                a = eq.start;
                eq.accumulated = std::pow(a, p.power) * seed_value(eq, a);
                eq.started = true;
            } else {
                a = grid_.node(i - 1);
            }
            auto it = std::upper_bound(eq.breakpoints.begin(), eq.breakpoints.end(), a + breakpoint_merge);
            for (; it != eq.breakpoints.end() && *it < x - breakpoint_merge; ++it) {
                eq.accumulated += simpson(e, a, *it);
                a = *it;
            }
            eq.accumulated += simpson(e, a, x);
            value = p.power == 0.0 ? eq.accumulated : eq.accumulated / std::pow(x, p.power);
        }
        if (!std::isfinite(value)) {
            throw NumericOverflowError("non-finite solution value at u = " + format_real(x));
        }
        eq.values[i] = value;
        eq.filled = i + 1;
    }

    GridSpec grid_;
    std::vector<Equation> equations_;
};

std::string expect_key(std::istream& in, const std::string& key) {
    std::string line;
    if (!std::getline(in, line)) {
        throw CacheError("truncated table: missing '" + key + "'");
    }
    if (line.rfind(key + " ", 0) != 0) {
        throw CacheError("malformed table: expected '" + key + "', got '" + line + "'");
    }
    return line.substr(key.size() + 1);
}

}  // namespace

GridSpec GridSpec::make(double u_min, double u_max, double step) {
    if (!(step > 0.0) || !std::isfinite(step)) {
        throw ConfigError("grid step must be positive");
    }
    if (!(u_min < u_max)) {
        throw ConfigError("grid requires u_min < u_max");
    }
    const double count = (u_max - u_min) / step;
    if (std::abs(count - std::round(count)) > grid_tolerance * std::max(1.0, count)) {
        throw ConfigError("grid range is not a whole number of steps");
    }
    return GridSpec{u_min, u_max, step};
}

std::size_t GridSpec::intervals() const {
    return static_cast<std::size_t>(std::llround((u_max - u_min) / step));
}

InitialSegment::InitialSegment(Kind kind, double coefficient, double exponent, double lo, double hi)
    : kind_(kind), coefficient_(coefficient), exponent_(exponent), lo_(lo), hi_(hi) {
    if (!(lo >= 0.0) || !(hi > lo) || !std::isfinite(hi) || !std::isfinite(coefficient) || !std::isfinite(exponent)) {
        throw ConfigError("invalid initial segment");
    }
}

InitialSegment InitialSegment::zero(double lo, double hi) { return {Kind::zero, 0.0, 0.0, lo, hi}; }

InitialSegment InitialSegment::constant(double value, double lo, double hi) {
    return {Kind::constant, value, 0.0, lo, hi};
}

InitialSegment InitialSegment::power(double coefficient, double exponent, double lo, double hi) {
    return {Kind::power, coefficient, exponent, lo, hi};
}

InitialSegment InitialSegment::reciprocal(double coefficient, double lo, double hi) {
    if (lo <= 0.0) {
        throw ConfigError("reciprocal segment must stay away from 0");
    }
    return {Kind::reciprocal, coefficient, -1.0, lo, hi};
}

double InitialSegment::operator()(double u) const {
    switch (kind_) {
        case Kind::zero:
            return 0.0;
        case Kind::constant:
            return coefficient_;
        case Kind::power:
            return coefficient_ * std::pow(u, exponent_);
        case Kind::reciprocal:
            return coefficient_ / u;
    }
    return 0.0;
}

std::string InitialSegment::describe() const {
    std::ostringstream out;
    switch (kind_) {
        case Kind::zero:
            out << "zero";
            break;
        case Kind::constant:
            out << "constant " << format_exact(coefficient_);
            break;
        case Kind::power:
            out << "power " << format_exact(coefficient_) << ' ' << format_exact(exponent_);
            break;
        case Kind::reciprocal:
            out << "reciprocal " << format_exact(coefficient_);
            break;
    }
    out << ' ' << format_exact(lo_) << ' ' << format_exact(hi_);
    return out.str();
}

InitialSegment InitialSegment::parse(const std::string& descriptor) {
    std::istringstream in(descriptor);
    std::string kind;
    in >> kind;
    auto next = [&in, &descriptor]() {
        std::string token;
        if (!(in >> token)) {
            throw CacheError("malformed initial segment '" + descriptor + "'");
        }
        return parse_exact(token);
    };
    if (kind == "zero") {
        const double lo = next();
        return zero(lo, next());
    }
    if (kind == "constant") {
        const double c = next();
        const double lo = next();
        return constant(c, lo, next());
    }
    if (kind == "power") {
        const double c = next();
        const double p = next();
        const double lo = next();
        return power(c, p, lo, next());
    }
    if (kind == "reciprocal") {
        const double c = next();
        const double lo = next();
        return reciprocal(c, lo, next());
    }
    throw CacheError("unknown initial segment kind '" + kind + "'");
}

SolutionTable::SolutionTable(GridSpec grid, InitialSegment initial, TableMeta meta, std::vector<double> values,
                             std::vector<double> breakpoints)
    : grid_(grid),
      initial_(initial),
      meta_(meta),
      values_(std::move(values)),
      breakpoints_(std::move(breakpoints)) {
    if (values_.size() != grid_.size()) {
        throw ConfigError("table has " + std::to_string(values_.size()) + " values for " +
                          std::to_string(grid_.size()) + " nodes");
    }
    if (!std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); })) {
        throw NumericOverflowError("table contains non-finite values");
    }
    finalize_breakpoints(breakpoints_);
}

double SolutionTable::query(double u) const {
    if (!(u > 0.0) || u < initial_.lo() || u > grid_.u_max) {
        throw DomainError("query point " + format_real(u) + " outside (" + format_real(initial_.lo()) + ", " +
                          format_real(grid_.u_max) + "]");
    }
    if (u <= initial_.hi()) {
        return initial_(u);
    }
    return interpolate_nodes(grid_, values_, breakpoints_, u);
}

SolutionTable solve_dde(const DelayProblem& problem, const GridSpec& grid) {
    if (problem.source.kind() == DelaySource::Kind::partner) {
        throw ConfigError("partner source requires solve_coupled");
    }
    Integrator integrator({&problem}, grid);
    return std::move(integrator.run().front());
}

std::pair<SolutionTable, SolutionTable> solve_coupled(const DelayProblem& first, const DelayProblem& second,
                                                      const GridSpec& grid) {
    Integrator integrator({&first, &second}, grid);
    auto tables = integrator.run();
    return {std::move(tables[0]), std::move(tables[1])};
}

void write_table(std::ostream& out, const SolutionTable& table) {
    const auto& meta = table.meta();
    const auto& grid = table.grid();
    out << "SIEVEKIT-TABLE v1\n";
    out << "power " << format_exact(meta.power) << '\n';
    out << "delay " << format_exact(meta.delay) << '\n';
    out << "sign " << format_exact(meta.sign) << '\n';
    out << "start " << format_exact(meta.start) << '\n';
    out << "u_min " << format_exact(grid.u_min) << '\n';
    out << "u_max " << format_exact(grid.u_max) << '\n';
    out << "step " << format_exact(grid.step) << '\n';
    out << "initial " << table.initial().describe() << '\n';
    out << "breakpoints " << table.breakpoints().size();
    for (double b : table.breakpoints()) {
        out << ' ' << format_exact(b);
    }
    out << '\n';
    out << "values " << table.values().size() << '\n';
    for (double v : table.values()) {
        out << format_exact(v) << '\n';
    }
}

SolutionTable read_table(std::istream& in) {
    std::string header;
    if (!std::getline(in, header) || header != "SIEVEKIT-TABLE v1") {
        throw CacheError("not a SIEVEKIT-TABLE v1 file");
    }
    TableMeta meta;
    meta.power = parse_exact(expect_key(in, "power"));
    meta.delay = parse_exact(expect_key(in, "delay"));
    meta.sign = parse_exact(expect_key(in, "sign"));
    meta.start = parse_exact(expect_key(in, "start"));
    GridSpec grid;
    grid.u_min = parse_exact(expect_key(in, "u_min"));
    grid.u_max = parse_exact(expect_key(in, "u_max"));
    grid.step = parse_exact(expect_key(in, "step"));
    grid = GridSpec::make(grid.u_min, grid.u_max, grid.step);
    const auto initial = InitialSegment::parse(expect_key(in, "initial"));

    std::istringstream bp_line(expect_key(in, "breakpoints"));
    std::size_t bp_count = 0;
    bp_line >> bp_count;
    std::vector<double> breakpoints;
    for (std::size_t i = 0; i < bp_count; ++i) {
        std::string token;
        if (!(bp_line >> token)) {
            throw CacheError("truncated breakpoint list");
        }
        breakpoints.push_back(parse_exact(token));
    }

    const auto count = static_cast<std::size_t>(std::stoull(expect_key(in, "values")));
    std::vector<double> values;
    values.reserve(count);
    std::string line;
    while (values.size() < count && std::getline(in, line)) {
        values.push_back(parse_exact(line));
    }
    if (values.size() != count) {
        throw CacheError("truncated value list");
    }
    return SolutionTable(grid, initial, meta, std::move(values), std::move(breakpoints));
}

void save_table(const std::string& path, const SolutionTable& table) {
    std::ostringstream out;
    write_table(out, table);
    write_file_atomic(path, out.str());
}

SolutionTable load_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw CacheError("cannot open table file " + path);
    }
    return read_table(in);
}

}  // namespace sievekit
