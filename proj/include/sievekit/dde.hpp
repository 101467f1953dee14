#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace sievekit {

inline constexpr double default_step = 1.0 / 1024.0;

/// Uniform discretization of the u-axis. Nodes are u_min + i * step.
struct GridSpec {
    double u_min = 0.0;
    double u_max = 0.0;
    double step = 0.0;

    /// Validated construction; throws ConfigError when the range is empty,
    /// the step is not positive, or the range is not a whole number of steps.
    static GridSpec make(double u_min, double u_max, double step);

    std::size_t intervals() const;
    std::size_t size() const { return intervals() + 1; }
    double node(std::size_t i) const { return u_min + static_cast<double>(i) * step; }

    bool operator==(const GridSpec&) const = default;
};

/// Closed-form description of a solution on [lo, hi] (lo = 0 means the open end (0, hi]).
class InitialSegment {
public:
    enum class Kind { zero, constant, power, reciprocal };

    InitialSegment() = default;

    static InitialSegment zero(double lo, double hi);
    static InitialSegment constant(double value, double lo, double hi);
    /// coefficient * u^exponent
    static InitialSegment power(double coefficient, double exponent, double lo, double hi);
    /// coefficient / u
    static InitialSegment reciprocal(double coefficient, double lo, double hi);

    double operator()(double u) const;

    Kind kind() const { return kind_; }
    double coefficient() const { return coefficient_; }
    double exponent() const { return exponent_; }
    double lo() const { return lo_; }
    double hi() const { return hi_; }

    std::string describe() const;
    static InitialSegment parse(const std::string& descriptor);

    bool operator==(const InitialSegment&) const = default;

private:
    InitialSegment(Kind kind, double coefficient, double exponent, double lo, double hi);

    Kind kind_ = Kind::zero;
    double coefficient_ = 0.0;
    double exponent_ = 0.0;
    double lo_ = 0.0;
    double hi_ = 0.0;
};

/// Equation data recorded alongside a table: (u^power y)' = sign*power*u^(power-1)*g(u-delay),
/// integrated from `start`.
struct TableMeta {
    double power = 0.0;
    double delay = 1.0;
    double sign = 1.0;
    double start = 0.0;

    bool operator==(const TableMeta&) const = default;
};

/// Dense tabulation of a delay-equation solution.
///
/// Queries at or below initial().hi() use the closed form; above it the stored nodes are
/// interpolated with a four-point Lagrange stencil that never straddles a recorded
/// breakpoint (a point where a derivative of the solution may jump). A query landing exactly
/// on a node returns the stored value. Immutable once built, so concurrent reads are safe.
class SolutionTable {
public:
    SolutionTable(GridSpec grid, InitialSegment initial, TableMeta meta, std::vector<double> values,
                  std::vector<double> breakpoints = {});

    double query(double u) const;
    double operator()(double u) const { return query(u); }

    const GridSpec& grid() const { return grid_; }
    const InitialSegment& initial() const { return initial_; }
    const TableMeta& meta() const { return meta_; }
    std::span<const double> values() const { return values_; }
    std::span<const double> breakpoints() const { return breakpoints_; }
    double u_max() const { return grid_.u_max; }
    /// Smallest admissible query point.
    double u_lo() const { return initial_.lo(); }

    bool operator==(const SolutionTable&) const = default;

private:
    GridSpec grid_;
    InitialSegment initial_;
    TableMeta meta_;
    std::vector<double> values_;
    std::vector<double> breakpoints_;
};

/// Where the delayed term g(u - delay) is read from.
class DelaySource {
public:
    enum class Kind { self, table, partner };

    static DelaySource self() { return DelaySource(Kind::self, nullptr); }
    static DelaySource table(std::shared_ptr<const SolutionTable> source) {
        return DelaySource(Kind::table, std::move(source));
    }
    /// The other equation of a coupled pair (only valid with solve_coupled).
    static DelaySource partner() { return DelaySource(Kind::partner, nullptr); }

    Kind kind() const { return kind_; }
    const std::shared_ptr<const SolutionTable>& source_table() const { return table_; }

private:
    DelaySource(Kind kind, std::shared_ptr<const SolutionTable> table) : kind_(kind), table_(std::move(table)) {}

    Kind kind_;
    std::shared_ptr<const SolutionTable> table_;
};

/// A retarded equation (u^power y(u))' = sign * power * u^(power-1) * g(u - delay) for u > start.
///
/// y equals `initial` on [initial.lo, initial.hi] and `prefill` on (initial.hi, start]; the
/// prefill may be empty when start == initial.hi. `breakpoint_seeds` lists additional points
/// where the solution is known to be non-smooth (kinks of the prefill, for instance); the engine
/// adds the start point and propagates everything forward by multiples of the delay.
struct DelayProblem {
    double power = 1.0;
    double delay = 1.0;
    double sign = 1.0;
    InitialSegment initial;
    double start = std::numeric_limits<double>::quiet_NaN();  // NaN: initial.hi()
    std::function<double(double)> prefill;
    DelaySource source = DelaySource::self();
    std::vector<double> breakpoint_seeds;
};

/// Integrates a single equation with classical RK4 on Y = u^power y. Because the right-hand
/// side only reads history, each step is Simpson's rule on the delayed source, split at
/// breakpoints that fall inside the step.
SolutionTable solve_dde(const DelayProblem& problem, const GridSpec& grid);

/// Integrates two equations whose delayed terms read each other (DelaySource::partner()).
std::pair<SolutionTable, SolutionTable> solve_coupled(const DelayProblem& first, const DelayProblem& second,
                                                      const GridSpec& grid);

// Table cache format: "SIEVEKIT-TABLE v1" header, metadata, then one 17-digit value per line.
void write_table(std::ostream& out, const SolutionTable& table);
SolutionTable read_table(std::istream& in);
void save_table(const std::string& path, const SolutionTable& table);
SolutionTable load_table(const std::string& path);

}  // namespace sievekit
