#include "sievekit/buchstab.hpp"
#include "sievekit/dde.hpp"
#include "sievekit/errors.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

using namespace sievekit;
using Catch::Approx;

namespace {

DelayProblem constant_problem() {
    DelayProblem p;
    p.power = 0.0;
    p.delay = 1.0;
    p.sign = 1.0;
    p.initial = InitialSegment::constant(1.0, 0.0, 2.0);
    return p;
}

}  // namespace

TEST_CASE("grid spec validation") {
    CHECK(GridSpec::make(2.0, 6.0, 0.25).size() == 17);
    CHECK_THROWS_AS(GridSpec::make(2.0, 6.0, 0.0), ConfigError);
    CHECK_THROWS_AS(GridSpec::make(6.0, 2.0, 0.25), ConfigError);
    CHECK_THROWS_AS(GridSpec::make(2.0, 6.0, 0.3), ConfigError);
}

TEST_CASE("zero right-hand side keeps the initial constant") {
    const auto table = solve_dde(constant_problem(), GridSpec::make(2.0, 10.0, 1.0 / 64.0));
    for (double y : table.values()) {
        CHECK(y == 1.0);
    }
}

TEST_CASE("buchstab problem on [2, 6]") {
    const auto table = solve_dde(BuchstabTable::problem(), GridSpec::make(2.0, 6.0, default_step));
    CHECK(std::abs(table.query(2.5) - (1.0 + std::log(1.5)) / 2.5) <= 1e-8);
    CHECK(table.query(2.0) == 0.5);
    CHECK(table.query(1.5) == 2.0 / 3.0);
    CHECK(table.query(table.grid().node(700)) == table.values()[700]);
    CHECK_THROWS_AS(table.query(0.0), DomainError);
    CHECK_THROWS_AS(table.query(-1.0), DomainError);
    CHECK_THROWS_AS(table.query(6.5), DomainError);
    CHECK_THROWS_AS(table.query(0.5), DomainError);  // below the initial segment [1, 2]
}

TEST_CASE("interpolation reproduces cubics") {
    const GridSpec grid = GridSpec::make(2.0, 4.0, 1.0 / 16.0);
    std::vector<double> values;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        values.push_back(std::pow(grid.node(i), 3));
    }
    const SolutionTable table(grid, InitialSegment::power(1.0, 3.0, 0.0, 2.0), TableMeta{3.0, 1.0, 1.0, 2.0}, values);
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        const double u = grid.node(i) + 0.5 * grid.step;
        CHECK(std::abs(table.query(u) - u * u * u) <= 1e-12);
    }
}

TEST_CASE("continuity at the splice point") {
    const auto table = solve_dde(BuchstabTable::problem(), GridSpec::make(2.0, 6.0, default_step));
    const double below = table.query(std::nextafter(2.0, 0.0));
    const double above = table.query(std::nextafter(2.0, 3.0));
    CHECK(std::abs(below - above) <= 1e-12);
}

TEST_CASE("fourth-order convergence under step halving") {
    auto at = [](double step, double u) {
        return solve_dde(BuchstabTable::problem(), GridSpec::make(2.0, 6.0, step)).query(u);
    };
    for (double u : {3.5, 4.75, 5.5}) {
        const double a = at(1.0 / 32.0, u);
        const double b = at(1.0 / 64.0, u);
        const double c = at(1.0 / 128.0, u);
        const double ratio = (a - b) / (b - c);
        INFO("u = " << u << " ratio = " << ratio);
        CHECK(ratio >= 12.0);
        CHECK(ratio <= 20.0);
    }
}

TEST_CASE("solver is deterministic and round-trips through the cache format") {
    const GridSpec grid = GridSpec::make(2.0, 8.0, default_step);
    const auto first = solve_dde(BuchstabTable::problem(), grid);
    const auto second = solve_dde(BuchstabTable::problem(), grid);
    CHECK(first == second);

    std::stringstream stream;
    write_table(stream, first);
    CHECK(stream.str().rfind("SIEVEKIT-TABLE v1\n", 0) == 0);
    const auto loaded = read_table(stream);
    CHECK(loaded == first);

    std::stringstream broken("SIEVEKIT-TABLE v0\n");
    CHECK_THROWS_AS(read_table(broken), CacheError);
}

TEST_CASE("solver error conditions") {
    CHECK_THROWS_AS(solve_dde(BuchstabTable::problem(), GridSpec::make(2.0, 6.0, 0.25)), ConfigError);

    // External source that stops short of u_max - delay.
    const auto short_source =
        std::make_shared<const SolutionTable>(solve_dde(BuchstabTable::problem(), GridSpec::make(2.0, 4.0, 1.0 / 64.0)));
    DelayProblem coupled;
    coupled.power = 1.0;
    coupled.delay = 1.0;
    coupled.initial = InitialSegment::reciprocal(1.0, 1.0, 2.0);
    coupled.source = DelaySource::table(short_source);
    CHECK_THROWS_AS(solve_dde(coupled, GridSpec::make(2.0, 8.0, 1.0 / 64.0)), DomainError);
    CHECK_NOTHROW(solve_dde(coupled, GridSpec::make(2.0, 5.0, 1.0 / 64.0)));

    DelayProblem blowup;
    blowup.power = 1.0;
    blowup.delay = 1.0;
    blowup.initial = InitialSegment::constant(1e308, 0.0, 2.0);
    CHECK_THROWS_AS(solve_dde(blowup, GridSpec::make(2.0, 4.0, 1.0 / 64.0)), NumericOverflowError);
}

TEST_CASE("initial segment descriptors round-trip") {
    for (const auto& seg : {InitialSegment::zero(0.0, 2.0), InitialSegment::constant(0.25, 0.0, 2.0),
                            InitialSegment::power(0.1, 3.0, 0.0, 2.0), InitialSegment::reciprocal(1.0, 1.0, 2.0)}) {
        CHECK(InitialSegment::parse(seg.describe()) == seg);
    }
    CHECK(InitialSegment::reciprocal(1.0, 1.0, 2.0)(1.25) == 0.8);
}
