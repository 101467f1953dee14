#include "sievekit/weighted_bound.hpp"

#include "sievekit/constants.hpp"
#include "sievekit/errors.hpp"
#include "sievekit/io.hpp"
#include "sievekit/quadrature.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>
#include <span>
#include <tuple>

namespace sievekit {

namespace {

std::string step_tag(double step) {
    const double inverse = 1.0 / step;
    if (inverse == std::round(inverse)) {
        return std::to_string(std::llround(inverse));
    }
    return format_exact(step);
}

DhrPair obtain_pair(SieveDimension k, double u_max, const TableOptions& options) {
    DhrOptions dhr;
    dhr.step = options.step;
    if (options.cache_dir) {
        return DhrCache(*options.cache_dir).obtain(k, u_max, dhr);
    }
    return calibrate(k, u_max, dhr);
}

std::shared_ptr<const BuchstabTable> obtain_buchstab(double u_max, const TableOptions& options) {
    const double top = std::max(default_buchstab_max, std::ceil(u_max));
    if (!options.cache_dir) {
        return std::make_shared<const BuchstabTable>(top, options.step);
    }
    const auto path = *options.cache_dir / ("buchstab-h" + step_tag(options.step) + "-u" +
                                            std::to_string(std::llround(top)) + ".table");
    try {
        auto table = std::make_shared<const SolutionTable>(load_table(path.string()));
        if (table->grid().step == options.step && table->u_max() == top) {
            return std::make_shared<const BuchstabTable>(std::move(table));
        }
    } catch (const Error&) {
        // missing or stale: rebuild below
    }
    auto built = std::make_shared<const BuchstabTable>(top, options.step);
    save_table(path.string(), built->table());
    return built;
}

// Everything the integrands need, evaluated once per (k, u, v).
struct Setup {
    const BoundTables* tables;
    double k;
    double u;
    double v;
    double upper_weight;  // e^gamma F_{k-1}(v/2)
    double lower_weight;  // e^gamma f_{k-1}(v/2)
    double i1_lo, i1_hi, i2_lo, i2_hi;

    Setup(const BoundParams& p, const BoundTables& t) : tables(&t), k(p.k.value()), u(p.u), v(p.v) {
        p.validate();
        if (p.k != t.k()) {
            throw ParameterError("tables were built for k = " + std::to_string(t.k().value()));
        }
        if (p.v > t.v_max()) {
            throw DomainError("v = " + format_real(p.v) + " exceeds the table range " + format_real(t.v_max()));
        }
        upper_weight = exp_gamma * t.lower_pair().F(0.5 * v);
        lower_weight = exp_gamma * t.lower_pair().f(0.5 * v);
        i1_lo = 1.0 / v;
        i1_hi = 1.0 / u;
        i2_lo = 1.0 / u;
        i2_hi = 1.0 - 1.0 / v;
    }

    double argument(double s) const { return std::max(1.0, v - v * s); }

    void check(double s, double lo, double hi) const {
        const double slack = 1e-12;
        if (!(s >= lo - slack && s <= hi + slack)) {
            throw DomainError("s = " + format_real(s) + " outside [" + format_real(lo) + ", " + format_real(hi) + "]");
        }
    }

    double upper_branch_gap(double s) const {
        const double x = argument(s);
        return tables->pair().F(x) - upper_weight * tables->w()(x);
    }
    double lower_branch_gap(double s) const {
        const double x = argument(s);
        return tables->pair().f(x) - lower_weight * tables->w()(x);
    }

    double I1(double s) const {
        const double x = argument(s);
        return std::min(tables->pair().F(x), upper_weight * tables->w()(x)) * (1.0 - u * s) / s;
    }
    double I2(double s) const {
        const double x = argument(s);
        return std::max(tables->pair().f(x), lower_weight * tables->w()(x)) * (u * s - 1.0) / s;
    }
    double old(double s) const { return tables->pair().F(argument(s)) * (1.0 - u * s) / s; }

    // s-preimages of the points x where one of the functions may be non-smooth.
    std::vector<double> kink_cuts(std::span<const double> table_breaks, double lo, double hi) const {
        std::vector<double> xs{2.0, 3.0, tables->pair().alpha, tables->pair().beta};
        xs.insert(xs.end(), table_breaks.begin(), table_breaks.end());
        std::vector<double> cuts;
        for (double x : xs) {
            const double s = (v - x) / v;
            if (s > lo && s < hi) {
                cuts.push_back(s);
            }
        }
        return cuts;
    }

    std::vector<double> cuts_I1() const {
        auto cuts = kink_cuts(tables->pair().upper->breakpoints(), i1_lo, i1_hi);
        const auto crossings = sign_changes([this](double s) { return upper_branch_gap(s); }, i1_lo, i1_hi);
        cuts.insert(cuts.end(), crossings.begin(), crossings.end());
        std::sort(cuts.begin(), cuts.end());
        return cuts;
    }
    std::vector<double> cuts_I2() const {
        auto cuts = kink_cuts(tables->pair().lower->breakpoints(), i2_lo, i2_hi);
        const auto crossings = sign_changes([this](double s) { return lower_branch_gap(s); }, i2_lo, i2_hi);
        cuts.insert(cuts.end(), crossings.begin(), crossings.end());
        std::sort(cuts.begin(), cuts.end());
        return cuts;
    }
};

}  // namespace

void BoundParams::validate() const {
    if (k.value() < 2) {
        throw ParameterError("the weighted bound needs k >= 2");
    }
    if (!std::isfinite(u) || !std::isfinite(v) || !(v > 1.0)) {
        throw ParameterError("u and v must be finite with v > 1");
    }
    if (!(u > v / (v - 1.0)) || !(u < v)) {
        throw ParameterError("need v/(v-1) < u < v, got u = " + format_real(u) + ", v = " + format_real(v));
    }
}

BoundTables::BoundTables(DhrPair upper_dimension, DhrPair lower_dimension, std::shared_ptr<const BuchstabTable> w)
    : pair_k_(std::move(upper_dimension)), pair_km1_(std::move(lower_dimension)), w_(std::move(w)) {
    if (pair_k_.k.value() < 2 || pair_km1_.k.value() != pair_k_.k.value() - 1) {
        throw ParameterError("bound tables need DHR pairs of dimensions k and k - 1 with k >= 2");
    }
    if (!w_) {
        throw ParameterError("bound tables need a Buchstab table");
    }
}

BoundTables BoundTables::build(SieveDimension k, double v_max, const TableOptions& options) {
    if (k.value() < 2) {
        throw ParameterError("the weighted bound needs k >= 2");
    }
    if (!(v_max > 1.0) || !std::isfinite(v_max)) {
        throw ParameterError("v_max must be finite and > 1");
    }
    if (options.cache_dir) {
        std::filesystem::create_directories(*options.cache_dir);
    }
    const SieveDimension km1(k.value() - 1);
    DhrPair upper = obtain_pair(k, default_dhr_u_max(k, v_max), options);
    DhrPair lower = obtain_pair(km1, default_dhr_u_max(km1, 0.5 * v_max), options);
    return BoundTables(std::move(upper), std::move(lower), obtain_buchstab(v_max, options));
}

double BoundTables::v_max() const { return std::min({pair_k_.u_max, 2.0 * pair_km1_.u_max, w_->u_max()}); }

double integrand_I1(double s, const BoundParams& params, const BoundTables& tables) {
    const Setup setup(params, tables);
    setup.check(s, setup.i1_lo, setup.i1_hi);
    return setup.I1(std::clamp(s, setup.i1_lo, setup.i1_hi));
}

double integrand_I2(double s, const BoundParams& params, const BoundTables& tables) {
    const Setup setup(params, tables);
    setup.check(s, setup.i2_lo, setup.i2_hi);
    return setup.I2(std::clamp(s, setup.i2_lo, setup.i2_hi));
}

std::vector<double> integration_cuts_I1(const BoundParams& params, const BoundTables& tables) {
    return Setup(params, tables).cuts_I1();
}

std::vector<double> integration_cuts_I2(const BoundParams& params, const BoundTables& tables) {
    return Setup(params, tables).cuts_I2();
}

BoundReport compute_bound(const BoundParams& params, const BoundTables& tables, double tolerance) {
    const Setup setup(params, tables);
    const double fv = tables.pair().f(params.v);
    if (!(fv > 0.0)) {
        throw EvaluationError("v = " + format_real(params.v) + " is below the sifting limit beta_" +
                              std::to_string(params.k.value()) + " = " + format_real(tables.pair().beta));
    }
    const auto i1 = integrate_panels([&](double s) { return setup.I1(s); }, setup.i1_lo, setup.i1_hi,
                                     setup.cuts_I1(), tolerance);
    const auto i2 = integrate_panels([&](double s) { return setup.I2(s); }, setup.i2_lo, setup.i2_hi,
                                     setup.cuts_I2(), tolerance);
    const auto old = integrate_panels([&](double s) { return setup.old(s); }, setup.i1_lo, setup.i1_hi,
                                      setup.kink_cuts(tables.pair().upper->breakpoints(), setup.i1_lo, setup.i1_hi),
                                      tolerance);

    BoundReport report;
    report.params = params;
    report.I1 = i1.value;
    report.I2 = i2.value;
    report.I1_error = i1.error;
    report.I2_error = i2.error;
    report.S4_term = setup.lower_weight * (params.u - 1.0) / params.v;
    const double scale = setup.k / fv;
    const double base = params.u * setup.k - 1.0;
    report.N = base + scale * (report.I1 - report.I2 - report.S4_term);
    report.old_value = base + scale * old.value;
    report.err_estimate = scale * (i1.error + i2.error);
    report.old_error = scale * old.error;
    const double top = std::max(report.N, base);
    report.r = static_cast<int>(std::floor(top)) + 1;
    report.borderline = report.N >= base && std::abs(report.N - std::round(report.N)) <= report.err_estimate;
    return report;
}

BoundReport compute_bound(const BoundParams& params, const TableOptions& options) {
    params.validate();
    return compute_bound(params, BoundTables::build(params.k, params.v, options));
}

double objective_value(const BoundReport& report, Objective objective) {
    const double base = report.params.u * report.params.k.value() - 1.0;
    return std::max(objective == Objective::mixed ? report.N : report.old_value, base);
}

namespace {

struct Candidate {
    bool valid = false;
    BoundReport report;
    double objective = 0.0;
};

// Lexicographic (objective, u, v): the winner does not depend on evaluation order.
bool better(const Candidate& a, const Candidate& b) {
    if (!a.valid) {
        return false;
    }
    if (!b.valid) {
        return true;
    }
    return std::tie(a.objective, a.report.params.u, a.report.params.v) <
           std::tie(b.objective, b.report.params.u, b.report.params.v);
}

Candidate evaluate(SieveDimension k, double u, double v, Objective objective, const BoundTables& tables) {
    Candidate c;
    BoundParams params{k, u, v};
    try {
        params.validate();
        if (v > tables.v_max()) {
            return c;
        }
        c.report = compute_bound(params, tables);
    } catch (const ParameterError&) {
        return c;
    } catch (const EvaluationError&) {
        return c;
    }
    c.valid = true;
    c.objective = objective_value(c.report, objective);
    return c;
}

}  // namespace

SearchResult optimize_bound(const SearchBox& box, Objective objective, const BoundTables& tables, unsigned threads) {
    if (box.grid < 2) {
        throw ParameterError("grid density must be at least 2 per axis");
    }
    if (!(box.u_lo <= box.u_hi) || !(box.v_lo <= box.v_hi)) {
        throw ParameterError("empty search range");
    }
    const SieveDimension k = tables.k();
    const auto n = static_cast<std::size_t>(box.grid);
    auto axis = [n](double lo, double hi, std::size_t i) {
        return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    };
    std::vector<Candidate> results(n * n);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t index = next++; index < results.size(); index = next++) {
            try {
                results[index] = evaluate(k, axis(box.u_lo, box.u_hi, index / n), axis(box.v_lo, box.v_hi, index % n),
                                          objective, tables);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) {
                    failure = std::current_exception();
                }
            }
        }
    };
    if (threads == 0) {
        threads = std::max(1u, std::thread::hardware_concurrency());
    }
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, results.size()));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < threads; ++t) {
        pool.emplace_back(worker);
    }
    worker();
    for (auto& t : pool) {
        t.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }

    SearchResult result;
    Candidate best;
    for (const auto& c : results) {
        if (c.valid) {
            ++result.valid_points;
            if (better(c, best)) {
                best = c;
            }
        }
    }
    if (!best.valid) {
        throw ParameterError("no valid (u, v) in the search box");
    }

    // Coordinate descent inside the box, halving the steps when no move improves.
    double hu = (box.u_hi - box.u_lo) / static_cast<double>(n - 1);
    double hv = (box.v_hi - box.v_lo) / static_cast<double>(n - 1);
    for (int round = 0; round < 400 && (hu > 1e-4 || hv > 1e-4); ++round) {
        const double u = best.report.params.u;
        const double v = best.report.params.v;
        const double moves[4][2] = {{u - hu, v}, {u + hu, v}, {u, v - hv}, {u, v + hv}};
        Candidate step_best = best;
        for (const auto& m : moves) {
            if (m[0] < box.u_lo || m[0] > box.u_hi || m[1] < box.v_lo || m[1] > box.v_hi) {
                continue;
            }
            const Candidate c = evaluate(k, m[0], m[1], objective, tables);
            if (c.valid && c.objective < step_best.objective - 1e-12) {
                step_best = c;
            }
        }
        if (step_best.report.params.u == u && step_best.report.params.v == v) {
            hu *= 0.5;
            hv *= 0.5;
        } else {
            best = step_best;
        }
    }
    result.best = best.report;
    result.objective = best.objective;
    return result;
}

}  // namespace sievekit
