#pragma once

#include "sievekit/buchstab.hpp"
#include "sievekit/dhr.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <vector>

namespace sievekit {

/// A point (u, v) for the weighted sieve of dimension k. Needs k >= 2 (F_{k-1}, f_{k-1} enter the
/// integrands) and v/(v-1) < u < v.
struct BoundParams {
    SieveDimension k{2};
    double u = 0.0;
    double v = 0.0;

    /// ParameterError unless k >= 2, u and v are finite and v/(v-1) < u < v.
    void validate() const;
};

struct TableOptions {
    double step = default_step;
    /// Calibrations and the Buchstab table are persisted here when set.
    std::optional<std::filesystem::path> cache_dir;
};

/// The tables one dimension needs: DHR pairs for k and k-1 and Buchstab's w, all covering
/// arguments up to v_max().
class BoundTables {
public:
    BoundTables(DhrPair upper_dimension, DhrPair lower_dimension, std::shared_ptr<const BuchstabTable> w);

    /// Calibrates (or loads) everything needed for v <= v_max.
    static BoundTables build(SieveDimension k, double v_max, const TableOptions& options = {});

    SieveDimension k() const { return pair_k_.k; }
    const DhrPair& pair() const { return pair_k_; }
    const DhrPair& lower_pair() const { return pair_km1_; }
    const BuchstabTable& w() const { return *w_; }
    double v_max() const;
    double step() const { return pair_k_.step; }

private:
    DhrPair pair_k_;
    DhrPair pair_km1_;
    std::shared_ptr<const BuchstabTable> w_;
};

struct BoundReport {
    BoundParams params;
    double I1 = 0.0;
    double I2 = 0.0;
    /// e^gamma (u - 1) f_{k-1}(v/2) / v
    double S4_term = 0.0;
    double N = 0.0;
    /// uk - 1 + (k/f_k(v)) * integral of F_k(v - vs)(1 - us)/s over [1/v, 1/u].
    double old_value = 0.0;
    int r = 0;
    /// Quadrature error propagated to N.
    double err_estimate = 0.0;
    double I1_error = 0.0;
    double I2_error = 0.0;
    double old_error = 0.0;
    /// max(N, uk - 1) lies within err_estimate of an integer, so r is not decided.
    bool borderline = false;
};

/// min(F_k(v - vs), e^gamma F_{k-1}(v/2) w(v - vs)) (1 - us)/s for s in [1/v, 1/u].
double integrand_I1(double s, const BoundParams& params, const BoundTables& tables);
/// max(f_k(v - vs), e^gamma f_{k-1}(v/2) w(v - vs)) (us - 1)/s for s in [1/u, 1 - 1/v].
double integrand_I2(double s, const BoundParams& params, const BoundTables& tables);

inline constexpr double default_quadrature_tolerance = 1e-9;

/// Evaluates I1, I2, N(u, v; k), the unmixed comparison value and r.
/// EvaluationError when f_k(v) <= 0 (v at or below the sifting limit).
BoundReport compute_bound(const BoundParams& params, const BoundTables& tables,
                          double tolerance = default_quadrature_tolerance);
BoundReport compute_bound(const BoundParams& params, const TableOptions& options = {});

/// Interior integration cut points (kinks and branch crossings) used for I1 and I2.
std::vector<double> integration_cuts_I1(const BoundParams& params, const BoundTables& tables);
std::vector<double> integration_cuts_I2(const BoundParams& params, const BoundTables& tables);

enum class Objective {
    /// max(N, uk - 1)
    mixed,
    /// max(old_value, uk - 1)
    unmixed,
};

struct SearchBox {
    double u_lo = 0.0;
    double u_hi = 0.0;
    double v_lo = 0.0;
    double v_hi = 0.0;
    /// Points per axis, >= 2.
    int grid = 16;
};

struct SearchResult {
    BoundReport best;
    double objective = 0.0;
    std::size_t valid_points = 0;
};

double objective_value(const BoundReport& report, Objective objective);

/// Grid search followed by coordinate descent. Ties go to smaller u, then smaller v, whatever
/// the thread schedule. ParameterError when no grid point is valid.
SearchResult optimize_bound(const SearchBox& box, Objective objective, const BoundTables& tables,
                            unsigned threads = 0);

}  // namespace sievekit
