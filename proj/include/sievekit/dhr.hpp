#pragma once

#include "sievekit/dde.hpp"

#include <compare>
#include <filesystem>
#include <memory>
#include <optional>

namespace sievekit {

/// Sieve dimension k, 1 <= k <= 8.
class SieveDimension {
public:
    explicit SieveDimension(int k);

    int value() const { return k_; }
    auto operator<=>(const SieveDimension&) const = default;

private:
    int k_;
};

struct DhrOptions {
    double step = default_step;
    int max_iterations = 60;
    /// Target for max(|F(u_max) - 1|, |f(u_max) - 1|).
    double tolerance = 1e-10;
};

/// Auxiliary function sigma_k: A_k u^k on (0, 2] with A_k = (2 e^gamma)^-k / k!, continued by
/// (u^-k sigma(u))' = -k u^(-k-1) sigma(u - 2).
class SigmaTable {
public:
    SigmaTable(SieveDimension k, double u_max, double step = default_step);

    static DelayProblem problem(SieveDimension k);
    static double leading_coefficient(SieveDimension k);

    double operator()(double u) const { return table_->query(u); }

    SieveDimension dimension() const { return k_; }
    const SolutionTable& table() const { return *table_; }

private:
    SieveDimension k_;
    std::shared_ptr<const SolutionTable> table_;
};

/// sigma_k(u) from a process-wide table (enlarged on demand).
double sigma(SieveDimension k, double u);

/// Calibrated upper/lower sieve functions of one dimension.
///
/// F = 1/sigma_k on (0, alpha], f = 0 on (0, beta]; beyond the switch points
/// (u^k F)' = k u^(k-1) f(u-1) and (u^k f)' = k u^(k-1) F(u-1).
struct DhrPair {
    SieveDimension k{1};
    double alpha = 0.0;
    double beta = 0.0;
    double u_max = 0.0;
    double step = default_step;
    double residual_upper = 0.0;
    double residual_lower = 0.0;
    std::shared_ptr<const SolutionTable> upper;
    std::shared_ptr<const SolutionTable> lower;

    double F(double u) const;
    double f(double u) const;
};

/// Shooting endpoint used when none is given: max(2k + 20, ceil(v) + 2).
double default_dhr_u_max(SieveDimension k, double v = 0.0);

/// Integrates the coupled system for fixed switch points; no calibration.
DhrPair solve_dhr_system(SieveDimension k, double alpha, double beta, double u_max, double step = default_step);

/// Finds (alpha, beta) with F(u_max) = f(u_max) = 1 by damped Newton shooting.
/// Throws CalibrationError when the iteration budget runs out.
DhrPair calibrate(SieveDimension k, double u_max, const DhrOptions& options = {});

double sieve_F(const DhrPair& pair, double u);
double sieve_f(const DhrPair& pair, double u);

/// beta_k from a process-wide calibration at default settings.
double sifting_limit(SieveDimension k);

/// On-disk store of calibrated pairs keyed by (k, step, u_max).
///
/// Each entry is a manifest ("k alpha beta step u_max") plus the two tables in the
/// SIEVEKIT-TABLE format. Files are written by rename so concurrent writers are safe.
class DhrCache {
public:
    explicit DhrCache(std::filesystem::path directory);

    std::optional<DhrPair> load(SieveDimension k, double step, double u_max) const;
    void store(const DhrPair& pair) const;
    /// Cached pair if present, otherwise calibrates and stores.
    DhrPair obtain(SieveDimension k, double u_max, const DhrOptions& options = {}) const;

    const std::filesystem::path& directory() const { return directory_; }

private:
    std::filesystem::path stem(SieveDimension k, double step, double u_max) const;

    std::filesystem::path directory_;
};

}  // namespace sievekit
