#pragma once

#include "sievekit/dde.hpp"

#include <memory>
#include <vector>

namespace sievekit {

inline constexpr double default_buchstab_max = 64.0;

/// Buchstab's function: w(u) = 1/u on [1, 2] and (u w(u))' = w(u - 1) for u > 2.
class BuchstabTable {
public:
    /// Tabulates w on [2, u_max] (u_max is rounded up to an integer so kinks sit on nodes).
    explicit BuchstabTable(double u_max = default_buchstab_max, double step = default_step);
    /// Wraps a previously computed table, e.g. one loaded from the cache.
    explicit BuchstabTable(std::shared_ptr<const SolutionTable> table);

    static DelayProblem problem();

    /// w(u) for 1 <= u <= u_max(); DomainError otherwise.
    double operator()(double u) const;

    double u_max() const { return table_->u_max(); }
    double step() const { return table_->grid().step; }
    const SolutionTable& table() const { return *table_; }
    std::shared_ptr<const SolutionTable> shared_table() const { return table_; }

private:
    std::shared_ptr<const SolutionTable> table_;
};

/// w(u) from a process-wide table at the default step, enlarged when u exceeds its range.
double buchstab_w(double u);

/// s -> w(v - v s) on [s_lo, s_hi], the composed argument the bound integrals use.
class BuchstabSegment {
public:
    BuchstabSegment(const BuchstabTable& table, double v, double s_lo, double s_hi);

    double operator()(double s) const;

    /// Points of [s_lo, s_hi] where v - v s equals 2 or 3 (the kinks of w), ascending.
    const std::vector<double>& kinks() const { return kinks_; }

    double v() const { return v_; }
    double s_lo() const { return s_lo_; }
    double s_hi() const { return s_hi_; }

private:
    const BuchstabTable* table_;
    double v_;
    double s_lo_;
    double s_hi_;
    std::vector<double> kinks_;
};

BuchstabSegment buchstab_on_segment(const BuchstabTable& table, double v, double s_lo, double s_hi);

}  // namespace sievekit
