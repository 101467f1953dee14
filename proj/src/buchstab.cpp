#include "sievekit/buchstab.hpp"

#include "sievekit/errors.hpp"
#include "sievekit/io.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

namespace sievekit {

DelayProblem BuchstabTable::problem() {
    DelayProblem p;
    p.power = 1.0;
    p.delay = 1.0;
    p.sign = 1.0;
    p.initial = InitialSegment::reciprocal(1.0, 1.0, 2.0);
    p.start = 2.0;
    p.source = DelaySource::self();
    return p;
}

BuchstabTable::BuchstabTable(double u_max, double step) {
    const double top = std::max(3.0, std::ceil(u_max));
    table_ = std::make_shared<const SolutionTable>(solve_dde(problem(), GridSpec::make(2.0, top, step)));
}

BuchstabTable::BuchstabTable(std::shared_ptr<const SolutionTable> table) : table_(std::move(table)) {
    const auto reference = problem();
    if (!table_ || !(table_->initial() == reference.initial) || table_->meta().power != reference.power ||
        table_->meta().delay != reference.delay || table_->meta().sign != reference.sign) {
        throw ConfigError("table does not describe the Buchstab function");
    }
}

double BuchstabTable::operator()(double u) const {
    if (!(u >= 1.0) || u > table_->u_max()) {
        throw DomainError("w(u) requires 1 <= u <= " + format_real(table_->u_max()) + ", got " + format_real(u));
    }
    return table_->query(u);
}

double buchstab_w(double u) {
    static std::mutex mutex;
    static std::shared_ptr<const BuchstabTable> shared;
    std::shared_ptr<const BuchstabTable> table;
    {
        std::lock_guard lock(mutex);
        if (!shared || (u > shared->u_max() && std::isfinite(u))) {
            shared = std::make_shared<const BuchstabTable>(std::max(default_buchstab_max, std::ceil(u)));
        }
        table = shared;
    }
    return (*table)(u);
}

BuchstabSegment::BuchstabSegment(const BuchstabTable& table, double v, double s_lo, double s_hi)
    : table_(&table), v_(v), s_lo_(s_lo), s_hi_(s_hi) {
    if (!(s_lo <= s_hi)) {
        throw DomainError("empty segment");
    }
    // v - v s is decreasing in s, so the endpoints bound the argument range.
    const double arg_hi = v - v * s_lo;
    const double arg_lo = v - v * s_hi;
    if (arg_lo < 1.0 - 1e-12 || arg_hi > table.u_max()) {
        throw DomainError("v - v s leaves [1, " + format_real(table.u_max()) + "] on the segment");
    }
    for (double kink : {3.0, 2.0}) {
        const double s = (v - kink) / v;
        if (s >= s_lo && s <= s_hi) {
            kinks_.push_back(s);
        }
    }
}

double BuchstabSegment::operator()(double s) const {
    if (s < s_lo_ || s > s_hi_) {
        throw DomainError("s = " + format_real(s) + " outside the segment");
    }
    // Rounding in v - v s can dip a hair below 1 at the right end.
    return (*table_)(std::max(1.0, v_ - v_ * s));
}

BuchstabSegment buchstab_on_segment(const BuchstabTable& table, double v, double s_lo, double s_hi) {
    return BuchstabSegment(table, v, s_lo, s_hi);
}

}  // namespace sievekit
