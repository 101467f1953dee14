#include "sievekit/dhr.hpp"

#include "sievekit/constants.hpp"
#include "sievekit/errors.hpp"
#include "sievekit/io.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>

namespace sievekit {

namespace {

constexpr int max_dimension = 8;

double integral_ceiling(double u) { return std::ceil(u - 1e-12); }

std::string step_tag(double step) {
    const double inverse = 1.0 / step;
    if (inverse == std::round(inverse)) {
        return std::to_string(std::llround(inverse));
    }
    return format_exact(step);
}

}  // namespace

namespace {

double leading_coefficient_real(double kappa) { return std::pow(2.0 * exp_gamma, -kappa) / std::tgamma(kappa + 1.0); }

DelayProblem sigma_problem(double kappa) {
    DelayProblem p;
    p.power = -kappa;
    p.delay = 2.0;
    p.sign = 1.0;
    p.initial = InitialSegment::power(leading_coefficient_real(kappa), kappa, 0.0, 2.0);
    p.start = 2.0;
    p.source = DelaySource::self();
    return p;
}

// The coupled system for real dimension kappa; integer kappa is the public case, the rest is
// used by the continuation in calibrate().
std::pair<SolutionTable, SolutionTable> integrate_system(double kappa, double alpha, double beta, double top,
                                                         double step) {
    const GridSpec grid = GridSpec::make(2.0, top, step);
    const auto sig = std::make_shared<const SolutionTable>(solve_dde(sigma_problem(kappa), grid));

    DelayProblem upper;
    upper.power = kappa;
    upper.delay = 1.0;
    upper.sign = 1.0;
    upper.initial = InitialSegment::power(1.0 / leading_coefficient_real(kappa), -kappa, 0.0, 2.0);
    upper.start = alpha;
    upper.prefill = [sig](double u) { return 1.0 / sig->query(u); };
    upper.source = DelaySource::partner();
    for (double b : sig->breakpoints()) {
        if (b < alpha) {
            upper.breakpoint_seeds.push_back(b);
        }
    }

    DelayProblem lower;
    lower.power = kappa;
    lower.delay = 1.0;
    lower.sign = 1.0;
    lower.initial = InitialSegment::zero(0.0, 2.0);
    lower.start = beta;
    lower.prefill = [](double) { return 0.0; };
    lower.source = DelaySource::partner();

    return solve_coupled(upper, lower, grid);
}

}  // namespace

SieveDimension::SieveDimension(int k) : k_(k) {
    if (k < 1 || k > max_dimension) {
        throw ParameterError("sieve dimension must lie in [1, 8], got " + std::to_string(k));
    }
}

double SigmaTable::leading_coefficient(SieveDimension k) { return leading_coefficient_real(k.value()); }

DelayProblem SigmaTable::problem(SieveDimension k) { return sigma_problem(k.value()); }

SigmaTable::SigmaTable(SieveDimension k, double u_max, double step) : k_(k) {
    const double top = std::max(4.0, integral_ceiling(u_max));
    table_ = std::make_shared<const SolutionTable>(solve_dde(problem(k), GridSpec::make(2.0, top, step)));
}

double sigma(SieveDimension k, double u) {
    static std::mutex mutex;
    static std::map<int, std::shared_ptr<const SigmaTable>> tables;
    std::shared_ptr<const SigmaTable> table;
    {
        std::lock_guard lock(mutex);
        auto& slot = tables[k.value()];
        if (!slot || (std::isfinite(u) && u > slot->table().u_max())) {
            slot = std::make_shared<const SigmaTable>(k, std::max(64.0, u));
        }
        table = slot;
    }
    return (*table)(u);
}

double DhrPair::F(double u) const { return upper->query(u); }

double DhrPair::f(double u) const { return lower->query(u); }

double sieve_F(const DhrPair& pair, double u) { return pair.F(u); }

double sieve_f(const DhrPair& pair, double u) { return pair.f(u); }

double default_dhr_u_max(SieveDimension k, double v) {
    return std::max(2.0 * k.value() + 20.0, integral_ceiling(v) + 2.0);
}

DhrPair solve_dhr_system(SieveDimension k, double alpha, double beta, double u_max, double step) {
    const double top = integral_ceiling(u_max);
    if (!(alpha >= 2.0) || !(beta >= 2.0) || alpha >= top - 1.0 || beta >= top - 1.0) {
        throw ParameterError("switch points must lie in [2, u_max - 1)");
    }
    auto [F, f] = integrate_system(k.value(), alpha, beta, top, step);
    DhrPair pair;
    pair.k = k;
    pair.alpha = alpha;
    pair.beta = beta;
    pair.u_max = top;
    pair.step = step;
    pair.residual_upper = F.values().back() - 1.0;
    pair.residual_lower = f.values().back() - 1.0;
    pair.upper = std::make_shared<const SolutionTable>(std::move(F));
    pair.lower = std::make_shared<const SolutionTable>(std::move(f));
    return pair;
}

namespace {

using Vec = std::array<double, 2>;
using Mat = std::array<Vec, 2>;

double max_abs(const Vec& v) { return std::max(std::abs(v[0]), std::abs(v[1])); }

Vec solve2(const Mat& m, const Vec& rhs) {
    const double det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    const double scale = std::abs(m[0][0] * m[1][1]) + std::abs(m[0][1] * m[1][0]);
    if (!(scale > 0.0) || std::abs(det) <= 1e-14 * scale) {
        // alpha is inert (pinned at 2, as for k = 1): least squares in beta alone.
        const double g = m[0][1] * m[0][1] + m[1][1] * m[1][1];
        return Vec{0.0, g > 0.0 ? (m[0][1] * rhs[0] + m[1][1] * rhs[1]) / g : 0.0};
    }
    return Vec{(rhs[0] * m[1][1] - rhs[1] * m[0][1]) / det, (rhs[1] * m[0][0] - rhs[0] * m[1][0]) / det};
}

struct Shot {
    Vec raw;    // F(u_max) - 1, f(u_max) - 1
    Vec split;  // P = (F + f)/2 - 1, q = (F - f)/2
};

Shot shoot(double kappa, const Vec& x, double top, double step) {
    auto [F, f] = integrate_system(kappa, x[0], x[1], top, step);
    const double rF = F.values().back() - 1.0;
    const double rf = f.values().back() - 1.0;
    return {{rF, rf}, {0.5 * (rF + rf), 0.5 * (rF - rf)}};
}

// Damped Newton (natural monotonicity test) on (P, q) for fixed kappa. Returns the number of
// iterations used, or -1 when the iteration stalls before reaching the tolerance.
int newton(double kappa, Vec& x, double top, double step, double tolerance, int max_iterations, Shot& last) {
    const double ceiling = top - 1.5;
    auto clamp = [ceiling](Vec v) {
        v[1] = std::clamp(v[1], 2.0, ceiling);
        v[0] = std::clamp(v[0], v[1], ceiling);
        return v;
    };
    x = clamp(x);
    Shot current = shoot(kappa, x, top, step);
    for (int iteration = 0; iteration < max_iterations; ++iteration) {
        if (max_abs(current.raw) <= tolerance) {
            last = current;
            return iteration;
        }
        Mat jac{};
        for (int j = 0; j < 2; ++j) {
            const double delta = 1e-5;
            Vec shifted = x;
            shifted[j] += delta;
            const Vec rs = shoot(kappa, shifted, top, step).split;
            jac[0][j] = (rs[0] - current.split[0]) / delta;
            jac[1][j] = (rs[1] - current.split[1]) / delta;
        }
        Vec dx = solve2(jac, current.split);
        dx = {-dx[0], -dx[1]};
        const double step_norm = max_abs(dx);
        if (step_norm <= 1e-13) {
            break;
        }
        bool accepted = false;
        for (double lambda = 1.0; lambda >= 1.0 / 4096.0; lambda *= 0.5) {
            const Vec trial = clamp({x[0] + lambda * dx[0], x[1] + lambda * dx[1]});
            const Shot candidate = shoot(kappa, trial, top, step);
            const Vec correction = solve2(jac, candidate.split);
            if (max_abs(correction) <= (1.0 - lambda / 4.0) * step_norm || max_abs(candidate.raw) <= tolerance) {
                x = trial;
                current = candidate;
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            break;
        }
    }
    last = current;
    return max_abs(current.raw) <= tolerance ? max_iterations : -1;
}

}  // namespace

DhrPair calibrate(SieveDimension k, double u_max, const DhrOptions& options) {
    const int kd = k.value();
    if (u_max < 2.0 * kd + 20.0) {
        throw ParameterError("u_max must be at least 2k + 20 for calibration");
    }
    const double top = integral_ceiling(u_max);
    // The truncated shooting problem has several roots. The sieve pair is the branch through
    // alpha = beta = 2 at dimension 1, so follow it in real dimension from there.
    const double coarse = std::max(options.step, 1.0 / 256.0);
    const double loose = std::max(options.tolerance, 1e-9);
    Vec x{2.0, 2.0};
    Vec previous = x;
    Shot last{};
    const int substeps = 10;
    for (int i = 1; i <= substeps * (kd - 1); ++i) {
        const double kappa = 1.0 + static_cast<double>(i) / substeps;
        Vec guess{2.0 * x[0] - previous[0], 2.0 * x[1] - previous[1]};
        if (i == 1) {
            guess = {2.3, 2.2};
        }
        Vec y = guess;
        if (newton(kappa, y, top, coarse, loose, options.max_iterations, last) < 0) {
            throw CalibrationError("continuation for k = " + std::to_string(kd) + " stalled at dimension " +
                                       format_real(kappa),
                                   last.raw[0], last.raw[1]);
        }
        previous = x;
        x = y;
    }
    if (newton(kd, x, top, options.step, options.tolerance, options.max_iterations, last) < 0) {
        throw CalibrationError("shooting for k = " + std::to_string(kd) + " did not converge (residuals " +
                                   format_real(last.raw[0]) + ", " + format_real(last.raw[1]) + ")",
                               last.raw[0], last.raw[1]);
    }
    return solve_dhr_system(k, x[0], x[1], u_max, options.step);
}

double sifting_limit(SieveDimension k) {
    static std::mutex mutex;
    static std::map<int, double> limits;
    {
        std::lock_guard lock(mutex);
        if (auto it = limits.find(k.value()); it != limits.end()) {
            return it->second;
        }
    }
    const double beta = calibrate(k, default_dhr_u_max(k)).beta;
    std::lock_guard lock(mutex);
    limits[k.value()] = beta;
    return beta;
}

DhrCache::DhrCache(std::filesystem::path directory) : directory_(std::move(directory)) {}

std::filesystem::path DhrCache::stem(SieveDimension k, double step, double u_max) const {
    return directory_ / ("dhr-k" + std::to_string(k.value()) + "-h" + step_tag(step) + "-u" +
                         std::to_string(std::llround(integral_ceiling(u_max))));
}

std::optional<DhrPair> DhrCache::load(SieveDimension k, double step, double u_max) const {
    const auto base = stem(k, step, u_max);
    std::ifstream manifest(base.string() + ".manifest");
    if (!manifest) {
        return std::nullopt;
    }
    try {
        std::string header;
        std::string line;
        std::getline(manifest, header);
        std::getline(manifest, line);
        if (header != "SIEVEKIT-DHR v1") {
            return std::nullopt;
        }
        std::istringstream fields(line);
        std::string tk, ta, tb, ts, tu;
        if (!(fields >> tk >> ta >> tb >> ts >> tu)) {
            return std::nullopt;
        }
        DhrPair pair;
        pair.k = SieveDimension(std::stoi(tk));
        pair.alpha = parse_exact(ta);
        pair.beta = parse_exact(tb);
        pair.step = parse_exact(ts);
        pair.u_max = parse_exact(tu);
        if (pair.k != k || pair.step != step || pair.u_max != integral_ceiling(u_max)) {
            return std::nullopt;
        }
        pair.upper = std::make_shared<const SolutionTable>(load_table(base.string() + ".F.table"));
        pair.lower = std::make_shared<const SolutionTable>(load_table(base.string() + ".f.table"));
        pair.residual_upper = pair.upper->values().back() - 1.0;
        pair.residual_lower = pair.lower->values().back() - 1.0;
        return pair;
    } catch (const Error&) {
        return std::nullopt;
    } catch (const std::invalid_argument&) {
        return std::nullopt;
    }
}

void DhrCache::store(const DhrPair& pair) const {
    const auto base = stem(pair.k, pair.step, pair.u_max);
    save_table(base.string() + ".F.table", *pair.upper);
    save_table(base.string() + ".f.table", *pair.lower);
    std::ostringstream manifest;
    manifest << "SIEVEKIT-DHR v1\n"
             << pair.k.value() << ' ' << format_exact(pair.alpha) << ' ' << format_exact(pair.beta) << ' '
             << format_exact(pair.step) << ' ' << format_exact(pair.u_max) << '\n';
    write_file_atomic(base.string() + ".manifest", manifest.str());
}

DhrPair DhrCache::obtain(SieveDimension k, double u_max, const DhrOptions& options) const {
    if (auto cached = load(k, options.step, u_max)) {
        return *std::move(cached);
    }
    DhrPair pair = calibrate(k, u_max, options);
    store(pair);
    return pair;
}

}  // namespace sievekit
