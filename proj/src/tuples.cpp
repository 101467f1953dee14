#include "sievekit/tuples.hpp"

#include "sievekit/arith.hpp"
#include "sievekit/errors.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <regex>
#include <set>
#include <thread>

namespace sievekit {

namespace {

__extension__ typedef __int128 i128;
__extension__ typedef unsigned __int128 u128;
using u64 = std::uint64_t;

constexpr std::int64_t coefficient_limit = std::int64_t{1} << 62;

i128 abs128(i128 x) { return x < 0 ? -x : x; }

i128 gcd128(i128 a, i128 b) {
    a = abs128(a);
    b = abs128(b);
    while (b != 0) {
        const i128 t = a % b;
        a = b;
        b = t;
    }
    return a;
}

u64 mod(i128 x, u64 p) {
    const i128 m = x % static_cast<i128>(p);
    return static_cast<u64>(m < 0 ? m + static_cast<i128>(p) : m);
}

// Every prime factor of x divides y (x != 0).
bool primes_divide(i128 x, i128 y) {
    x = abs128(x);
    for (i128 g = gcd128(x, y); g > 1; g = gcd128(x, y)) {
        while (x % g == 0) {
            x /= g;
        }
    }
    return x == 1;
}

std::string to_decimal(i128 x) {
    if (x == 0) {
        return "0";
    }
    const bool negative = x < 0;
    std::string digits;
    for (i128 v = abs128(x); v > 0; v /= 10) {
        digits.push_back(static_cast<char>('0' + static_cast<int>(v % 10)));
    }
    if (negative) {
        digits.push_back('-');
    }
    return {digits.rbegin(), digits.rend()};
}

// Residues n mod p at which p divides some form; p itself when every residue is a root.
u64 root_count(const LinearTuple& t, u64 p) {
    std::set<u64> roots;
    for (const auto& f : t.forms()) {
        const u64 a = mod(f.a, p);
        const u64 b = mod(f.b, p);
        if (a == 0) {
            if (b == 0) {
                return p;
            }
            continue;
        }
        const u64 root = static_cast<u64>(static_cast<u128>((p - b) % p) * inverse_mod(a, p) % p);
        roots.insert(root);
    }
    return roots.size();
}

std::set<u64> critical_primes(const LinearTuple& t) {
    std::set<u64> primes;
    for (u64 p : primes_below(t.size() + 1)) {
        primes.insert(p);
    }
    for (const auto& f : t.forms()) {
        for (u64 p : prime_divisors(static_cast<u64>(abs128(f.a)))) {
            primes.insert(p);
        }
    }
    return primes;
}

// First prime at which every residue is a root, or 0.
u64 fixed_prime_divisor(const LinearTuple& t) {
    for (u64 p : critical_primes(t)) {
        if (root_count(t, p) == p) {
            return p;
        }
    }
    return 0;
}

std::int64_t checked(i128 x, const char* what) {
    if (abs128(x) >= coefficient_limit) {
        throw ParameterError(std::string(what) + " overflows the supported coefficient range");
    }
    return static_cast<std::int64_t>(x);
}

}  // namespace

std::string LinearForm::to_string() const {
    std::string out;
    if (a == 1) {
        out = "x";
    } else if (a == -1) {
        out = "-x";
    } else {
        out = std::to_string(a) + "x";
    }
    if (b > 0) {
        out += "+" + std::to_string(b);
    } else if (b < 0) {
        out += std::to_string(b);
    }
    return out;
}

LinearTuple::LinearTuple(std::vector<LinearForm> forms) : forms_(std::move(forms)) {
    if (forms_.empty()) {
        throw ParameterError("a tuple needs at least one form");
    }
    A_ = 1;
    for (std::size_t i = 0; i < forms_.size(); ++i) {
        const auto& f = forms_[i];
        if (f.a == 0) {
            throw ParameterError("form " + std::to_string(i + 1) + " has zero coefficient");
        }
        if (abs128(f.a) >= coefficient_limit || abs128(f.b) >= coefficient_limit) {
            throw ParameterError("form " + std::to_string(i + 1) + " has coefficients beyond 2^62");
        }
        for (std::size_t j = 0; j < i; ++j) {
            if (forms_[j] == f) {
                throw ParameterError("form " + f.to_string() + " repeated");
            }
        }
        A_ *= f.a;
    }
    admissible_ = fixed_prime_divisor(*this) == 0;
}

LinearTuple LinearTuple::parse(std::string_view text) {
    static const std::regex term(R"(^\s*([+-]?)\s*(\d*)\s*\*?\s*[xn]\s*(?:([+-])\s*(\d+))?\s*$)");
    std::vector<LinearForm> forms;
    std::string input(text);
    std::size_t begin = 0;
    while (true) {
        const std::size_t comma = input.find(',', begin);
        const std::string piece = input.substr(begin, comma == std::string::npos ? std::string::npos : comma - begin);
        std::smatch m;
        if (!std::regex_match(piece, m, term)) {
            throw ParameterError("cannot parse linear form '" + piece + "'");
        }
        try {
            LinearForm f;
            f.a = m[2].length() > 0 ? std::stoll(m[2].str()) : 1;
            if (m[1].str() == "-") {
                f.a = -f.a;
            }
            f.b = m[4].length() > 0 ? std::stoll(m[4].str()) : 0;
            if (m[3].str() == "-") {
                f.b = -f.b;
            }
            forms.push_back(f);
        } catch (const std::out_of_range&) {
            throw ParameterError("coefficient out of range in '" + piece + "'");
        }
        if (comma == std::string::npos) {
            break;
        }
        begin = comma + 1;
    }
    return LinearTuple(std::move(forms));
}

std::string LinearTuple::to_string() const {
    std::string out;
    for (const auto& f : forms_) {
        if (!out.empty()) {
            out += ", ";
        }
        out += f.to_string();
    }
    return out;
}

bool is_admissible(const LinearTuple& t) { return t.admissible(); }

int v_p(const LinearTuple& t, std::uint64_t p) {
    if (!is_prime(p)) {
        throw ParameterError(std::to_string(p) + " is not prime");
    }
    return static_cast<int>(root_count(t, p));
}

bool satisfies_hypothesis(const LinearTuple& t, std::string* reason) {
    auto fail = [reason](std::string why) {
        if (reason) {
            *reason = std::move(why);
        }
        return false;
    };
    if (!t.admissible()) {
        return fail("not admissible");
    }
    const auto& forms = t.forms();
    for (const auto& f : forms) {
        if (f.a <= 0) {
            return fail("coefficient of " + f.to_string() + " is not positive");
        }
    }
    for (const auto& fi : forms) {
        for (const auto& fj : forms) {
            if (!primes_divide(fi.a, fj.a)) {
                return fail("coefficients " + std::to_string(fi.a) + " and " + std::to_string(fj.a) +
                            " have different prime support");
            }
            if (gcd128(fi.a, fj.b) != 1) {
                return fail("a prime of " + std::to_string(fi.a) + " divides the constant term of " + fj.to_string());
            }
        }
    }
    for (std::size_t i = 0; i < forms.size(); ++i) {
        for (std::size_t j = i + 1; j < forms.size(); ++j) {
            const i128 cross = static_cast<i128>(forms[i].a) * forms[j].b - static_cast<i128>(forms[j].a) * forms[i].b;
            if (cross == 0) {
                return fail(forms[i].to_string() + " and " + forms[j].to_string() + " are proportional");
            }
            for (const auto& fl : forms) {
                if (!primes_divide(cross, fl.a)) {
                    return fail("a prime of the cross term " + to_decimal(cross) + " of " + forms[i].to_string() +
                                " and " + forms[j].to_string() + " does not divide " + std::to_string(fl.a));
                }
            }
        }
    }
    return true;
}

Normalization normalize(const LinearTuple& t) {
    if (const u64 p = fixed_prime_divisor(t); p != 0) {
        throw AdmissibilityError("tuple " + t.to_string() + " is not admissible: " + std::to_string(p) +
                                 " divides every value of the product");
    }
    if (satisfies_hypothesis(t)) {
        return {t, 1, 0};
    }
    std::vector<LinearForm> forms = t.forms();
    for (auto& f : forms) {
        if (f.a < 0) {
            f = {-f.a, -f.b};
        }
    }

    std::set<u64> primes;
    for (const auto& f : forms) {
        for (u64 p : prime_divisors(static_cast<u64>(f.a))) {
            primes.insert(p);
        }
    }
    for (std::size_t i = 0; i < forms.size(); ++i) {
        for (std::size_t j = i + 1; j < forms.size(); ++j) {
            const i128 cross = abs128(static_cast<i128>(forms[i].a) * forms[j].b - static_cast<i128>(forms[j].a) * forms[i].b);
            if (cross == 0) {
                throw ParameterError(forms[i].to_string() + " and " + forms[j].to_string() + " are proportional");
            }
            if (cross > static_cast<i128>(std::numeric_limits<u64>::max())) {
                throw ParameterError("cross term " + to_decimal(cross) + " is too large to factor");
            }
            for (u64 p : prime_divisors(static_cast<u64>(cross))) {
                primes.insert(p);
            }
        }
    }

    // B by the Chinese remainder theorem from the smallest good residue for each prime.
    i128 M = 1;
    i128 B = 0;
    for (u64 p : primes) {
        u64 residue = 0;
        for (;; ++residue) {
            bool good = true;
            for (const auto& f : forms) {
                if (mod(static_cast<i128>(f.a) * residue + f.b, p) == 0) {
                    good = false;
                    break;
                }
            }
            if (good) {
                break;
            }
        }
        const u64 shift = mod(static_cast<i128>(residue) - B, p);
        const u64 step = static_cast<u64>(static_cast<u128>(shift) * inverse_mod(mod(M, p), p) % p);
        B += M * static_cast<i128>(step);
        M *= static_cast<i128>(p);
        checked(M, "normalising modulus");
    }

    std::vector<LinearForm> result;
    for (const auto& f : forms) {
        result.push_back({checked(static_cast<i128>(f.a) * M, "normalised coefficient"),
                          checked(static_cast<i128>(f.a) * B + f.b, "normalised constant")});
    }
    Normalization out{LinearTuple(std::move(result)), static_cast<std::int64_t>(M), static_cast<std::int64_t>(B)};
    std::string reason;
    if (!satisfies_hypothesis(out.tuple, &reason)) {
        throw Error("normalisation of " + t.to_string() + " failed: " + reason);
    }
    return out;
}

BigInt product_at(const LinearTuple& t, std::int64_t n) {
    BigInt product = 1;
    for (const auto& f : t.forms()) {
        product *= BigInt(f.a) * n + f.b;
    }
    return product;
}

BigInt product_omitting(const LinearTuple& t, std::size_t j, std::int64_t n) {
    if (j < 1 || j > t.size()) {
        throw ParameterError("form index " + std::to_string(j) + " outside 1.." + std::to_string(t.size()));
    }
    BigInt product = 1;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (i + 1 != j) {
            product *= BigInt(t.forms()[i].a) * n + t.forms()[i].b;
        }
    }
    return product;
}

double compute_V(std::uint64_t z, SieveDimension k, const BigInt& A) {
    if (z > scan_max_z) {
        throw ResourceError("z beyond " + std::to_string(scan_max_z));
    }
    const BigInt a = boost::multiprecision::abs(A);
    const auto kd = static_cast<u64>(k.value());
    const bool exact = z <= exact_V_limit;
    BigInt numerator = 1;
    BigInt denominator = 1;
    long double approx = 1.0L;
    for (u64 p : primes_below(z)) {
        if (a != 0 && static_cast<u64>(a % p) == 0) {
            continue;
        }
        if (p <= kd) {
            throw DomainError("dimension exceeds prime: factor 1 - " + std::to_string(kd) + "/" + std::to_string(p) +
                              " is not positive");
        }
        if (exact) {
            numerator *= p - kd;
            denominator *= p;
        } else {
            approx *= 1.0L - static_cast<long double>(kd) / static_cast<long double>(p);
        }
    }
    if (exact) {
        return boost::multiprecision::cpp_rational(numerator, denominator).convert_to<double>();
    }
    return static_cast<double>(approx);
}

ScanReport scan_S(const LinearTuple& t, std::int64_t N, std::uint64_t z, double tau, const ScanOptions& options) {
    if (N < 1) {
        throw ParameterError("N must be at least 1");
    }
    if (z < 2) {
        throw ParameterError("z must be at least 2");
    }
    if (N > scan_max_N || z > scan_max_z) {
        throw ResourceError("scan limited to N <= " + std::to_string(scan_max_N) + " and z <= " +
                            std::to_string(scan_max_z));
    }
    if (!std::isfinite(tau)) {
        throw ParameterError("tau must be finite");
    }
    std::string reason;
    if (!satisfies_hypothesis(t, &reason)) {
        throw ParameterError("scan needs a normalised tuple (" + reason + "); run normalize first");
    }
    const auto& forms = t.forms();
    for (const auto& f : forms) {
        for (i128 n : {static_cast<i128>(N), static_cast<i128>(2 * N - 1)}) {
            if (abs128(static_cast<i128>(f.a) * n + f.b) >= coefficient_limit) {
                throw ResourceError("values of " + f.to_string() + " exceed 64-bit range");
            }
        }
    }

    // Root n = -b/a mod p of each form for each sieving prime; primes dividing a never divide
    // a value because the tuple is normalised.
    struct Root {
        u64 p;
        u64 r;
    };
    std::vector<Root> roots;
    for (u64 p : primes_below(z)) {
        for (const auto& f : forms) {
            const u64 a = mod(f.a, p);
            if (a != 0) {
                roots.push_back({p, static_cast<u64>(static_cast<u128>((p - mod(f.b, p)) % p) *
                                                     inverse_mod(a, p) % p)});
            }
        }
    }

    const auto length = static_cast<u64>(N);
    const u64 block = std::min<u64>(length, std::max<u64>(u64{1} << 16, 4 * roots.size()));
    const u64 blocks = (length + block - 1) / block;
    struct Part {
        u64 survivors = 0;
        u64 omega_total = 0;
        std::vector<Witness> witnesses;
    };
    std::vector<Part> parts(blocks);
    std::atomic<u64> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        std::vector<char> marked;
        for (u64 index = next++; index < blocks; index = next++) {
            try {
                const u64 lo = static_cast<u64>(N) + index * block;
                const u64 hi = std::min(lo + block, 2 * static_cast<u64>(N));
                marked.assign(hi - lo, 0);
                for (const auto& root : roots) {
                    for (u64 n = lo + (root.r + root.p - lo % root.p) % root.p; n < hi; n += root.p) {
                        marked[n - lo] = 1;
                    }
                }
                Part& part = parts[index];
                for (u64 n = lo; n < hi; ++n) {
                    if (marked[n - lo]) {
                        continue;
                    }
                    int omega = 0;
                    for (const auto& f : forms) {
                        const i128 value = static_cast<i128>(f.a) * static_cast<i128>(n) + f.b;
                        if (value == 0) {
                            throw DomainError("product vanishes at n = " + std::to_string(n));
                        }
                        omega += big_omega(static_cast<u64>(abs128(value)));
                    }
                    ++part.survivors;
                    part.omega_total += static_cast<u64>(omega);
                    if (omega < tau) {
                        part.witnesses.push_back({static_cast<std::int64_t>(n), omega});
                    }
                }
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) {
                    failure = std::current_exception();
                }
            }
        }
    };
    unsigned threads = options.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : options.threads;
    threads = static_cast<unsigned>(std::min<u64>(threads, blocks));
    std::vector<std::thread> pool;
    for (unsigned i = 1; i < threads; ++i) {
        pool.emplace_back(worker);
    }
    worker();
    for (auto& th : pool) {
        th.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }

    ScanReport report;
    report.N = N;
    report.z = z;
    report.tau = tau;
    for (auto& part : parts) {
        report.survivors += part.survivors;
        report.omega_total += part.omega_total;
        for (const auto& w : part.witnesses) {
            if (report.witnesses.size() < options.max_witnesses) {
                report.witnesses.push_back(w);
            } else {
                report.truncated = true;
            }
        }
    }
    report.S = tau * static_cast<double>(report.survivors) - static_cast<double>(report.omega_total);
    return report;
}

}  // namespace sievekit
