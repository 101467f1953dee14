#pragma once

#include "sievekit/dhr.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace sievekit {

using BigInt = boost::multiprecision::cpp_int;

/// a x + b with a != 0.
struct LinearForm {
    std::int64_t a = 1;
    std::int64_t b = 0;

    bool operator==(const LinearForm&) const = default;
    std::string to_string() const;
};

/// Coefficients are limited to |a|, |b| < 2^62 so that cross terms a_i b_j - a_j b_i fit in 128 bits.
class LinearTuple {
public:
    /// ParameterError on an empty list, a zero coefficient, oversized coefficients or repeated forms.
    explicit LinearTuple(std::vector<LinearForm> forms);

    /// Comma-separated forms such as "x,x+2,x+6" or "6x+5, 6x+7, 6x+11" (n may replace x).
    static LinearTuple parse(std::string_view text);

    const std::vector<LinearForm>& forms() const { return forms_; }
    std::size_t size() const { return forms_.size(); }
    /// Product of the coefficients a_i.
    const BigInt& A() const { return A_; }
    bool admissible() const { return admissible_; }

    std::string to_string() const;

    bool operator==(const LinearTuple& other) const { return forms_ == other.forms_; }

private:
    std::vector<LinearForm> forms_;
    BigInt A_;
    bool admissible_ = false;
};

/// True iff no prime divides every value of the product. Only primes p <= k and primes dividing
/// some a_i can fail; each is checked over the full residue system.
bool is_admissible(const LinearTuple& t);

/// Number of residues n mod p (over 0..p-1) with p | product of the forms at n.
/// ParameterError when p is not prime.
int v_p(const LinearTuple& t, std::uint64_t p);

/// Checks the normal form: admissible, a_i > 0, all a_i with the same prime support, none of
/// those primes dividing any b_j, and every prime of a_i b_j - a_j b_i dividing each a_l.
/// On failure the first violated clause is written to `reason` when given.
bool satisfies_hypothesis(const LinearTuple& t, std::string* reason = nullptr);

struct Normalization {
    LinearTuple tuple;
    /// Substitution x -> A x + B; (1, 0) when the input already satisfies the hypothesis.
    std::int64_t A = 1;
    std::int64_t B = 0;
};

/// Substitutes x -> M x + B, M the radical of prod a_i * prod_{i<j} (a_i b_j - a_j b_i), B the
/// smallest residue that keeps every new constant term coprime to M. Forms with a < 0 are
/// negated first. AdmissibilityError on inadmissible input.
Normalization normalize(const LinearTuple& t);

BigInt product_at(const LinearTuple& t, std::int64_t n);
/// Product of all forms except the j-th (1-based).
BigInt product_omitting(const LinearTuple& t, std::size_t j, std::int64_t n);

/// V(z) = prod over primes p < z, p not dividing A, of (1 - k/p). Exact rational arithmetic for
/// z <= exact_V_limit, long double above. DomainError when some factor is <= 0.
inline constexpr std::uint64_t exact_V_limit = 100000;
double compute_V(std::uint64_t z, SieveDimension k, const BigInt& A);

struct Witness {
    std::int64_t n = 0;
    int omega = 0;

    bool operator==(const Witness&) const = default;
};

struct ScanOptions {
    /// Witnesses beyond this many are dropped and `truncated` is set.
    std::size_t max_witnesses = 10000;
    unsigned threads = 0;
};

struct ScanReport {
    std::int64_t N = 0;
    std::uint64_t z = 0;
    double tau = 0.0;
    /// Sum over surviving n of (tau - Omega(product at n)).
    double S = 0.0;
    std::uint64_t survivors = 0;
    /// Sum of Omega over the survivors.
    std::uint64_t omega_total = 0;
    /// Survivors with Omega < tau, ascending in n.
    std::vector<Witness> witnesses;
    bool truncated = false;
};

inline constexpr std::int64_t scan_max_N = 100000000;
inline constexpr std::uint64_t scan_max_z = 10000000;

/// S(tau; N, z) for n in [N, 2N) with no prime factor p < z in the product. The tuple must satisfy
/// the normal-form hypothesis (ParameterError otherwise); ResourceError beyond desk scale.
ScanReport scan_S(const LinearTuple& t, std::int64_t N, std::uint64_t z, double tau, const ScanOptions& options = {});

}  // namespace sievekit
