#pragma once

#include <cstdint>
#include <vector>

namespace sievekit {

/// Primes p < limit (sieve of Eratosthenes).
std::vector<std::uint32_t> primes_below(std::uint64_t limit);

/// Deterministic Miller-Rabin; the bases 2..37 are exact for every 64-bit input.
bool is_prime(std::uint64_t n);

/// Prime factors with multiplicity, ascending. factorize(0) and factorize(1) are empty.
std::vector<std::uint64_t> factorize(std::uint64_t n);

/// Distinct prime factors, ascending.
std::vector<std::uint64_t> prime_divisors(std::uint64_t n);

/// Number of prime factors counted with multiplicity.
int big_omega(std::uint64_t n);

/// a^-1 mod m for gcd(a, m) = 1, m > 1.
std::uint64_t inverse_mod(std::uint64_t a, std::uint64_t m);

}  // namespace sievekit
