#include "sievekit/arith.hpp"

#include "sievekit/errors.hpp"

#include <algorithm>
#include <numeric>
#include <string>
#include <tuple>
#include <utility>

namespace sievekit {

namespace {

using u64 = std::uint64_t;
__extension__ typedef unsigned __int128 u128;
__extension__ typedef __int128 i128;

u64 mul_mod(u64 a, u64 b, u64 m) { return static_cast<u64>(static_cast<u128>(a) * b % m); }

u64 pow_mod(u64 base, u64 e, u64 m) {
    u64 result = 1 % m;
    base %= m;
    while (e > 0) {
        if (e & 1) {
            result = mul_mod(result, base, m);
        }
        base = mul_mod(base, base, m);
        e >>= 1;
    }
    return result;
}

// Brent's variant of Pollard rho; returns a nontrivial divisor of the odd composite n.
u64 pollard_brent(u64 n) {
    for (u64 c = 1;; ++c) {
        auto f = [n, c](u64 x) { return (mul_mod(x, x, n) + c) % n; };
        u64 y = 2;
        u64 x = 2;
        u64 ys = 2;
        u64 g = 1;
        u64 q = 1;
        const u64 block = 128;
        for (u64 r = 1; g == 1; r <<= 1) {
            x = y;
            for (u64 i = 0; i < r; ++i) {
                y = f(y);
            }
            for (u64 k = 0; k < r && g == 1; k += block) {
                ys = y;
                for (u64 i = 0; i < std::min(block, r - k); ++i) {
                    y = f(y);
                    q = mul_mod(q, x > y ? x - y : y - x, n);
                }
                g = std::gcd(q, n);
            }
        }
        if (g == n) {
            do {
                ys = f(ys);
                g = std::gcd(x > ys ? x - ys : ys - x, n);
            } while (g == 1);
        }
        if (g != n) {
            return g;
        }
    }
}

void factor_into(u64 n, std::vector<u64>& out) {
    if (n == 1) {
        return;
    }
    if (is_prime(n)) {
        out.push_back(n);
        return;
    }
    const u64 d = pollard_brent(n);
    factor_into(d, out);
    factor_into(n / d, out);
}

}  // namespace

std::vector<std::uint32_t> primes_below(std::uint64_t limit) {
    std::vector<std::uint32_t> primes;
    if (limit <= 2) {
        return primes;
    }
    if (limit > (std::uint64_t{1} << 32)) {
        throw ResourceError("prime table limit too large");
    }
    std::vector<bool> composite(limit, false);
    for (std::uint64_t i = 2; i < limit; ++i) {
        if (!composite[i]) {
            primes.push_back(static_cast<std::uint32_t>(i));
            for (std::uint64_t j = i * i; j < limit; j += i) {
                composite[j] = true;
            }
        }
    }
    return primes;
}

bool is_prime(std::uint64_t n) {
    if (n < 2) {
        return false;
    }
    static constexpr u64 bases[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
    for (u64 p : bases) {
        if (n % p == 0) {
            return n == p;
        }
    }
    u64 d = n - 1;
    int s = 0;
    while ((d & 1) == 0) {
        d >>= 1;
        ++s;
    }
    for (u64 a : bases) {
        u64 x = pow_mod(a, d, n);
        if (x == 1 || x == n - 1) {
            continue;
        }
        bool witness = true;
        for (int r = 1; r < s; ++r) {
            x = mul_mod(x, x, n);
            if (x == n - 1) {
                witness = false;
                break;
            }
        }
        if (witness) {
            return false;
        }
    }
    return true;
}

std::vector<std::uint64_t> factorize(std::uint64_t n) {
    std::vector<u64> out;
    if (n < 2) {
        return out;
    }
    for (u64 p : {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47}) {
        while (n % p == 0) {
            out.push_back(p);
            n /= p;
        }
    }
    factor_into(n, out);
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::uint64_t> prime_divisors(std::uint64_t n) {
    auto f = factorize(n);
    f.erase(std::unique(f.begin(), f.end()), f.end());
    return f;
}

int big_omega(std::uint64_t n) { return static_cast<int>(factorize(n).size()); }

std::uint64_t inverse_mod(std::uint64_t a, std::uint64_t m) {
    i128 t = 0;
    i128 new_t = 1;
    i128 r = m;
    i128 new_r = a % m;
    while (new_r != 0) {
        const i128 q = r / new_r;
        std::tie(t, new_t) = std::pair{new_t, t - q * new_t};
        std::tie(r, new_r) = std::pair{new_r, r - q * new_r};
    }
    if (r != 1) {
        throw ParameterError("value is not invertible modulo " + std::to_string(m));
    }
    if (t < 0) {
        t += m;
    }
    return static_cast<std::uint64_t>(t);
}

}  // namespace sievekit
