#pragma once

#include <cmath>

namespace sievekit {

// Euler-Mascheroni constant to 30 significant digits (OEIS A001620).
inline constexpr long double euler_gamma = 0.577215664901532860606512090082L;

inline const double exp_gamma = static_cast<double>(std::exp(euler_gamma));
inline const double exp_minus_gamma = static_cast<double>(std::exp(-euler_gamma));

}  // namespace sievekit
