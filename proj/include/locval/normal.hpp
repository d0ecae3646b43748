#pragma once

#include <cmath>
#include <numbers>

namespace locval::normal {

inline double pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

inline double cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// Upper tail 1 - Phi(z), accurate for large z.
inline double sf(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

/// P(lo < Z < hi) for standard normal Z, without cancellation in either tail.
inline double interval(double lo, double hi) {
    if (!(hi > lo)) return 0.0;
    if (lo >= 0.0) return sf(lo) - sf(hi);
    if (hi <= 0.0) return cdf(hi) - cdf(lo);
    return 1.0 - cdf(lo) - sf(hi);
}

}  // namespace locval::normal
