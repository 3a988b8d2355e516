#pragma once

#include <cmath>
#include <numbers>

namespace clickmask {

/// Smoothed Heaviside, arctan form: 0.5 * (1 + (2/pi) * atan(z / eps)).
inline double heaviside(double z, double epsilon) noexcept
{
    return 0.5 * (1.0 + (2.0 / std::numbers::pi) * std::atan(z / epsilon));
}

/// Derivative of `heaviside`: (1/pi) * eps / (eps^2 + z^2).
inline double dirac(double z, double epsilon) noexcept
{
    return (epsilon / std::numbers::pi) / (epsilon * epsilon + z * z);
}

/// Derivative of `dirac` with respect to z.
inline double dirac_derivative(double z, double epsilon) noexcept
{
    const double d = epsilon * epsilon + z * z;
    return -2.0 * epsilon * z / (std::numbers::pi * d * d);
}

/// Double-well potential: minima at s = 0 and s = 1.
inline double double_well(double s) noexcept
{
    constexpr double two_pi = 2.0 * std::numbers::pi;
    if (s <= 1.0)
        return (1.0 - std::cos(two_pi * s)) / (two_pi * two_pi);
    return 0.5 * (s - 1.0) * (s - 1.0);
}

/// p'(s) / s for the double well; dp(0) = 1 by continuity.
inline double dp(double s) noexcept
{
    constexpr double two_pi = 2.0 * std::numbers::pi;
    if (s <= 0.0)
        return 1.0;
    if (s <= 1.0)
        return std::sin(two_pi * s) / (two_pi * s);
    return (s - 1.0) / s;
}

}  // namespace clickmask
