#pragma once

#include <numbers>
#include <span>

namespace realens {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Reduces an angle into [0, 2π).
double wrap_angle(double angle);

/// Reduces an angle into (−π, π].
double wrap_signed(double angle);

/// Shortest distance between two angles on the circle, in [0, π].
double circular_distance(double a, double b);

/// Circular mean of a nonempty set of angles, in [0, 2π).
double circular_mean(std::span<const double> angles);

/// Circular standard deviation sqrt(−2 ln R̄). Zero for fewer than two
/// angles, +inf when the resultant vanishes (e.g. an antipodal pair).
/// Accurate for very small spreads: identical angles give exactly 0.
double circular_std(std::span<const double> angles);

}  // namespace realens
