#include "realens/angles.hpp"

#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>

namespace realens {

double wrap_angle(double angle) {
  double r = std::fmod(angle, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;  // fmod of tiny negatives can round up to 2π
  return r;
}

double wrap_signed(double angle) {
  double r = wrap_angle(angle);
  if (r > std::numbers::pi) r -= kTwoPi;
  return r;
}

double circular_distance(double a, double b) {
  return std::abs(wrap_signed(a - b));
}

namespace {

// Resultant of the angles measured relative to the first one; exact when all
// angles coincide.
std::complex<double> relative_resultant(std::span<const double> angles) {
  const double ref = angles.front();
  std::complex<double> sum{0.0, 0.0};
  for (double a : angles) sum += std::polar(1.0, wrap_signed(a - ref));
  return sum;
}

}  // namespace

double circular_mean(std::span<const double> angles) {
  if (angles.empty()) throw std::invalid_argument("circular_mean: empty set");
  return wrap_angle(angles.front() + std::arg(relative_resultant(angles)));
}

double circular_std(std::span<const double> angles) {
  if (angles.size() < 2) return 0.0;
  const auto sum = relative_resultant(angles);
  if (std::abs(sum) <= 1e-14 * static_cast<double>(angles.size())) {
    return std::numeric_limits<double>::infinity();
  }
  const double mean = angles.front() + std::arg(sum);
  // 1 − R̄ written as a mean of 2 sin²(Δ/2), which keeps precision near R̄ = 1.
  double variance = 0.0;
  for (double a : angles) {
    const double s = std::sin(0.5 * wrap_signed(a - mean));
    variance += 2.0 * s * s;
  }
  variance /= static_cast<double>(angles.size());
  if (variance >= 1.0) return std::numeric_limits<double>::infinity();
  return std::sqrt(-2.0 * std::log1p(-variance));
}

}  // namespace realens
