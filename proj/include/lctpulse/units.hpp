#pragma once

#include <numbers>

namespace lctpulse {

// Internal frequencies are angular (rad/ns); configuration and exports use
// ordinary frequency in GHz.
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

constexpr double ghz_to_angular(double ghz) { return kTwoPi * ghz; }
constexpr double angular_to_ghz(double rad_per_ns) { return rad_per_ns / kTwoPi; }

}  // namespace lctpulse
