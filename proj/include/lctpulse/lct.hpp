#pragma once

#include <cstddef>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "lctpulse/dynamics.hpp"
#include "lctpulse/model.hpp"
#include "lctpulse/pulses.hpp"

namespace lctpulse {

struct LctConfig {
    double lambda = 12500.0;  ///< feedback gain; dimensionless with detunings in rad/ns
    double eta = 1e-6;        ///< target admixture in the seeded initial state
    double dt = 0.01;         ///< ns
    double t_max = 450.0;     ///< ns
    std::string initial_label = "100";
    std::string target_label = "010";
    /// Restrict the feedback sum to the lowest n' eigenstates. Unset: the
    /// commutator form on the full space.
    std::optional<std::size_t> n_prime;
    /// Fixed reference detuning added underneath the feedback term.
    std::optional<Waveform> reference;
    /// Gain of the feedback term when a reference is present.
    std::optional<double> lambda2;
    /// Hold the feedback term at zero for any step in which it would lower the
    /// target population relative to the same step without it.
    bool monotonic_guard = true;

    /// Throws ConfigError on out-of-range values.
    void validate(std::size_t dim) const;
};

struct LctResult {
    Waveform waveform;       ///< total detuning actually applied
    Waveform lct_component;  ///< applied total minus reference
    TrajectoryRecord trajectory;
    double final_error = 1.0;  ///< 1 - P(target) at t_max
    /// Smallest per-step change of the target population.
    double min_population_step = 0.0;
    std::size_t guarded_steps = 0;
    std::size_t floor_clamped_steps = 0;
    /// More than half the steps sat on the lower clamp: lambda is too large.
    bool saturation_warning = false;
};

/// sqrt(eta)|target> + sqrt(1-eta)|psi0>, renormalized.
QuantumState seed_state(const QuantumState& psi0, const QuantumState& target, double eta);

/// Feedback law in projected form, before clamping:
/// -lambda Im( sum_{k<n'} <psi_j|sz_TC|psi_k><psi_k|Psi><psi_j|Psi>^* ).
double feedback_raw(const Eigen::VectorXcd& psi, const DriftSpectrum& spectrum,
                    std::size_t target_index, double lambda, std::size_t n_prime);

/// Feedback law in commutator form, (i/2) lambda <[sz_TC, P_j]>^*, on the full space.
double feedback_commutator(const Eigen::VectorXcd& psi, const DriftSpectrum& spectrum,
                           std::size_t target_index, double lambda);

/// feedback_raw clamped into [-omega_tc_max (1 - 1e-3), 0].
double feedback_value(const QuantumState& state, const DriftSpectrum& spectrum,
                      std::size_t target_index, double lambda, std::size_t n_prime,
                      double omega_tc_max);

/// Propagate-then-update loop. Each step holds the current detuning over dt and
/// then recomputes the feedback term from the propagated state.
LctResult run_lct(const SystemParams& params, const LctConfig& config);

/// First time at which the series reaches `level` (linear interpolation), or -1.
double crossing_time(const std::vector<double>& times, const std::vector<double>& series,
                     double level);

}  // namespace lctpulse
