#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lctpulse/model.hpp"
#include "lctpulse/pulses.hpp"

namespace lctpulse {

/// Unit-norm state vector over the product space.
class QuantumState {
public:
    QuantumState() = default;
    /// Throws DomainError unless the norm is 1 within 1e-10.
    explicit QuantumState(Eigen::VectorXcd amplitudes);
    static QuantumState normalized(Eigen::VectorXcd amplitudes);
    static QuantumState basis(std::size_t dim, std::size_t index);

    const Eigen::VectorXcd& amplitudes() const { return amps_; }
    std::size_t dim() const { return static_cast<std::size_t>(amps_.size()); }
    double norm() const { return amps_.norm(); }

private:
    Eigen::VectorXcd amps_;
};

/// exp(-i h dt) applied to the state, through the eigen-decomposition of h.
QuantumState propagate_step(const QuantumState& state, const Operator& h, double dt);

/// Reusable stepper for H(dw) = H0 + dw * C with real symmetric H0 and C.
/// Decouples into the connected blocks of H0 and C (excitation-number sectors
/// for the device Hamiltonian) and diagonalizes each block separately.
/// Owns scratch space, so one instance belongs to one execution context.
class Propagator {
public:
    Propagator(Eigen::MatrixXd drift, Eigen::MatrixXd control);

    /// Product-basis coordinates.
    static Propagator product_basis(const SystemParams& params);
    /// Coordinates in the drift eigenbasis: H0 is diagonal there, so steps at zero
    /// detuning are exact phase rotations and unpopulated eigenstates stay empty.
    static Propagator drift_eigenbasis(const SystemParams& params, const DriftSpectrum& spectrum);

    /// In-place exp(-i H(delta_omega) dt) psi.
    void step(Eigen::VectorXcd& psi, double delta_omega, double dt);

    const Eigen::MatrixXd& drift() const { return drift_; }
    const Eigen::MatrixXd& control() const { return control_; }
    std::size_t block_count() const { return blocks_.size(); }

private:
    struct Block {
        std::vector<Eigen::Index> index;
        Eigen::MatrixXd drift;
        Eigen::MatrixXd control;
        Eigen::MatrixXd h;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
        Eigen::VectorXcd psi;
        Eigen::VectorXcd work;
    };

    Eigen::MatrixXd drift_;
    Eigen::MatrixXd control_;
    bool drift_diagonal_ = false;
    std::vector<Block> blocks_;
};

/// Real eigenvector matrix of a device spectrum; throws NumericalError if complex.
Eigen::MatrixXd real_eigenvectors(const DriftSpectrum& spectrum);

/// Populations of tracked drift eigenstates along a run.
struct TrajectoryRecord {
    std::vector<double> times;    ///< t_0 = 0 ... t_N, constant step
    std::vector<double> control;  ///< detuning held from times[k]; last entry repeats the final sample
    std::vector<std::string> labels;
    std::vector<std::vector<double>> populations;  ///< [label][time]
    QuantumState final_state;

    const std::vector<double>& population(const std::string& label) const;
};

/// Populations |<psi_j|psi>|^2 of the given eigen-indices.
std::vector<double> eigen_populations(const DriftSpectrum& spectrum,
                                      std::span<const std::size_t> indices,
                                      const Eigen::VectorXcd& psi);

/// Steps the waveform sample by sample from psi0 and records tracked populations
/// (all labels when `tracked` is empty). Throws ConfigError for unknown labels.
TrajectoryRecord propagate_waveform(const SystemParams& params, const QuantumState& psi0,
                                    const Waveform& wf, std::span<const std::string> tracked = {});

/// Final state only; cheaper than propagate_waveform.
QuantumState propagate_final(const SystemParams& params, const QuantumState& psi0,
                             const Waveform& wf);

/// i <[H, P]> for the current state, which is d<P>/dt under H.
double population_derivative_check(const QuantumState& state, const Operator& h,
                                   const Operator& projector);

}  // namespace lctpulse
