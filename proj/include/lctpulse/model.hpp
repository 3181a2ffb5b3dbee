#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace lctpulse {

/// Dense complex operator on the 2^(n+1)-dimensional product space.
/// Basis index bits are ordered q1 q2 ... qn qTC, most significant first,
/// so the label "100" of a two-qubit device is index 4.
using Operator = Eigen::MatrixXcd;

inline constexpr std::size_t kDefaultDimensionCap = std::size_t{1} << 14;

/// Device constants. All frequencies and couplings are angular (rad/ns).
struct SystemParams {
    std::vector<double> omega;  ///< fixed-qubit frequencies
    std::vector<double> g;      ///< qubit-coupler couplings
    double omega_tc_max = 0.0;  ///< sweet-spot coupler frequency

    std::size_t num_qubits() const { return omega.size(); }
    std::size_t num_sites() const { return omega.size() + 1; }
    std::size_t dim() const { return std::size_t{1} << num_sites(); }

    /// Throws ConfigError when an invariant is broken.
    void validate() const;

    static SystemParams from_ghz(const std::vector<double>& qubit_freqs_ghz,
                                 const std::vector<double>& couplings_ghz,
                                 double tc_max_freq_ghz);
};

/// Two fixed-frequency transmons and a tunable coupler: 5.890/5.031 GHz qubits,
/// 100/71 MHz couplings, 7.445 GHz coupler maximum.
SystemParams reference_device();

struct FluxValue {
    double phi_over_phi0 = 0.0;
};

std::string basis_label(std::size_t index, std::size_t num_sites);
/// Parses a bit-string label ("100"); throws ConfigError on bad width or characters.
std::size_t basis_index(const std::string& label, std::size_t num_sites);
/// Number of excited sites in a product basis state.
int excitation_count(std::size_t index);

/// H_d + delta_omega_tc * C, the full Hamiltonian at a fixed coupler detuning.
Operator build_drift_hamiltonian(const SystemParams& params, double delta_omega_tc,
                                 std::size_t dim_cap = kDefaultDimensionCap);

/// C = -sigma^z_TC / 2, so that H(t) = H_d + delta_omega(t) * C.
Operator build_control_generator(const SystemParams& params,
                                 std::size_t dim_cap = kDefaultDimensionCap);

/// Diagonal of sigma^z_TC in the product basis (+1 with the coupler in |0>).
Eigen::VectorXd coupler_sigma_z_diagonal(std::size_t num_sites);

double flux_to_frequency(const SystemParams& params, FluxValue phi);
/// Inverse of flux_to_frequency on [0, 1/2]; throws DomainError outside [0, omega_tc_max].
FluxValue frequency_to_flux(const SystemParams& params, double omega_tc);

bool is_hermitian(const Operator& h, double rel_tol = 1e-12);

/// Eigen-decomposition of a Hermitian operator with dressed-state labels.
struct DriftSpectrum {
    Eigen::VectorXd eigenvalues;    ///< ascending, rad/ns
    Eigen::MatrixXcd eigenvectors;  ///< columns; largest component real-positive
    std::vector<std::string> bare_labels;
    std::vector<double> label_overlaps;  ///< |<label|psi_k>|^2 of the assigned label

    std::size_t dim() const { return static_cast<std::size_t>(eigenvalues.size()); }
    /// Eigen-index carrying the given bare label; throws ConfigError if absent.
    std::size_t index_of(const std::string& label) const;
    Eigen::VectorXcd state(const std::string& label) const;
};

/// Labels are assigned greedily by descending squared overlap, ties broken by the
/// lower product-basis index, so the assignment is always a permutation.
DriftSpectrum eigendecompose(const Operator& h);

/// Hellmann-Feynman coupling <psi_j|dH/d(dw)|psi_k> / (e_j - e_k) between
/// eigenstates (ascending indices) of H at the given detuning, in ns/rad.
/// Throws NumericalError for a degenerate pair.
double nonadiabatic_coupling(const SystemParams& params, std::size_t j, std::size_t k,
                             double delta_omega_tc);

/// Eigen-indices (ascending energy) of the single-excitation manifold.
std::vector<std::size_t> single_excitation_indices(const DriftSpectrum& spectrum);

/// Local minima of adjacent gaps inside the single-excitation manifold.
struct AvoidedCrossing {
    double delta_omega = 0.0;  ///< rad/ns
    double gap = 0.0;          ///< rad/ns
    std::size_t lower_level = 0;  ///< position within the manifold, ascending, 0-based
};

/// Scans [lo, hi] on a uniform grid of `steps` points, then polishes each interior
/// gap minimum with Brent's method. Results are sorted by decreasing delta_omega.
std::vector<AvoidedCrossing> find_avoided_crossings(const SystemParams& params, double lo,
                                                    double hi, std::size_t steps);

}  // namespace lctpulse
