#include "lctpulse/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <sstream>
#include <tuple>

#include <boost/math/tools/minima.hpp>

#include "lctpulse/errors.hpp"
#include "lctpulse/units.hpp"

namespace lctpulse {

namespace {

std::size_t checked_dim(const SystemParams& params, std::size_t dim_cap) {
    params.validate();
    if (params.num_sites() >= 63 || params.dim() > dim_cap) {
        std::ostringstream msg;
        msg << "system too large (" << params.num_sites()
            << " sites exceeds dimension cap " << dim_cap << "); use projected LCT";
        throw NumericalError(msg.str());
    }
    return params.dim();
}

// Bit position of site s; site 0 is q1, site n is the coupler.
std::size_t site_bit(std::size_t site, std::size_t num_sites) { return num_sites - 1 - site; }

bool excited(std::size_t index, std::size_t bit) { return ((index >> bit) & 1u) != 0; }

Eigen::MatrixXcd::Index as_index(std::size_t i) { return static_cast<Eigen::Index>(i); }

std::vector<double> sector_energies(const SystemParams& params, double delta_omega) {
    const auto spectrum = eigendecompose(build_drift_hamiltonian(params, delta_omega));
    std::vector<double> energies;
    for (auto k : single_excitation_indices(spectrum)) {
        energies.push_back(spectrum.eigenvalues(as_index(k)));
    }
    std::sort(energies.begin(), energies.end());
    return energies;
}

}  // namespace

void SystemParams::validate() const {
    if (omega.empty()) throw ConfigError("device needs at least one fixed-frequency qubit");
    if (g.size() != omega.size()) {
        throw ConfigError("device: couplings and qubit frequencies differ in length");
    }
    double max_omega = 0.0;
    for (std::size_t i = 0; i < omega.size(); ++i) {
        if (!(omega[i] > 0.0) || !std::isfinite(omega[i])) {
            throw ConfigError("device: qubit frequencies must be positive and finite");
        }
        if (!(g[i] >= 0.0) || !(g[i] < omega[i])) {
            throw ConfigError("device: each coupling must satisfy 0 <= g < omega");
        }
        max_omega = std::max(max_omega, omega[i]);
    }
    if (!(omega_tc_max > max_omega) || !std::isfinite(omega_tc_max)) {
        throw ConfigError("device: coupler maximum frequency must exceed every qubit frequency");
    }
}

SystemParams SystemParams::from_ghz(const std::vector<double>& qubit_freqs_ghz,
                                    const std::vector<double>& couplings_ghz,
                                    double tc_max_freq_ghz) {
    SystemParams p;
    for (double f : qubit_freqs_ghz) p.omega.push_back(ghz_to_angular(f));
    for (double c : couplings_ghz) p.g.push_back(ghz_to_angular(c));
    p.omega_tc_max = ghz_to_angular(tc_max_freq_ghz);
    p.validate();
    return p;
}

SystemParams reference_device() {
    return SystemParams::from_ghz({5.890, 5.031}, {0.100, 0.071}, 7.445);
}

std::string basis_label(std::size_t index, std::size_t num_sites) {
    std::string label(num_sites, '0');
    for (std::size_t s = 0; s < num_sites; ++s) {
        if (excited(index, site_bit(s, num_sites))) label[s] = '1';
    }
    return label;
}

std::size_t basis_index(const std::string& label, std::size_t num_sites) {
    if (label.size() != num_sites) {
        throw ConfigError("state label '" + label + "' must have " + std::to_string(num_sites) +
                          " digits");
    }
    std::size_t index = 0;
    for (char c : label) {
        if (c != '0' && c != '1') throw ConfigError("state label '" + label + "' is not binary");
        index = (index << 1) | static_cast<std::size_t>(c - '0');
    }
    return index;
}

int excitation_count(std::size_t index) { return std::popcount(index); }

Operator build_drift_hamiltonian(const SystemParams& params, double delta_omega_tc,
                                 std::size_t dim_cap) {
    const std::size_t dim = checked_dim(params, dim_cap);
    const std::size_t sites = params.num_sites();
    const std::size_t tc_bit = site_bit(params.num_qubits(), sites);
    const double omega_tc = params.omega_tc_max + delta_omega_tc;

    Operator h = Operator::Zero(as_index(dim), as_index(dim));
    for (std::size_t b = 0; b < dim; ++b) {
        // sigma^z = +1 on |0>, so -omega/2 sigma^z puts the excited level at +omega/2.
        double diag = 0.0;
        for (std::size_t i = 0; i < params.num_qubits(); ++i) {
            diag -= 0.5 * params.omega[i] * (excited(b, site_bit(i, sites)) ? -1.0 : 1.0);
        }
        diag -= 0.5 * omega_tc * (excited(b, tc_bit) ? -1.0 : 1.0);
        h(as_index(b), as_index(b)) = diag;

        // g_i (s_i^+ s_TC^- + h.c.): excitation hops between qubit i and the coupler.
        if (!excited(b, tc_bit)) continue;
        for (std::size_t i = 0; i < params.num_qubits(); ++i) {
            const std::size_t qb = site_bit(i, sites);
            if (excited(b, qb)) continue;
            const std::size_t target = (b & ~(std::size_t{1} << tc_bit)) | (std::size_t{1} << qb);
            h(as_index(target), as_index(b)) += params.g[i];
            h(as_index(b), as_index(target)) += params.g[i];
        }
    }
    return h;
}

Eigen::VectorXd coupler_sigma_z_diagonal(std::size_t num_sites) {
    const std::size_t dim = std::size_t{1} << num_sites;
    const std::size_t tc_bit = site_bit(num_sites - 1, num_sites);
    Eigen::VectorXd z(as_index(dim));
    for (std::size_t b = 0; b < dim; ++b) z(as_index(b)) = excited(b, tc_bit) ? -1.0 : 1.0;
    return z;
}

Operator build_control_generator(const SystemParams& params, std::size_t dim_cap) {
    checked_dim(params, dim_cap);
    const Eigen::VectorXd z = coupler_sigma_z_diagonal(params.num_sites());
    return (-0.5 * z).cast<std::complex<double>>().asDiagonal();
}

double flux_to_frequency(const SystemParams& params, FluxValue phi) {
    return params.omega_tc_max * std::sqrt(std::abs(std::cos(std::numbers::pi * phi.phi_over_phi0)));
}

FluxValue frequency_to_flux(const SystemParams& params, double omega_tc) {
    if (!(omega_tc >= 0.0) || omega_tc > params.omega_tc_max) {
        throw DomainError("coupler frequency outside [0, omega_tc_max]");
    }
    const double ratio = omega_tc / params.omega_tc_max;
    return FluxValue{std::acos(ratio * ratio) / std::numbers::pi};
}

bool is_hermitian(const Operator& h, double rel_tol) {
    if (h.rows() != h.cols()) return false;
    const double scale = std::max(h.cwiseAbs().maxCoeff(), 1e-300);
    return (h - h.adjoint()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

std::size_t DriftSpectrum::index_of(const std::string& label) const {
    const auto it = std::find(bare_labels.begin(), bare_labels.end(), label);
    if (it == bare_labels.end()) {
        throw ConfigError("unknown state label '" + label + "'");
    }
    return static_cast<std::size_t>(it - bare_labels.begin());
}

Eigen::VectorXcd DriftSpectrum::state(const std::string& label) const {
    return eigenvectors.col(as_index(index_of(label)));
}

DriftSpectrum eigendecompose(const Operator& h) {
    if (h.rows() != h.cols() || h.rows() == 0) throw DomainError("operator must be square");
    const std::size_t dim = static_cast<std::size_t>(h.rows());
    if (!std::has_single_bit(dim)) throw DomainError("operator dimension must be a power of two");

    DriftSpectrum out;
    // The device Hamiltonians are real in the product basis; the real solver is
    // both faster and returns real eigenvectors.
    if (h.imag().cwiseAbs().maxCoeff() == 0.0) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h.real());
        out.eigenvalues = solver.eigenvalues();
        out.eigenvectors = solver.eigenvectors().cast<std::complex<double>>();
    } else {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h);
        out.eigenvalues = solver.eigenvalues();
        out.eigenvectors = solver.eigenvectors();
    }

    for (std::size_t k = 0; k < dim; ++k) {
        auto col = out.eigenvectors.col(as_index(k));
        Eigen::Index arg = 0;
        col.cwiseAbs().maxCoeff(&arg);
        const auto pivot = col(arg);
        col *= std::abs(pivot) / pivot;
        col(arg) = std::abs(col(arg));
    }

    const std::size_t sites = static_cast<std::size_t>(std::countr_zero(dim));
    struct Candidate {
        double overlap;
        std::size_t basis;
        std::size_t eigen;
    };
    std::vector<Candidate> candidates;
    candidates.reserve(dim * dim);
    for (std::size_t k = 0; k < dim; ++k) {
        for (std::size_t b = 0; b < dim; ++b) {
            candidates.push_back({std::norm(out.eigenvectors(as_index(b), as_index(k))), b, k});
        }
    }
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        return std::tie(b.overlap, a.basis, a.eigen) < std::tie(a.overlap, b.basis, b.eigen);
    });
    out.bare_labels.assign(dim, {});
    out.label_overlaps.assign(dim, 0.0);
    std::vector<bool> basis_used(dim, false);
    std::size_t assigned = 0;
    for (const auto& c : candidates) {
        if (assigned == dim) break;
        if (basis_used[c.basis] || !out.bare_labels[c.eigen].empty()) continue;
        basis_used[c.basis] = true;
        out.bare_labels[c.eigen] = basis_label(c.basis, sites);
        out.label_overlaps[c.eigen] = c.overlap;
        ++assigned;
    }
    return out;
}

double nonadiabatic_coupling(const SystemParams& params, std::size_t j, std::size_t k,
                             double delta_omega_tc) {
    if (j == k) throw DomainError("nonadiabatic coupling needs two distinct states");
    const auto spectrum = eigendecompose(build_drift_hamiltonian(params, delta_omega_tc));
    if (j >= spectrum.dim() || k >= spectrum.dim()) throw DomainError("state index out of range");
    const double gap = spectrum.eigenvalues(as_index(j)) - spectrum.eigenvalues(as_index(k));
    if (std::abs(gap) < 1e-9) throw NumericalError("degenerate eigenpair in nonadiabatic coupling");

    const Eigen::VectorXd dh = -0.5 * coupler_sigma_z_diagonal(params.num_sites());
    const auto& v = spectrum.eigenvectors;
    const std::complex<double> element =
        v.col(as_index(j)).dot(dh.cast<std::complex<double>>().cwiseProduct(v.col(as_index(k))));
    return element.real() / gap;
}

std::vector<std::size_t> single_excitation_indices(const DriftSpectrum& spectrum) {
    std::vector<std::size_t> out;
    const std::size_t dim = spectrum.dim();
    for (std::size_t k = 0; k < dim; ++k) {
        double mean = 0.0;
        for (std::size_t b = 0; b < dim; ++b) {
            mean += std::norm(spectrum.eigenvectors(as_index(b), as_index(k))) * excitation_count(b);
        }
        if (std::abs(mean - 1.0) < 0.5) out.push_back(k);
    }
    return out;
}

std::vector<AvoidedCrossing> find_avoided_crossings(const SystemParams& params, double lo,
                                                    double hi, std::size_t steps) {
    if (!(hi > lo) || steps < 3) return {};
    std::vector<double> grid(steps);
    std::vector<std::vector<double>> levels(steps);
    for (std::size_t s = 0; s < steps; ++s) {
        grid[s] = lo + (hi - lo) * static_cast<double>(s) / static_cast<double>(steps - 1);
        levels[s] = sector_energies(params, grid[s]);
    }
    const std::size_t manifold = levels.front().size();

    std::vector<AvoidedCrossing> out;
    for (std::size_t l = 0; l + 1 < manifold; ++l) {
        auto gap_at = [&](std::size_t s) { return levels[s][l + 1] - levels[s][l]; };
        for (std::size_t s = 1; s + 1 < steps; ++s) {
            if (!(gap_at(s) <= gap_at(s - 1) && gap_at(s) < gap_at(s + 1))) continue;
            auto gap = [&](double dw) {
                const auto e = sector_energies(params, dw);
                return e[l + 1] - e[l];
            };
            const auto [x, fx] =
                boost::math::tools::brent_find_minima(gap, grid[s - 1], grid[s + 1], 40);
            out.push_back({x, fx, l});
        }
    }
    std::sort(out.begin(), out.end(),
              [](const auto& a, const auto& b) { return a.delta_omega > b.delta_omega; });
    return out;
}

}  // namespace lctpulse
