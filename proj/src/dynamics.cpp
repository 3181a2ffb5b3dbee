#include "lctpulse/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "lctpulse/errors.hpp"

namespace lctpulse {

namespace {

using cd = std::complex<double>;

Eigen::VectorXcd phases(const Eigen::VectorXd& energies, double dt) {
    Eigen::VectorXcd out(energies.size());
    for (Eigen::Index k = 0; k < energies.size(); ++k) out(k) = std::polar(1.0, -energies(k) * dt);
    return out;
}

}  // namespace

QuantumState::QuantumState(Eigen::VectorXcd amplitudes) : amps_(std::move(amplitudes)) {
    if (amps_.size() == 0 || std::abs(amps_.norm() - 1.0) > 1e-10) {
        throw DomainError("quantum state must have unit norm");
    }
}

QuantumState QuantumState::normalized(Eigen::VectorXcd amplitudes) {
    const double n = amplitudes.norm();
    if (!(n > 0.0) || !std::isfinite(n)) throw NumericalError("cannot normalize a zero state");
    return QuantumState(amplitudes / n);
}

QuantumState QuantumState::basis(std::size_t dim, std::size_t index) {
    if (index >= dim) throw DomainError("basis index out of range");
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(dim));
    v(static_cast<Eigen::Index>(index)) = 1.0;
    return QuantumState(std::move(v));
}

QuantumState propagate_step(const QuantumState& state, const Operator& h, double dt) {
    if (!(dt > 0.0)) throw DomainError("time step must be positive");
    if (static_cast<std::size_t>(h.rows()) != state.dim()) {
        throw DomainError("operator and state dimensions differ");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h);
    const auto& v = solver.eigenvectors();
    Eigen::VectorXcd out =
        v * phases(solver.eigenvalues(), dt).cwiseProduct(v.adjoint() * state.amplitudes());
    // Re-normalize away the rounding of the two basis changes.
    return QuantumState(out / out.norm());
}

Propagator::Propagator(Eigen::MatrixXd drift, Eigen::MatrixXd control)
    : drift_(std::move(drift)), control_(std::move(control)) {
    if (drift_.rows() != drift_.cols() || drift_.rows() != control_.rows() ||
        drift_.cols() != control_.cols()) {
        throw DomainError("drift and control operators differ in shape");
    }
    const Eigen::Index n = drift_.rows();
    // Couplings below rounding level (e.g. between sectors after an eigenbasis
    // change) are dropped so that the blocks separate.
    const double scale = std::max(drift_.cwiseAbs().maxCoeff(), control_.cwiseAbs().maxCoeff());
    const double cut = 1e-13 * scale;
    std::vector<Eigen::Index> parent(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) parent[static_cast<std::size_t>(i)] = i;
    auto root = [&](Eigen::Index i) {
        while (parent[static_cast<std::size_t>(i)] != i) i = parent[static_cast<std::size_t>(i)];
        return i;
    };
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            if (std::abs(drift_(i, j)) > cut || std::abs(control_(i, j)) > cut) {
                parent[static_cast<std::size_t>(root(j))] = root(i);
            }
        }
    }
    std::vector<Eigen::Index> block_of(static_cast<std::size_t>(n), -1);
    for (Eigen::Index i = 0; i < n; ++i) {
        auto& b = block_of[static_cast<std::size_t>(root(i))];
        if (b < 0) {
            b = static_cast<Eigen::Index>(blocks_.size());
            blocks_.emplace_back();
        }
        blocks_[static_cast<std::size_t>(b)].index.push_back(i);
    }
    for (auto& b : blocks_) {
        const auto m = static_cast<Eigen::Index>(b.index.size());
        b.drift.resize(m, m);
        b.control.resize(m, m);
        for (Eigen::Index r = 0; r < m; ++r) {
            for (Eigen::Index c = 0; c < m; ++c) {
                b.drift(r, c) = drift_(b.index[static_cast<std::size_t>(r)], b.index[static_cast<std::size_t>(c)]);
                b.control(r, c) = control_(b.index[static_cast<std::size_t>(r)], b.index[static_cast<std::size_t>(c)]);
            }
        }
        b.h.resize(m, m);
        b.solver = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m);
        b.psi.resize(m);
        b.work.resize(m);
    }
    drift_diagonal_ = drift_.isDiagonal(0.0);
}

Propagator Propagator::product_basis(const SystemParams& params) {
    Eigen::MatrixXd control = (-0.5 * coupler_sigma_z_diagonal(params.num_sites())).asDiagonal();
    return Propagator(build_drift_hamiltonian(params, 0.0).real(), std::move(control));
}

Propagator Propagator::drift_eigenbasis(const SystemParams& params,
                                        const DriftSpectrum& spectrum) {
    const Eigen::MatrixXd v = real_eigenvectors(spectrum);
    const Eigen::VectorXd c = -0.5 * coupler_sigma_z_diagonal(params.num_sites());
    Eigen::MatrixXd control = v.transpose() * c.asDiagonal() * v;
    control = 0.5 * (control + control.transpose()).eval();
    return Propagator(spectrum.eigenvalues.asDiagonal(), std::move(control));
}

void Propagator::step(Eigen::VectorXcd& psi, double delta_omega, double dt) {
    if (delta_omega == 0.0 && drift_diagonal_) {
        for (Eigen::Index k = 0; k < psi.size(); ++k) psi(k) *= std::polar(1.0, -drift_(k, k) * dt);
        return;
    }
    for (auto& b : blocks_) {
        const auto m = static_cast<Eigen::Index>(b.index.size());
        if (m == 1) {
            const Eigen::Index i = b.index.front();
            psi(i) *= std::polar(1.0, -(b.drift(0, 0) + delta_omega * b.control(0, 0)) * dt);
            continue;
        }
        for (Eigen::Index r = 0; r < m; ++r) b.psi(r) = psi(b.index[static_cast<std::size_t>(r)]);
        b.h = b.drift;
        b.h.noalias() += delta_omega * b.control;
        b.solver.compute(b.h);
        const auto& v = b.solver.eigenvectors();
        const auto& e = b.solver.eigenvalues();
        b.work.noalias() = v.transpose() * b.psi;
        for (Eigen::Index k = 0; k < m; ++k) b.work(k) *= std::polar(1.0, -e(k) * dt);
        b.psi.noalias() = v * b.work;
        for (Eigen::Index r = 0; r < m; ++r) psi(b.index[static_cast<std::size_t>(r)]) = b.psi(r);
    }
}

Eigen::MatrixXd real_eigenvectors(const DriftSpectrum& spectrum) {
    if (spectrum.eigenvectors.imag().cwiseAbs().maxCoeff() > 1e-14) {
        throw NumericalError("drift eigenvectors are not real");
    }
    return spectrum.eigenvectors.real();
}

const std::vector<double>& TrajectoryRecord::population(const std::string& label) const {
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == label) return populations[i];
    }
    throw ConfigError("state '" + label + "' was not tracked");
}

std::vector<double> eigen_populations(const DriftSpectrum& spectrum,
                                      std::span<const std::size_t> indices,
                                      const Eigen::VectorXcd& psi) {
    std::vector<double> out;
    out.reserve(indices.size());
    for (auto j : indices) {
        out.push_back(std::norm(spectrum.eigenvectors.col(static_cast<Eigen::Index>(j)).dot(psi)));
    }
    return out;
}

TrajectoryRecord propagate_waveform(const SystemParams& params, const QuantumState& psi0,
                                    const Waveform& wf, std::span<const std::string> tracked) {
    if (psi0.dim() != params.dim()) throw DomainError("initial state has the wrong dimension");
    if (!(wf.dt > 0.0)) throw DomainError("waveform sample period must be positive");
    const auto spectrum = eigendecompose(build_drift_hamiltonian(params, 0.0));

    TrajectoryRecord rec;
    if (tracked.empty()) {
        rec.labels = spectrum.bare_labels;
    } else {
        rec.labels.assign(tracked.begin(), tracked.end());
    }
    std::vector<std::size_t> indices;
    for (const auto& label : rec.labels) indices.push_back(spectrum.index_of(label));

    const std::size_t n = wf.samples.size();
    rec.populations.assign(rec.labels.size(), std::vector<double>(n + 1));
    rec.times.resize(n + 1);
    rec.control.resize(n + 1);

    auto prop = Propagator::drift_eigenbasis(params, spectrum);
    Eigen::VectorXcd coeffs = spectrum.eigenvectors.adjoint() * psi0.amplitudes();
    auto record = [&](std::size_t k) {
        for (std::size_t i = 0; i < indices.size(); ++i) {
            rec.populations[i][k] = std::norm(coeffs(static_cast<Eigen::Index>(indices[i])));
        }
        rec.times[k] = wf.time(k);
    };
    record(0);
    for (std::size_t k = 0; k < n; ++k) {
        prop.step(coeffs, wf.samples[k], wf.dt);
        rec.control[k] = wf.samples[k];
        record(k + 1);
    }
    rec.control[n] = n > 0 ? wf.samples[n - 1] : 0.0;
    rec.final_state = QuantumState(spectrum.eigenvectors * coeffs);
    return rec;
}

QuantumState propagate_final(const SystemParams& params, const QuantumState& psi0,
                             const Waveform& wf) {
    if (psi0.dim() != params.dim()) throw DomainError("initial state has the wrong dimension");
    const auto spectrum = eigendecompose(build_drift_hamiltonian(params, 0.0));
    auto prop = Propagator::drift_eigenbasis(params, spectrum);
    Eigen::VectorXcd coeffs = spectrum.eigenvectors.adjoint() * psi0.amplitudes();
    for (double v : wf.samples) prop.step(coeffs, v, wf.dt);
    return QuantumState(spectrum.eigenvectors * coeffs);
}

double population_derivative_check(const QuantumState& state, const Operator& h,
                                   const Operator& projector) {
    const auto& psi = state.amplitudes();
    const Operator commutator = h * projector - projector * h;
    const cd value = cd(0.0, 1.0) * psi.dot(commutator * psi);
    if (std::abs(value.imag()) > 1e-12 * std::max(1.0, h.norm())) {
        throw NumericalError("population derivative has a non-negligible imaginary part");
    }
    return value.real();
}

}  // namespace lctpulse
