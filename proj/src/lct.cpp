#include "lctpulse/lct.hpp"

#include <bit>
#include <cmath>
#include <complex>
#include <limits>

#include "lctpulse/errors.hpp"

namespace lctpulse {

namespace {

using cd = std::complex<double>;

// Row j of sigma^z_TC expressed in the drift eigenbasis.
Eigen::VectorXd coupler_sz_row(const Eigen::MatrixXd& v, const Eigen::VectorXd& z, std::size_t j) {
    return v.transpose() * z.cwiseProduct(v.col(static_cast<Eigen::Index>(j)));
}

// Projected feedback on drift-eigenbasis coefficients.
double feedback_from_coefficients(const Eigen::VectorXcd& c, const Eigen::VectorXd& sz_row,
                                  std::size_t target_index, double lambda, std::size_t n_prime) {
    cd sum = 0.0;
    for (std::size_t k = 0; k < n_prime; ++k) {
        sum += sz_row(static_cast<Eigen::Index>(k)) * c(static_cast<Eigen::Index>(k));
    }
    return -lambda * (sum * std::conj(c(static_cast<Eigen::Index>(target_index)))).imag();
}

// (i/2) lambda <[sz, P]>* with P the projector on `target`.
double commutator_feedback(const Eigen::VectorXcd& psi, const Eigen::VectorXcd& z,
                           const Eigen::VectorXcd& target, double lambda) {
    // <[sz, P]> = <Psi|sz|j><j|Psi> - <Psi|j><j|sz|Psi>
    const cd overlap = target.dot(psi);
    const cd sz_overlap = target.dot(z.cwiseProduct(psi));
    const cd expectation = std::conj(sz_overlap) * overlap - std::conj(overlap) * sz_overlap;
    return (cd(0.0, 0.5) * lambda * std::conj(expectation)).real();
}

std::size_t site_count(const DriftSpectrum& spectrum) {
    return static_cast<std::size_t>(std::countr_zero(spectrum.dim()));
}

}  // namespace

void LctConfig::validate(std::size_t dim) const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("lct: lambda must be >= 0");
    if (!(eta >= 0.0 && eta < 1.0)) throw ConfigError("lct: eta must lie in [0, 1)");
    if (!(dt > 0.0)) throw ConfigError("lct: dt must be positive");
    if (!(t_max > 0.0)) throw ConfigError("lct: t_max must be positive");
    if (n_prime && (*n_prime == 0 || *n_prime > dim)) {
        throw ConfigError("lct: n_prime must lie in [1, dim]");
    }
    if (reference) {
        if (!lambda2 || !(*lambda2 >= 0.0)) {
            throw ConfigError("lct: a reference pulse requires lambda2 >= 0");
        }
        if (std::abs(reference->dt - dt) > 1e-12 * dt) {
            throw ConfigError("lct: reference pulse sample period differs from dt");
        }
    }
}

QuantumState seed_state(const QuantumState& psi0, const QuantumState& target, double eta) {
    if (!(eta >= 0.0 && eta < 1.0)) throw DomainError("seed fraction must lie in [0, 1)");
    if (eta == 0.0) return psi0;
    return QuantumState::normalized(std::sqrt(eta) * target.amplitudes() +
                                    std::sqrt(1.0 - eta) * psi0.amplitudes());
}

double feedback_raw(const Eigen::VectorXcd& psi, const DriftSpectrum& spectrum,
                    std::size_t target_index, double lambda, std::size_t n_prime) {
    if (target_index >= n_prime || n_prime > spectrum.dim()) {
        throw DomainError("feedback needs target_index < n_prime <= dim");
    }
    const Eigen::VectorXcd c = spectrum.eigenvectors.adjoint() * psi;
    const auto row = coupler_sz_row(real_eigenvectors(spectrum), coupler_sigma_z_diagonal(site_count(spectrum)),
                                    target_index);
    return feedback_from_coefficients(c, row, target_index, lambda, n_prime);
}

double feedback_commutator(const Eigen::VectorXcd& psi, const DriftSpectrum& spectrum,
                           std::size_t target_index, double lambda) {
    if (target_index >= spectrum.dim()) throw DomainError("target index out of range");
    return commutator_feedback(psi, coupler_sigma_z_diagonal(site_count(spectrum)).cast<cd>(),
                               spectrum.eigenvectors.col(static_cast<Eigen::Index>(target_index)),
                               lambda);
}

double feedback_value(const QuantumState& state, const DriftSpectrum& spectrum,
                      std::size_t target_index, double lambda, std::size_t n_prime,
                      double omega_tc_max) {
    return clamp_detuning(feedback_raw(state.amplitudes(), spectrum, target_index, lambda, n_prime),
                          omega_tc_max);
}

LctResult run_lct(const SystemParams& params, const LctConfig& config) {
    params.validate();
    const std::size_t dim = params.dim();
    config.validate(dim);

    const auto spectrum = eigendecompose(build_drift_hamiltonian(params, 0.0));
    const std::size_t target = spectrum.index_of(config.target_label);
    const std::size_t initial = spectrum.index_of(config.initial_label);
    const Eigen::MatrixXd v = real_eigenvectors(spectrum);
    const Eigen::VectorXd z = coupler_sigma_z_diagonal(params.num_sites());
    const auto sz_row = coupler_sz_row(v, z, target);
    const double gain = config.reference ? *config.lambda2 : config.lambda;
    const double omega_max = params.omega_tc_max;
    const std::size_t n_prime = config.n_prime.value_or(dim);
    if (config.n_prime && target >= n_prime) {
        throw ConfigError("lct: target state lies outside the projected subspace");
    }

    // Seeded state in drift-eigenbasis coordinates.
    Eigen::VectorXcd c = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(dim));
    if (initial == target) {
        c(static_cast<Eigen::Index>(initial)) = 1.0;
    } else {
        c(static_cast<Eigen::Index>(target)) = std::sqrt(config.eta);
        c(static_cast<Eigen::Index>(initial)) = std::sqrt(1.0 - config.eta);
    }

    const Eigen::VectorXcd zc = z.cast<cd>();
    const Eigen::VectorXcd target_vec = spectrum.eigenvectors.col(static_cast<Eigen::Index>(target));
    Eigen::VectorXcd psi(static_cast<Eigen::Index>(dim));
    auto feedback = [&](const Eigen::VectorXcd& coeffs) {
        if (config.n_prime) return feedback_from_coefficients(coeffs, sz_row, target, gain, n_prime);
        psi.noalias() = spectrum.eigenvectors * coeffs;
        return commutator_feedback(psi, zc, target_vec, gain);
    };

    const auto steps = static_cast<std::size_t>(std::llround(config.t_max / config.dt));
    if (steps < 2) throw ConfigError("lct: t_max must cover at least two steps");

    LctResult res;
    res.waveform = Waveform{config.dt, std::vector<double>(steps)};
    res.lct_component = Waveform{config.dt, std::vector<double>(steps)};
    auto& traj = res.trajectory;
    traj.labels = spectrum.bare_labels;
    traj.populations.assign(dim, std::vector<double>(steps + 1));
    traj.times.resize(steps + 1);
    traj.control.resize(steps + 1);

    auto record = [&](std::size_t k) {
        traj.times[k] = config.dt * static_cast<double>(k);
        for (std::size_t i = 0; i < dim; ++i) {
            traj.populations[i][k] = std::norm(c(static_cast<Eigen::Index>(i)));
        }
    };
    record(0);

    auto prop = Propagator::drift_eigenbasis(params, spectrum);
    Eigen::VectorXcd trial(c.size());
    Eigen::VectorXcd alternative(c.size());
    double previous = std::norm(c(static_cast<Eigen::Index>(target)));
    double lct_term = 0.0;
    res.min_population_step = std::numeric_limits<double>::infinity();
    const double floor = clamp_floor(omega_max);

    for (std::size_t k = 0; k < steps; ++k) {
        const double ref = config.reference && k < config.reference->size()
                               ? config.reference->samples[k]
                               : 0.0;
        const double base = clamp_detuning(ref, omega_max);
        double total = clamp_detuning(ref + lct_term, omega_max);

        trial = c;
        prop.step(trial, total, config.dt);
        double pop = std::norm(trial(static_cast<Eigen::Index>(target)));
        if (config.monotonic_guard && pop < previous && total != base) {
            alternative = c;
            prop.step(alternative, base, config.dt);
            const double alt_pop = std::norm(alternative(static_cast<Eigen::Index>(target)));
            if (alt_pop > pop) {
                trial.swap(alternative);
                pop = alt_pop;
                total = base;
                ++res.guarded_steps;
            }
        }
        c.swap(trial);
        if (total <= floor) ++res.floor_clamped_steps;
        res.waveform.samples[k] = total;
        res.lct_component.samples[k] = total - ref;
        traj.control[k] = total;
        record(k + 1);
        res.min_population_step = std::min(res.min_population_step, pop - previous);
        previous = pop;

        lct_term = feedback(c);
        if (!std::isfinite(lct_term)) throw NumericalError("lct: feedback became non-finite");
    }
    traj.control[steps] = res.waveform.samples[steps - 1];
    traj.final_state = QuantumState(spectrum.eigenvectors * c);
    res.final_error = 1.0 - previous;
    res.saturation_warning = 2 * res.floor_clamped_steps > steps;
    return res;
}

double crossing_time(const std::vector<double>& times, const std::vector<double>& series,
                     double level) {
    for (std::size_t k = 0; k < series.size() && k < times.size(); ++k) {
        if (series[k] >= level) {
            if (k == 0) return times[0];
            const double f = (level - series[k - 1]) / (series[k] - series[k - 1]);
            return times[k - 1] + f * (times[k] - times[k - 1]);
        }
    }
    return -1.0;
}

}  // namespace lctpulse
