#include "lctpulse/pulses.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include <fftw3.h>

#include "lctpulse/errors.hpp"

namespace lctpulse {

namespace {

constexpr double kClampFloorFraction = 1e-3;
constexpr double kTailThreshold = 1e-6;

// FFTW planning is not thread-safe; execution on distinct arrays is.
std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

std::vector<std::complex<double>> real_forward(const std::vector<double>& x) {
    const int n = static_cast<int>(x.size());
    std::vector<double> in(x);
    std::vector<std::complex<double>> out(x.size() / 2 + 1);
    fftw_plan plan;
    {
        std::lock_guard lock(fftw_planner_mutex());
        plan = fftw_plan_dft_r2c_1d(n, in.data(), reinterpret_cast<fftw_complex*>(out.data()),
                                    FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(plan);
    }
    return out;
}

std::vector<double> real_inverse(const std::vector<std::complex<double>>& X, std::size_t n) {
    // c2r destroys its input.
    std::vector<std::complex<double>> in(X);
    std::vector<double> out(n);
    fftw_plan plan;
    {
        std::lock_guard lock(fftw_planner_mutex());
        plan = fftw_plan_dft_c2r_1d(static_cast<int>(n), reinterpret_cast<fftw_complex*>(in.data()),
                                    out.data(), FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(plan);
    }
    const double scale = 1.0 / static_cast<double>(n);
    for (auto& v : out) v *= scale;
    return out;
}

void require_samples(const Waveform& wf) {
    if (wf.samples.size() < 2) throw DomainError("waveform needs at least two samples");
    if (!(wf.dt > 0.0)) throw DomainError("waveform sample period must be positive");
}

}  // namespace

double Waveform::value_at(double t) const {
    if (t < 0.0 || samples.empty()) return 0.0;
    const auto k = static_cast<std::size_t>(std::floor(t / dt + 1e-9));
    return k < samples.size() ? samples[k] : 0.0;
}

void check_physical(const Waveform& wf, double omega_tc_max) {
    require_samples(wf);
    for (double v : wf.samples) {
        if (!(v <= 0.0 && v > -omega_tc_max)) {
            throw DomainError("waveform sample outside (-omega_tc_max, 0]");
        }
    }
}

double clamp_floor(double omega_tc_max) { return -omega_tc_max * (1.0 - kClampFloorFraction); }

double clamp_detuning(double value, double omega_tc_max) {
    return std::clamp(value, clamp_floor(omega_tc_max), 0.0);
}

PulseSpectrum fourier_spectrum(const Waveform& wf) {
    require_samples(wf);
    const std::size_t n = wf.samples.size();
    PulseSpectrum s;
    s.dt = wf.dt;
    s.sample_count = n;
    s.amplitudes = real_forward(wf.samples);
    const double df = s.bin_width_ghz();
    const double density = wf.dt / static_cast<double>(n);
    s.freqs_ghz.resize(s.amplitudes.size());
    s.power.resize(s.amplitudes.size());
    for (std::size_t k = 0; k < s.amplitudes.size(); ++k) {
        s.freqs_ghz[k] = df * static_cast<double>(k);
        // Fold the negative-frequency half into the one-sided spectrum.
        const bool self_conjugate = k == 0 || (n % 2 == 0 && k == n / 2);
        s.power[k] = (self_conjugate ? 1.0 : 2.0) * std::norm(s.amplitudes[k]) * density;
    }
    return s;
}

double dominant_line(const PulseSpectrum& spectrum, double min_ghz) {
    std::size_t best = spectrum.power.size();
    for (std::size_t k = 0; k < spectrum.power.size(); ++k) {
        if (spectrum.freqs_ghz[k] < min_ghz) continue;
        if (best == spectrum.power.size() || spectrum.power[k] > spectrum.power[best]) best = k;
    }
    if (best == spectrum.power.size()) throw DomainError("no spectral bin above the requested frequency");
    return spectrum.freqs_ghz[best];
}

Waveform inverse_spectrum(const PulseSpectrum& spectrum) {
    return Waveform{spectrum.dt, real_inverse(spectrum.amplitudes, spectrum.sample_count)};
}

Waveform lowpass_filter_unclamped(const Waveform& wf, double cutoff_ghz) {
    if (!(cutoff_ghz > 0.0)) throw DomainError("cutoff must be positive");
    auto spectrum = fourier_spectrum(wf);
    for (std::size_t k = 0; k < spectrum.amplitudes.size(); ++k) {
        if (spectrum.freqs_ghz[k] > cutoff_ghz) spectrum.amplitudes[k] = 0.0;
    }
    return inverse_spectrum(spectrum);
}

Waveform lowpass_filter(const Waveform& wf, double cutoff_ghz, double omega_tc_max) {
    auto out = lowpass_filter_unclamped(wf, cutoff_ghz);
    for (auto& v : out.samples) v = clamp_detuning(v, omega_tc_max);
    return out;
}

Waveform truncate_with_gaussian_tail(const Waveform& wf, double tau, double sigma) {
    require_samples(wf);
    if (!(sigma > 0.0)) throw DomainError("tail width sigma must be positive");
    const double duration = wf.duration();
    if (!(tau > 0.0) || tau > duration * (1.0 + 1e-12)) {
        throw DomainError("truncation time outside the pulse");
    }
    if (tau >= duration * (1.0 - 1e-12)) return wf;

    const double alpha = wf.value_at(tau);
    const auto first_tail = static_cast<std::size_t>(std::ceil(tau / wf.dt - 1e-9));
    Waveform out{wf.dt, {wf.samples.begin(), wf.samples.begin() + static_cast<long>(first_tail)}};
    for (std::size_t k = first_tail;; ++k) {
        const double x = (wf.time(k) - tau) / sigma;
        const double factor = std::exp(-0.5 * x * x);
        if (factor < kTailThreshold) break;
        out.samples.push_back(alpha * factor);
    }
    if (out.samples.size() < 2) out.samples.resize(2, 0.0);
    return out;
}

Waveform time_reverse(const Waveform& wf) {
    return Waveform{wf.dt, {wf.samples.rbegin(), wf.samples.rend()}};
}

void AnalyticPulseParams::validate(double omega_tc_max) const {
    if (!valid(omega_tc_max)) {
        throw DomainError(
            "analytic pulse needs tau1 <= tau2 <= tau3, alphas in (-omega_tc_max, 0) and "
            "positive sigmas");
    }
}

bool AnalyticPulseParams::valid(double omega_tc_max) const {
    const auto amplitude_ok = [&](double a) { return a < 0.0 && a > -omega_tc_max; };
    return tau1 <= tau2 && tau2 <= tau3 && amplitude_ok(alpha1) && amplitude_ok(alpha3) &&
           sigma1 > 0.0 && sigma2 > 0.0 && sigma3 > 0.0;
}

std::vector<double> AnalyticPulseParams::to_vector() const {
    return {alpha1, alpha3, tau1, tau2, tau3, sigma1, sigma2, sigma3};
}

AnalyticPulseParams AnalyticPulseParams::from_vector(const std::vector<double>& v) {
    if (v.size() != 8) throw DomainError("analytic pulse has eight parameters");
    return {v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7]};
}

double analytic_pulse_value(const AnalyticPulseParams& p, double t) {
    if (t < p.tau1) {
        const double x = (t - p.tau1) / p.sigma1;
        return p.alpha1 * std::exp(-0.5 * x * x);
    }
    if (t <= p.tau3) {
        return 0.5 * (p.alpha3 + p.alpha1) +
               0.5 * (p.alpha3 - p.alpha1) * std::tanh((t - p.tau2) / p.sigma2);
    }
    const double x = (t - p.tau3) / p.sigma3;
    return p.alpha3 * std::exp(-0.5 * x * x);
}

double analytic_pulse_duration(const AnalyticPulseParams& p) {
    return p.tau3 + p.sigma3 * std::sqrt(-2.0 * std::log(kTailThreshold));
}

Waveform analytic_pulse(const AnalyticPulseParams& p, double dt, double duration,
                        double omega_tc_max) {
    p.validate(omega_tc_max);
    if (!(dt > 0.0) || !(duration > dt)) throw DomainError("analytic pulse grid is empty");
    const auto n = static_cast<std::size_t>(std::llround(duration / dt));
    Waveform wf{dt, std::vector<double>(std::max<std::size_t>(n, 2))};
    for (std::size_t k = 0; k < wf.samples.size(); ++k) {
        wf.samples[k] = analytic_pulse_value(p, wf.time(k));
    }
    return wf;
}

}  // namespace lctpulse
