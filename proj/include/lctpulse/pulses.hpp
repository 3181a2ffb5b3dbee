#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace lctpulse {

/// Uniformly sampled coupler detuning, rad/ns. Sample k is held constant on
/// [k*dt, (k+1)*dt), so a waveform of N samples lasts N*dt.
struct Waveform {
    double dt = 0.01;
    std::vector<double> samples;

    std::size_t size() const { return samples.size(); }
    double duration() const { return dt * static_cast<double>(samples.size()); }
    double time(std::size_t k) const { return dt * static_cast<double>(k); }
    /// Held value at time t (0 outside the pulse).
    double value_at(double t) const;
};

/// Throws DomainError unless every sample lies in (-omega_tc_max, 0] and size >= 2.
void check_physical(const Waveform& wf, double omega_tc_max);

/// Lower clamp applied to every generated or filtered pulse: -omega_tc_max + floor.
double clamp_floor(double omega_tc_max);
double clamp_detuning(double value, double omega_tc_max);

/// One-sided spectrum. Forward transform is unnormalized; `power` is a density
/// normalized so that sum(power) * df equals the time-domain mean square.
struct PulseSpectrum {
    double dt = 0.0;
    std::size_t sample_count = 0;
    std::vector<double> freqs_ghz;
    std::vector<std::complex<double>> amplitudes;
    std::vector<double> power;

    double bin_width_ghz() const { return 1.0 / (dt * static_cast<double>(sample_count)); }
};

PulseSpectrum fourier_spectrum(const Waveform& wf);
/// Frequency of the strongest bin at or above min_ghz, which skips the slow envelope.
/// Throws DomainError when no bin qualifies.
double dominant_line(const PulseSpectrum& spectrum, double min_ghz);

/// Inverse of fourier_spectrum (carries the 1/N).
Waveform inverse_spectrum(const PulseSpectrum& spectrum);

/// Brick-wall low-pass without any range repair.
Waveform lowpass_filter_unclamped(const Waveform& wf, double cutoff_ghz);
/// Brick-wall low-pass followed by clamping into (-omega_tc_max, 0].
Waveform lowpass_filter(const Waveform& wf, double cutoff_ghz, double omega_tc_max);

/// Keeps samples before tau and replaces the rest by a half-Gaussian that starts at
/// the held value wf(tau). The pulse ends where the tail drops below 1e-6 of its
/// start value. tau == duration returns the input unchanged.
Waveform truncate_with_gaussian_tail(const Waveform& wf, double tau, double sigma);

Waveform time_reverse(const Waveform& wf);

/// Three-segment pulse: rising half-Gaussian, tanh switch, decaying half-Gaussian.
/// Amplitudes in rad/ns, times in ns.
struct AnalyticPulseParams {
    double alpha1 = 0.0;
    double alpha3 = 0.0;
    double tau1 = 0.0;
    double tau2 = 0.0;
    double tau3 = 0.0;
    double sigma1 = 1.0;
    double sigma2 = 1.0;
    double sigma3 = 1.0;

    /// Throws DomainError when ordering, sign or width constraints are broken.
    void validate(double omega_tc_max) const;
    bool valid(double omega_tc_max) const;
    std::vector<double> to_vector() const;
    static AnalyticPulseParams from_vector(const std::vector<double>& v);
};

double analytic_pulse_value(const AnalyticPulseParams& p, double t);
/// Time after which the decaying half-Gaussian is below 1e-6 of alpha3.
double analytic_pulse_duration(const AnalyticPulseParams& p);
Waveform analytic_pulse(const AnalyticPulseParams& p, double dt, double duration,
                        double omega_tc_max);

}  // namespace lctpulse
