#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>

#include "lctpulse/errors.hpp"
#include "lctpulse/pulses.hpp"
#include "lctpulse/units.hpp"

using namespace lctpulse;

namespace {

const double kOmegaMax = ghz_to_angular(7.445);

Waveform sinusoid(double f_ghz, double amplitude, double offset, std::size_t n, double dt) {
    Waveform wf{dt, std::vector<double>(n)};
    for (std::size_t k = 0; k < n; ++k) {
        wf.samples[k] = offset + amplitude * std::sin(kTwoPi * f_ghz * dt * static_cast<double>(k));
    }
    return wf;
}

Waveform random_waveform(std::mt19937& rng, std::size_t n, double dt) {
    std::uniform_real_distribution<double> u(-10.0, 0.0);
    Waveform wf{dt, std::vector<double>(n)};
    for (auto& v : wf.samples) v = u(rng);
    return wf;
}

double rms(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s / static_cast<double>(v.size()));
}

// Direct O(N^2) DFT used as the spectrum oracle.
std::vector<std::complex<double>> naive_dft(const std::vector<double>& x) {
    const std::size_t n = x.size();
    std::vector<std::complex<double>> out(n / 2 + 1);
    for (std::size_t k = 0; k < out.size(); ++k) {
        std::complex<double> acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            acc += x[j] * std::polar(1.0, -kTwoPi * static_cast<double>(k * j % n) / static_cast<double>(n));
        }
        out[k] = acc;
    }
    return out;
}

const AnalyticPulseParams kReferenceShape{ghz_to_angular(-2.457), ghz_to_angular(-1.591), 5.8, 8.3, 10.0,
                                1.83, 0.2, 1.37};

}  // namespace

TEST_CASE("waveform basics") {
    Waveform wf{0.5, {0.0, -1.0, -2.0}};
    CHECK(wf.duration() == 1.5);
    CHECK(wf.value_at(0.0) == 0.0);
    CHECK(wf.value_at(0.6) == -1.0);
    CHECK(wf.value_at(1.0) == -2.0);
    CHECK(wf.value_at(1.5) == 0.0);
    CHECK(wf.value_at(-0.1) == 0.0);
    CHECK_NOTHROW(check_physical(wf, kOmegaMax));
    CHECK_THROWS_AS(check_physical(Waveform{0.5, {0.0, 0.1}}, kOmegaMax), DomainError);
    CHECK_THROWS_AS(check_physical(Waveform{0.5, {0.0, -kOmegaMax}}, kOmegaMax), DomainError);
    CHECK_THROWS_AS(check_physical(Waveform{0.5, {0.0}}, kOmegaMax), DomainError);
    CHECK(clamp_detuning(1.0, kOmegaMax) == 0.0);
    CHECK(clamp_detuning(-2 * kOmegaMax, kOmegaMax) == doctest::Approx(-kOmegaMax * 0.999));
}

TEST_CASE("spectrum of a pure sinusoid") {
    const auto s = fourier_spectrum(sinusoid(0.5, 1.0, 0.0, 4000, 0.01));
    std::size_t peak = 0;
    for (std::size_t k = 1; k < s.power.size(); ++k) {
        if (s.power[k] > s.power[peak]) peak = k;
    }
    CHECK(s.freqs_ghz[peak] == doctest::Approx(0.5));
    for (std::size_t k = 0; k < s.power.size(); ++k) {
        if (k != peak) CHECK(s.power[peak] > 100 * s.power[k]);
    }
    CHECK(s.freqs_ghz.back() == doctest::Approx(50.0));
}

TEST_CASE("spectrum matches a direct DFT") {
    std::mt19937 rng(1);
    for (std::size_t n : {64u, 63u}) {
        const auto wf = random_waveform(rng, n, 0.1);
        const auto s = fourier_spectrum(wf);
        const auto ref = naive_dft(wf.samples);
        REQUIRE(s.amplitudes.size() == ref.size());
        for (std::size_t k = 0; k < ref.size(); ++k) CHECK(std::abs(s.amplitudes[k] - ref[k]) < 1e-9);
    }
}

TEST_CASE("Parseval") {
    std::mt19937 rng(2);
    for (std::size_t n : {1000u, 1001u, 45000u}) {
        const auto wf = random_waveform(rng, n, 0.01);
        const auto s = fourier_spectrum(wf);
        double lhs = 0.0;
        for (double p : s.power) lhs += p * s.bin_width_ghz();
        double ms = 0.0;
        for (double v : wf.samples) ms += v * v;
        ms /= static_cast<double>(n);
        CHECK(std::abs(lhs - ms) <= 1e-9 * ms);
    }
}

TEST_CASE("inverse transform round trip") {
    std::mt19937 rng(3);
    const auto wf = random_waveform(rng, 999, 0.01);
    const auto back = inverse_spectrum(fourier_spectrum(wf));
    for (std::size_t k = 0; k < wf.size(); ++k) CHECK(std::abs(back.samples[k] - wf.samples[k]) < 1e-10);
}

TEST_CASE("low-pass filter") {
    const double dt = 0.01;
    SUBCASE("cutoff above Nyquist is the identity") {
        std::mt19937 rng(4);
        const auto wf = random_waveform(rng, 2000, dt);
        const auto out = lowpass_filter(wf, 60.0, kOmegaMax);
        for (std::size_t k = 0; k < wf.size(); ++k) CHECK(std::abs(out.samples[k] - wf.samples[k]) < 1e-12);
    }
    SUBCASE("removes a tone above the cutoff") {
        const auto wf = sinusoid(0.6, 1.0, 0.0, 5000, dt);
        const auto out = lowpass_filter_unclamped(wf, 0.4);
        CHECK(rms(out.samples) < 1e-6 * rms(wf.samples));
    }
    SUBCASE("keeps a tone below the cutoff") {
        const auto wf = sinusoid(0.2, 1.0, -3.0, 5000, dt);
        const auto out = lowpass_filter(wf, 0.4, kOmegaMax);
        for (std::size_t k = 0; k < wf.size(); ++k) CHECK(std::abs(out.samples[k] - wf.samples[k]) < 1e-10);
    }
    SUBCASE("idempotent and linear before clamping") {
        std::mt19937 rng(5);
        const auto a = random_waveform(rng, 3000, dt);
        const auto b = random_waveform(rng, 3000, dt);
        const auto once = lowpass_filter_unclamped(a, 0.4);
        const auto twice = lowpass_filter_unclamped(once, 0.4);
        for (std::size_t k = 0; k < a.size(); ++k) CHECK(std::abs(once.samples[k] - twice.samples[k]) < 1e-12);
        Waveform mix{dt, std::vector<double>(a.size())};
        for (std::size_t k = 0; k < a.size(); ++k) mix.samples[k] = 2.0 * a.samples[k] - 0.5 * b.samples[k];
        const auto fa = lowpass_filter_unclamped(a, 0.4);
        const auto fb = lowpass_filter_unclamped(b, 0.4);
        const auto fm = lowpass_filter_unclamped(mix, 0.4);
        for (std::size_t k = 0; k < a.size(); ++k) {
            CHECK(std::abs(fm.samples[k] - (2.0 * fa.samples[k] - 0.5 * fb.samples[k])) < 1e-11);
        }
    }
    SUBCASE("clamped output is physical") {
        const auto wf = sinusoid(0.6, 1.0, -0.5, 5000, dt);
        Waveform step{dt, std::vector<double>(5000, 0.0)};
        for (std::size_t k = 1000; k < 3000; ++k) step.samples[k] = -20.0;
        for (const auto& w : {wf, step}) {
            const auto out = lowpass_filter(w, 0.4, kOmegaMax);
            CHECK(out.size() == w.size());
            CHECK(out.dt == w.dt);
            for (double v : out.samples) {
                CHECK(v <= 0.0);
                CHECK(v > -kOmegaMax);
            }
        }
    }
    CHECK_THROWS_AS(lowpass_filter(Waveform{dt, {0.0, -1.0}}, 0.0, kOmegaMax), DomainError);
}

TEST_CASE("half-Gaussian truncation") {
    Waveform wf{0.01, std::vector<double>(2000)};
    for (std::size_t k = 0; k < wf.size(); ++k) wf.samples[k] = -2.0 - std::sin(0.003 * static_cast<double>(k));

    SUBCASE("continuity and tail shape") {
        const double tau = 7.0;
        const double sigma = 0.5;
        const auto out = truncate_with_gaussian_tail(wf, tau, sigma);
        CHECK(out.value_at(tau) == wf.value_at(tau));
        for (std::size_t k = 0; k < 700; ++k) CHECK(out.samples[k] == wf.samples[k]);
        const double alpha = wf.value_at(tau);
        for (std::size_t k = 700; k < out.size(); ++k) {
            const double x = (out.time(k) - tau) / sigma;
            CHECK(out.samples[k] == doctest::Approx(alpha * std::exp(-0.5 * x * x)));
        }
        // ends where the tail falls below 1e-6 of alpha
        const double cut = tau + sigma * std::sqrt(2.0 * std::log(1e6));
        CHECK(out.duration() == doctest::Approx(cut).epsilon(0.01 / cut));
        CHECK(std::abs(out.samples.back()) >= 1e-6 * std::abs(alpha));
    }
    SUBCASE("full duration is a no-op") {
        const auto out = truncate_with_gaussian_tail(wf, wf.duration(), 1.0);
        CHECK(out.samples == wf.samples);
    }
    SUBCASE("small sigma ends the pulse at tau") {
        const auto out = truncate_with_gaussian_tail(wf, 5.0, 1e-4);
        CHECK(out.duration() == doctest::Approx(5.01).epsilon(1e-3));
    }
    CHECK_THROWS_AS(truncate_with_gaussian_tail(wf, 0.0, 1.0), DomainError);
    CHECK_THROWS_AS(truncate_with_gaussian_tail(wf, 25.0, 1.0), DomainError);
    CHECK_THROWS_AS(truncate_with_gaussian_tail(wf, 5.0, 0.0), DomainError);
}

TEST_CASE("time reversal") {
    std::mt19937 rng(6);
    const auto wf = random_waveform(rng, 101, 0.01);
    const auto r = time_reverse(wf);
    CHECK(r.samples.front() == wf.samples.back());
    CHECK(time_reverse(r).samples == wf.samples);
    Waveform sym{0.01, {-1.0, -2.0, -3.0, -2.0, -1.0}};
    CHECK(time_reverse(sym).samples == sym.samples);
}

TEST_CASE("analytic pulse") {
    const auto& p = kReferenceShape;
    CHECK_NOTHROW(p.validate(kOmegaMax));
    CHECK(analytic_pulse_value(p, p.tau1) == doctest::Approx(p.alpha1));
    CHECK(analytic_pulse_value(p, p.tau2) == doctest::Approx(0.5 * (p.alpha1 + p.alpha3)));
    // documented branch mismatch bound at tau1
    const double tanh_at_tau1 =
        0.5 * (p.alpha3 + p.alpha1) + 0.5 * (p.alpha3 - p.alpha1) * std::tanh((p.tau1 - p.tau2) / p.sigma2);
    const double bound = std::abs(p.alpha3 - p.alpha1) * (1.0 - std::tanh((p.tau2 - p.tau1) / p.sigma2));
    CHECK(std::abs(tanh_at_tau1 - p.alpha1) <= bound);
    CHECK(std::abs(tanh_at_tau1 - p.alpha1) < 1e-5 * std::abs(p.alpha1));

    const double duration = analytic_pulse_duration(p);
    CHECK(duration == doctest::Approx(p.tau3 + p.sigma3 * std::sqrt(2.0 * std::log(1e6))));
    CHECK(duration < 20.0);
    const auto wf = analytic_pulse(p, 0.01, duration, kOmegaMax);
    CHECK_NOTHROW(check_physical(wf, kOmegaMax));
    CHECK(angular_to_ghz(wf.value_at(7.0)) == doctest::Approx(-2.457).epsilon(1e-3));
    CHECK(angular_to_ghz(wf.value_at(9.5)) == doctest::Approx(-1.591).epsilon(1e-3));
    CHECK(std::abs(wf.samples.front()) < 0.01 * std::abs(p.alpha1));
    CHECK(std::abs(wf.samples.back()) < 1e-5 * std::abs(p.alpha3));

    auto v = p.to_vector();
    CHECK(v.size() == 8);
    const auto q = AnalyticPulseParams::from_vector(v);
    CHECK(q.to_vector() == v);

    AnalyticPulseParams bad = p;
    bad.tau2 = p.tau3 + 1.0;
    CHECK_FALSE(bad.valid(kOmegaMax));
    CHECK_THROWS_AS(bad.validate(kOmegaMax), DomainError);
    bad = p;
    bad.sigma2 = 0.0;
    CHECK_THROWS_AS(analytic_pulse(bad, 0.01, 10.0, kOmegaMax), DomainError);
    bad = p;
    bad.alpha1 = 0.1;
    CHECK_FALSE(bad.valid(kOmegaMax));
}
