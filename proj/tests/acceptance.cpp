// End-to-end checks on the reference device. Prints one PASS/FAIL line per
// criterion; exits nonzero on failure only with --strict.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "lctpulse/io.hpp"
#include "lctpulse/lct.hpp"
#include "lctpulse/optimize.hpp"
#include "lctpulse/units.hpp"

using namespace lctpulse;
namespace fs = std::filesystem;

namespace {

struct Verdict {
    int id;
    bool pass;
    std::string detail;
};

std::vector<Verdict> verdicts;

void report(int id, bool pass, const std::string& detail) {
    verdicts.push_back({id, pass, detail});
    std::printf("criterion %2d: %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double timed(const std::function<void()>& f) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    return seconds_since(t0);
}

QuantumState eigenstate(const SystemParams& p, const std::string& label) {
    return QuantumState(eigendecompose(build_drift_hamiltonian(p, 0.0)).state(label));
}

// Time between 1% and 99% of the target population.
double active_duration(const TrajectoryRecord& traj, const std::string& label) {
    const auto& pop = traj.population(label);
    const double t01 = crossing_time(traj.times, pop, 0.01);
    const double t99 = crossing_time(traj.times, pop, 0.99);
    return (t01 < 0.0 || t99 < 0.0) ? INFINITY : t99 - t01;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
    const bool strict = argc > 1 && std::strcmp(argv[1], "--strict") == 0;
    const auto p = reference_device();
    const auto drift = eigendecompose(build_drift_hamiltonian(p, 0.0));
    const double band_lo = ghz_to_angular(-3.0);

    // 1: avoided crossings
    {
        std::vector<AvoidedCrossing> xs;
        const double s = timed([&] { xs = find_avoided_crossings(p, band_lo, 0.0, 601); });
        bool ok = xs.size() == 2 && s < 1.0;
        std::string d = fmt("%zu crossings in %.3f s:", xs.size(), s);
        const double expected[] = {-1.56, -2.40};
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const double at = angular_to_ghz(xs[i].delta_omega);
            d += fmt(" %.4f GHz (gap %.4f)", at, angular_to_ghz(xs[i].gap));
            if (i < 2) ok = ok && std::abs(at - expected[i]) <= 0.02;
        }
        report(1, ok, d + "; expected -1.56 and -2.40 +- 0.02");
    }

    // 2: bare run with a logarithmic gain scan
    LctConfig base;
    LambdaScanResult scan;
    const double scan_s = timed([&] { scan = scan_lambda(p, base, std::pow(2.0, 0.25), 12, 1e-6); });
    const LctResult& bare = scan.run;
    base.lambda = scan.lambda;
    {
        std::string tried;
        for (const auto& [lam, err] : scan.tried) tried += fmt(" %.0f:%.2e", lam, err);
        const double per_run = scan_s / static_cast<double>(scan.tried.size());
        const bool ok = scan.found && bare.min_population_step >= -1e-10 && bare.final_error < 1e-6 &&
                        per_run < 60.0;
        report(2, ok,
               fmt("lambda %.1f, final error %.3e (unseeded %.3e), min step %.2e, %.2f s per run; tried",
                   scan.lambda, bare.final_error, scan.unseeded_error, bare.min_population_step, per_run) +
                   tried);
    }

    // 3: dominant spectral line of the bare pulse
    {
        const auto spectrum = fourier_spectrum(bare.waveform);
        const double line = dominant_line(spectrum, 0.1);
        const double bin = spectrum.bin_width_ghz();
        report(3, std::abs(line - 0.859) <= bin,
               fmt("dominant line %.4f GHz, expected 0.859 +- %.4f", line, bin));
    }

    // 4: filter and refine
    const double cutoff = 0.4;
    const auto reference = lowpass_filter(bare.waveform, cutoff, p.omega_tc_max);
    {
        const double ref_error = transfer_error(p, reference, "100", "010");
        bool ok = 1.0 - ref_error < 0.9;
        std::string d = fmt("(a) reference alone P(010) = %.4f;", 1.0 - ref_error);
        for (double lambda2 : {100.0, 300.0, 1000.0}) {
            LctConfig cfg = base;
            cfg.reference = reference;
            cfg.lambda2 = lambda2;
            cfg.eta = 0.0;
            const auto r = run_lct(p, cfg);
            const double active = active_duration(r.trajectory, "010");
            ok = ok && r.final_error < 1e-6 && active <= 50.0;
            d += fmt(" (b) lambda2 %.0f: error %.2e, active %.1f ns;", lambda2, r.final_error, active);
        }
        const auto ref_spectrum = fourier_spectrum(reference);
        double peak = 0.0;
        double above = 0.0;
        for (std::size_t k = 0; k < ref_spectrum.amplitudes.size(); ++k) {
            const double a = std::abs(ref_spectrum.amplitudes[k]);
            peak = std::max(peak, a);
            if (ref_spectrum.freqs_ghz[k] > cutoff) above = std::max(above, a);
        }
        ok = ok && above <= 1e-3 * peak;
        report(4, ok, d + fmt(" (c) largest component above cutoff %.2e of peak", above / peak));
    }

    // 7 first: its pulse feeds 5 and 8
    ReversibilityConfig rcfg;
    rcfg.cutoff_init_ghz = 0.40;
    rcfg.cutoff_candidates_ghz = {0.40, 0.45, 0.50};
    ReversibleResult rev;
    const double rev_s = timed([&] { rev = optimize_reversible(p, bare.waveform, base, rcfg); });
    const double rev_fwd = transfer_error(p, rev.pulse, "100", "010");
    const double rev_back = transfer_error(p, rev.pulse, "010", "100");

    // 5: spectral truncation of the refined pulse without re-optimization
    {
        bool ok = true;
        std::string d;
        for (auto [f, expected] : {std::pair{1.0, 1e-4}, std::pair{1.5, 1e-5}}) {
            const double raw = transfer_error(p, lowpass_filter_unclamped(rev.pulse, f), "100", "010");
            const double clamped =
                transfer_error(p, lowpass_filter(rev.pulse, f, p.omega_tc_max), "100", "010");
            auto within = [&](double e) { return e >= expected / 10.0 && e <= expected * 10.0; };
            ok = ok && within(raw) && within(clamped);
            d += fmt("%.1f GHz: %.2e unclamped, %.2e clamped (expected ~%.0e); ", f, raw, clamped, expected);
        }
        report(5, ok, d + fmt("untruncated %.2e", rev_fwd));
    }

    // 6: the bare pulse traps population in the coupler when run backwards in state
    {
        const auto traj = propagate_waveform(p, eigenstate(p, "010"), bare.waveform);
        const double tc = traj.population("001").back();
        const double prod_tc = std::norm(traj.final_state.amplitudes()(1));
        report(6, tc > 0.1,
               fmt("coupler population %.3f (bare-basis %.3f); expected 0.29 +- 0.10, binding > 0.1%s", tc,
                   prod_tc, std::abs(tc - 0.29) <= 0.10 ? "" : ", outside the nominal band"));
    }

    // 7: reversibility loop
    {
        const bool ok = rev_fwd < 1e-6 && rev_back < 1e-6 && rev.forward_violations == 0 && rev_s < 1800.0;
        report(7, ok,
               fmt("cutoff %.2f GHz, lambda2 %.3f: forward %.2e, reverse %.2e, %zu evaluations, "
                   "%zu forward violations, %.0f s",
                   rev.cutoff_ghz, rev.lambda2, rev_fwd, rev_back, rev.report.evaluations,
                   rev.forward_violations, rev_s));
    }

    // 8: half-Gaussian truncation
    {
        TruncationConfig tcfg;
        const auto res = optimize_truncation(p, rev.pulse, 2.0, tcfg);
        const double fwd = transfer_error(p, res.pulse, "100", "010");
        const double back = transfer_error(p, res.pulse, "010", "100");
        const bool ok = fwd < 1e-6 && back < 1e-6 && res.pulse.duration() < rev.pulse.duration();
        report(8, ok,
               fmt("tau %.2f ns (start %.2f), duration %.2f -> %.2f ns, forward %.2e, reverse %.2e", res.tau,
                   res.tau_initial, rev.pulse.duration(), res.pulse.duration(), fwd, back));
    }

    // 9: analytic pulse
    {
        AnalyticPulseParams a;
        a.alpha1 = ghz_to_angular(-2.457);
        a.alpha3 = ghz_to_angular(-1.591);
        a.tau1 = 5.8;
        a.tau2 = 8.3;
        a.tau3 = 10.0;
        a.sigma1 = 1.83;
        a.sigma2 = 0.2;
        a.sigma3 = 1.37;
        const double dt = 0.01;
        const double printed = analytic_objective(p, a, "010", "100", dt);
        const AnalyticSection defaults;
        const auto bounds = analytic_bounds(a, p.omega_tc_max, ghz_to_angular(defaults.amplitude_span_ghz),
                                            defaults.max_time_ns, defaults.min_sigma_ns,
                                            defaults.max_sigma_ns);
        const auto fit = fit_analytic_pulse(p, a, bounds, "010", "100");
        const double duration = analytic_pulse_duration(fit.params);
        const auto wf = analytic_pulse(fit.params, dt, duration, p.omega_tc_max);
        const double back = transfer_error(p, wf, "010", "100");
        const double fwd = transfer_error(p, time_reverse(wf), "100", "010");
        const bool ok = printed < 1e-3 && back < 1e-6 && fwd < 1e-6 && duration < 20.0;
        report(9, ok,
               fmt("printed parameters %.2e; fitted %.2e, reversed %.2e, duration %.2f ns, %zu evaluations",
                   printed, back, fwd, duration, fit.report.evaluations));
    }

    // 10: property suite
    {
        std::string d;
        bool ok = true;
        auto check = [&](const char* name, bool pass, double value) {
            ok = ok && pass;
            d += fmt("%s %.1e%s; ", name, value, pass ? "" : " (fail)");
        };

        const auto final_state = propagate_final(p, eigenstate(p, "100"), bare.waveform);
        check("norm", std::abs(final_state.norm() - 1.0) <= 1e-10, std::abs(final_state.norm() - 1.0));

        double hf = 0.0;
        const double h = 1e-5;
        for (double dw_ghz : {-0.8, -1.4, -1.9, -2.3, -2.7}) {
            const double dw = ghz_to_angular(dw_ghz);
            const auto s0 = eigendecompose(build_drift_hamiltonian(p, dw));
            const auto sp = eigendecompose(build_drift_hamiltonian(p, dw + h));
            const auto sm = eigendecompose(build_drift_hamiltonian(p, dw - h));
            const auto sector = single_excitation_indices(s0);
            for (auto j : sector) {
                for (auto k : sector) {
                    if (j == k) continue;
                    const auto J = static_cast<Eigen::Index>(j);
                    const auto K = static_cast<Eigen::Index>(k);
                    const double fd = (sp.eigenvectors.col(J).dot(s0.eigenvectors.col(K)).real() -
                                       sm.eigenvectors.col(J).dot(s0.eigenvectors.col(K)).real()) /
                                      (2 * h);
                    const double ana = nonadiabatic_coupling(p, j, k, dw);
                    hf = std::max(hf, std::abs(ana - fd) / std::abs(ana));
                }
            }
        }
        check("coupling", hf <= 1e-4, hf);

        {
            // Both feedback forms evaluated on the states of the bare run, sample by sample.
            const std::size_t j = drift.index_of("010");
            auto prop = Propagator::drift_eigenbasis(p, drift);
            Eigen::VectorXcd c = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(p.dim()));
            c(static_cast<Eigen::Index>(j)) = std::sqrt(base.eta);
            c(static_cast<Eigen::Index>(drift.index_of("100"))) = std::sqrt(1.0 - base.eta);
            double worst = 0.0;
            for (double v : bare.waveform.samples) {
                prop.step(c, v, base.dt);
                const Eigen::VectorXcd psi = drift.eigenvectors * c;
                // per unit gain; the gain only scales the rounding of both forms
                worst = std::max(worst, std::abs(feedback_raw(psi, drift, j, 1.0, p.dim()) -
                                                 feedback_commutator(psi, drift, j, 1.0)));
            }
            check("projection", worst <= 1e-12, worst);

            // Closed loop the two forms round differently and the feedback amplifies it.
            LctConfig projected = base;
            projected.n_prime = p.dim();
            const auto rb = run_lct(p, projected);
            double loop = 0.0;
            for (std::size_t k = 0; k < bare.waveform.size(); ++k) {
                loop = std::max(loop, std::abs(bare.waveform.samples[k] - rb.waveform.samples[k]));
            }
            d += fmt("closed-loop drift %.1e (info); ", loop);
        }

        {
            const auto rabi = SystemParams::from_ghz({5.890, 5.031}, {0.1, 0.0}, 7.445);
            const double dw = rabi.omega[0] - rabi.omega_tc_max;
            auto prop = Propagator::product_basis(rabi);
            Eigen::VectorXcd psi = QuantumState::basis(8, 4).amplitudes();
            double err = 0.0;
            for (std::size_t k = 0; k < 1000; ++k) {
                prop.step(psi, dw, 0.01);
                const double t = 0.01 * static_cast<double>(k + 1);
                err = std::max(err, std::abs(std::norm(psi(1)) - std::pow(std::sin(rabi.g[0] * t), 2)));
            }
            check("rabi", err <= 1e-6, err);
        }

        {
            std::mt19937 rng(1);
            std::normal_distribution<double> n;
            Waveform x{0.01, std::vector<double>(2048)};
            Waveform y = x;
            for (auto& v : x.samples) v = n(rng);
            for (auto& v : y.samples) v = n(rng);
            const auto fx = lowpass_filter_unclamped(x, 5.0);
            const auto ffx = lowpass_filter_unclamped(fx, 5.0);
            Waveform mix = x;
            for (std::size_t k = 0; k < mix.size(); ++k) mix.samples[k] = 2.0 * x.samples[k] - 0.5 * y.samples[k];
            const auto fmix = lowpass_filter_unclamped(mix, 5.0);
            const auto fy = lowpass_filter_unclamped(y, 5.0);
            double idem = 0.0;
            double lin = 0.0;
            for (std::size_t k = 0; k < x.size(); ++k) {
                idem = std::max(idem, std::abs(ffx.samples[k] - fx.samples[k]));
                lin = std::max(lin, std::abs(fmix.samples[k] - (2.0 * fx.samples[k] - 0.5 * fy.samples[k])));
            }
            check("idempotence", idem <= 1e-12, idem);
            check("linearity", lin <= 1e-12, lin);

            const auto s = fourier_spectrum(x);
            double time_ms = 0.0;
            for (double v : x.samples) time_ms += v * v;
            time_ms /= static_cast<double>(x.size());
            double freq_ms = 0.0;
            for (double v : s.power) freq_ms += v * s.bin_width_ghz();
            const double parseval = std::abs(freq_ms - time_ms) / time_ms;
            check("parseval", parseval <= 1e-9, parseval);
        }

        {
            // Two independent passes of bare run, filter and refinement must write identical files.
            const auto root = fs::temp_directory_path() / "lctpulse_acceptance";
            std::vector<std::string> contents;
            for (int pass = 0; pass < 2; ++pass) {
                const auto dir = root / std::to_string(pass);
                fs::create_directories(dir);
                const auto run = run_lct(p, base);
                const auto ref = lowpass_filter(run.waveform, 0.45, p.omega_tc_max);
                LctConfig cfg = base;
                cfg.reference = ref;
                cfg.lambda2 = 437.4;
                cfg.eta = 0.0;
                const auto refined = run_lct(p, cfg);
                write_waveform_csv(dir / "bare.csv", run.waveform);
                write_spectrum_csv(dir / "spectrum.csv", fourier_spectrum(run.waveform));
                write_trajectory_csv(dir / "refined.csv", refined.trajectory);
                contents.push_back(slurp(dir / "bare.csv") + slurp(dir / "spectrum.csv") +
                                   slurp(dir / "refined.csv"));
            }
            fs::remove_all(root);
            check("determinism", contents[0] == contents[1], contents[0] == contents[1] ? 0.0 : 1.0);
        }
        report(10, ok, d);
    }

    std::size_t passed = 0;
    for (const auto& v : verdicts) passed += v.pass ? 1 : 0;
    std::printf("%zu of %zu criteria passed\n", passed, verdicts.size());
    return strict && passed != verdicts.size() ? 1 : 0;
}
