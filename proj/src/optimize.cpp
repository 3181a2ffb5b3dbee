#include "lctpulse/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "lctpulse/dynamics.hpp"
#include "lctpulse/errors.hpp"

namespace lctpulse {

namespace {

constexpr double kHuge = std::numeric_limits<double>::max();

struct Vertex {
    std::vector<double> x;
    double value = 0.0;  // penalized
};

std::vector<double> axpy(const std::vector<double>& base, double scale,
                         const std::vector<double>& a, const std::vector<double>& b) {
    // base + scale * (a - b)
    std::vector<double> out(base.size());
    for (std::size_t i = 0; i < base.size(); ++i) out[i] = base[i] + scale * (a[i] - b[i]);
    return out;
}

void append_history(OptimizationReport& into, const OptimizationReport& from) {
    into.history.insert(into.history.end(), from.history.begin(), from.history.end());
    into.evaluations += from.evaluations;
}

}  // namespace

bool Bounds::contains(const std::vector<double>& x) const {
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] < lower[i] || x[i] > upper[i]) return false;
    }
    return true;
}

std::vector<double> Bounds::project(const std::vector<double>& x) const {
    std::vector<double> out(x);
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::clamp(x[i], lower[i], upper[i]);
    return out;
}

double Bounds::squared_excess(const std::vector<double>& x) const {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double e = std::max({0.0, lower[i] - x[i], x[i] - upper[i]});
        s += e * e;
    }
    return s;
}

OptimizationReport nelder_mead(const Objective& objective, const std::vector<double>& x0,
                               const Bounds& bounds, const NelderMeadOptions& options) {
    const std::size_t n = x0.size();
    if (n == 0) throw DomainError("nelder_mead needs at least one parameter");
    if (bounds.lower.size() != n || bounds.upper.size() != n) {
        throw DomainError("nelder_mead bounds do not match the parameter count");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!(bounds.lower[i] <= bounds.upper[i])) throw DomainError("nelder_mead bounds unordered");
    }
    if (!bounds.contains(x0)) throw DomainError("nelder_mead start point outside bounds");

    OptimizationReport report;
    report.best_objective = kHuge;
    double best_value = kHuge;
    auto evaluate = [&](const std::vector<double>& x) {
        const auto xp = bounds.project(x);
        double raw = objective(xp);
        ++report.evaluations;
        if (!std::isfinite(raw)) {
            if (report.evaluations == 1) {
                throw NumericalError("nelder_mead: objective is not finite at the start point");
            }
            raw = kHuge;
        }
        report.history.push_back({xp, raw});
        const double excess = bounds.squared_excess(x);
        const double value = excess > 0.0 ? std::min(kHuge, raw + options.penalty * excess) : raw;
        if (value < best_value || report.best_params.empty()) {
            best_value = value;
            report.best_objective = raw;
            report.best_params = xp;
        }
        return value;
    };
    auto reached_target = [&] {
        return options.target && report.best_objective <= *options.target;
    };

    std::vector<Vertex> simplex;
    simplex.push_back({x0, evaluate(x0)});
    if (reached_target()) {
        report.converged = true;
        report.message = "target reached";
        return report;
    }
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> x(x0);
        double step = i < options.initial_step.size()
                          ? options.initial_step[i]
                          : (x0[i] != 0.0 ? 0.05 * std::abs(x0[i]) : 2.5e-4);
        if (x[i] + step > bounds.upper[i] && x[i] - step >= bounds.lower[i]) step = -step;
        x[i] += step;
        simplex.push_back({x, evaluate(x)});
    }

    while (true) {
        std::stable_sort(simplex.begin(), simplex.end(),
                         [](const Vertex& a, const Vertex& b) { return a.value < b.value; });
        if (reached_target()) {
            report.converged = true;
            report.message = "target reached";
            break;
        }
        if (simplex.back().value - simplex.front().value <= options.ftol) {
            report.converged = true;
            report.message = "objective spread below tolerance";
            break;
        }
        double diameter = 0.0;
        for (std::size_t v = 1; v <= n; ++v) {
            for (std::size_t i = 0; i < n; ++i) {
                const double scale =
                    options.relative_xtol ? std::max(1.0, std::abs(simplex[0].x[i])) : 1.0;
                diameter = std::max(diameter, std::abs(simplex[v].x[i] - simplex[0].x[i]) / scale);
            }
        }
        if (diameter <= options.xtol) {
            report.converged = true;
            report.message = "simplex size below tolerance";
            break;
        }
        if (report.evaluations >= options.max_evals) {
            report.message = "evaluation budget exhausted";
            break;
        }

        std::vector<double> centroid(n, 0.0);
        for (std::size_t v = 0; v < n; ++v) {
            for (std::size_t i = 0; i < n; ++i) centroid[i] += simplex[v].x[i] / static_cast<double>(n);
        }
        Vertex& worst = simplex.back();
        const auto xr = axpy(centroid, 1.0, centroid, worst.x);
        const double fr = evaluate(xr);

        if (fr < simplex.front().value) {
            const auto xe = axpy(centroid, 2.0, centroid, worst.x);
            const double fe = evaluate(xe);
            worst = fe < fr ? Vertex{xe, fe} : Vertex{xr, fr};
            continue;
        }
        if (fr < simplex[n - 1].value) {
            worst = {xr, fr};
            continue;
        }
        bool accepted = false;
        if (fr < worst.value) {
            const auto xc = axpy(centroid, 0.5, xr, centroid);
            const double fc = evaluate(xc);
            if (fc <= fr) {
                worst = {xc, fc};
                accepted = true;
            }
        } else {
            const auto xc = axpy(centroid, 0.5, worst.x, centroid);
            const double fc = evaluate(xc);
            if (fc < worst.value) {
                worst = {xc, fc};
                accepted = true;
            }
        }
        if (!accepted) {
            for (std::size_t v = 1; v <= n; ++v) {
                simplex[v].x = axpy(simplex[0].x, 0.5, simplex[v].x, simplex[0].x);
                simplex[v].value = evaluate(simplex[v].x);
            }
        }
    }
    return report;
}

double transfer_error(const SystemParams& params, const Waveform& pulse,
                      const std::string& source_label, const std::string& destination_label) {
    const auto spectrum = eigendecompose(build_drift_hamiltonian(params, 0.0));
    const QuantumState source(spectrum.state(source_label));
    const auto final_state = propagate_final(params, source, pulse);
    const double p = std::norm(spectrum.state(destination_label).dot(final_state.amplitudes()));
    return std::clamp(1.0 - p, 0.0, 1.0);
}

LambdaScanResult scan_lambda(const SystemParams& params, const LctConfig& base, double factor,
                             std::size_t max_steps, double goal) {
    if (!(factor > 1.0) || max_steps == 0) throw ConfigError("lambda scan needs factor > 1");
    LambdaScanResult out;
    double best_score = kHuge;
    for (std::size_t k = 0; k < max_steps; ++k) {
        LctConfig cfg = base;
        cfg.lambda = base.lambda * std::pow(factor, static_cast<double>(k));
        auto run = run_lct(params, cfg);
        out.tried.emplace_back(cfg.lambda, run.final_error);
        const double unseeded =
            transfer_error(params, run.waveform, cfg.initial_label, cfg.target_label);
        const bool monotone = run.min_population_step >= -1e-10;
        const bool pass = monotone && run.final_error < goal && unseeded < goal;
        const double score = std::max(run.final_error, unseeded);
        if (pass || score < best_score) {
            best_score = score;
            out.lambda = cfg.lambda;
            out.unseeded_error = unseeded;
            out.run = std::move(run);
            out.found = pass;
        }
        if (pass) break;
    }
    return out;
}

void ReversibilityConfig::validate() const {
    if (!(lambda2_low < lambda2_high)) throw ConfigError("reversibility: lambda2 bounds unordered");
    if (!(lambda2_init >= lambda2_low && lambda2_init <= lambda2_high)) {
        throw ConfigError("reversibility: lambda2_init outside bounds");
    }
    if (!(fidelity_goal > 0.0 && fidelity_goal <= 1.0)) {
        throw ConfigError("reversibility: fidelity_goal must lie in (0, 1]");
    }
    if (!std::is_sorted(cutoff_candidates_ghz.begin(), cutoff_candidates_ghz.end())) {
        throw ConfigError("reversibility: cutoff candidates must be ascending");
    }
    if (!(cutoff_init_ghz > 0.0)) throw ConfigError("reversibility: cutoff must be positive");
    if (!(refine_eta >= 0.0 && refine_eta < 1.0)) throw ConfigError("reversibility: bad refine_eta");
}

ReversibleResult optimize_reversible(const SystemParams& params, const Waveform& bare_pulse,
                                     const LctConfig& lct, const ReversibilityConfig& cfg) {
    cfg.validate();
    const double goal = cfg.fidelity_goal;
    const double bare_forward =
        transfer_error(params, bare_pulse, lct.initial_label, lct.target_label);
    if (!(bare_forward < goal) && goal < 1.0) {
        throw ConfigError("reversibility: bare pulse misses the forward goal (error " +
                          std::to_string(bare_forward) + ")");
    }

    std::vector<double> cutoffs{cfg.cutoff_init_ghz};
    for (double c : cfg.cutoff_candidates_ghz) {
        if (c > cfg.cutoff_init_ghz) cutoffs.push_back(c);
    }
    if (cutoffs.size() > cfg.max_outer_iters) cutoffs.resize(std::max<std::size_t>(1, cfg.max_outer_iters));

    ReversibleResult out;
    auto& report = out.report;
    double best_score = kHuge;

    for (double cutoff : cutoffs) {
        const Waveform reference = lowpass_filter(bare_pulse, cutoff, params.omega_tc_max);
        auto objective = [&](const std::vector<double>& x) {
            LctConfig run_cfg = lct;
            run_cfg.reference = reference;
            run_cfg.lambda2 = x[0];
            run_cfg.eta = cfg.refine_eta;
            auto run = run_lct(params, run_cfg);
            const double fwd =
                transfer_error(params, run.waveform, lct.initial_label, lct.target_label);
            const double rev =
                transfer_error(params, run.waveform, lct.target_label, lct.initial_label);
            if (!(fwd < goal)) ++out.forward_violations;
            const double score = std::max(fwd, rev);
            if (score < best_score) {
                best_score = score;
                out.pulse = run.waveform;
                out.reference = reference;
                out.cutoff_ghz = cutoff;
                out.lambda2 = x[0];
                report.forward_error = fwd;
                report.reverse_error = rev;
            }
            return rev;
        };
        NelderMeadOptions nm;
        nm.initial_step = {0.1 * cfg.lambda2_init};
        nm.xtol = cfg.simplex_tolerance;
        nm.relative_xtol = true;
        nm.max_evals = cfg.max_evals_per_cutoff;
        nm.target = goal;
        const auto inner = nelder_mead(objective, {cfg.lambda2_init},
                                       Bounds{{cfg.lambda2_low}, {cfg.lambda2_high}}, nm);
        for (const auto& h : inner.history) report.history.push_back({{h.params[0], cutoff}, h.objective});
        report.evaluations += inner.evaluations;
        if (report.forward_error < goal && report.reverse_error < goal) {
            report.converged = true;
            break;
        }
    }
    report.best_params = {out.lambda2, out.cutoff_ghz};
    report.best_objective = report.reverse_error;
    report.message = report.converged ? "both directions meet the goal"
                                      : "no cutoff candidate reached the goal";
    return out;
}

double reverse_transfer_time(const SystemParams& params, const Waveform& pulse,
                             const std::string& initial_label, const std::string& target_label,
                             double level) {
    const auto spectrum = eigendecompose(build_drift_hamiltonian(params, 0.0));
    const std::vector<std::string> tracked{initial_label};
    const auto traj =
        propagate_waveform(params, QuantumState(spectrum.state(target_label)), pulse, tracked);
    const double t = crossing_time(traj.times, traj.populations[0], level);
    return t < 0.0 ? pulse.duration() : t;
}

double truncation_objective(const SystemParams& params, const Waveform& pulse, double tau,
                            double sigma, const TruncationConfig& cfg) {
    const Waveform cut = truncate_with_gaussian_tail(pulse, std::min(tau, pulse.duration()), sigma);
    return std::max(transfer_error(params, cut, cfg.initial_label, cfg.target_label),
                    transfer_error(params, cut, cfg.target_label, cfg.initial_label));
}

TruncationResult optimize_truncation(const SystemParams& params, const Waveform& pulse,
                                     double sigma, const TruncationConfig& cfg) {
    if (!(sigma > 0.0)) throw ConfigError("truncation: sigma must be positive");
    TruncationResult out;
    out.tau_initial = reverse_transfer_time(params, pulse, cfg.initial_label, cfg.target_label);
    const double duration = pulse.duration();

    auto objective = [&](const std::vector<double>& x) {
        return truncation_objective(params, pulse, x[0], sigma, cfg);
    };
    NelderMeadOptions nm;
    nm.initial_step = {std::max(1.0, 0.05 * out.tau_initial)};
    nm.xtol = cfg.tolerance;
    nm.max_evals = cfg.max_evals;
    nm.target = cfg.fidelity_goal;
    const double tau0 = std::clamp(out.tau_initial, pulse.dt, duration);
    out.report = nelder_mead(objective, {tau0}, Bounds{{pulse.dt}, {duration}}, nm);
    out.tau = out.report.best_params[0];
    out.pulse = truncate_with_gaussian_tail(pulse, out.tau, sigma);
    out.report.forward_error = transfer_error(params, out.pulse, cfg.initial_label, cfg.target_label);
    out.report.reverse_error = transfer_error(params, out.pulse, cfg.target_label, cfg.initial_label);
    out.report.converged = out.report.best_objective < cfg.fidelity_goal;
    if (!out.report.converged) out.report.message = "goal unreachable for this sigma";
    return out;
}

double analytic_objective(const SystemParams& params, const AnalyticPulseParams& p,
                          const std::string& source_label, const std::string& destination_label,
                          double dt) {
    if (!p.valid(params.omega_tc_max)) {
        // Graded penalty so the simplex can walk back into the valid region.
        auto pos = [](double v) { return std::max(0.0, v); };
        const double violation = pos(p.tau1 - p.tau2) + pos(p.tau2 - p.tau3) + pos(p.alpha1) +
                                 pos(p.alpha3) + pos(-p.sigma1) + pos(-p.sigma2) + pos(-p.sigma3) +
                                 pos(-params.omega_tc_max - p.alpha1) +
                                 pos(-params.omega_tc_max - p.alpha3);
        return 1.0 + violation * violation;
    }
    const Waveform wf = analytic_pulse(p, dt, analytic_pulse_duration(p), params.omega_tc_max);
    return transfer_error(params, wf, source_label, destination_label);
}

AnalyticFitResult fit_analytic_pulse(const SystemParams& params, const AnalyticPulseParams& init,
                                     const Bounds& bounds, const std::string& source_label,
                                     const std::string& destination_label,
                                     const AnalyticFitOptions& options) {
    if (bounds.lower.size() != 8 || bounds.upper.size() != 8) {
        throw ConfigError("analytic fit needs bounds for all eight parameters");
    }
    init.validate(params.omega_tc_max);

    auto run_stage = [&](const std::vector<double>& full, const std::vector<std::size_t>& free,
                         std::size_t max_evals) {
        std::vector<double> x0;
        Bounds sub;
        for (auto i : free) {
            x0.push_back(std::clamp(full[i], bounds.lower[i], bounds.upper[i]));
            sub.lower.push_back(bounds.lower[i]);
            sub.upper.push_back(bounds.upper[i]);
        }
        auto expand = [&](const std::vector<double>& x) {
            std::vector<double> all(full);
            for (std::size_t k = 0; k < free.size(); ++k) all[free[k]] = x[k];
            return all;
        };
        auto objective = [&](const std::vector<double>& x) {
            return analytic_objective(params, AnalyticPulseParams::from_vector(expand(x)),
                                      source_label, destination_label, options.dt);
        };
        NelderMeadOptions nm;
        nm.xtol = options.xtol;
        nm.max_evals = max_evals;
        nm.target = options.fidelity_goal;
        auto report = nelder_mead(objective, x0, sub, nm);
        for (auto& h : report.history) h.params = expand(h.params);
        report.best_params = expand(report.best_params);
        return report;
    };

    AnalyticFitResult out;
    const auto stage1 = run_stage(init.to_vector(), {0, 1, 2, 3, 4}, options.max_evals_stage1);
    out.stage1_objective = stage1.best_objective;
    const auto stage2 = run_stage(stage1.best_params, {5, 6, 7}, options.max_evals_stage2);
    out.stage2_objective = stage2.best_objective;

    out.report.best_params = stage2.best_params;
    out.report.best_objective = stage2.best_objective;
    append_history(out.report, stage1);
    append_history(out.report, stage2);
    out.params = AnalyticPulseParams::from_vector(stage2.best_params);
    out.report.forward_error = stage2.best_objective;
    const Waveform wf =
        analytic_pulse(out.params, options.dt, analytic_pulse_duration(out.params), params.omega_tc_max);
    out.report.reverse_error =
        transfer_error(params, time_reverse(wf), destination_label, source_label);
    out.report.converged = stage2.best_objective < options.fidelity_goal;
    out.report.message = out.report.converged ? "goal reached" : "goal not reached";
    return out;
}

AnalyticPulseParams analytic_initial_guess(double upper_crossing, double lower_crossing,
                                           double tau1, double switch_delay,
                                           double release_delay, double sigma0) {
    AnalyticPulseParams p;
    p.alpha1 = lower_crossing;
    p.alpha3 = upper_crossing;
    p.tau1 = tau1;
    p.tau2 = tau1 + switch_delay;
    p.tau3 = tau1 + release_delay;
    p.sigma1 = p.sigma2 = p.sigma3 = sigma0;
    return p;
}

Bounds analytic_bounds(const AnalyticPulseParams& init, double omega_tc_max,
                       double amplitude_span, double max_time, double min_sigma,
                       double max_sigma) {
    const double floor = clamp_floor(omega_tc_max);
    auto amp_lo = [&](double a) { return std::max(floor, a - amplitude_span); };
    auto amp_hi = [&](double a) { return std::min(-1e-6, a + amplitude_span); };
    return Bounds{
        {amp_lo(init.alpha1), amp_lo(init.alpha3), 0.0, 0.0, 0.0, min_sigma, min_sigma, min_sigma},
        {amp_hi(init.alpha1), amp_hi(init.alpha3), max_time, max_time, max_time, max_sigma,
         max_sigma, max_sigma}};
}

}  // namespace lctpulse
