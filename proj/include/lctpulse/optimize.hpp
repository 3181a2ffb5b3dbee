#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lctpulse/lct.hpp"
#include "lctpulse/model.hpp"
#include "lctpulse/pulses.hpp"

namespace lctpulse {

struct Bounds {
    std::vector<double> lower;
    std::vector<double> upper;

    bool contains(const std::vector<double>& x) const;
    std::vector<double> project(const std::vector<double>& x) const;
    double squared_excess(const std::vector<double>& x) const;
};

struct HistoryEntry {
    std::vector<double> params;
    double objective = 0.0;
};

struct OptimizationReport {
    std::vector<double> best_params;
    double best_objective = 0.0;
    double forward_error = 1.0;
    double reverse_error = 1.0;
    std::size_t evaluations = 0;
    std::vector<HistoryEntry> history;  ///< one entry per objective evaluation
    bool converged = false;
    std::string message;
};

using Objective = std::function<double(const std::vector<double>&)>;

struct NelderMeadOptions {
    /// Stop when every vertex lies within xtol (infinity norm) of the best one.
    double xtol = 1e-8;
    /// Scale xtol by max(1, |x_best|) per coordinate.
    bool relative_xtol = false;
    /// Stop when the spread of vertex values is at most ftol.
    double ftol = 0.0;
    std::size_t max_evals = 1000;
    /// Initial simplex edge per coordinate; empty selects 5% of |x0| (2.5e-4 at zero).
    std::vector<double> initial_step;
    /// Stop as soon as the best value reaches this level.
    std::optional<double> target;
    /// Weight of the quadratic bound penalty.
    double penalty = 1e6;
};

/// Simplex search with reflection 1, expansion 2, contraction 1/2 and shrink 1/2.
/// Out-of-bounds points are scored at their projection plus penalty * excess^2,
/// and the returned point is always inside the bounds. Throws NumericalError if
/// the objective is not finite at x0.
OptimizationReport nelder_mead(const Objective& objective, const std::vector<double>& x0,
                               const Bounds& bounds, const NelderMeadOptions& options = {});

/// 1 - P(destination) after propagating the pulse from the source eigenstate.
double transfer_error(const SystemParams& params, const Waveform& pulse,
                      const std::string& source_label, const std::string& destination_label);

/// Logarithmic gain scan for the bare run.
struct LambdaScanResult {
    double lambda = 0.0;
    LctResult run;
    double unseeded_error = 1.0;  ///< pulse re-propagated from the unseeded initial state
    bool found = false;
    std::vector<std::pair<double, double>> tried;  ///< (lambda, seeded final error)
};

/// Tries lambda = base * factor^k for k = 0..max_steps-1 and returns the first
/// run that is monotone to 1e-10 per step and meets the goal both seeded and
/// re-propagated. When none qualifies, found is false and the best run is kept.
LambdaScanResult scan_lambda(const SystemParams& params, const LctConfig& base, double factor,
                             std::size_t max_steps, double goal);

struct ReversibilityConfig {
    double lambda2_init = 500.0;
    double lambda2_low = 100.0;
    double lambda2_high = 1000.0;
    double cutoff_init_ghz = 0.40;
    std::vector<double> cutoff_candidates_ghz{0.40, 0.45, 0.50};
    double fidelity_goal = 1e-6;
    std::size_t max_outer_iters = 3;
    std::size_t max_evals_per_cutoff = 40;
    double simplex_tolerance = 1e-3;  ///< relative, on lambda2
    /// Seed fraction of the refined runs; the reference already moves population.
    double refine_eta = 0.0;

    void validate() const;
};

struct ReversibleResult {
    Waveform pulse;       ///< best total pulse
    Waveform reference;   ///< filtered bare pulse it was built on
    double cutoff_ghz = 0.0;
    double lambda2 = 0.0;
    /// Evaluations whose forward error missed the goal.
    std::size_t forward_violations = 0;
    OptimizationReport report;
};

/// Outer loop over cutoffs, inner Nelder-Mead over lambda2. Each evaluation
/// filters the bare pulse, reruns the feedback pass on top of it and scores the
/// result by its reverse transfer error. `lct` supplies dt, t_max and labels.
/// Throws ConfigError if the bare pulse itself misses the forward goal.
ReversibleResult optimize_reversible(const SystemParams& params, const Waveform& bare_pulse,
                                     const LctConfig& lct, const ReversibilityConfig& cfg);

struct TruncationConfig {
    double fidelity_goal = 1e-6;
    std::size_t max_evals = 60;
    double tolerance = 1e-3;  ///< ns
    std::string initial_label = "100";
    std::string target_label = "010";
};

struct TruncationResult {
    Waveform pulse;
    double tau = 0.0;
    double tau_initial = 0.0;
    OptimizationReport report;
};

/// Time at which the reverse process (target -> initial) first reaches 99%.
double reverse_transfer_time(const SystemParams& params, const Waveform& pulse,
                             const std::string& initial_label, const std::string& target_label,
                             double level = 0.99);

/// max(forward, reverse) error of the pulse truncated at tau.
double truncation_objective(const SystemParams& params, const Waveform& pulse, double tau,
                            double sigma, const TruncationConfig& cfg);

/// Nelder-Mead over tau starting from reverse_transfer_time, stopping at the goal.
TruncationResult optimize_truncation(const SystemParams& params, const Waveform& pulse,
                                     double sigma, const TruncationConfig& cfg);

struct AnalyticFitOptions {
    double dt = 0.01;
    double fidelity_goal = 1e-6;
    std::size_t max_evals_stage1 = 1500;
    std::size_t max_evals_stage2 = 800;
    double xtol = 1e-7;
};

struct AnalyticFitResult {
    AnalyticPulseParams params;
    double stage1_objective = 1.0;
    double stage2_objective = 1.0;
    OptimizationReport report;  ///< combined history of both stages
};

/// 1 - P(destination) for the analytic pulse on its natural duration, or a
/// penalty above 1 for parameters that break the pulse invariants.
double analytic_objective(const SystemParams& params, const AnalyticPulseParams& p,
                          const std::string& source_label, const std::string& destination_label,
                          double dt);

/// Stage 1 moves amplitudes and switching times with the widths frozen at their
/// initial values; stage 2 relaxes the three widths.
AnalyticFitResult fit_analytic_pulse(const SystemParams& params, const AnalyticPulseParams& init,
                                     const Bounds& bounds, const std::string& source_label,
                                     const std::string& destination_label,
                                     const AnalyticFitOptions& options = {});

/// Start point from crossing positions: alpha1 at the lower crossing, alpha3 at
/// the upper one, switching times offset from tau1 by the given transfer times.
AnalyticPulseParams analytic_initial_guess(double upper_crossing, double lower_crossing,
                                           double tau1, double switch_delay,
                                           double release_delay, double sigma0);

/// Box around a start point: amplitudes +-amplitude_span (clipped to the physical
/// range), times in [0, max_time], widths in [min_sigma, max_sigma].
Bounds analytic_bounds(const AnalyticPulseParams& init, double omega_tc_max,
                       double amplitude_span, double max_time, double min_sigma,
                       double max_sigma);

}  // namespace lctpulse
