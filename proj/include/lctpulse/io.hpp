#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lctpulse/dynamics.hpp"
#include "lctpulse/lct.hpp"
#include "lctpulse/model.hpp"
#include "lctpulse/optimize.hpp"
#include "lctpulse/pulses.hpp"

namespace lctpulse {

// Configuration documents and exports use GHz and ns; everything is converted to
// rad/ns on the way in and back on the way out.

struct LctSection {
    LctConfig config;
    std::optional<std::filesystem::path> reference_pulse_path;
    /// Optional logarithmic gain scan used when the nominal gain misses the goal.
    double scan_factor = 1.0;
    std::size_t scan_steps = 0;
    double goal = 1e-6;
};

struct FilterSection {
    double cutoff_ghz = 0.4;
};

struct TruncationSection {
    double sigma_ns = 2.0;
    TruncationConfig config;
};

struct AnalyticSection {
    AnalyticPulseParams init;
    /// Derive the start point from the crossing positions instead of `init`.
    bool init_from_crossings = false;
    double tau1_ns = 5.5;
    double switch_delay_ns = 2.5;
    double release_delay_ns = 4.2;
    double sigma0_ns = 0.05;
    std::string source = "010";
    std::string destination = "100";
    double amplitude_span_ghz = 0.3;
    double max_time_ns = 30.0;
    double min_sigma_ns = 0.01;
    double max_sigma_ns = 5.0;
    AnalyticFitOptions options;
};

struct RunConfig {
    SystemParams device;
    std::optional<LctSection> lct;
    std::optional<FilterSection> filter;
    std::optional<ReversibilityConfig> reversibility;
    std::optional<TruncationSection> truncation;
    std::optional<AnalyticSection> analytic;
};

/// Parses a configuration document. Device keys may sit at the top level or in a
/// `device` section; `lct_section` names the section holding the feedback run.
/// `default_dt` applies wherever a section leaves `dt_ns` unset.
/// Throws ConfigError with the line number or key path on malformed input.
RunConfig parse_config(const std::string& text, const std::string& lct_section = "lct",
                       double default_dt = 0.01);
RunConfig load_config(const std::filesystem::path& path, const std::string& lct_section = "lct",
                      double default_dt = 0.01);

nlohmann::json analytic_params_to_json(const AnalyticPulseParams& p);
AnalyticPulseParams analytic_params_from_json(const nlohmann::json& j);
nlohmann::json report_to_json(const OptimizationReport& report);

/// `t_ns,delta_omega_ghz`, 12 decimals in GHz.
void write_waveform_csv(const std::filesystem::path& path, const Waveform& wf);
Waveform read_waveform_csv(const std::filesystem::path& path);
/// `t_ns,phi_over_phi0` through the inverse flux-frequency relation.
void write_flux_csv(const std::filesystem::path& path, const Waveform& wf,
                    const SystemParams& params);
/// `f_ghz,power` with power in GHz^2/GHz; a leading comment documents the convention.
void write_spectrum_csv(const std::filesystem::path& path, const PulseSpectrum& spectrum);
/// `t_ns,delta_omega_ghz,pop_<label>...`
void write_trajectory_csv(const std::filesystem::path& path, const TrajectoryRecord& traj);

/// Final populations, 1 - P(target) and the time to 99% transfer.
nlohmann::json trajectory_summary(const TrajectoryRecord& traj, const std::string& target_label);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace lctpulse
