// Command-line front end: spectrum sweeps, feedback runs and the refinement pipeline.

#include <openssl/evp.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lctpulse/errors.hpp"
#include "lctpulse/io.hpp"
#include "lctpulse/lct.hpp"
#include "lctpulse/model.hpp"
#include "lctpulse/optimize.hpp"
#include "lctpulse/pulses.hpp"
#include "lctpulse/units.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace lctpulse;

namespace {

enum ExitCode { kOk = 0, kConfig = 1, kConvergence = 2, kNumerical = 3 };

struct Common {
    std::string config;
    std::string out_dir = ".";
    std::string seed_section = "lct";
};

struct StageFailure : std::runtime_error {
    StageFailure(const std::string& stage, json report)
        : std::runtime_error("stage '" + stage + "' did not reach its goal"),
          report(std::move(report)) {}
    json report;
};

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config '" + path.string() + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string sha256_hex(const std::string& data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw NumericalError("sha256 failed");
    }
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) {
        os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
    }
    return os.str();
}

double default_dt() {
    if (const char* env = std::getenv("PULSE_DT_NS")) {
        char* end = nullptr;
        const double v = std::strtod(env, &end);
        if (end == env || *end != '\0' || !(v > 0.0)) {
            throw ConfigError("PULSE_DT_NS must be a positive number");
        }
        return v;
    }
    return 0.01;
}

// Collects written files and emits the manifest at the end of a command.
class Run {
public:
    Run(const Common& common, std::string command)
        : common_(common), command_(std::move(command)), start_(std::chrono::steady_clock::now()) {
        text_ = read_file(common.config);
        config_ = parse_config(text_, common.seed_section, default_dt());
        fs::create_directories(common.out_dir);
    }

    const RunConfig& config() const { return config_; }
    const SystemParams& device() const { return config_.device; }

    fs::path path(const std::string& name) {
        outputs_.push_back(name);
        return fs::path(common_.out_dir) / name;
    }

    void waveform(const std::string& stem, const Waveform& wf) {
        write_waveform_csv(path(stem + "_waveform.csv"), wf);
        write_flux_csv(path(stem + "_flux.csv"), wf, device());
        write_spectrum_csv(path(stem + "_spectrum.csv"), fourier_spectrum(wf));
    }

    void json_file(const std::string& name, const json& j) { write_json(path(name), j); }

    void finish() { write_manifest("completed"); }

    // A command that throws still leaves a manifest of what it wrote.
    ~Run() {
        if (finished_) return;
        try {
            write_manifest("failed");
        } catch (...) {
        }
    }

private:
    void write_manifest(const std::string& status) {
        finished_ = true;
        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        json manifest{{"config_hash", sha256_hex(text_)},
                      {"command", command_},
                      {"status", status},
                      {"outputs", outputs_},
                      {"wall_time", wall}};
        write_json(fs::path(common_.out_dir) / "manifest.json", manifest);
    }

    Common common_;
    std::string command_;
    std::chrono::steady_clock::time_point start_;
    std::string text_;
    RunConfig config_;
    std::vector<std::string> outputs_;
    bool finished_ = false;
};

std::string command_line(int argc, char** argv) {
    std::string out;
    for (int i = 1; i < argc; ++i) {
        if (i > 1) out += ' ';
        out += argv[i];
    }
    return out;
}

const LctSection& require_lct(const Run& run, const std::string& name) {
    if (!run.config().lct) throw ConfigError("config has no '" + name + "' section");
    return *run.config().lct;
}

double onset_time(const Waveform& wf, double omega_tc_max) {
    const double threshold = 1e-3 * omega_tc_max;
    for (std::size_t k = 0; k < wf.size(); ++k) {
        if (std::abs(wf.samples[k]) > threshold) return wf.time(k);
    }
    return -1.0;
}

// Spectral lines below this belong to the slow envelope of the pulse.
constexpr double kEnvelopeCutoffGhz = 0.1;

json run_summary(const LctResult& res, const SystemParams& device, const LctConfig& cfg) {
    json s = trajectory_summary(res.trajectory, cfg.target_label);
    const double t_on = onset_time(res.waveform, device.omega_tc_max);
    s["final_error"] = res.final_error;
    s["t_on_ns"] = t_on < 0.0 ? json(nullptr) : json(t_on);
    s["lambda"] = cfg.reference ? *cfg.lambda2 : cfg.lambda;
    s["eta"] = cfg.eta;
    s["min_population_step"] = res.min_population_step;
    s["guarded_steps"] = res.guarded_steps;
    s["floor_clamped_steps"] = res.floor_clamped_steps;
    s["dominant_line_ghz"] = dominant_line(fourier_spectrum(res.waveform), kEnvelopeCutoffGhz);
    json warnings = json::array();
    if (res.saturation_warning) {
        warnings.push_back("more than half of the steps sat on the lower detuning clamp");
    }
    s["warnings"] = warnings;
    return s;
}

void write_run(Run& run, const std::string& stem, const LctResult& res, const LctConfig& cfg) {
    run.waveform(stem, res.waveform);
    write_trajectory_csv(run.path(stem + "_trajectory.csv"), res.trajectory);
    run.json_file(stem + "_summary.json", run_summary(res, run.device(), cfg));
}

LctConfig with_reference(const Run& run, const LctSection& section) {
    LctConfig cfg = section.config;
    if (section.reference_pulse_path) cfg.reference = read_waveform_csv(*section.reference_pulse_path);
    return cfg;
}

// Bare run, with the optional gain scan.
LctResult bare_stage(Run& run, const LctSection& section, LctConfig& cfg) {
    if (section.scan_steps > 0) {
        auto scan = scan_lambda(run.device(), cfg, section.scan_factor, section.scan_steps, section.goal);
        json tried = json::array();
        for (const auto& [lam, err] : scan.tried) tried.push_back({{"lambda", lam}, {"final_error", err}});
        run.json_file("lambda_scan.json", {{"found", scan.found},
                                           {"lambda", scan.lambda},
                                           {"unseeded_error", scan.unseeded_error},
                                           {"tried", tried}});
        cfg.lambda = scan.lambda;
        if (!scan.found) throw StageFailure("lct", {{"tried", tried}});
        return scan.run;
    }
    return run_lct(run.device(), cfg);
}

void cmd_spectrum(const Common& common, const std::string& cmd, std::vector<double> range,
                  std::size_t steps) {
    Run run(common, cmd);
    const auto& p = run.device();
    if (range.size() != 2 || !(range[1] >= range[0])) throw ConfigError("--range needs LO <= HI");
    if (steps == 0) throw ConfigError("--steps must be positive");
    const double lo = ghz_to_angular(range[0]);
    const double hi = ghz_to_angular(range[1]);

    std::ofstream levels(run.path("eigenvalues.csv"));
    std::ofstream couplings(run.path("couplings.csv"));
    levels << std::setprecision(12);
    couplings << std::setprecision(12);
    levels << "delta_omega_ghz";
    for (std::size_t i = 1; i <= p.dim(); ++i) levels << ",E_" << i << "_ghz";
    levels << '\n';

    // Single-excitation states numbered from the top of the manifold down.
    const std::size_t manifold = p.num_sites();
    couplings << "delta_omega_ghz";
    for (std::size_t i = 1; i <= manifold; ++i) {
        for (std::size_t j = i + 1; j <= manifold; ++j) couplings << ",d_" << i << j;
    }
    couplings << '\n';

    for (std::size_t s = 0; s < steps; ++s) {
        const double dw =
            steps == 1 ? lo : lo + (hi - lo) * static_cast<double>(s) / static_cast<double>(steps - 1);
        const auto spectrum = eigendecompose(build_drift_hamiltonian(p, dw));
        levels << angular_to_ghz(dw);
        for (Eigen::Index k = 0; k < spectrum.eigenvalues.size(); ++k) {
            levels << ',' << angular_to_ghz(spectrum.eigenvalues(k));
        }
        levels << '\n';

        auto sector = single_excitation_indices(spectrum);
        std::reverse(sector.begin(), sector.end());
        couplings << angular_to_ghz(dw);
        for (std::size_t i = 0; i < sector.size(); ++i) {
            for (std::size_t j = i + 1; j < sector.size(); ++j) {
                // per GHz of detuning; undefined where the pair is degenerate
                double d = std::numeric_limits<double>::quiet_NaN();
                try {
                    d = kTwoPi * nonadiabatic_coupling(p, sector[i], sector[j], dw);
                } catch (const NumericalError&) {
                }
                couplings << ',' << d;
            }
        }
        couplings << '\n';
    }
    levels.close();
    couplings.close();

    if (steps > 1) {
        json list = json::array();
        for (const auto& c : find_avoided_crossings(p, lo, hi, std::max<std::size_t>(steps, 3))) {
            list.push_back({{"delta_omega_ghz", angular_to_ghz(c.delta_omega)},
                            {"gap_ghz", angular_to_ghz(c.gap)},
                            {"lower_level", c.lower_level}});
        }
        run.json_file("crossings.json", {{"crossings", list}});
    }
    run.finish();
}

void cmd_lct(const Common& common, const std::string& cmd) {
    Run run(common, cmd);
    const auto& section = require_lct(run, common.seed_section);
    LctConfig cfg = with_reference(run, section);
    const auto res = cfg.reference ? run_lct(run.device(), cfg) : bare_stage(run, section, cfg);
    write_run(run, "lct", res, cfg);
    run.finish();
}

void cmd_filter(const Common& common, const std::string& cmd, const std::string& pulse,
                std::optional<double> cutoff) {
    Run run(common, cmd);
    const double c = cutoff.value_or(run.config().filter ? run.config().filter->cutoff_ghz : 0.4);
    const auto wf = read_waveform_csv(pulse);
    run.waveform("filtered", lowpass_filter(wf, c, run.device().omega_tc_max));
    run.finish();
}

ReversibleResult reversible_stage(Run& run, const Waveform& bare, const LctConfig& lct) {
    const auto cfg = run.config().reversibility.value_or(ReversibilityConfig{});
    auto res = optimize_reversible(run.device(), bare, lct, cfg);
    json report = report_to_json(res.report);
    report["cutoff_ghz"] = res.cutoff_ghz;
    report["lambda2"] = res.lambda2;
    report["forward_violations"] = res.forward_violations;
    run.waveform("reversible", res.pulse);
    write_waveform_csv(run.path("reversible_reference.csv"), res.reference);
    run.json_file("reversibility_report.json", report);
    if (!res.report.converged) throw StageFailure("reversibility", report);
    return res;
}

TruncationResult truncation_stage(Run& run, const Waveform& pulse, const LctConfig& lct) {
    auto section = run.config().truncation.value_or(TruncationSection{});
    section.config.initial_label = lct.initial_label;
    section.config.target_label = lct.target_label;
    auto res = optimize_truncation(run.device(), pulse, section.sigma_ns, section.config);
    json report = report_to_json(res.report);
    report["tau_ns"] = res.tau;
    report["tau_initial_ns"] = res.tau_initial;
    report["sigma_ns"] = section.sigma_ns;
    report["duration_ns"] = res.pulse.duration();
    report["original_duration_ns"] = pulse.duration();
    run.waveform("truncated", res.pulse);
    run.json_file("truncation_report.json", report);
    if (!res.report.converged) throw StageFailure("truncation", report);
    return res;
}

void analytic_stage(Run& run) {
    if (!run.config().analytic) throw ConfigError("config has no 'analytic' section");
    const auto& a = *run.config().analytic;
    const auto& p = run.device();
    AnalyticPulseParams init = a.init;
    if (a.init_from_crossings) {
        const auto crossings = find_avoided_crossings(p, ghz_to_angular(-3.0), 0.0, 601);
        if (crossings.size() < 2) throw NumericalError("analytic: fewer than two crossings found");
        init = analytic_initial_guess(crossings[0].delta_omega, crossings[1].delta_omega, a.tau1_ns,
                                      a.switch_delay_ns, a.release_delay_ns, a.sigma0_ns);
    }
    const Bounds bounds = analytic_bounds(init, p.omega_tc_max, ghz_to_angular(a.amplitude_span_ghz),
                                          a.max_time_ns, a.min_sigma_ns, a.max_sigma_ns);
    const auto fit = fit_analytic_pulse(p, init, bounds, a.source, a.destination, a.options);
    const double duration = analytic_pulse_duration(fit.params);
    const auto wf = analytic_pulse(fit.params, a.options.dt, duration, p.omega_tc_max);
    json report = report_to_json(fit.report);
    report["stage1_objective"] = fit.stage1_objective;
    report["stage2_objective"] = fit.stage2_objective;
    report["duration_ns"] = duration;
    report["init"] = analytic_params_to_json(init);
    run.json_file("analytic_params.json", analytic_params_to_json(fit.params));
    run.json_file("analytic_report.json", report);
    run.waveform("analytic", wf);
    write_waveform_csv(run.path("analytic_reversed_waveform.csv"), time_reverse(wf));
    if (!(fit.stage2_objective < a.options.fidelity_goal)) throw StageFailure("analytic", report);
}

void cmd_optimize(const Common& common, const std::string& cmd, const std::string& pulse) {
    Run run(common, cmd);
    const auto& section = require_lct(run, common.seed_section);
    reversible_stage(run, read_waveform_csv(pulse), section.config);
    run.finish();
}

void cmd_truncate(const Common& common, const std::string& cmd, const std::string& pulse) {
    Run run(common, cmd);
    const LctConfig lct = run.config().lct ? run.config().lct->config : LctConfig{};
    truncation_stage(run, read_waveform_csv(pulse), lct);
    run.finish();
}

void cmd_analytic(const Common& common, const std::string& cmd) {
    Run run(common, cmd);
    analytic_stage(run);
    run.finish();
}

void cmd_pipeline(const Common& common, const std::string& cmd) {
    Run run(common, cmd);
    const auto& section = require_lct(run, common.seed_section);
    LctConfig cfg = section.config;
    const auto bare = bare_stage(run, section, cfg);
    write_run(run, "bare", bare, cfg);
    if (run.config().filter) {
        run.waveform("filtered",
                     lowpass_filter(bare.waveform, run.config().filter->cutoff_ghz, run.device().omega_tc_max));
    }
    Waveform pulse = bare.waveform;
    if (run.config().reversibility) pulse = reversible_stage(run, bare.waveform, cfg).pulse;
    if (run.config().truncation) truncation_stage(run, pulse, cfg);
    if (run.config().analytic) analytic_stage(run);
    run.finish();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Local-control pulse design for a tunable-coupler two-qubit device"};
    app.require_subcommand(1);
    Common common;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", common.config, "JSON configuration document")->required();
        sub->add_option("--out-dir", common.out_dir, "Output directory");
        sub->add_option("--seed-section", common.seed_section, "Config section holding the feedback run");
    };

    auto* spectrum = app.add_subcommand("spectrum", "Eigenvalue and nonadiabatic-coupling sweep");
    std::vector<double> range{-3.0, 0.0};
    std::size_t steps = 601;
    add_common(spectrum);
    spectrum->add_option("--range", range, "Detuning range in GHz")->expected(2);
    spectrum->add_option("--steps", steps, "Grid points");

    auto* lct = app.add_subcommand("lct", "Single feedback run");
    add_common(lct);

    std::string pulse;
    std::optional<double> cutoff;
    auto* filter = app.add_subcommand("filter", "Low-pass filter a waveform");
    add_common(filter);
    filter->add_option("--pulse", pulse, "Waveform CSV")->required();
    filter->add_option("--cutoff", cutoff, "Cutoff in GHz");

    auto* optimize = app.add_subcommand("optimize", "Reversibility loop on a bare pulse");
    add_common(optimize);
    optimize->add_option("--pulse", pulse, "Bare waveform CSV")->required();

    auto* truncate = app.add_subcommand("truncate", "Half-Gaussian truncation of a pulse");
    add_common(truncate);
    truncate->add_option("--pulse", pulse, "Waveform CSV")->required();

    auto* analytic = app.add_subcommand("analytic", "Fit the analytic three-segment pulse");
    add_common(analytic);

    auto* pipeline = app.add_subcommand("pipeline", "Bare run, filter, reversibility, truncation, fit");
    add_common(pipeline);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfig;
    }

    const std::string cmd = command_line(argc, argv);
    try {
        if (*spectrum) cmd_spectrum(common, cmd, range, steps);
        if (*lct) cmd_lct(common, cmd);
        if (*filter) cmd_filter(common, cmd, pulse, cutoff);
        if (*optimize) cmd_optimize(common, cmd, pulse);
        if (*truncate) cmd_truncate(common, cmd, pulse);
        if (*analytic) cmd_analytic(common, cmd);
        if (*pipeline) cmd_pipeline(common, cmd);
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return kConfig;
    } catch (const StageFailure& e) {
        std::cerr << e.what() << '\n' << e.report.dump(2) << '\n';
        return kConvergence;
    } catch (const ConvergenceError& e) {
        std::cerr << "convergence failure: " << e.what() << '\n';
        return kConvergence;
    } catch (const std::exception& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return kNumerical;
    }
    return kOk;
}
