#include "lctpulse/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "lctpulse/errors.hpp"
#include "lctpulse/units.hpp"

namespace lctpulse {

namespace {

using nlohmann::json;

template <typename T>
T required(const json& obj, const std::string& key, const std::string& where) {
    if (!obj.contains(key)) throw ConfigError("missing key '" + where + "." + key + "'");
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("bad value for '" + where + "." + key + "': " + e.what());
    }
}

template <typename T>
T optional_value(const json& obj, const std::string& key, const std::string& where, T fallback) {
    if (!obj.contains(key) || obj.at(key).is_null()) return fallback;
    return required<T>(obj, key, where);
}

const json& section(const json& doc, const std::string& name) {
    const auto& s = doc.at(name);
    if (!s.is_object()) throw ConfigError("section '" + name + "' must be an object");
    return s;
}

std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write '" + path.string() + "'");
    return out;
}

SystemParams parse_device(const json& obj, const std::string& where) {
    return SystemParams::from_ghz(required<std::vector<double>>(obj, "qubit_freqs_ghz", where),
                                  required<std::vector<double>>(obj, "couplings_ghz", where),
                                  required<double>(obj, "tc_max_freq_ghz", where));
}

LctSection parse_lct(const json& obj, const std::string& where, double default_dt) {
    LctSection s;
    auto& c = s.config;
    c.lambda = optional_value(obj, "lambda", where, c.lambda);
    c.eta = optional_value(obj, "eta", where, c.eta);
    c.dt = optional_value(obj, "dt_ns", where, default_dt);
    c.t_max = optional_value(obj, "t_max_ns", where, c.t_max);
    c.initial_label = optional_value(obj, "initial", where, c.initial_label);
    c.target_label = optional_value(obj, "target", where, c.target_label);
    if (obj.contains("n_prime") && !obj.at("n_prime").is_null()) {
        c.n_prime = required<std::size_t>(obj, "n_prime", where);
    }
    if (obj.contains("lambda2") && !obj.at("lambda2").is_null()) {
        c.lambda2 = required<double>(obj, "lambda2", where);
    }
    c.monotonic_guard = optional_value(obj, "monotonic_guard", where, c.monotonic_guard);
    if (obj.contains("reference_pulse_path") && !obj.at("reference_pulse_path").is_null()) {
        s.reference_pulse_path = required<std::string>(obj, "reference_pulse_path", where);
    }
    if (obj.contains("lambda_scan")) {
        const auto& scan = obj.at("lambda_scan");
        s.scan_factor = required<double>(scan, "factor", where + ".lambda_scan");
        s.scan_steps = required<std::size_t>(scan, "steps", where + ".lambda_scan");
    }
    s.goal = optional_value(obj, "goal", where, s.goal);
    return s;
}

ReversibilityConfig parse_reversibility(const json& obj, const std::string& where) {
    ReversibilityConfig r;
    r.lambda2_init = optional_value(obj, "lambda2_init", where, r.lambda2_init);
    if (obj.contains("lambda2_bounds")) {
        const auto b = required<std::vector<double>>(obj, "lambda2_bounds", where);
        if (b.size() != 2) throw ConfigError("'" + where + ".lambda2_bounds' needs two values");
        r.lambda2_low = b[0];
        r.lambda2_high = b[1];
    }
    r.cutoff_init_ghz = optional_value(obj, "cutoff_init_ghz", where, r.cutoff_init_ghz);
    r.cutoff_candidates_ghz =
        optional_value(obj, "cutoff_candidates_ghz", where, r.cutoff_candidates_ghz);
    r.fidelity_goal = optional_value(obj, "fidelity_goal", where, r.fidelity_goal);
    r.max_outer_iters = optional_value(obj, "max_outer_iters", where, r.max_outer_iters);
    r.max_evals_per_cutoff = optional_value(obj, "max_evals_per_cutoff", where, r.max_evals_per_cutoff);
    r.simplex_tolerance = optional_value(obj, "simplex_tolerance", where, r.simplex_tolerance);
    r.refine_eta = optional_value(obj, "refine_eta", where, r.refine_eta);
    r.validate();
    return r;
}

AnalyticSection parse_analytic(const json& obj, const std::string& where, double default_dt) {
    AnalyticSection a;
    if (obj.contains("init")) {
        const auto& init = obj.at("init");
        if (init.is_string() && init.get<std::string>() == "crossings") {
            a.init_from_crossings = true;
        } else {
            a.init = analytic_params_from_json(init);
        }
    } else {
        a.init_from_crossings = true;
    }
    a.tau1_ns = optional_value(obj, "tau1_ns", where, a.tau1_ns);
    a.switch_delay_ns = optional_value(obj, "switch_delay_ns", where, a.switch_delay_ns);
    a.release_delay_ns = optional_value(obj, "release_delay_ns", where, a.release_delay_ns);
    a.sigma0_ns = optional_value(obj, "sigma0_ns", where, a.sigma0_ns);
    a.source = optional_value(obj, "source", where, a.source);
    a.destination = optional_value(obj, "destination", where, a.destination);
    a.amplitude_span_ghz = optional_value(obj, "amplitude_span_ghz", where, a.amplitude_span_ghz);
    a.max_time_ns = optional_value(obj, "max_time_ns", where, a.max_time_ns);
    a.min_sigma_ns = optional_value(obj, "min_sigma_ns", where, a.min_sigma_ns);
    a.max_sigma_ns = optional_value(obj, "max_sigma_ns", where, a.max_sigma_ns);
    a.options.dt = optional_value(obj, "dt_ns", where, default_dt);
    a.options.fidelity_goal = optional_value(obj, "fidelity_goal", where, a.options.fidelity_goal);
    a.options.max_evals_stage1 = optional_value(obj, "max_evals_stage1", where, a.options.max_evals_stage1);
    a.options.max_evals_stage2 = optional_value(obj, "max_evals_stage2", where, a.options.max_evals_stage2);
    return a;
}

std::size_t line_of(const std::string& text, std::size_t byte) {
    byte = std::min(byte, text.size());
    return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<long>(byte), '\n'));
}

std::string fixed(double v, int digits) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits) << v;
    return os.str();
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& lct_section, double default_dt) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("config parse error at line " + std::to_string(line_of(text, e.byte)) +
                          ": " + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config document must be a JSON object");

    RunConfig cfg;
    cfg.device = doc.contains("device") ? parse_device(section(doc, "device"), "device")
                                        : parse_device(doc, "<root>");
    if (doc.contains(lct_section)) {
        cfg.lct = parse_lct(section(doc, lct_section), lct_section, default_dt);
        cfg.lct->config.validate(cfg.device.dim());
    }
    if (doc.contains("filter")) {
        const auto& f = section(doc, "filter");
        cfg.filter = FilterSection{optional_value(f, "cutoff_ghz", "filter", 0.4)};
    }
    if (doc.contains("reversibility")) {
        cfg.reversibility = parse_reversibility(section(doc, "reversibility"), "reversibility");
    }
    if (doc.contains("truncation")) {
        const auto& t = section(doc, "truncation");
        TruncationSection ts;
        ts.sigma_ns = optional_value(t, "sigma_ns", "truncation", ts.sigma_ns);
        ts.config.fidelity_goal = optional_value(t, "fidelity_goal", "truncation", ts.config.fidelity_goal);
        ts.config.max_evals = optional_value(t, "max_evals", "truncation", ts.config.max_evals);
        ts.config.tolerance = optional_value(t, "tolerance_ns", "truncation", ts.config.tolerance);
        cfg.truncation = ts;
    }
    if (doc.contains("analytic")) {
        cfg.analytic = parse_analytic(section(doc, "analytic"), "analytic", default_dt);
    }
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path, const std::string& lct_section,
                      double default_dt) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config '" + path.string() + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), lct_section, default_dt);
}

nlohmann::json analytic_params_to_json(const AnalyticPulseParams& p) {
    return json{{"alpha1", angular_to_ghz(p.alpha1)}, {"alpha3", angular_to_ghz(p.alpha3)},
                {"tau1", p.tau1},   {"tau2", p.tau2},   {"tau3", p.tau3},
                {"sigma1", p.sigma1}, {"sigma2", p.sigma2}, {"sigma3", p.sigma3}};
}

AnalyticPulseParams analytic_params_from_json(const nlohmann::json& j) {
    const std::string where = "analytic.init";
    AnalyticPulseParams p;
    p.alpha1 = ghz_to_angular(required<double>(j, "alpha1", where));
    p.alpha3 = ghz_to_angular(required<double>(j, "alpha3", where));
    p.tau1 = required<double>(j, "tau1", where);
    p.tau2 = required<double>(j, "tau2", where);
    p.tau3 = required<double>(j, "tau3", where);
    p.sigma1 = required<double>(j, "sigma1", where);
    p.sigma2 = required<double>(j, "sigma2", where);
    p.sigma3 = required<double>(j, "sigma3", where);
    return p;
}

nlohmann::json report_to_json(const OptimizationReport& report) {
    json history = json::array();
    for (const auto& h : report.history) history.push_back({{"params", h.params}, {"objective", h.objective}});
    return json{{"best_params", report.best_params},
                {"best_objective", report.best_objective},
                {"forward_error", report.forward_error},
                {"reverse_error", report.reverse_error},
                {"evaluations", report.evaluations},
                {"converged", report.converged},
                {"message", report.message},
                {"history", history}};
}

void write_waveform_csv(const std::filesystem::path& path, const Waveform& wf) {
    auto out = open_out(path);
    out << "t_ns,delta_omega_ghz\n";
    for (std::size_t k = 0; k < wf.size(); ++k) {
        out << fixed(wf.time(k), 6) << ',' << fixed(angular_to_ghz(wf.samples[k]), 12) << '\n';
    }
}

Waveform read_waveform_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read waveform '" + path.string() + "'");
    std::string line;
    std::vector<double> times;
    Waveform wf;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#' || line.rfind("t_ns", 0) == 0) continue;
        std::istringstream row(line);
        double t = 0.0;
        double v = 0.0;
        char comma = 0;
        if (!(row >> t >> comma >> v) || comma != ',') {
            throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": malformed row");
        }
        times.push_back(t);
        wf.samples.push_back(ghz_to_angular(v));
    }
    if (wf.samples.size() < 2) throw ConfigError(path.string() + ": waveform needs two samples");
    wf.dt = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
    // Snap to the printed precision of the time column.
    wf.dt = std::round(wf.dt * 1e9) / 1e9;
    return wf;
}

void write_flux_csv(const std::filesystem::path& path, const Waveform& wf,
                    const SystemParams& params) {
    auto out = open_out(path);
    out << "t_ns,phi_over_phi0\n";
    for (std::size_t k = 0; k < wf.size(); ++k) {
        const double omega = std::clamp(params.omega_tc_max + wf.samples[k], 0.0, params.omega_tc_max);
        out << fixed(wf.time(k), 6) << ',' << fixed(frequency_to_flux(params, omega).phi_over_phi0, 12)
            << '\n';
    }
}

void write_spectrum_csv(const std::filesystem::path& path, const PulseSpectrum& spectrum) {
    auto out = open_out(path);
    out << "# one-sided spectrum; forward DFT unnormalized, inverse carries 1/N;"
           " power is a density in GHz^2/GHz with sum(power)*df = mean square\n";
    out << "f_ghz,power\n";
    const double scale = 1.0 / (kTwoPi * kTwoPi);
    out << std::setprecision(12);
    for (std::size_t k = 0; k < spectrum.power.size(); ++k) {
        out << spectrum.freqs_ghz[k] << ',' << spectrum.power[k] * scale << '\n';
    }
}

void write_trajectory_csv(const std::filesystem::path& path, const TrajectoryRecord& traj) {
    auto out = open_out(path);
    out << "t_ns,delta_omega_ghz";
    for (const auto& label : traj.labels) out << ",pop_" << label;
    out << '\n';
    out << std::setprecision(15);
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        out << fixed(traj.times[k], 6) << ',' << fixed(angular_to_ghz(traj.control[k]), 12);
        for (const auto& series : traj.populations) out << ',' << series[k];
        out << '\n';
    }
}

nlohmann::json trajectory_summary(const TrajectoryRecord& traj, const std::string& target_label) {
    json finals = json::object();
    for (std::size_t i = 0; i < traj.labels.size(); ++i) finals[traj.labels[i]] = traj.populations[i].back();
    const auto& target = traj.population(target_label);
    const double t99 = crossing_time(traj.times, target, 0.99);
    return json{{"final_populations", finals},
                {"final_error", 1.0 - target.back()},
                {"target", target_label},
                {"transfer_time_99_ns", t99 < 0.0 ? json(nullptr) : json(t99)}};
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
    auto out = open_out(path);
    out << j.dump(2) << '\n';
}

}  // namespace lctpulse
