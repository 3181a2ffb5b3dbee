#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "lctpulse/errors.hpp"
#include "lctpulse/lct.hpp"
#include "lctpulse/model.hpp"
#include "lctpulse/optimize.hpp"
#include "lctpulse/pulses.hpp"
#include "lctpulse/units.hpp"

namespace py = pybind11;
using namespace pybind11::literals;
using namespace lctpulse;

namespace {

Waveform waveform_from_ghz(const std::vector<double>& ghz, double dt) {
    Waveform wf{dt, {}};
    wf.samples.reserve(ghz.size());
    for (double v : ghz) wf.samples.push_back(ghz_to_angular(v));
    return wf;
}

std::vector<double> waveform_to_ghz(const Waveform& wf) {
    std::vector<double> out;
    out.reserve(wf.size());
    for (double v : wf.samples) out.push_back(angular_to_ghz(v));
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Local-control pulse design for tunable-coupler devices (GHz / ns interface)";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

    py::class_<SystemParams>(m, "SystemParams")
        .def(py::init(&SystemParams::from_ghz), "qubit_freqs_ghz"_a, "couplings_ghz"_a,
             "tc_max_freq_ghz"_a)
        .def_property_readonly("dim", &SystemParams::dim)
        .def_property_readonly("num_qubits", &SystemParams::num_qubits)
        .def_property_readonly("tc_max_freq_ghz",
                               [](const SystemParams& p) { return angular_to_ghz(p.omega_tc_max); });

    m.def("reference_device", &reference_device);

    m.def(
        "eigenvalues",
        [](const SystemParams& p, double delta_ghz) {
            const auto s = eigendecompose(build_drift_hamiltonian(p, ghz_to_angular(delta_ghz)));
            Eigen::VectorXd e = s.eigenvalues / kTwoPi;
            return std::make_pair(e, s.bare_labels);
        },
        "params"_a, "delta_omega_ghz"_a = 0.0,
        "Ascending drift eigenvalues in GHz and their bare labels.");

    m.def(
        "avoided_crossings",
        [](const SystemParams& p, double lo_ghz, double hi_ghz, std::size_t steps) {
            std::vector<std::pair<double, double>> out;
            for (const auto& c : find_avoided_crossings(p, ghz_to_angular(lo_ghz), ghz_to_angular(hi_ghz), steps)) {
                out.emplace_back(angular_to_ghz(c.delta_omega), angular_to_ghz(c.gap));
            }
            return out;
        },
        "params"_a, "lo_ghz"_a = -3.0, "hi_ghz"_a = 0.0, "steps"_a = 601,
        "(position, gap) of each single-excitation gap minimum, in GHz.");

    m.def(
        "run_lct",
        [](const SystemParams& p, double lambda, double eta, double dt, double t_max,
           const std::string& initial, const std::string& target, std::optional<std::vector<double>> reference,
           std::optional<double> lambda2) {
            LctConfig cfg;
            cfg.lambda = lambda;
            cfg.eta = eta;
            cfg.dt = dt;
            cfg.t_max = t_max;
            cfg.initial_label = initial;
            cfg.target_label = target;
            if (reference) cfg.reference = waveform_from_ghz(*reference, dt);
            cfg.lambda2 = lambda2;
            LctResult res;
            {
                py::gil_scoped_release release;
                res = run_lct(p, cfg);
            }
            py::dict out;
            out["waveform_ghz"] = waveform_to_ghz(res.waveform);
            out["final_error"] = res.final_error;
            out["min_population_step"] = res.min_population_step;
            out["target_population"] = res.trajectory.population(target);
            return out;
        },
        "params"_a, "lam"_a = 12500.0, "eta"_a = 1e-6, "dt"_a = 0.01, "t_max"_a = 450.0,
        "initial"_a = "100", "target"_a = "010", "reference_ghz"_a = py::none(),
        "lambda2"_a = py::none(), "Feedback run; waveforms are detunings in GHz sampled every dt ns.");

    m.def(
        "transfer_error",
        [](const SystemParams& p, const std::vector<double>& ghz, double dt, const std::string& source,
           const std::string& destination) {
            const auto wf = waveform_from_ghz(ghz, dt);
            py::gil_scoped_release release;
            return transfer_error(p, wf, source, destination);
        },
        "params"_a, "waveform_ghz"_a, "dt"_a, "source"_a, "destination"_a);

    m.def(
        "lowpass_filter",
        [](const SystemParams& p, const std::vector<double>& ghz, double dt, double cutoff_ghz) {
            return waveform_to_ghz(lowpass_filter(waveform_from_ghz(ghz, dt), cutoff_ghz, p.omega_tc_max));
        },
        "params"_a, "waveform_ghz"_a, "dt"_a, "cutoff_ghz"_a);

    m.def(
        "power_spectrum",
        [](const std::vector<double>& ghz, double dt) {
            const auto s = fourier_spectrum(waveform_from_ghz(ghz, dt));
            std::vector<double> power;
            for (double v : s.power) power.push_back(v / (kTwoPi * kTwoPi));
            return std::make_pair(s.freqs_ghz, power);
        },
        "waveform_ghz"_a, "dt"_a, "One-sided power density in GHz^2/GHz over f in GHz.");

    m.def(
        "truncate",
        [](const std::vector<double>& ghz, double dt, double tau, double sigma) {
            return waveform_to_ghz(truncate_with_gaussian_tail(waveform_from_ghz(ghz, dt), tau, sigma));
        },
        "waveform_ghz"_a, "dt"_a, "tau"_a, "sigma"_a);

    m.def(
        "analytic_pulse",
        [](const SystemParams& p, double alpha1, double alpha3, double tau1, double tau2, double tau3,
           double sigma1, double sigma2, double sigma3, double dt) {
            AnalyticPulseParams a{ghz_to_angular(alpha1), ghz_to_angular(alpha3), tau1, tau2, tau3,
                                  sigma1, sigma2, sigma3};
            return waveform_to_ghz(analytic_pulse(a, dt, analytic_pulse_duration(a), p.omega_tc_max));
        },
        "params"_a, "alpha1"_a, "alpha3"_a, "tau1"_a, "tau2"_a, "tau3"_a, "sigma1"_a, "sigma2"_a,
        "sigma3"_a, "dt"_a = 0.01);
}
