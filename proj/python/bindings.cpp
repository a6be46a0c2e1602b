#include "attfdir/csv.hpp"
#include "attfdir/error.hpp"
#include "attfdir/runner.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace attfdir;

namespace {

Quaternion to_quat(const Vector4& v) { return Quaternion(v); }

RunMode mode_from_string(const std::string& s) {
    if (s == "simulate") {
        return RunMode::Simulate;
    }
    if (s == "estimate") {
        return RunMode::Estimate;
    }
    if (s == "fdir") {
        return RunMode::Fdir;
    }
    throw ConfigError("mode: expected simulate, estimate or fdir");
}

FdirPolicy policy_from_string(const std::string& s) {
    for (FdirPolicy p : {FdirPolicy::None, FdirPolicy::Innovation, FdirPolicy::Sequence,
                         FdirPolicy::Isolation}) {
        if (s == to_string(p)) {
            return p;
        }
    }
    throw ConfigError("policy: expected none, innovation, sequence or isolation");
}

// Stacks one Eigen vector per step into an N x m matrix.
template <typename F>
Mat stack_rows(const RunResult& r, F&& get) {
    if (r.steps.empty()) {
        return Mat();
    }
    const Vec first = get(r.steps.front());
    Mat out(static_cast<Eigen::Index>(r.steps.size()), first.size());
    for (std::size_t i = 0; i < r.steps.size(); ++i) {
        const Vec v = get(r.steps[i]);
        if (v.size() == out.cols()) {
            out.row(static_cast<Eigen::Index>(i)) = v.transpose();
        }
    }
    return out;
}

template <typename T, typename F>
std::vector<T> collect(const RunResult& r, F&& get) {
    std::vector<T> out;
    out.reserve(r.steps.size());
    for (const auto& s : r.steps) {
        out.push_back(get(s));
    }
    return out;
}

py::dict metrics_dict(const Metrics& m) {
    py::dict d;
    d["filter"] = m.filter;
    d["rmse_q"] = m.rmse_q;
    d["rmse_omega"] = m.rmse_omega;
    d["rmse_bias"] = m.rmse_bias;
    d["detection_latency"] = m.detection_latency;
    d["detections"] = m.detections;
    d["false_alarms"] = m.false_alarms;
    d["missed_detection"] = m.missed_detection;
    d["mean_nis"] = m.mean_nis;
    d["nis_exceedance"] = m.nis_exceedance;
    return d;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Spacecraft attitude estimation and sensor FDIR workbench";

    static py::exception<Error> error(m, "Error", PyExc_RuntimeError);
    static py::exception<ConfigError> config_error(m, "ConfigError", error.ptr());
    static py::exception<NumericalError> numerical_error(m, "NumericalError", error.ptr());
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) {
                std::rethrow_exception(p);
            }
        } catch (const ConfigError& e) {
            py::set_error(config_error, e.what());
        } catch (const NumericalError& e) {
            py::set_error(numerical_error, e.what());
        } catch (const Error& e) {
            py::set_error(error, e.what());
        }
    });

    // Attitude ------------------------------------------------------------
    m.def("normalize", [](const Vector4& q) { return normalize(to_quat(q)).vec(); }, py::arg("q"));
    m.def("quat_to_dcm", [](const Vector4& q) { return quat_to_dcm(to_quat(q)); }, py::arg("q"),
          "ECI->body direction cosine matrix of a scalar-first unit quaternion.");
    m.def("dcm_to_quat", [](const Matrix3& c) { return dcm_to_quat(c).vec(); }, py::arg("dcm"));
    m.def("quat_multiply",
          [](const Vector4& a, const Vector4& b) { return multiply(to_quat(a), to_quat(b)).vec(); },
          py::arg("a"), py::arg("b"));
    m.def("euler313_to_dcm",
          [](double phi, double theta, double psi) {
              return euler313_to_dcm(EulerAngles313{phi, theta, psi});
          },
          py::arg("phi"), py::arg("theta"), py::arg("psi"));
    m.def("euler313_to_quat",
          [](double phi, double theta, double psi) {
              return euler313_to_quat(EulerAngles313{phi, theta, psi}).vec();
          },
          py::arg("phi"), py::arg("theta"), py::arg("psi"));
    m.def("dcm_to_euler313",
          [](const Matrix3& c) {
              const EulerAngles313 e = dcm_to_euler313(c);
              return py::make_tuple(e.phi, e.theta, e.psi);
          },
          py::arg("dcm"), "Returns (phi, theta, psi).");

    // Dynamics ------------------------------------------------------------
    m.def("quaternion_rates",
          [](const Vector4& q, const Vector3& w) { return quaternion_rates(to_quat(q), w); },
          py::arg("q"), py::arg("omega"));
    m.def("gravity_gradient_torque",
          [](const Vector4& q, const Vector3& r, const Vector3& v, const Matrix3& inertia) {
              return gravity_gradient_torque(to_quat(q), r, v, InertiaTensor(inertia));
          },
          py::arg("q"), py::arg("r_eci_km"), py::arg("v_eci_km_s"), py::arg("inertia"));
    m.def(
        "integrate",
        [](const Vector4& q0, const Vector3& w0, const Matrix3& inertia, double t_end, double dt,
           const Vector3& torque) {
            DynamicsEnvironment env;
            env.inertia = InertiaTensor(inertia);
            env.torque.external = torque;
            RigidBodyState s;
            s.q = normalize(to_quat(q0));
            s.omega = w0;
            std::vector<TrajectoryPoint> traj;
            {
                py::gil_scoped_release release;
                traj = integrate(s, 0.0, t_end, dt, env);
            }
            Vec t(static_cast<Eigen::Index>(traj.size()));
            Mat q(t.size(), 4), w(t.size(), 3);
            for (Eigen::Index i = 0; i < t.size(); ++i) {
                const auto& p = traj[static_cast<std::size_t>(i)];
                t[i] = p.t;
                q.row(i) = p.state.q.vec().transpose();
                w.row(i) = p.state.omega.transpose();
            }
            py::dict out;
            out["t"] = t;
            out["q"] = q;
            out["omega"] = w;
            return out;
        },
        py::arg("q0"), py::arg("omega0"), py::arg("inertia"), py::arg("t_end"), py::arg("dt"),
        py::arg("torque") = Vector3::Zero(),
        "Fixed-step RK4 of the rigid body with a constant body-frame torque.");

    // FDIR statistics -----------------------------------------------------
    m.def("chi2_quantile", &chi2_quantile, py::arg("dof"), py::arg("alpha"));
    m.def("chi2_cdf", &chi2_cdf, py::arg("dof"), py::arg("x"));
    m.def("compute_nis", &compute_nis, py::arg("nu"), py::arg("S"));

    // Scenarios -----------------------------------------------------------
    py::class_<ScenarioConfig>(m, "Scenario")
        .def_readwrite("name", &ScenarioConfig::name)
        .def_readwrite("seed", &ScenarioConfig::seed)
        .def_readwrite("dt", &ScenarioConfig::dt)
        .def_readwrite("t_end", &ScenarioConfig::t_end)
        .def_readwrite("settle_time", &ScenarioConfig::settle_time)
        .def_property(
            "filter", [](const ScenarioConfig& c) { return std::string(to_string(c.filter.kind)); },
            [](ScenarioConfig& c, const std::string& s) { c.filter.kind = filter_kind_from_string(s); })
        .def_property(
            "policy", [](const ScenarioConfig& c) { return std::string(to_string(c.policy)); },
            [](ScenarioConfig& c, const std::string& s) { c.policy = policy_from_string(s); })
        .def_property_readonly("parameterization",
                               [](const ScenarioConfig& c) {
                                   return c.parameterization == Parameterization::Euler
                                              ? "euler"
                                              : "quaternion";
                               })
        .def_property_readonly("steps", &ScenarioConfig::steps)
        .def("validate", [](const ScenarioConfig& c) { validate(c); })
        .def("copy", [](const ScenarioConfig& c) { return ScenarioConfig(c); })
        .def("__repr__", [](const ScenarioConfig& c) {
            return "<Scenario " + c.name + " filter=" + to_string(c.filter.kind) +
                   " policy=" + to_string(c.policy) + ">";
        });

    m.def("load_scenario", &load_scenario, py::arg("path"));
    m.def("parse_scenario", &parse_scenario, py::arg("text"));
    m.def("baseline_scenario", &baseline_scenario);

    // Runs ----------------------------------------------------------------
    py::class_<RunResult>(m, "RunResult")
        .def_readonly("scenario", &RunResult::scenario)
        .def_property_readonly("filter",
                               [](const RunResult& r) { return std::string(to_string(r.filter)); })
        .def_property_readonly("policy",
                               [](const RunResult& r) { return std::string(to_string(r.policy)); })
        .def_property_readonly("has_filter", &RunResult::has_filter)
        .def_property_readonly("augmented", [](const RunResult& r) { return r.augmented; })
        .def("__len__", [](const RunResult& r) { return r.steps.size(); })
        .def_property_readonly("t",
                               [](const RunResult& r) {
                                   return collect<double>(r, [](const StepRecord& s) { return s.t; });
                               })
        .def_property_readonly("truth_q", [](const RunResult& r) {
            return stack_rows(r, [](const StepRecord& s) -> Vec { return s.truth.q.vec(); });
        })
        .def_property_readonly("truth_omega", [](const RunResult& r) {
            return stack_rows(r, [](const StepRecord& s) -> Vec { return s.truth.omega; });
        })
        .def_property_readonly("measurement", [](const RunResult& r) {
            return stack_rows(r, [](const StepRecord& s) -> Vec { return s.measurement; });
        })
        .def_property_readonly("measurement_clean", [](const RunResult& r) {
            return stack_rows(r, [](const StepRecord& s) -> Vec { return s.measurement_clean; });
        })
        .def_property_readonly("estimate", [](const RunResult& r) {
            return stack_rows(r, [](const StepRecord& s) -> Vec { return s.estimate; });
        })
        .def_property_readonly("sigma", [](const RunResult& r) {
            return stack_rows(r, [](const StepRecord& s) -> Vec { return s.sigma; });
        })
        .def_property_readonly("nis",
                               [](const RunResult& r) {
                                   return collect<double>(r, [](const StepRecord& s) {
                                       return s.innovation ? s.innovation->nis : 0.0;
                                   });
                               })
        .def_property_readonly("detected",
                               [](const RunResult& r) {
                                   return collect<bool>(r, [](const StepRecord& s) {
                                       return s.report.detected;
                                   });
                               })
        .def_property_readonly("isolated_mask",
                               [](const RunResult& r) {
                                   return collect<int>(r, [](const StepRecord& s) {
                                       return s.isolated_mask;
                                   });
                               })
        .def_property_readonly("update_skipped",
                               [](const RunResult& r) {
                                   return collect<bool>(r, [](const StepRecord& s) {
                                       return s.update_skipped;
                                   });
                               })
        .def("columns", &csv_columns)
        .def("write_csv", [](const RunResult& r, const std::filesystem::path& p) { export_csv(r, p); },
             py::arg("path"));

    m.def(
        "run_scenario",
        [](const ScenarioConfig& cfg, const std::string& mode) {
            const RunMode rm = mode_from_string(mode);
            py::gil_scoped_release release;
            return run_scenario(cfg, rm);
        },
        py::arg("scenario"), py::arg("mode") = "fdir");
    m.def(
        "compare",
        [](const ScenarioConfig& cfg, const std::vector<std::string>& filters) {
            std::vector<FilterKind> kinds;
            for (const auto& f : filters) {
                kinds.push_back(filter_kind_from_string(f));
            }
            py::gil_scoped_release release;
            return compare(cfg, kinds);
        },
        py::arg("scenario"), py::arg("filters") = std::vector<std::string>{"ekf", "ukf", "pf"});
    m.def(
        "compute_metrics",
        [](const RunResult& r, const ScenarioConfig& cfg) { return metrics_dict(compute_metrics(r, cfg)); },
        py::arg("result"), py::arg("scenario"));
}
