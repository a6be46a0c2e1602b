#include "attfdir/runner.hpp"

#include "attfdir/error.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <memory>
#include <thread>

namespace attfdir {

int sensor_bit(const std::string& sensor) {
    if (sensor == kStarTracker) {
        return 1;
    }
    if (sensor == kMagnetometer) {
        return 2;
    }
    if (sensor == kGyro) {
        return 4;
    }
    return 0;
}

namespace {

struct Truth {
    std::vector<RigidBodyState> states;
    std::vector<std::optional<EulerAngles313>> euler;
};

Truth propagate_truth(const ScenarioConfig& cfg, bool carry_bias) {
    Truth out;
    if (cfg.parameterization == Parameterization::Euler) {
        if (cfg.truth.torque.gravity_gradient) {
            throw ConfigError("gravity_gradient: not supported with the euler parameterization");
        }
        const auto traj = integrate_euler313(*cfg.initial_euler, cfg.initial.omega, 0.0, cfg.t_end,
                                             cfg.dt, cfg.truth);
        for (const auto& p : traj) {
            RigidBodyState s;
            s.q = euler313_to_quat(p.angles);
            s.omega = p.omega;
            out.states.push_back(s);
            out.euler.emplace_back(p.angles);
        }
        return out;
    }
    RigidBodyState initial = cfg.initial;
    initial.bias.reset();
    if (carry_bias) {
        initial.bias = cfg.sensors.gyro.bias;
    }
    for (auto& p : integrate(initial, 0.0, cfg.t_end, cfg.dt, cfg.truth)) {
        out.states.push_back(std::move(p.state));
        out.euler.emplace_back(std::nullopt);
    }
    return out;
}

std::unique_ptr<Estimator> make_estimator(const ScenarioConfig& cfg,
                                          const std::shared_ptr<const ProcessModel>& f,
                                          const std::shared_ptr<const MeasurementModel>& h) {
    const AttitudeModelConfig& m = cfg.filter.model;
    RigidBodyState start = cfg.initial;
    start.bias.reset();
    if (m.augmented) {
        start.bias = Vector3::Zero();
    }
    GaussianBelief initial{to_vector(start) + cfg.filter.initial_offset, m.initial_cov};
    f->normalize(initial.mean);

    FilterConfig fc{m.process_noise, cfg.filter.ukf, cfg.filter.pf};
    switch (cfg.filter.kind) {
    case FilterKind::Ekf:
        return std::make_unique<Ekf>(f, h, initial, fc);
    case FilterKind::Ukf:
        return std::make_unique<Ukf>(f, h, initial, fc);
    case FilterKind::Pf:
        return std::make_unique<ParticleFilter>(f, h, initial, fc, cfg.seed);
    }
    throw ConfigError("filter.type: unsupported");
}

Vec select(const Vec& y, const std::vector<int>& rows) {
    Vec out(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out[static_cast<Eigen::Index>(i)] = y[rows[i]];
    }
    return out;
}

void check_finite(const StepRecord& rec) {
    if (!rec.estimate.allFinite() || !rec.sigma.allFinite()) {
        throw NumericalError("filter state became non-finite");
    }
}

} // namespace

RunResult run_scenario(const ScenarioConfig& cfg, RunMode mode) {
    const bool euler = cfg.parameterization == Parameterization::Euler;
    if (euler && mode != RunMode::Simulate) {
        throw ConfigError("parameterization: euler scenarios support simulate only");
    }
    const bool filtering = mode != RunMode::Simulate;
    const FdirPolicy policy = mode == RunMode::Fdir ? cfg.policy : FdirPolicy::None;

    RunResult result;
    result.scenario = cfg.name;
    result.mode = mode;
    result.filter = cfg.filter.kind;
    result.policy = policy;
    result.layout = cfg.layout();
    result.augmented = filtering && cfg.filter.model.augmented;

    const Truth truth = propagate_truth(cfg, result.augmented);
    SensorStreams streams(cfg.seed);
    FaultInjector injector(cfg.faults, cfg.dropout_mode);

    std::shared_ptr<const ProcessModel> f;
    std::shared_ptr<const MeasurementModel> h;
    std::unique_ptr<Estimator> est;
    std::vector<int> filter_rows;
    if (filtering) {
        f = std::make_shared<AttitudeProcessModel>(cfg.filter.model.dynamics,
                                                   cfg.filter.model.augmented);
        h = std::make_shared<AttitudeMeasurementModel>(cfg.filter.model);
        est = make_estimator(cfg, f, h);
        filter_rows = SliceMap::standard(cfg.layout()).rows(cfg.filter.model.sensors);
    }
    NisWindow window(cfg.detector.window);

    const std::size_t count = truth.states.size();
    result.steps.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        const double t = static_cast<double>(k) * cfg.dt;
        StepRecord rec;
        rec.t = t;
        rec.truth = truth.states[k];
        rec.truth_euler = truth.euler[k];
        try {
            const MeasurementVector clean =
                euler ? sample_suite(*rec.truth_euler, rec.truth.omega, cfg.sensors, streams)
                      : sample_suite(rec.truth.q, rec.truth.omega, cfg.sensors, streams);
            rec.measurement_clean = clean.values;
            rec.measurement = injector.apply(clean, t).values;

            if (filtering) {
                if (k > 0) {
                    est->predict(t - cfg.dt, cfg.dt);
                }
                const Vec y = select(rec.measurement, filter_rows);
                InnovationRecord inn = est->innovation(y, t);
                const int dof = static_cast<int>(inn.nu.size());
                rec.innovation_check = innovation_filter_check(inn, cfg.detector);
                rec.sequence_check = sequence_monitor_update(window, inn.nis, dof, t, cfg.detector);
                rec.sensor_checks = per_sensor_nis(inn, h->slices(), cfg.detector.alpha);

                std::vector<std::string> flagged;
                std::vector<std::string> healthy;
                for (const auto& s : rec.sensor_checks) {
                    (s.flagged ? flagged : healthy).push_back(s.sensor);
                }

                bool exclude_flagged = cfg.detector.per_sensor;
                switch (policy) {
                case FdirPolicy::None:
                    rec.report.t = t;
                    rec.report.statistic = inn.nis;
                    rec.report.dof = dof;
                    rec.report.threshold = rec.innovation_check.threshold;
                    break;
                case FdirPolicy::Innovation:
                    rec.report = rec.innovation_check;
                    break;
                case FdirPolicy::Sequence:
                    rec.report = rec.sequence_check;
                    break;
                case FdirPolicy::Isolation:
                    rec.report = rec.innovation_check;
                    rec.report.detected = rec.report.detected || !flagged.empty();
                    exclude_flagged = true;
                    break;
                }

                std::vector<std::string> use = healthy;
                if (rec.report.detected) {
                    rec.report.isolated = flagged;
                    for (const auto& s : flagged) {
                        rec.isolated_mask |= sensor_bit(s);
                    }
                    if (!exclude_flagged) {
                        use.clear();
                    }
                } else {
                    use = cfg.filter.model.sensors;
                }
                const std::vector<int> rows = h->slices().rows(use);
                rec.update_skipped = rows.empty();
                est->update(y, rows);

                if (const auto* pf = dynamic_cast<const ParticleFilter*>(est.get())) {
                    rec.pf_degenerate = pf->last_update_degenerate();
                    inn.degenerate = rec.pf_degenerate;
                }
                rec.innovation = std::move(inn);
                const GaussianBelief b = est->belief();
                rec.estimate = b.mean;
                rec.sigma = b.cov.diagonal().cwiseMax(0.0).cwiseSqrt();
                check_finite(rec);
            }
        } catch (const ConfigError& e) {
            throw ConfigError("step " + std::to_string(k) + ": " + e.what());
        } catch (const NumericalError& e) {
            throw NumericalError("step " + std::to_string(k) + ": " + e.what());
        } catch (const Error& e) {
            throw Error("step " + std::to_string(k) + ": " + e.what());
        }
        result.steps.push_back(std::move(rec));
    }
    return result;
}

double rmse(const std::vector<Vec>& estimate, const std::vector<Vec>& truth) {
    if (estimate.size() != truth.size()) {
        throw Error("rmse: series lengths differ");
    }
    if (estimate.empty()) {
        return 0.0;
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < estimate.size(); ++i) {
        sum += (estimate[i] - truth[i]).squaredNorm();
    }
    return std::sqrt(sum / static_cast<double>(estimate.size()));
}

Metrics compute_metrics(const RunResult& result, const std::vector<FaultSpec>& faults,
                        const MetricsWindow& window, std::optional<double> grace) {
    Metrics m;
    m.filter = to_string(result.filter);
    if (!result.has_filter() || result.steps.empty()) {
        return m;
    }
    const double dt = result.steps.size() > 1 ? result.steps[1].t - result.steps[0].t : 0.0;
    const double g = grace.value_or(dt);

    std::vector<Vec> q_est, q_true, w_est, w_true, b_est, b_true;
    double nis_sum = 0.0;
    int nis_count = 0;
    int exceed = 0;
    for (const auto& s : result.steps) {
        if (s.t < window.t_from || s.t > window.t_to) {
            continue;
        }
        Vec q = s.estimate.head<4>();
        const Vec qt = s.truth.q.vec();
        if (q.dot(qt) < 0.0) {
            q = -q;
        }
        q_est.push_back(q);
        q_true.push_back(qt);
        w_est.push_back(s.estimate.segment<3>(4));
        w_true.push_back(s.truth.omega);
        if (result.augmented && s.truth.bias) {
            b_est.push_back(s.estimate.segment<3>(7));
            b_true.push_back(*s.truth.bias);
        }
        if (s.innovation) {
            nis_sum += s.innovation->nis;
            ++nis_count;
            if (s.innovation_check.detected) {
                ++exceed;
            }
        }
    }
    m.rmse_q = rmse(q_est, q_true);
    m.rmse_omega = rmse(w_est, w_true);
    if (result.augmented) {
        m.rmse_bias = rmse(b_est, b_true);
    }
    if (nis_count > 0) {
        m.mean_nis = nis_sum / nis_count;
        m.nis_exceedance = static_cast<double>(exceed) / nis_count;
    }

    std::vector<bool> hit(faults.size(), false);
    double first_onset = 1e300;
    for (const auto& f : faults) {
        first_onset = std::min(first_onset, f.t_start);
    }
    const double eps = 1e-9;
    for (const auto& s : result.steps) {
        if (!s.report.detected) {
            continue;
        }
        ++m.detections;
        bool inside = false;
        for (std::size_t i = 0; i < faults.size(); ++i) {
            const double end = faults[i].t_end();
            if (s.t >= faults[i].t_start - eps && s.t <= end + g + eps) {
                inside = true;
                hit[i] = true;
            }
        }
        if (inside) {
            if (!m.detection_latency && s.t >= first_onset - eps) {
                m.detection_latency = std::max(0.0, s.t - first_onset);
            }
        } else if (s.t >= window.t_from && s.t <= window.t_to) {
            ++m.false_alarms;
        }
    }
    m.missed_detection = std::find(hit.begin(), hit.end(), false) != hit.end();
    return m;
}

Metrics compute_metrics(const RunResult& result, const ScenarioConfig& cfg) {
    std::optional<double> grace;
    if (result.policy == FdirPolicy::Sequence) {
        grace = cfg.detector.window * cfg.dt;
    }
    return compute_metrics(result, cfg.faults, MetricsWindow{cfg.settle_time, 1e300}, grace);
}

std::vector<RunResult> compare(const ScenarioConfig& cfg, const std::vector<FilterKind>& kinds,
                               RunMode mode) {
    std::vector<RunResult> results(kinds.size());
    std::vector<std::exception_ptr> errors(kinds.size());
    std::vector<std::thread> workers;
    workers.reserve(kinds.size());
    for (std::size_t i = 0; i < kinds.size(); ++i) {
        workers.emplace_back([&, i] {
            try {
                ScenarioConfig local = cfg;
                local.filter.kind = kinds[i];
                results[i] = run_scenario(local, mode);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        });
    }
    for (auto& w : workers) {
        w.join();
    }
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
    return results;
}

} // namespace attfdir
