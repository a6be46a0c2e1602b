#include "attfdir/scenario.hpp"

#include "attfdir/error.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace attfdir {

namespace {

constexpr double kDeg = M_PI / 180.0;

/// Strict reader over one YAML mapping: every key must be consumed or the
/// mapping is rejected in finish().
class MapReader {
public:
    MapReader(YAML::Node node, std::string path) : node_(std::move(node)), path_(std::move(path)) {
        if (!node_.IsMap()) {
            throw ConfigError(label() + "expected a mapping");
        }
    }

    [[nodiscard]] std::string key_path(const std::string& key) const {
        return path_.empty() ? key : path_ + "." + key;
    }

    [[nodiscard]] bool has(const std::string& key) const { return static_cast<bool>(node_[key]); }

    [[nodiscard]] YAML::Node raw(const std::string& key) {
        seen_.insert(key);
        return node_[key];
    }

    template <typename T>
    [[nodiscard]] std::optional<T> get(const std::string& key) {
        const YAML::Node n = raw(key);
        if (!n) {
            return std::nullopt;
        }
        try {
            return n.as<T>();
        } catch (const YAML::Exception&) {
            throw ConfigError(key_path(key) + ": invalid value");
        }
    }

    double number(const std::string& key, double fallback) {
        const auto v = get<double>(key);
        if (v && !std::isfinite(*v)) {
            throw ConfigError(key_path(key) + ": value must be finite");
        }
        return v.value_or(fallback);
    }

    std::optional<Vec> vector(const std::string& key, std::optional<int> size = std::nullopt) {
        const YAML::Node n = raw(key);
        if (!n) {
            return std::nullopt;
        }
        if (!n.IsSequence()) {
            throw ConfigError(key_path(key) + ": expected a list of numbers");
        }
        Vec v(static_cast<Eigen::Index>(n.size()));
        for (std::size_t i = 0; i < n.size(); ++i) {
            try {
                v[static_cast<Eigen::Index>(i)] = n[i].as<double>();
            } catch (const YAML::Exception&) {
                throw ConfigError(key_path(key) + ": expected a list of numbers");
            }
            if (!std::isfinite(v[static_cast<Eigen::Index>(i)])) {
                throw ConfigError(key_path(key) + ": values must be finite");
            }
        }
        if (size && v.size() != *size) {
            throw ConfigError(key_path(key) + ": expected " + std::to_string(*size) + " values");
        }
        return v;
    }

    std::optional<MapReader> map(const std::string& key) {
        const YAML::Node n = raw(key);
        if (!n) {
            return std::nullopt;
        }
        return MapReader(n, key_path(key));
    }

    void finish() const {
        for (auto it = node_.begin(); it != node_.end(); ++it) {
            const auto key = it->first.as<std::string>();
            if (!seen_.count(key)) {
                throw ConfigError(key_path(key) + ": unknown key");
            }
        }
    }

private:
    [[nodiscard]] std::string label() const { return path_.empty() ? "" : path_ + ": "; }

    YAML::Node node_;
    std::string path_;
    std::set<std::string> seen_;
};

Matrix3 reference_inertia() {
    Matrix3 m;
    m << 23745, 93.907, -1267.1,
         93.907, 17560, -967.50,
         -1267.1, -967.5, 36065;
    return m;
}

void positive_entries(const Vec& v, const std::string& key) {
    if (!(v.array() > 0.0).all()) {
        throw ConfigError(key + ": covariance entries must be positive");
    }
}

void non_negative_entries(const Vec& v, const std::string& key) {
    if (!(v.array() >= 0.0).all()) {
        throw ConfigError(key + ": entries must be non-negative");
    }
}

void read_elements(MapReader r, KeplerianElements& el) {
    el.a = r.number("a", el.a);
    el.e = r.number("e", el.e);
    el.i = r.number("i_deg", el.i / kDeg) * kDeg;
    el.arg_perigee = r.number("arg_perigee_deg", el.arg_perigee / kDeg) * kDeg;
    el.raan = r.number("raan_deg", el.raan / kDeg) * kDeg;
    el.nu0 = r.number("nu0_deg", el.nu0 / kDeg) * kDeg;
    el.mu = r.number("mu", el.mu);
    r.finish();
    if (!(el.a > 0.0)) {
        throw ConfigError(r.key_path("a") + ": semi-major axis must be positive");
    }
    if (!(el.e >= 0.0 && el.e < 1.0)) {
        throw ConfigError(r.key_path("e") + ": eccentricity must satisfy 0 <= e < 1");
    }
    if (!(el.mu > 0.0)) {
        throw ConfigError(r.key_path("mu") + ": must be positive");
    }
}

Matrix3 read_inertia(MapReader& parent, const std::string& key, const Matrix3& fallback) {
    const YAML::Node n = parent.raw(key);
    if (!n) {
        return fallback;
    }
    const std::string path = parent.key_path(key);
    Matrix3 m;
    if (n.IsSequence() && n.size() == 3 && n[0].IsSequence()) {
        for (int i = 0; i < 3; ++i) {
            if (n[i].size() != 3) {
                throw ConfigError(path + ": expected a 3x3 matrix");
            }
            for (int j = 0; j < 3; ++j) {
                m(i, j) = n[i][j].as<double>();
            }
        }
    } else if (n.IsSequence() && n.size() == 3) {
        m.setZero();
        for (int i = 0; i < 3; ++i) {
            m(i, i) = n[i].as<double>();
        }
    } else {
        throw ConfigError(path + ": expected a 3x3 matrix or 3 principal moments");
    }
    return m;
}

FaultSpec read_fault(MapReader r) {
    FaultSpec f;
    const auto target = r.get<std::string>("target");
    if (!target) {
        throw ConfigError(r.key_path("target") + ": required");
    }
    f.target = *target;
    const auto kind = r.get<std::string>("kind");
    if (!kind) {
        throw ConfigError(r.key_path("kind") + ": required");
    }
    try {
        f.kind = fault_kind_from_string(*kind);
    } catch (const ConfigError&) {
        throw ConfigError(r.key_path("kind") + ": unknown fault kind '" + *kind + "'");
    }
    if (const auto axis = r.get<int>("axis")) {
        f.axis = *axis;
    }
    f.t_start = r.number("t_start", 0.0);
    f.duration = r.number("duration", 0.0);
    f.magnitude = r.number("magnitude", 0.0);
    f.saturation_limit = r.number("saturation_limit", 0.0);
    r.finish();
    if (f.t_start < 0.0) {
        throw ConfigError(r.key_path("t_start") + ": must be >= 0");
    }
    if (f.duration < 0.0) {
        throw ConfigError(r.key_path("duration") + ": must be >= 0");
    }
    return f;
}

std::vector<std::string> read_sensor_list(MapReader& r, const std::string& key,
                                          std::vector<std::string> fallback) {
    const YAML::Node n = r.raw(key);
    if (!n) {
        return fallback;
    }
    if (!n.IsSequence()) {
        throw ConfigError(r.key_path(key) + ": expected a list of sensor names");
    }
    std::vector<std::string> out;
    for (const auto& item : n) {
        const auto name = item.as<std::string>();
        if (name != kStarTracker && name != kMagnetometer && name != kGyro) {
            throw ConfigError(r.key_path(key) + ": unknown sensor '" + name + "'");
        }
        out.push_back(name);
    }
    return out;
}

} // namespace

const char* to_string(FilterKind kind) {
    switch (kind) {
    case FilterKind::Ekf: return "ekf";
    case FilterKind::Ukf: return "ukf";
    case FilterKind::Pf: return "pf";
    }
    return "?";
}

const char* to_string(FdirPolicy policy) {
    switch (policy) {
    case FdirPolicy::None: return "none";
    case FdirPolicy::Innovation: return "innovation";
    case FdirPolicy::Sequence: return "sequence";
    case FdirPolicy::Isolation: return "isolation";
    }
    return "?";
}

FilterKind filter_kind_from_string(const std::string& name) {
    for (FilterKind k : {FilterKind::Ekf, FilterKind::Ukf, FilterKind::Pf}) {
        if (name == to_string(k)) {
            return k;
        }
    }
    throw ConfigError("unknown filter '" + name + "' (expected ekf, ukf or pf)");
}

long ScenarioConfig::steps() const { return std::lround(t_end / dt); }

ScenarioConfig baseline_scenario() {
    ScenarioConfig cfg;
    cfg.name = "paper_baseline";
    cfg.initial.q = Quaternion(1, 0, 0, 0);
    cfg.initial.omega = Vector3(-7.0, 2.0, 5.0) * kDeg;

    cfg.truth.inertia = InertiaTensor(reference_inertia());
    cfg.truth.orbit.a = 7080.6;
    cfg.truth.orbit.e = 0.0000979;
    cfg.truth.orbit.i = 98.2 * kDeg;
    cfg.truth.orbit.arg_perigee = 120.4799 * kDeg;
    cfg.truth.orbit.raan = 95.2063 * kDeg;
    cfg.truth.orbit.nu0 = 0.0;
    cfg.truth.torque.gravity_gradient = true;

    cfg.sensors.gyro.sigma = 0.005;
    cfg.sensors.gyro.bias = Vector3(0.02, -0.015, 0.01);

    cfg.filter.model.dynamics = cfg.truth;
    cfg.filter.initial_offset = Vec::Zero(7);
    return cfg;
}

ScenarioConfig parse_scenario(const std::string& text) {
    YAML::Node doc;
    try {
        doc = YAML::Load(text);
    } catch (const YAML::Exception& e) {
        throw ConfigError(std::string("parse error: ") + e.what());
    }
    if (!doc || doc.IsNull() || !doc.IsMap()) {
        throw ConfigError("parse error: scenario must be a non-empty mapping");
    }

    ScenarioConfig cfg = baseline_scenario();
    MapReader root(doc, "");

    const auto version = root.get<int>("schema_version");
    if (!version) {
        throw ConfigError("schema_version: required");
    }
    if (*version != kSchemaVersion) {
        throw ConfigError("schema_version: unsupported version " + std::to_string(*version));
    }
    cfg.name = root.get<std::string>("name").value_or(cfg.name);
    if (const auto seed = root.get<std::uint64_t>("seed")) {
        cfg.seed = *seed;
    }
    cfg.dt = root.number("dt", cfg.dt);
    cfg.t_end = root.number("t_end", cfg.t_end);
    if (!(cfg.dt > 0.0)) {
        throw ConfigError("dt: must be positive");
    }
    if (!(cfg.t_end > 0.0)) {
        throw ConfigError("t_end: must be positive");
    }
    if (const auto p = root.get<std::string>("parameterization")) {
        if (*p == "quaternion") {
            cfg.parameterization = Parameterization::Quaternion;
        } else if (*p == "euler") {
            cfg.parameterization = Parameterization::Euler;
        } else {
            throw ConfigError("parameterization: expected 'quaternion' or 'euler'");
        }
    }
    const bool euler = cfg.parameterization == Parameterization::Euler;

    if (auto init = root.map("initial_state")) {
        if (auto w = init->vector("omega_deg_s", 3)) {
            cfg.initial.omega = *w * kDeg;
        }
        const auto q = init->vector("quaternion", 4);
        const auto e = init->vector("euler_deg", 3);
        if (q && e) {
            throw ConfigError("initial_state: give either quaternion or euler_deg, not both");
        }
        if (q) {
            if (!(q->norm() > 0.0)) {
                throw ConfigError("initial_state.quaternion: zero norm");
            }
            cfg.initial.q = normalize(Quaternion(Vector4(*q)));
        }
        if (e) {
            cfg.initial_euler = EulerAngles313{(*e)[0] * kDeg, (*e)[1] * kDeg, (*e)[2] * kDeg};
            cfg.initial.q = euler313_to_quat(*cfg.initial_euler);
        }
        init->finish();
    }
    if (euler && !cfg.initial_euler) {
        cfg.initial_euler = dcm_to_euler313(quat_to_dcm(cfg.initial.q));
    }

    if (auto el = root.map("elements")) {
        read_elements(*el, cfg.truth.orbit);
    }
    try {
        cfg.truth.inertia = InertiaTensor(read_inertia(root, "inertia", cfg.truth.inertia.full()));
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("inertia: ") + e.what());
    }
    if (const auto gg = root.get<bool>("gravity_gradient")) {
        cfg.truth.torque.gravity_gradient = *gg;
    }
    if (auto tau = root.vector("external_torque", 3)) {
        cfg.truth.torque.external = *tau;
    }

    // Sensors.
    const int att = euler ? 3 : 4;
    if (euler) {
        cfg.sensors.star_tracker.variances = Vec::Constant(3, 0.001);
        cfg.sensors.magnetometer.variances = (Vec(3) << 0.01, 0.02, 0.05).finished();
    }
    if (auto s = root.map("sensors")) {
        if (auto g = s->map("gyro")) {
            cfg.sensors.gyro.sigma = g->number("sigma", cfg.sensors.gyro.sigma);
            if (auto b = g->vector("bias", 3)) {
                cfg.sensors.gyro.bias = *b;
            }
            g->finish();
            if (cfg.sensors.gyro.sigma < 0.0) {
                throw ConfigError("sensors.gyro.sigma: must be >= 0");
            }
        }
        for (const char* name : {kStarTracker, kMagnetometer}) {
            if (auto m = s->map(name)) {
                if (auto v = m->vector("variances", att)) {
                    non_negative_entries(*v, m->key_path("variances"));
                    (std::string(name) == kStarTracker ? cfg.sensors.star_tracker
                                                       : cfg.sensors.magnetometer)
                        .variances = *v;
                }
                m->finish();
            }
        }
        if (const auto mode = s->get<std::string>("dropout_mode")) {
            if (*mode == "zero") {
                cfg.dropout_mode = DropoutMode::Zero;
            } else if (*mode == "hold_last") {
                cfg.dropout_mode = DropoutMode::HoldLast;
            } else {
                throw ConfigError("sensors.dropout_mode: expected 'zero' or 'hold_last'");
            }
        }
        s->finish();
    }

    if (const YAML::Node faults = root.raw("faults")) {
        if (!faults.IsSequence()) {
            throw ConfigError("faults: expected a list");
        }
        for (std::size_t i = 0; i < faults.size(); ++i) {
            cfg.faults.push_back(read_fault(MapReader(faults[i], "faults[" + std::to_string(i) + "]")));
        }
    }

    // Filter.
    FilterSettings& fs = cfg.filter;
    fs.model.dynamics = cfg.truth;
    fs.model.r_star_tracker = Mat(cfg.sensors.star_tracker.variances.asDiagonal());
    fs.model.r_magnetometer = Mat(cfg.sensors.magnetometer.variances.asDiagonal());
    fs.model.r_gyro = Mat::Identity(3, 3) * cfg.sensors.gyro.sigma * cfg.sensors.gyro.sigma;
    double bias_q = 1e-12;
    double bias_p0 = 1e-2;
    std::optional<Vec> q_diag, p0_diag, offset;
    if (auto f = root.map("filter")) {
        if (const auto type = f->get<std::string>("type")) {
            try {
                fs.kind = filter_kind_from_string(*type);
            } catch (const ConfigError& e) {
                throw ConfigError(std::string("filter.type: ") + e.what());
            }
        }
        if (const auto gg = f->get<bool>("gravity_gradient")) {
            fs.model.dynamics.torque.gravity_gradient = *gg;
        }
        fs.model.augmented = f->get<bool>("augment_bias").value_or(false);
        fs.model.sensors = read_sensor_list(*f, "sensors", fs.model.sensors);
        bias_q = f->number("bias_process_noise", bias_q);
        bias_p0 = f->number("bias_initial_variance", bias_p0);
        q_diag = f->vector("process_noise");
        p0_diag = f->vector("initial_cov");
        offset = f->vector("initial_offset");
        if (auto r = f->map("r")) {
            if (auto v = r->vector(kStarTracker, 4)) {
                positive_entries(*v, r->key_path(kStarTracker));
                fs.model.r_star_tracker = Mat(v->asDiagonal());
            }
            if (auto v = r->vector(kMagnetometer, 4)) {
                positive_entries(*v, r->key_path(kMagnetometer));
                fs.model.r_magnetometer = Mat(v->asDiagonal());
            }
            if (auto v = r->vector(kGyro, 3)) {
                positive_entries(*v, r->key_path(kGyro));
                fs.model.r_gyro = Mat(v->asDiagonal());
            }
            r->finish();
        }
        if (auto u = f->map("ukf")) {
            fs.ukf.alpha = u->number("alpha", fs.ukf.alpha);
            fs.ukf.beta = u->number("beta", fs.ukf.beta);
            fs.ukf.kappa = u->number("kappa", fs.ukf.kappa);
            fs.ukf.r_scale = u->number("r_scale", fs.ukf.r_scale);
            u->finish();
            if (!(fs.ukf.alpha > 0.0)) {
                throw ConfigError("filter.ukf.alpha: must be positive");
            }
            if (!(fs.ukf.r_scale > 0.0)) {
                throw ConfigError("filter.ukf.r_scale: must be positive");
            }
        }
        if (auto p = f->map("pf")) {
            fs.pf.particles = p->get<int>("particles").value_or(fs.pf.particles);
            fs.pf.ess_threshold = p->number("ess_threshold", fs.pf.ess_threshold);
            if (auto j = p->vector("jitter")) {
                non_negative_entries(*j, p->key_path("jitter"));
                fs.pf.jitter = Mat(j->asDiagonal());
            }
            p->finish();
            if (fs.pf.particles < 10) {
                throw ConfigError("filter.pf.particles: must be >= 10");
            }
            if (!(fs.pf.ess_threshold >= 0.0 && fs.pf.ess_threshold <= 1.0)) {
                throw ConfigError("filter.pf.ess_threshold: must be in [0, 1]");
            }
        }
        f->finish();
    }
    const int n = fs.model.state_dim();
    fs.model.process_noise = AttitudeModelConfig::default_process_noise(false);
    fs.model.initial_cov = Mat::Identity(7, 7) * 1e-2;
    if (fs.model.augmented) {
        fs.model.augmented = false;
        fs.model = make_bias_augmented_model(fs.model, bias_q, bias_p0);
    }
    if (q_diag) {
        if (q_diag->size() != n) {
            throw ConfigError("filter.process_noise: expected " + std::to_string(n) + " values");
        }
        non_negative_entries(*q_diag, "filter.process_noise");
        fs.model.process_noise = Mat(q_diag->asDiagonal());
    }
    if (p0_diag) {
        if (p0_diag->size() != n) {
            throw ConfigError("filter.initial_cov: expected " + std::to_string(n) + " values");
        }
        positive_entries(*p0_diag, "filter.initial_cov");
        fs.model.initial_cov = Mat(p0_diag->asDiagonal());
    }
    fs.initial_offset = offset.value_or(Vec::Zero(n));
    if (fs.initial_offset.size() != n) {
        throw ConfigError("filter.initial_offset: expected " + std::to_string(n) + " values");
    }

    if (auto fd = root.map("fdir")) {
        if (const auto p = fd->get<std::string>("policy")) {
            bool ok = false;
            for (FdirPolicy pol : {FdirPolicy::None, FdirPolicy::Innovation, FdirPolicy::Sequence,
                                   FdirPolicy::Isolation}) {
                if (*p == to_string(pol)) {
                    cfg.policy = pol;
                    ok = true;
                }
            }
            if (!ok) {
                throw ConfigError("fdir.policy: expected none, innovation, sequence or isolation");
            }
        }
        cfg.detector.alpha = fd->number("alpha", cfg.detector.alpha);
        cfg.detector.window = fd->get<int>("window").value_or(cfg.detector.window);
        cfg.detector.per_sensor = fd->get<bool>("per_sensor").value_or(cfg.detector.per_sensor);
        fd->finish();
        validate(cfg.detector);
    }

    if (auto m = root.map("metrics")) {
        cfg.settle_time = m->number("settle_time", cfg.settle_time);
        m->finish();
    }

    root.finish();
    validate(cfg);
    return cfg;
}

void validate(const ScenarioConfig& cfg) {
    validate(cfg.truth.orbit);
    const SliceMap slices = SliceMap::standard(cfg.layout());
    for (std::size_t i = 0; i < cfg.faults.size(); ++i) {
        try {
            validate(cfg.faults[i], slices);
        } catch (const ConfigError& e) {
            throw ConfigError("faults[" + std::to_string(i) + "]: " + e.what());
        }
    }
    if (cfg.filter.model.sensors.empty()) {
        throw ConfigError("filter.sensors: at least one sensor required");
    }
    validate(cfg.detector);
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot read scenario file '" + path.string() + "'");
    }
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        return parse_scenario(buf.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path.filename().string() + ": " + e.what());
    }
}

std::filesystem::path resolve_scenario_path(const std::string& arg,
                                            const std::filesystem::path& bundled_dir) {
    const std::filesystem::path p(arg);
    if (std::filesystem::exists(p)) {
        return p;
    }
    for (const char* ext : {".yaml", ""}) {
        const std::filesystem::path candidate = bundled_dir / (arg + ext);
        if (std::filesystem::exists(candidate)) {
            return candidate;
        }
    }
    return p;
}

} // namespace attfdir
