#include "attfdir/fdir.hpp"

#include "attfdir/error.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>

namespace attfdir {

double chi2_cdf(int dof, double x) {
    if (x <= 0.0) {
        return 0.0;
    }
    return boost::math::gamma_p(0.5 * dof, 0.5 * x);
}

double chi2_quantile(int dof, double alpha) {
    if (dof < 1) {
        throw ConfigError("chi2_quantile: dof must be >= 1");
    }
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw ConfigError("chi2_quantile: alpha must be in (0, 1)");
    }
    const double k = 0.5 * dof;
    double lo = 0.0;
    double hi = std::max(1.0, 2.0 * dof);
    while (chi2_cdf(dof, hi) < alpha) {
        lo = hi;
        hi *= 2.0;
    }
    // Newton steps safeguarded by the bracket [lo, hi].
    double x = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        const double err = chi2_cdf(dof, x) - alpha;
        if (std::abs(err) < 1e-12) {
            return x;
        }
        if (err < 0.0) {
            lo = x;
        } else {
            hi = x;
        }
        const double pdf = 0.5 * boost::math::gamma_p_derivative(k, 0.5 * x);
        double next = pdf > 0.0 ? x - err / pdf : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) {
            next = 0.5 * (lo + hi);
        }
        if (hi - lo < 1e-15 * hi) {
            return next;
        }
        x = next;
    }
    return x;
}

void validate(const DetectorConfig& cfg) {
    if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) {
        throw ConfigError("fdir.alpha must be in (0, 1)");
    }
    if (cfg.window < 1) {
        throw ConfigError("fdir.window must be >= 1");
    }
}

NisWindow::NisWindow(int size) : size_(size) {
    if (size < 1) {
        throw ConfigError("NisWindow: size must be >= 1");
    }
    values_.reserve(static_cast<std::size_t>(size));
}

void NisWindow::push(double nis) {
    if (values_.size() < static_cast<std::size_t>(size_)) {
        values_.push_back(nis);
        return;
    }
    values_[head_] = nis;
    head_ = (head_ + 1) % values_.size();
}

std::vector<double> NisWindow::contents() const {
    std::vector<double> out;
    out.reserve(values_.size());
    for (std::size_t i = 0; i < values_.size(); ++i) {
        out.push_back(values_[(head_ + i) % values_.size()]);
    }
    return out;
}

double NisWindow::mean() const {
    double m = 0.0;
    double k = 0.0;
    for (double v : contents()) {
        k += 1.0;
        m += (v - m) / k;
    }
    return m;
}

FaultReport innovation_filter_check(const InnovationRecord& record, const DetectorConfig& cfg) {
    FaultReport r;
    r.t = record.t;
    r.dof = static_cast<int>(record.nu.size());
    r.statistic = record.nis;
    r.threshold = chi2_quantile(r.dof, cfg.alpha);
    r.detected = r.statistic > r.threshold;
    return r;
}

FaultReport sequence_monitor_update(NisWindow& window, double nis, int dof, double t,
                                    const DetectorConfig& cfg) {
    window.push(nis);
    FaultReport r;
    r.t = t;
    r.dof = dof;
    r.statistic = window.mean();
    r.threshold = chi2_quantile(dof, cfg.alpha);
    r.detected = r.statistic > r.threshold;
    return r;
}

namespace {

SensorNis sensor_statistic(const std::string& name, const Vec& nu, const Mat& s, double alpha) {
    SensorNis out;
    out.sensor = name;
    out.dof = static_cast<int>(nu.size());
    out.nis = compute_nis(nu, s);
    out.threshold = chi2_quantile(out.dof, alpha);
    out.flagged = out.nis > out.threshold;
    return out;
}

} // namespace

std::vector<SensorNis> per_sensor_nis(const InnovationRecord& record, const SliceMap& slices,
                                      double alpha) {
    std::vector<SensorNis> out;
    for (const auto& s : slices.slices()) {
        out.push_back(sensor_statistic(s.name, record.nu.segment(s.offset, s.size),
                                       record.S.block(s.offset, s.offset, s.size, s.size), alpha));
    }
    return out;
}

std::vector<SensorNis> per_sensor_nis(const InnovationRecord& record, const SliceMap& slices,
                                      const Mat& sigma_pred, const Mat& h, const Mat& r,
                                      double alpha) {
    std::vector<SensorNis> out;
    for (const auto& s : slices.slices()) {
        const Mat hi = h.middleRows(s.offset, s.size);
        const Mat si = hi * sigma_pred * hi.transpose() + r.block(s.offset, s.offset, s.size, s.size);
        out.push_back(sensor_statistic(s.name, record.nu.segment(s.offset, s.size), si, alpha));
    }
    return out;
}

std::optional<ValidMeasurement> slice_valid(const Vec& y, const Mat& h, const Mat& r,
                                            const std::vector<std::string>& healthy,
                                            const SliceMap& slices) {
    if (healthy.empty()) {
        return std::nullopt;
    }
    ValidMeasurement v;
    v.rows = slices.rows(healthy);
    v.slices = slices.subset(healthy);
    const auto m = static_cast<Eigen::Index>(v.rows.size());
    v.y.resize(m);
    v.h.resize(m, h.cols());
    v.r.resize(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const int ri = v.rows[static_cast<std::size_t>(i)];
        v.y[i] = y[ri];
        v.h.row(i) = h.row(ri);
        for (Eigen::Index j = 0; j < m; ++j) {
            v.r(i, j) = r(ri, v.rows[static_cast<std::size_t>(j)]);
        }
    }
    return v;
}

} // namespace attfdir
