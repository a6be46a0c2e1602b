#include "attfdir/filters.hpp"

#include "attfdir/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace attfdir {

double compute_nis(const Vec& nu, const Mat& s) {
    if (s.rows() != nu.size() || s.cols() != nu.size()) {
        throw NumericalError("compute_nis: dimension mismatch");
    }
    if (nu.size() == 0) {
        return 0.0;
    }
    const Eigen::LLT<Mat> llt(s);
    if (llt.info() != Eigen::Success) {
        throw NumericalError("compute_nis: innovation covariance is not positive definite");
    }
    return nu.dot(llt.solve(nu));
}

void symmetrize(Mat& m) { m = 0.5 * (m + m.transpose()).eval(); }

Mat psd_sqrt(const Mat& m) {
    const Eigen::LLT<Mat> llt(m);
    if (llt.info() == Eigen::Success) {
        return llt.matrixL();
    }
    const Eigen::SelfAdjointEigenSolver<Mat> eig(0.5 * (m + m.transpose()));
    const Vec vals = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return eig.eigenvectors() * vals.asDiagonal();
}

namespace {

Mat select_rows(const Mat& m, const std::vector<int>& rows) {
    Mat out(static_cast<Eigen::Index>(rows.size()), m.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
    }
    return out;
}

Vec select(const Vec& v, const std::vector<int>& rows) {
    Vec out(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out[static_cast<Eigen::Index>(i)] = v[rows[i]];
    }
    return out;
}

Mat select_block(const Mat& m, const std::vector<int>& rows) {
    const auto n = static_cast<Eigen::Index>(rows.size());
    Mat out(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            out(i, j) = m(rows[static_cast<std::size_t>(i)], rows[static_cast<std::size_t>(j)]);
        }
    }
    return out;
}

Eigen::LLT<Mat> factor_innovation(const Mat& s) {
    Eigen::LLT<Mat> llt(s);
    if (llt.info() != Eigen::Success) {
        throw NumericalError("innovation covariance is not positive definite (check R)");
    }
    return llt;
}

void check_rows(const std::vector<int>& rows, Eigen::Index dim) {
    for (int r : rows) {
        if (r < 0 || r >= dim) {
            throw ConfigError("update: measurement row out of range");
        }
    }
}

} // namespace

void Estimator::update(const Vec& y) {
    std::vector<int> rows(static_cast<std::size_t>(y.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        rows[i] = static_cast<int>(i);
    }
    update(y, rows);
}

InnovationRecord Estimator::step(const Vec& y, double t_prev, double dt) {
    predict(t_prev, dt);
    InnovationRecord rec = innovation(y, t_prev + dt);
    update(y);
    return rec;
}

// ---------------------------------------------------------------------------
// EKF

Ekf::Ekf(std::shared_ptr<const ProcessModel> f, std::shared_ptr<const MeasurementModel> h,
         GaussianBelief initial, FilterConfig cfg, double jacobian_eps)
    : f_(std::move(f)), h_(std::move(h)), belief_(std::move(initial)), cfg_(std::move(cfg)),
      eps_(jacobian_eps) {
    const int n = f_->dim();
    if (belief_.mean.size() != n || belief_.cov.rows() != n || cfg_.process_noise.rows() != n) {
        throw ConfigError("ekf: state, covariance and Q dimensions disagree");
    }
}

void Ekf::predict(double t, double dt) {
    const StepFunction step = f_->stepper(t, dt);
    a_ = jacobian(step, belief_.mean, eps_);
    belief_.mean = step(belief_.mean);
    belief_.cov = a_ * belief_.cov * a_.transpose() + cfg_.process_noise;
    symmetrize(belief_.cov);
}

InnovationRecord Ekf::innovation(const Vec& y_in, double t) {
    Vec y = y_in;
    h_->align(y, belief_.mean);
    const Mat hj = h_->jacobian(belief_.mean);
    InnovationRecord rec;
    rec.t = t;
    rec.source = "ekf";
    rec.nu = y - h_->predict(belief_.mean);
    rec.S = hj * belief_.cov * hj.transpose() + h_->noise();
    rec.nis = compute_nis(rec.nu, rec.S);
    return rec;
}

void Ekf::update(const Vec& y_in, const std::vector<int>& rows) {
    if (rows.empty()) {
        return;
    }
    check_rows(rows, y_in.size());
    Vec y = y_in;
    h_->align(y, belief_.mean);
    const Mat hr = select_rows(h_->jacobian(belief_.mean), rows);
    const Vec nu = select(y, rows) - select(h_->predict(belief_.mean), rows);
    const Mat s = hr * belief_.cov * hr.transpose() + select_block(h_->noise(), rows);
    const Eigen::LLT<Mat> llt = factor_innovation(s);
    // K = Σ⁻ Hᵀ S⁻¹ = (S⁻¹ H Σ⁻)ᵀ since S and Σ⁻ are symmetric.
    const Mat k = llt.solve(hr * belief_.cov).transpose();
    belief_.mean += k * nu;
    const auto n = belief_.cov.rows();
    belief_.cov = (Mat::Identity(n, n) - k * hr) * belief_.cov;
    symmetrize(belief_.cov);
    f_->normalize(belief_.mean);
}

// ---------------------------------------------------------------------------
// UKF

SigmaPointSet ukf_sigma_points(const Vec& mean, const Mat& cov, const UkfParams& p) {
    const auto n = mean.size();
    const double nd = static_cast<double>(n);
    const double lambda = p.alpha * p.alpha * (nd + p.kappa) - nd;
    const double c = nd + lambda;
    if (!(c > 0.0)) {
        throw ConfigError("ukf: n + lambda must be positive");
    }

    Mat root;
    const Eigen::LLT<Mat> llt(c * cov);
    if (llt.info() == Eigen::Success) {
        root = llt.matrixL();
    } else {
        const Eigen::SelfAdjointEigenSolver<Mat> eig(0.5 * (cov + cov.transpose()));
        if (eig.eigenvalues().minCoeff() < -1e-6) {
            throw NumericalError("ukf_sigma_points: covariance is badly indefinite");
        }
        root = eig.eigenvectors() * (c * eig.eigenvalues().cwiseMax(0.0)).cwiseSqrt().asDiagonal();
    }

    SigmaPointSet s;
    s.points.resize(n, 2 * n + 1);
    s.points.col(0) = mean;
    for (Eigen::Index i = 0; i < n; ++i) {
        s.points.col(1 + i) = mean + root.col(i);
        s.points.col(1 + n + i) = mean - root.col(i);
    }
    s.mean_weights = Vec::Constant(2 * n + 1, 1.0 / (2.0 * c));
    s.cov_weights = s.mean_weights;
    s.mean_weights[0] = lambda / c;
    s.cov_weights[0] = lambda / c + (1.0 - p.alpha * p.alpha + p.beta);
    return s;
}

Ukf::Ukf(std::shared_ptr<const ProcessModel> f, std::shared_ptr<const MeasurementModel> h,
         GaussianBelief initial, FilterConfig cfg)
    : f_(std::move(f)), h_(std::move(h)), belief_(std::move(initial)), cfg_(std::move(cfg)) {
    const int n = f_->dim();
    if (belief_.mean.size() != n || belief_.cov.rows() != n || cfg_.process_noise.rows() != n) {
        throw ConfigError("ukf: state, covariance and Q dimensions disagree");
    }
}

void Ukf::predict(double t, double dt) {
    const StepFunction step = f_->stepper(t, dt);
    const SigmaPointSet sp = ukf_sigma_points(belief_.mean, belief_.cov, cfg_.ukf);
    const auto cols = sp.points.cols();
    Mat prop(sp.points.rows(), cols);
    for (Eigen::Index i = 0; i < cols; ++i) {
        prop.col(i) = step(sp.points.col(i));
    }
    Vec mean = prop * sp.mean_weights;
    Mat cov = cfg_.process_noise;
    for (Eigen::Index i = 0; i < cols; ++i) {
        const Vec d = prop.col(i) - mean;
        cov += sp.cov_weights[i] * d * d.transpose();
    }
    symmetrize(cov);
    f_->normalize(mean);
    belief_ = {mean, cov};
    measurement_ready_ = false;
}

void Ukf::prepare_measurement() {
    if (measurement_ready_) {
        return;
    }
    const SigmaPointSet sp = ukf_sigma_points(belief_.mean, belief_.cov, cfg_.ukf);
    const auto cols = sp.points.cols();
    const int m = h_->dim();
    meas_pts_.resize(m, cols);
    for (Eigen::Index i = 0; i < cols; ++i) {
        meas_pts_.col(i) = h_->predict(sp.points.col(i));
    }
    y_hat_ = meas_pts_ * sp.mean_weights;
    state_dev_ = sp.points.colwise() - belief_.mean;
    cov_weights_ = sp.cov_weights;
    s_yy_ = cfg_.ukf.r_scale * h_->noise();
    s_xy_ = Mat::Zero(belief_.mean.size(), m);
    for (Eigen::Index i = 0; i < cols; ++i) {
        const Vec dz = meas_pts_.col(i) - y_hat_;
        s_yy_ += cov_weights_[i] * dz * dz.transpose();
        s_xy_ += cov_weights_[i] * state_dev_.col(i) * dz.transpose();
    }
    symmetrize(s_yy_);
    measurement_ready_ = true;
}

InnovationRecord Ukf::innovation(const Vec& y_in, double t) {
    prepare_measurement();
    Vec y = y_in;
    h_->align(y, belief_.mean);
    InnovationRecord rec;
    rec.t = t;
    rec.source = "ukf";
    rec.nu = y - y_hat_;
    rec.S = s_yy_;
    rec.nis = compute_nis(rec.nu, rec.S);
    return rec;
}

void Ukf::update(const Vec& y_in, const std::vector<int>& rows) {
    if (rows.empty()) {
        return;
    }
    check_rows(rows, y_in.size());
    prepare_measurement();
    Vec y = y_in;
    h_->align(y, belief_.mean);
    const Mat s = select_block(s_yy_, rows);
    const Mat sxy = select_rows(s_xy_.transpose(), rows).transpose();
    const Vec nu = select(y, rows) - select(y_hat_, rows);
    const Eigen::LLT<Mat> llt = factor_innovation(s);
    const Mat k = llt.solve(sxy.transpose()).transpose();
    belief_.mean += k * nu;
    belief_.cov -= k * s * k.transpose();
    symmetrize(belief_.cov);
    f_->normalize(belief_.mean);
    measurement_ready_ = false;
}

// ---------------------------------------------------------------------------
// Particle filter

std::vector<int> systematic_resample(const Vec& weights, double u0) {
    const auto n = weights.size();
    std::vector<int> idx(static_cast<std::size_t>(n));
    const double total = weights.sum();
    double cumulative = weights[0] / total;
    Eigen::Index i = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
        const double pos = (u0 + static_cast<double>(j)) / static_cast<double>(n);
        while (pos >= cumulative && i < n - 1) {
            ++i;
            cumulative += weights[i] / total;
        }
        idx[static_cast<std::size_t>(j)] = static_cast<int>(i);
    }
    return idx;
}

double effective_sample_size(const Vec& weights) { return 1.0 / weights.squaredNorm(); }

namespace {

ParticleSet draw_particles(const GaussianBelief& b, int count, const ProcessModel& f,
                           RandomStream& rng) {
    ParticleSet set;
    const auto n = b.mean.size();
    const Mat root = psd_sqrt(b.cov);
    set.states.resize(n, count);
    Vec z(n);
    for (int i = 0; i < count; ++i) {
        for (Eigen::Index k = 0; k < n; ++k) {
            z[k] = rng.normal();
        }
        Vec x = b.mean + root * z;
        f.normalize(x);
        set.states.col(i) = x;
    }
    set.weights = Vec::Constant(count, 1.0 / count);
    return set;
}

} // namespace

ParticleFilter::ParticleFilter(std::shared_ptr<const ProcessModel> f,
                               std::shared_ptr<const MeasurementModel> h,
                               const GaussianBelief& initial, FilterConfig cfg,
                               std::uint64_t seed)
    : f_(std::move(f)), h_(std::move(h)), cfg_(std::move(cfg)), rng_(seed, "pf") {
    if (cfg_.pf.particles < 10) {
        throw ConfigError("pf: at least 10 particles required");
    }
    set_ = draw_particles(initial, cfg_.pf.particles, *f_, rng_);
    jitter_chol_ = psd_sqrt(cfg_.pf.jitter.size() > 0 ? cfg_.pf.jitter : cfg_.process_noise);
}

ParticleFilter::ParticleFilter(std::shared_ptr<const ProcessModel> f,
                               std::shared_ptr<const MeasurementModel> h, ParticleSet particles,
                               FilterConfig cfg, std::uint64_t seed)
    : f_(std::move(f)), h_(std::move(h)), set_(std::move(particles)), cfg_(std::move(cfg)),
      rng_(seed, "pf") {
    if (set_.states.cols() != set_.weights.size() || set_.states.rows() != f_->dim()) {
        throw ConfigError("pf: particle set dimensions disagree with the model");
    }
    jitter_chol_ = psd_sqrt(cfg_.pf.jitter.size() > 0 ? cfg_.pf.jitter : cfg_.process_noise);
}

void ParticleFilter::predict(double t, double dt) {
    const StepFunction step = f_->stepper(t, dt);
    const auto n = set_.states.rows();
    Vec z(n);
    for (Eigen::Index i = 0; i < set_.states.cols(); ++i) {
        for (Eigen::Index k = 0; k < n; ++k) {
            z[k] = rng_.normal();
        }
        Vec x = step(set_.states.col(i)) + jitter_chol_ * z;
        f_->normalize(x);
        set_.states.col(i) = x;
    }
}

Vec ParticleFilter::weighted_mean() const { return set_.states * set_.weights; }

InnovationRecord ParticleFilter::innovation(const Vec& y_in, double t) {
    Vec y = y_in;
    h_->align(y, weighted_mean());
    const auto count = set_.states.cols();
    Mat z(h_->dim(), count);
    for (Eigen::Index i = 0; i < count; ++i) {
        z.col(i) = h_->predict(set_.states.col(i));
    }
    const Vec y_hat = z * set_.weights;
    Mat s = h_->noise();
    for (Eigen::Index i = 0; i < count; ++i) {
        const Vec d = z.col(i) - y_hat;
        s += set_.weights[i] * d * d.transpose();
    }
    symmetrize(s);
    InnovationRecord rec;
    rec.t = t;
    rec.source = "pf";
    rec.nu = y - y_hat;
    rec.S = s;
    rec.nis = compute_nis(rec.nu, rec.S);
    return rec;
}

void ParticleFilter::update(const Vec& y_in, const std::vector<int>& rows) {
    degenerate_ = false;
    resampled_ = false;
    if (rows.empty()) {
        return;
    }
    check_rows(rows, y_in.size());
    Vec y = y_in;
    h_->align(y, weighted_mean());
    const Vec yr = select(y, rows);
    const Eigen::LLT<Mat> r_llt = factor_innovation(select_block(h_->noise(), rows));

    const auto count = set_.states.cols();
    Vec logw(count);
    for (Eigen::Index i = 0; i < count; ++i) {
        const Vec d = yr - select(h_->predict(set_.states.col(i)), rows);
        const double mahal = d.dot(r_llt.solve(d));
        logw[i] = std::log(set_.weights[i]) - 0.5 * mahal;
    }
    const double peak = logw.maxCoeff();
    Vec w(count);
    if (std::isfinite(peak)) {
        w = (logw.array() - peak).exp().matrix();
    } else {
        w.setZero();
    }
    const double total = w.sum();
    if (!(total > 0.0) || !std::isfinite(total)) {
        set_.weights.setConstant(1.0 / static_cast<double>(count));
        degenerate_ = true;
        return;
    }
    set_.weights = w / total;
    if (effective_sample_size(set_.weights) <
        cfg_.pf.ess_threshold * static_cast<double>(count)) {
        resample();
    }
}

void ParticleFilter::resample() {
    const std::vector<int> idx = systematic_resample(set_.weights, rng_.uniform());
    Mat next(set_.states.rows(), set_.states.cols());
    for (std::size_t j = 0; j < idx.size(); ++j) {
        next.col(static_cast<Eigen::Index>(j)) = set_.states.col(idx[j]);
    }
    set_.states = std::move(next);
    set_.weights.setConstant(1.0 / static_cast<double>(set_.weights.size()));
    resampled_ = true;
}

GaussianBelief ParticleFilter::belief() const {
    GaussianBelief b;
    const Vec raw = weighted_mean();
    b.cov = Mat::Zero(raw.size(), raw.size());
    for (Eigen::Index i = 0; i < set_.states.cols(); ++i) {
        const Vec d = set_.states.col(i) - raw;
        b.cov += set_.weights[i] * d * d.transpose();
    }
    b.mean = raw;
    f_->normalize(b.mean);
    return b;
}

// ---------------------------------------------------------------------------

GaussianStepResult ekf_step(const GaussianBelief& belief, const Vec& y,
                            const std::shared_ptr<const ProcessModel>& f,
                            const std::shared_ptr<const MeasurementModel>& h,
                            const FilterConfig& cfg, double t, double dt) {
    Ekf ekf(f, h, belief, cfg);
    InnovationRecord rec = ekf.step(y, t, dt);
    return {ekf.belief(), std::move(rec)};
}

GaussianStepResult ukf_step(const GaussianBelief& belief, const Vec& y,
                            const std::shared_ptr<const ProcessModel>& f,
                            const std::shared_ptr<const MeasurementModel>& h,
                            const FilterConfig& cfg, double t, double dt) {
    Ukf ukf(f, h, belief, cfg);
    InnovationRecord rec = ukf.step(y, t, dt);
    return {ukf.belief(), std::move(rec)};
}

ParticleStepResult pf_step(const ParticleSet& particles, const Vec& y,
                           const std::shared_ptr<const ProcessModel>& f,
                           const std::shared_ptr<const MeasurementModel>& h,
                           const FilterConfig& cfg, std::uint64_t seed, double t, double dt) {
    ParticleFilter pf(f, h, particles, cfg, seed);
    InnovationRecord rec = pf.step(y, t, dt);
    rec.degenerate = pf.last_update_degenerate();
    return {pf.particles(), std::move(rec)};
}

} // namespace attfdir
