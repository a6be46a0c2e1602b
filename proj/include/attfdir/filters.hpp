#pragma once

#include "attfdir/innovation.hpp"
#include "attfdir/models.hpp"
#include "attfdir/rng.hpp"

#include <memory>
#include <string_view>
#include <vector>

namespace attfdir {

struct GaussianBelief {
    Vec mean;
    Mat cov;
};

struct UkfParams {
    double alpha = 1e-1;
    double beta = 2.0;
    double kappa = 0.0;
    /// Multiplier on R inside Σyy. Values below one make the UKF innovation
    /// test more sensitive at the price of a less consistent NIS.
    double r_scale = 1.0;
};

struct PfParams {
    int particles = 1000;
    Mat jitter;                   ///< empty: use Q
    double ess_threshold = 0.5;   ///< resample when N_eff < threshold · N
};

struct FilterConfig {
    Mat process_noise;  ///< Q
    UkfParams ukf;
    PfParams pf;
};

/// (μ + Σ)/2-style re-symmetrization.
void symmetrize(Mat& m);

/// Recursive estimator split into the pieces FDIR needs: predict, inspect
/// the innovation, then update with a chosen subset of measurement rows.
class Estimator {
public:
    virtual ~Estimator() = default;

    [[nodiscard]] virtual std::string_view name() const = 0;
    /// Time update from t to t + dt.
    virtual void predict(double t, double dt) = 0;
    /// Innovation of the full measurement y against the current prediction.
    [[nodiscard]] virtual InnovationRecord innovation(const Vec& y, double t) = 0;
    /// Measurement update with rows `rows` of y (in stacking order).
    virtual void update(const Vec& y, const std::vector<int>& rows) = 0;
    [[nodiscard]] virtual GaussianBelief belief() const = 0;

    /// Update with every row.
    void update(const Vec& y);
    /// predict + innovation + full update.
    InnovationRecord step(const Vec& y, double t_prev, double dt);
};

// ---------------------------------------------------------------------------

class Ekf final : public Estimator {
public:
    Ekf(std::shared_ptr<const ProcessModel> f, std::shared_ptr<const MeasurementModel> h,
        GaussianBelief initial, FilterConfig cfg, double jacobian_eps = 1e-6);

    [[nodiscard]] std::string_view name() const override { return "ekf"; }
    void predict(double t, double dt) override;
    [[nodiscard]] InnovationRecord innovation(const Vec& y, double t) override;
    using Estimator::update;
    void update(const Vec& y, const std::vector<int>& rows) override;
    [[nodiscard]] GaussianBelief belief() const override { return belief_; }

    /// Last finite-difference process Jacobian.
    [[nodiscard]] const Mat& transition() const { return a_; }

private:
    std::shared_ptr<const ProcessModel> f_;
    std::shared_ptr<const MeasurementModel> h_;
    GaussianBelief belief_;
    FilterConfig cfg_;
    double eps_;
    Mat a_;
};

// ---------------------------------------------------------------------------

struct SigmaPointSet {
    Mat points;         ///< n × (2n + 1), column 0 is the mean
    Vec mean_weights;
    Vec cov_weights;
};

/// Scaled sigma points, λ = α²(n + κ) − n, columns μ ± col_i(√((n + λ) Σ)).
/// The square root is a Cholesky factor, falling back to a symmetric
/// eigendecomposition with negative eigenvalues clamped to zero. Throws
/// NumericalError when min eig(Σ) < −1e-6.
[[nodiscard]] SigmaPointSet ukf_sigma_points(const Vec& mean, const Mat& cov,
                                             const UkfParams& params);

class Ukf final : public Estimator {
public:
    Ukf(std::shared_ptr<const ProcessModel> f, std::shared_ptr<const MeasurementModel> h,
        GaussianBelief initial, FilterConfig cfg);

    [[nodiscard]] std::string_view name() const override { return "ukf"; }
    void predict(double t, double dt) override;
    [[nodiscard]] InnovationRecord innovation(const Vec& y, double t) override;
    using Estimator::update;
    void update(const Vec& y, const std::vector<int>& rows) override;
    [[nodiscard]] GaussianBelief belief() const override { return belief_; }

private:
    void prepare_measurement();

    std::shared_ptr<const ProcessModel> f_;
    std::shared_ptr<const MeasurementModel> h_;
    GaussianBelief belief_;
    FilterConfig cfg_;
    bool measurement_ready_ = false;
    Mat state_dev_;  ///< χᵢ − μ⁻
    Mat meas_pts_;   ///< ζᵢ
    Vec y_hat_;
    Vec cov_weights_;
    Mat s_yy_;
    Mat s_xy_;
};

// ---------------------------------------------------------------------------

struct ParticleSet {
    Mat states;  ///< n × N
    Vec weights;
};

/// Systematic resampling: positions (u0 + j)/N, u0 in [0, 1). Returns the
/// source index of each of the N new particles.
[[nodiscard]] std::vector<int> systematic_resample(const Vec& weights, double u0);

[[nodiscard]] double effective_sample_size(const Vec& weights);

class ParticleFilter final : public Estimator {
public:
    /// Draws N particles from N(initial.mean, initial.cov).
    ParticleFilter(std::shared_ptr<const ProcessModel> f,
                   std::shared_ptr<const MeasurementModel> h, const GaussianBelief& initial,
                   FilterConfig cfg, std::uint64_t seed);
    /// Starts from an explicit particle set.
    ParticleFilter(std::shared_ptr<const ProcessModel> f,
                   std::shared_ptr<const MeasurementModel> h, ParticleSet particles,
                   FilterConfig cfg, std::uint64_t seed);

    [[nodiscard]] std::string_view name() const override { return "pf"; }
    void predict(double t, double dt) override;
    [[nodiscard]] InnovationRecord innovation(const Vec& y, double t) override;
    using Estimator::update;
    void update(const Vec& y, const std::vector<int>& rows) override;
    /// Weighted mean (quaternion renormalized) and weighted covariance.
    [[nodiscard]] GaussianBelief belief() const override;

    [[nodiscard]] const ParticleSet& particles() const { return set_; }
    [[nodiscard]] bool last_update_degenerate() const { return degenerate_; }
    [[nodiscard]] bool last_update_resampled() const { return resampled_; }

private:
    void resample();
    [[nodiscard]] Vec weighted_mean() const;

    std::shared_ptr<const ProcessModel> f_;
    std::shared_ptr<const MeasurementModel> h_;
    ParticleSet set_;
    FilterConfig cfg_;
    RandomStream rng_;
    Mat jitter_chol_;
    bool degenerate_ = false;
    bool resampled_ = false;
};

/// Lower-triangular square root of a PSD matrix with an eigendecomposition
/// fallback (negative eigenvalues clamped to zero).
[[nodiscard]] Mat psd_sqrt(const Mat& m);

// Single-step conveniences over fresh filter objects.

struct GaussianStepResult {
    GaussianBelief belief;
    InnovationRecord record;
};

struct ParticleStepResult {
    ParticleSet particles;
    InnovationRecord record;
};

[[nodiscard]] GaussianStepResult ekf_step(const GaussianBelief& belief, const Vec& y,
                                          const std::shared_ptr<const ProcessModel>& f,
                                          const std::shared_ptr<const MeasurementModel>& h,
                                          const FilterConfig& cfg, double t, double dt);
[[nodiscard]] GaussianStepResult ukf_step(const GaussianBelief& belief, const Vec& y,
                                          const std::shared_ptr<const ProcessModel>& f,
                                          const std::shared_ptr<const MeasurementModel>& h,
                                          const FilterConfig& cfg, double t, double dt);
[[nodiscard]] ParticleStepResult pf_step(const ParticleSet& particles, const Vec& y,
                                         const std::shared_ptr<const ProcessModel>& f,
                                         const std::shared_ptr<const MeasurementModel>& h,
                                         const FilterConfig& cfg, std::uint64_t seed, double t,
                                         double dt);

} // namespace attfdir
