#include "attfdir/error.hpp"
#include "attfdir/fdir.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace attfdir;

namespace {

// Chi-square CDF by composite Simpson's rule after u = s², which removes the
// square-root behaviour of the density at zero for odd k.
double simpson_cdf(int k, double x) {
    auto integrand = [k](double s) {
        if (s <= 0.0) {
            return k == 1 ? 2.0 * std::exp(-0.5 * std::log(2.0) - std::lgamma(0.5)) : 0.0;
        }
        const double u = s * s;
        return 2 * s *
               std::exp((k / 2.0 - 1) * std::log(u) - u / 2 - (k / 2.0) * std::log(2.0) -
                        std::lgamma(k / 2.0));
    };
    const int n = 20000;
    const double b = std::sqrt(x);
    const double h = b / n;
    double sum = integrand(0) + integrand(b);
    for (int i = 1; i < n; ++i) {
        sum += (i % 2 ? 4 : 2) * integrand(i * h);
    }
    return sum * h / 3;
}

} // namespace

TEST(Chi2, QuantilesAgainstIntegratedDensity) {
    for (int k : {1, 2, 3, 4, 7, 11}) {
        for (double a : {0.9, 0.95, 0.99}) {
            const double g = chi2_quantile(k, a);
            EXPECT_NEAR(simpson_cdf(k, g), a, 1e-7) << "k=" << k << " a=" << a;
            EXPECT_NEAR(chi2_cdf(k, g), a, 1e-10);
        }
    }
}

TEST(Chi2, DomainErrors) {
    EXPECT_THROW((void)chi2_quantile(0, 0.95), ConfigError);
    EXPECT_THROW((void)chi2_quantile(3, 1.0), ConfigError);
    EXPECT_THROW((void)chi2_quantile(3, 0.0), ConfigError);
}

TEST(Nis, MatchesDenseInverse) {
    Vec nu(3);
    nu << 0.3, -1.2, 0.7;
    Mat s(3, 3);
    s << 2, 0.4, 0.1, 0.4, 1.5, -0.3, 0.1, -0.3, 0.8;
    EXPECT_NEAR(compute_nis(nu, s), nu.dot(s.inverse() * nu), 1e-12);
    Mat bad = Mat::Identity(3, 3);
    bad(1, 1) = -1;
    EXPECT_THROW((void)compute_nis(nu, bad), NumericalError);
}

TEST(Detector, SingleStepThreshold) {
    InnovationRecord r;
    r.nu = Vec::Zero(11);
    r.S = Mat::Identity(11, 11);
    r.nis = 19.7;
    const FaultReport rep = innovation_filter_check(r, DetectorConfig{});
    EXPECT_EQ(rep.dof, 11);
    EXPECT_NEAR(rep.threshold, 19.675, 1e-3);
    EXPECT_TRUE(rep.detected);
    r.nis = 19.6;
    EXPECT_FALSE(innovation_filter_check(r, DetectorConfig{}).detected);
}

TEST(Detector, ConfigValidation) {
    EXPECT_THROW(validate(DetectorConfig{1.5, 20, false}), ConfigError);
    EXPECT_THROW(validate(DetectorConfig{0.95, 0, false}), ConfigError);
}

TEST(Window, RunningMeanAndWarmup) {
    NisWindow w(3);
    w.push(3.0);
    EXPECT_DOUBLE_EQ(w.mean(), 3.0);
    w.push(6.0);
    EXPECT_DOUBLE_EQ(w.mean(), 4.5);
    w.push(9.0);
    w.push(12.0);
    EXPECT_EQ(w.count(), 3);
    EXPECT_DOUBLE_EQ(w.mean(), 9.0);
    EXPECT_EQ(w.contents(), (std::vector<double>{6.0, 9.0, 12.0}));
    NisWindow c(20);
    for (int i = 0; i < 100; ++i) {
        c.push(0.1);
    }
    EXPECT_EQ(c.mean(), 0.1);
}

TEST(Window, SequenceMonitorFiresOnSustainedShift) {
    NisWindow w(20);
    DetectorConfig cfg;
    for (int i = 0; i < 40; ++i) {
        EXPECT_FALSE(sequence_monitor_update(w, 11.0, 11, i, cfg).detected);
    }
    int fired = -1;
    for (int i = 0; i < 20 && fired < 0; ++i) {
        if (sequence_monitor_update(w, 40.0, 11, 40 + i, cfg).detected) {
            fired = i;
        }
    }
    // Mean crosses 19.675 once (11·(20−m) + 40·m)/20 > 19.675, i.e. m = 6.
    EXPECT_EQ(fired, 5);
}

TEST(Isolation, PerSensorBlocksMatchExplicitAssembly) {
    const SliceMap slices = SliceMap::standard(MeasurementLayout::Quat11);
    Mat h = Mat::Zero(11, 7);
    h.block(0, 0, 4, 4).setIdentity();
    h.block(4, 0, 4, 4).setIdentity();
    h.block(8, 4, 3, 3).setIdentity();
    Mat p = Mat::Identity(7, 7) * 1e-4;
    p(0, 5) = p(5, 0) = 2e-5;
    Vec rd(11);
    rd << 1e-3, 1e-3, 1e-3, 1e-3, 0.01, 0.02, 0.05, 0.03, 2.5e-5, 2.5e-5, 2.5e-5;
    const Mat r = rd.asDiagonal();
    InnovationRecord rec;
    rec.nu = Vec::LinSpaced(11, -0.05, 0.08);
    rec.S = h * p * h.transpose() + r;
    rec.nis = compute_nis(rec.nu, rec.S);
    const auto a = per_sensor_nis(rec, slices, 0.95);
    const auto b = per_sensor_nis(rec, slices, p, h, r, 0.95);
    ASSERT_EQ(a.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_NEAR(a[i].nis, b[i].nis, 1e-9 * b[i].nis);
        EXPECT_EQ(a[i].dof, slices.slices()[i].size);
    }
    EXPECT_NEAR(a[2].threshold, 7.8147, 1e-4);
}

TEST(Isolation, FullNisDominatesEverySubBlock) {
    Mat s(5, 5);
    s << 2, 0.3, 0.1, 0, 0.2, 0.3, 1, 0, 0.1, 0, 0.1, 0, 1.5, 0.2, 0, 0, 0.1, 0.2, 0.7, 0.1, 0.2,
        0, 0, 0.1, 0.9;
    Vec nu(5);
    nu << 1, -2, 0.5, 0.3, -0.7;
    const double full = compute_nis(nu, s);
    EXPECT_GE(full, compute_nis(nu.head(2), s.topLeftCorner(2, 2)));
    EXPECT_GE(full, compute_nis(nu.tail(3), s.bottomRightCorner(3, 3)));
}

TEST(Isolation, SliceValid) {
    const SliceMap slices = SliceMap::standard(MeasurementLayout::Quat11);
    const Vec y = Vec::LinSpaced(11, 0, 10);
    const Mat h = Mat::Random(11, 7);
    const Mat r = Vec::LinSpaced(11, 1, 11).asDiagonal();
    const auto v = slice_valid(y, h, r, {kStarTracker, kMagnetometer}, slices);
    ASSERT_TRUE(v);
    EXPECT_EQ(v->y, y.head(8));
    EXPECT_EQ(v->h, h.topRows(8));
    EXPECT_EQ(v->r, r.topLeftCorner(8, 8));
    EXPECT_FALSE(slice_valid(y, h, r, {}, slices));
    const auto g = slice_valid(y, h, r, {kGyro}, slices);
    EXPECT_EQ(g->slices.at(kGyro).offset, 0);
    EXPECT_EQ(g->y, y.tail(3));
}
