#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "hompcm/presets.hpp"
#include "hompcm/quantum.hpp"
#include "hompcm/rcwa.hpp"
#include "hompcm/tmm.hpp"

using namespace hompcm;

namespace {

MaterialRegistry const& registry()
{
    static MaterialRegistry const reg = MaterialRegistry::load_default();
    return reg;
}

double sum_power(std::vector<DiffractionOrder> const& orders)
{
    double p = 0.0;
    for (auto const& o : orders)
        if (o.propagating)
            p += std::norm(o.amplitude);
    return p;
}

}  // namespace

TEST(Floquet, CutoffPeriods)
{
    double const s45 = std::sin(std::numbers::pi / 4.0);
    EXPECT_NEAR(floquet_max_period(810.0, 45.0, 1.0), 810.0 / (1.0 + s45), 1e-9);
    EXPECT_NEAR(floquet_max_period(810.0, 45.0, 1.0), 474.4, 0.1);
    EXPECT_DOUBLE_EQ(floquet_max_period(810.0, 0.0, 1.0), 810.0);
    EXPECT_NEAR(floquet_max_period(810.0, 0.0, 1.45), 810.0 / 1.45, 1e-9);
    EXPECT_NEAR(floquet_max_period(810.0, 90.0, 1.0), 405.0, 1e-9);
    EXPECT_THROW(floquet_max_period(810.0, 45.0, 0.0), ValidationError);
    EXPECT_THROW(floquet_max_period(810.0, 91.0, 1.0), ValidationError);
}

TEST(Rcwa, UniformGratingMatchesTmm)
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> thick(5.0, 300.0), angle(0.0, 60.0), wl(700.0, 950.0), kap(0.0, 1.0),
        period(150.0, 450.0);
    std::uniform_int_distribution<int> count(1, 4), pick(0, 3), end(0, 1);
    char const* mats[] = {"SiO2", "TiO2", "Au", "GeTe"};
    for (int trial = 0; trial < 20; ++trial)
    {
        Grating1D g;
        LayerStack s;
        g.period_nm = period(rng);
        int const n = count(rng);
        for (int i = 0; i < n; ++i)
        {
            std::string const a = mats[pick(rng)], b = mats[pick(rng)];
            double const d = thick(rng), k = kap(rng);
            double const f = end(rng) ? 1.0 : 0.0;
            g.layers.push_back(LamellarLayer{a, b, f, d, k});
            s.layers.push_back(Layer{f == 1.0 ? a : b, d, k});
        }
        if (trial % 2)
            g.exit_medium = s.exit_medium = "SiO2";
        double const w = wl(rng), th = angle(rng);
        for (Side side : {Side::top, Side::bottom})
        {
            auto const r = rcwa_coefficients(g, registry(), w, th, default_harmonics, side);
            auto const t = tmm_coefficients(s, registry(), w, th, side);
            EXPECT_NEAR(std::abs(r.r0 - t.r), 0.0, 1e-6) << trial;
            EXPECT_NEAR(std::abs(r.t0 - t.t), 0.0, 1e-6) << trial;
        }
    }
}

TEST(Rcwa, LosslessGratingConservesPowerWithManyOrders)
{
    Grating1D g;
    g.period_nm = 1200.0;
    g.layers = {LamellarLayer{"TiO2", "SiO2", 0.4, 220.0, std::nullopt}, Layer{"SiO2", 100.0, std::nullopt}};
    g.exit_medium = "SiO2";
    for (double th : {0.0, 20.0, 45.0})
        for (Side side : {Side::top, Side::bottom})
        {
            auto const r = rcwa_coefficients(g, registry(), 810.0, th, default_harmonics, side);
            EXPECT_FALSE(r.single_mode);
            EXPECT_NEAR(sum_power(r.reflected) + sum_power(r.transmitted), 1.0, 1e-8);
            EXPECT_NEAR(r.total_power(), 1.0, 1e-8);
        }
}

TEST(Rcwa, MetalGratingIsPassiveAndReciprocal)
{
    for (double kappa : {0.0, 1.0})
        for (double wl = 770.0; wl <= 900.0; wl += 26.0)
        {
            auto const T = network_matrix_from_grating(structure_a(kappa), registry(), wl, 45.0);
            EXPECT_TRUE(T.passive());
            EXPECT_NEAR(std::abs(T.t1 - T.t4), 0.0, 1e-9) << wl;
        }
}

TEST(Rcwa, HarmonicConvergence)
{
    for (double kappa : {0.0, 1.0})
    {
        auto const a = network_matrix_from_grating(structure_a(kappa), registry(), 810.0, 45.0, 41);
        auto const b = network_matrix_from_grating(structure_a(kappa), registry(), 810.0, 45.0, 61);
        EXPECT_NEAR(coalescence(a), coalescence(b), 5e-4);
        EXPECT_NEAR(std::abs(a.t1 - b.t1), 0.0, 5e-4);
        EXPECT_NEAR(std::abs(a.t3 - b.t3), 0.0, 5e-4);
    }
}

TEST(Rcwa, DefaultHarmonicsAreConverged)
{
    for (double kappa : {0.0, 1.0})
    {
        auto const a = network_matrix_from_grating(structure_a(kappa), registry(), 810.0, 45.0, default_harmonics);
        auto const b = network_matrix_from_grating(structure_a(kappa), registry(), 810.0, 45.0, default_harmonics + 8);
        EXPECT_LT(std::abs(a.t1 - b.t1), 1e-4) << kappa;
        EXPECT_LT(std::abs(a.t2 - b.t2), 1e-4) << kappa;
        EXPECT_LT(std::abs(a.t3 - b.t3), 1e-4) << kappa;
        EXPECT_LT(std::abs(a.t4 - b.t4), 1e-4) << kappa;
    }
}

TEST(Rcwa, SingleModeViolationIsReported)
{
    auto g = structure_a(1.0);
    g.period_nm = 500.0;
    EXPECT_THROW(network_matrix_from_grating(g, registry(), 810.0, 45.0), SingleModeViolation);
    auto const r = rcwa_coefficients(g, registry(), 810.0, 45.0, default_harmonics, Side::top);
    EXPECT_FALSE(r.single_mode);
    g.period_nm = 470.0;
    EXPECT_NO_THROW(network_matrix_from_grating(g, registry(), 810.0, 45.0));
}

TEST(Rcwa, RejectsBadHarmonicsAndPeriod)
{
    auto g = structure_a();
    EXPECT_THROW(network_matrix_from_grating(g, registry(), 810.0, 45.0, 40), ValidationError);
    EXPECT_THROW(network_matrix_from_grating(g, registry(), 810.0, 45.0, 1), ValidationError);
    g.period_nm = 0.0;
    EXPECT_THROW(network_matrix_from_grating(g, registry(), 810.0, 45.0), ValidationError);
    g = structure_a(1.0, 1.2);
    EXPECT_THROW(network_matrix_from_grating(g, registry(), 810.0, 45.0), ValidationError);
}

TEST(RcwaInternals, DiagonalStarMatchesDenseStar)
{
    using namespace hompcm::detail;
    double const k0 = 2.0 * std::numbers::pi / 810.0;
    Eigen::VectorXd kx(9);
    for (int i = 0; i < 9; ++i)
        kx(i) = k0 * 0.7 + (i - 4) * 2.0 * std::numbers::pi / 400.0;
    auto const top = homogeneous_modes(1.0, k0, kx);
    auto const grating = lamellar_modes(complex(-25.0, 1.6), complex(28.0, 25.0), 0.6, k0, kx);
    auto const film = homogeneous_modes(complex(2.1, 0.0), k0, kx);
    auto const sub = homogeneous_modes(complex(2.25, 0.0), k0, kx);

    SMatrix a = interface_smatrix(top, grating);
    append_propagation(a, propagation_phases(grating, 15.0));
    a = star(a, interface_smatrix(grating, film));
    SMatrix const b = interface_smatrix(film, sub);
    ASSERT_TRUE(b.diagonal);
    SMatrix dense = b;
    dense.diagonal = false;
    auto const fast = star(a, b), slow = star(a, dense);
    EXPECT_LT((fast.s11 - slow.s11).norm(), 1e-12);
    EXPECT_LT((fast.s12 - slow.s12).norm(), 1e-12);
    EXPECT_LT((fast.s21 - slow.s21).norm(), 1e-12);
    EXPECT_LT((fast.s22 - slow.s22).norm(), 1e-12);

    SMatrix c = a, d = a;
    append_propagation(c, propagation_phases(grating, 30.0));
    d = star(d, propagation_smatrix(grating, 30.0));
    EXPECT_LT((c.s11 - d.s11).norm(), 1e-12);
    EXPECT_LT((c.s22 - d.s22).norm(), 1e-12);
    EXPECT_LT((c.s21 - d.s21).norm(), 1e-12);
}

// Regression values for the strip-grating preset at the design point.
TEST(Rcwa, StripGratingPresetRegression)
{
    auto const c = network_matrix_from_grating(structure_a(1.0), registry(), 810.0, 45.0);
    auto const a = network_matrix_from_grating(structure_a(0.0), registry(), 810.0, 45.0);
    EXPECT_NEAR(coalescence(c), -0.781242995989, 1e-8);
    EXPECT_NEAR(coalescence(a), 0.594671124106, 1e-8);
    EXPECT_NEAR(baseline(c), 0.106689354941, 1e-8);
    EXPECT_NEAR(baseline(a), 0.285707656277, 1e-8);
}
