#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "hompcm/presets.hpp"
#include "hompcm/quantum.hpp"
#include "hompcm/tmm.hpp"

using namespace hompcm;

namespace {

MaterialRegistry const& registry()
{
    static MaterialRegistry const reg = MaterialRegistry::load_default();
    return reg;
}

MaterialRegistry const& glass_registry()
{
    static MaterialRegistry const reg =
        MaterialRegistry::load_directory(std::filesystem::path(HOMPCM_TEST_DATA_DIR) / "materials_custom");
    return reg;
}

// Airy summation for a single TE film between two identical ambients.
struct Airy
{
    complex r, t;
};

Airy airy_film(double n_film, double d_nm, double wavelength_nm, double angle_deg)
{
    double const k0 = 2.0 * std::numbers::pi / wavelength_nm;
    double const s = std::sin(angle_deg * std::numbers::pi / 180.0);
    complex const q0 = k0 * std::cos(angle_deg * std::numbers::pi / 180.0);
    complex const q1 = k0 * std::sqrt(complex(n_film * n_film - s * s));
    complex const r01 = (q0 - q1) / (q0 + q1), r12 = (q1 - q0) / (q1 + q0);
    complex const t01 = 2.0 * q0 / (q0 + q1), t12 = 2.0 * q1 / (q1 + q0);
    complex const e1 = std::exp(complex(0, 1) * q1 * d_nm);
    complex const den = 1.0 + r01 * r12 * e1 * e1;
    return {(r01 + r12 * e1 * e1) / den, t01 * t12 * e1 / den};
}

double unitarity_error(NetworkMatrix const& T)
{
    // ||T^H T - I||_max
    complex const a = std::conj(T.t1) * T.t1 + std::conj(T.t3) * T.t3 - 1.0;
    complex const b = std::conj(T.t1) * T.t2 + std::conj(T.t3) * T.t4;
    complex const d = std::conj(T.t2) * T.t2 + std::conj(T.t4) * T.t4 - 1.0;
    return std::max({std::abs(a), std::abs(b), std::abs(d)});
}

}  // namespace

TEST(Tmm, EmptyStackIsIdentity)
{
    LayerStack const s;
    auto const T = network_matrix_from_stack(s, registry(), 810.0, 45.0);
    EXPECT_EQ(T.t1, complex(1.0, 0.0));
    EXPECT_EQ(T.t4, complex(1.0, 0.0));
    EXPECT_EQ(T.t2, complex(0.0, 0.0));
    EXPECT_EQ(T.t3, complex(0.0, 0.0));
}

TEST(Tmm, SingleFilmMatchesAiry)
{
    LayerStack s;
    s.layers = {{"Glass", 200.0, std::nullopt}};
    for (double angle : {0.0, 30.0, 45.0, 70.0})
        for (double wl : {500.0, 633.0, 810.0})
        {
            auto const rt = tmm_coefficients(s, glass_registry(), wl, angle, Side::top);
            auto const ref = airy_film(1.5, 200.0, wl, angle);
            EXPECT_NEAR(std::abs(rt.r - ref.r), 0.0, 1e-12) << angle << " " << wl;
            EXPECT_NEAR(std::abs(rt.t - ref.t), 0.0, 1e-12) << angle << " " << wl;
        }
}

TEST(Tmm, BareInterfaceMatchesFresnelWithFluxNormalization)
{
    LayerStack s;
    s.exit_medium = "Glass";
    double const angle = 45.0, n = 1.5;
    double const c0 = std::cos(angle * std::numbers::pi / 180.0);
    double const c1 = std::sqrt(1.0 - std::pow(std::sin(angle * std::numbers::pi / 180.0) / n, 2));
    double const r = (c0 - n * c1) / (c0 + n * c1);
    double const t = 2.0 * c0 / (c0 + n * c1) * std::sqrt(n * c1 / c0);
    auto const rt = tmm_coefficients(s, glass_registry(), 810.0, angle, Side::top);
    EXPECT_NEAR(std::abs(rt.r - r), 0.0, 1e-13);
    EXPECT_NEAR(std::abs(rt.t - t), 0.0, 1e-13);
    EXPECT_NEAR(r * r + t * t, 1.0, 1e-14);
}

TEST(Tmm, ZeroThicknessLayerIsAbsent)
{
    LayerStack a = structure_b(1.0), b = a;
    b.layers.insert(b.layers.begin() + 2, Layer{"Au", 0.0, std::nullopt});
    auto const Ta = network_matrix_from_stack(a, registry(), 810.0, 45.0);
    auto const Tb = network_matrix_from_stack(b, registry(), 810.0, 45.0);
    EXPECT_NEAR(std::abs(Ta.t1 - Tb.t1), 0.0, 1e-13);
    EXPECT_NEAR(std::abs(Ta.t3 - Tb.t3), 0.0, 1e-13);
}

TEST(Tmm, LosslessRandomStacksAreUnitary)
{
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> thick(1.0, 400.0), angle(0.0, 80.0), wl(600.0, 1000.0);
    std::uniform_int_distribution<int> count(1, 12), pick(0, 1);
    char const* mats[] = {"SiO2", "TiO2"};
    for (int trial = 0; trial < 300; ++trial)
    {
        LayerStack s;
        int const n = count(rng);
        for (int i = 0; i < n; ++i)
            s.layers.push_back({mats[pick(rng)], thick(rng), std::nullopt});
        if (trial % 3 == 0)
            s.exit_medium = "SiO2";
        auto const T = network_matrix_from_stack(s, registry(), wl(rng), angle(rng));
        EXPECT_LT(unitarity_error(T), 1e-12) << trial;
        EXPECT_NEAR(std::abs(T.t1 - T.t4), 0.0, 1e-12) << trial;
        EXPECT_NEAR(std::abs(total_phase(T)), std::numbers::pi, 1e-9) << trial;
    }
}

TEST(Tmm, AbsorbingStackIsPassiveAndReciprocal)
{
    for (double kappa : {0.0, 0.3, 1.0})
        for (double wl = 770.0; wl <= 900.0; wl += 10.0)
        {
            auto const T = network_matrix_from_stack(structure_b(kappa), registry(), wl, 45.0);
            EXPECT_TRUE(T.passive());
            EXPECT_LT(T.singular_values()[0], 1.0);
            EXPECT_NEAR(std::abs(T.t1 - T.t4), 0.0, 1e-12);
            auto const top = tmm_coefficients(structure_b(kappa), registry(), wl, 45.0, Side::top);
            EXPECT_LE(std::norm(top.r) + std::norm(top.t), 1.0);
        }
}

TEST(Tmm, RejectsBadInput)
{
    LayerStack s;
    EXPECT_THROW(network_matrix_from_stack(s, registry(), 810.0, 90.0), ValidationError);
    EXPECT_THROW(network_matrix_from_stack(s, registry(), 810.0, -1.0), ValidationError);
    EXPECT_THROW(network_matrix_from_stack(s, registry(), -810.0, 0.0), ValidationError);
    s.layers = {{"SiO2", -1.0, std::nullopt}};
    EXPECT_THROW(network_matrix_from_stack(s, registry(), 810.0, 0.0), ValidationError);
    s.layers = {{"GeTe", 10.0, std::nullopt}};
    EXPECT_THROW(network_matrix_from_stack(s, registry(), 810.0, 0.0), ValidationError);
    s.layers = {{"GeTe", 10.0, 1.5}};
    EXPECT_THROW(network_matrix_from_stack(s, registry(), 810.0, 0.0), ValidationError);
    s.layers.clear();
    s.exit_medium = "Au";
    EXPECT_THROW(network_matrix_from_stack(s, registry(), 810.0, 0.0), ValidationError);
}

// Regression values for the multilayer preset at the design point.
TEST(Tmm, MultilayerPresetRegression)
{
    auto const c = network_matrix_from_stack(structure_b(1.0), registry(), 810.0, 45.0);
    auto const a = network_matrix_from_stack(structure_b(0.0), registry(), 810.0, 45.0);
    EXPECT_NEAR(coalescence(c), -0.694088256765, 1e-9);
    EXPECT_NEAR(coalescence(a), 0.926598837157, 1e-9);
    EXPECT_NEAR(baseline(c), 0.027783033898, 1e-9);
    EXPECT_NEAR(baseline(a), 0.143881743130, 1e-9);
}
