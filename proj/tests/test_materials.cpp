#include <cstdlib>
#include <filesystem>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "hompcm/materials.hpp"

using namespace hompcm;

namespace {

std::filesystem::path fixture(char const* name) { return std::filesystem::path(HOMPCM_TEST_DATA_DIR) / name; }

std::string error_of(auto&& fn)
{
    try
    {
        fn();
    }
    catch (ValidationError const& e)
    {
        return e.what();
    }
    return {};
}

}  // namespace

TEST(ComplexIndex, RejectsGainAndNonPositiveN)
{
    EXPECT_THROW(ComplexIndex(1.5, -0.01), ValidationError);
    EXPECT_THROW(ComplexIndex(0.0, 1.0), ValidationError);
    EXPECT_THROW(ComplexIndex(std::nan(""), 0.0), ValidationError);
    EXPECT_NO_THROW(ComplexIndex(1.5, 0.0));
}

TEST(Permittivity, SquareOfIndex)
{
    EXPECT_EQ(permittivity(ComplexIndex(1.0, 0.0)).value(), complex(1.0, 0.0));
    EXPECT_EQ(permittivity(ComplexIndex(2.0, 0.0)).value(), complex(4.0, 0.0));
    // (1 + i)^2 = 2i
    auto const e = permittivity(ComplexIndex(1.0, 1.0)).value();
    EXPECT_NEAR(e.real(), 0.0, 1e-15);
    EXPECT_NEAR(e.imag(), 2.0, 1e-15);
}

TEST(Permittivity, InverseBranch)
{
    auto const a = index_from_permittivity(ComplexPermittivity(complex(4.0, 0.0)));
    EXPECT_DOUBLE_EQ(a.n(), 2.0);
    EXPECT_DOUBLE_EQ(a.k(), 0.0);
    auto const b = index_from_permittivity(ComplexPermittivity(complex(0.0, 2.0)));
    EXPECT_NEAR(b.n(), 1.0, 1e-15);
    EXPECT_NEAR(b.k(), 1.0, 1e-15);
    EXPECT_THROW(index_from_permittivity(ComplexPermittivity(complex(-1.0, 0.0))), ValidationError);
    EXPECT_THROW(ComplexPermittivity(complex(2.0, -0.1)), ValidationError);
}

TEST(Permittivity, RoundTripRandomPassive)
{
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> n(0.05, 6.0), k(0.0, 6.0);
    for (int i = 0; i < 2000; ++i)
    {
        ComplexIndex const x(n(rng), k(rng));
        ComplexIndex const y = index_from_permittivity(permittivity(x));
        EXPECT_NEAR(y.n(), x.n(), 1e-12 * std::abs(x.value()));
        EXPECT_NEAR(y.k(), x.k(), 1e-12 * std::abs(x.value()));
    }
}

TEST(MixCrystallinity, EndpointsAreExact)
{
    ComplexPermittivity const c(complex(16.0, 2.0)), a(complex(20.0, 0.4));
    EXPECT_EQ(mix_crystallinity(c, a, 0.0), a);
    EXPECT_EQ(mix_crystallinity(c, a, 1.0), c);
}

TEST(MixCrystallinity, HandArithmeticMidpoint)
{
    ComplexPermittivity const c(complex(16.0, 2.0)), a(complex(20.0, 0.4));
    auto const m = mix_crystallinity(c, a, 0.5).value();
    EXPECT_NEAR(m.real(), 18.0, 1e-14);
    EXPECT_NEAR(m.imag(), 1.2, 1e-14);
}

TEST(MixCrystallinity, AffineInKappa)
{
    ComplexPermittivity const c(complex(19.5, 25.0)), a(complex(16.2, 3.4));
    for (int i = 0; i <= 50; ++i)
    {
        double const kappa = i / 50.0;
        complex const expect = a.value() + kappa * (c.value() - a.value());
        complex const got = mix_crystallinity(c, a, kappa).value();
        EXPECT_NEAR(std::abs(got - expect), 0.0, 1e-13);
    }
    EXPECT_THROW(mix_crystallinity(c, a, -0.01), ValidationError);
    EXPECT_THROW(mix_crystallinity(c, a, 1.01), ValidationError);
}

TEST(DispersionFile, ConstantTwoRows)
{
    auto const t = load_dispersion(fixture("constant.csv"));
    EXPECT_EQ(t.material_id(), "Const");
    EXPECT_EQ(t.samples().size(), 2u);
    EXPECT_EQ(t.source(), "test fixture");
}

TEST(DispersionFile, NonMonotoneIsRejected)
{
    auto const msg = error_of([] { load_dispersion(fixture("reversed.csv")); });
    EXPECT_NE(msg.find("non-monotone"), std::string::npos) << msg;
}

TEST(DispersionFile, NegativeKIsRejectedWithLine)
{
    auto const msg = error_of([] { load_dispersion(fixture("negative_k.csv")); });
    EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("negative k"), std::string::npos) << msg;
}

TEST(DispersionFile, ParseErrorCarriesLineNumber)
{
    auto const msg = error_of([] { load_dispersion(fixture("garbage.csv")); });
    EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
}

TEST(DispersionFile, IdMustMatchHeader)
{
    EXPECT_THROW(load_dispersion(fixture("constant.csv"), "Other"), ValidationError);
    EXPECT_NO_THROW(load_dispersion(fixture("constant.csv"), "Const"));
}

TEST(DispersionFile, MissingHeader)
{
    std::istringstream in("800,1.5,0\n820,1.5,0\n");
    EXPECT_THROW(parse_dispersion(in), ValidationError);
}

TEST(IndexAt, NodeExactAndLinear)
{
    DispersionTable const t("X", {{800.0, ComplexIndex(2.0, 0.1)}, {820.0, ComplexIndex(4.0, 0.3)}});
    EXPECT_EQ(index_at(t, 800.0), ComplexIndex(2.0, 0.1));
    EXPECT_EQ(index_at(t, 820.0), ComplexIndex(4.0, 0.3));
    auto const mid = index_at(t, 810.0);
    EXPECT_DOUBLE_EQ(mid.n(), 3.0);
    EXPECT_DOUBLE_EQ(mid.k(), 0.2);
    EXPECT_THROW(index_at(t, 799.9), ValidationError);
    EXPECT_THROW(index_at(t, 820.1), ValidationError);
}

TEST(IndexAt, InterpolatedKNeverNegative)
{
    auto const reg = MaterialRegistry::load_default();
    for (auto const& id : reg.ids())
    {
        auto const& t = reg.table(id);
        for (int i = 0; i <= 400; ++i)
        {
            double const wl = t.min_wavelength() + (t.max_wavelength() - t.min_wavelength()) * i / 400.0;
            EXPECT_GE(index_at(t, wl).k(), 0.0) << id << " at " << wl;
        }
    }
}

TEST(Registry, ShippedTablesCoverTheDesignBand)
{
    auto const reg = MaterialRegistry::load_default();
    for (char const* id : {"GeTe-crystalline", "GeTe-amorphous", "Au", "SiO2", "TiO2", "TiN"})
    {
        ASSERT_TRUE(reg.contains(id)) << id;
        EXPECT_LE(reg.table(id).min_wavelength(), 770.0) << id;
        EXPECT_GE(reg.table(id).max_wavelength(), 900.0) << id;
        EXPECT_FALSE(reg.table(id).source().empty()) << id;
    }
    EXPECT_TRUE(reg.is_phase_change("GeTe"));
    EXPECT_FALSE(reg.is_phase_change("Au"));
}

TEST(Registry, PhaseChangeNeedsCrystallinity)
{
    auto const reg = MaterialRegistry::load_default();
    EXPECT_THROW(reg.permittivity_at("GeTe", 810.0), ValidationError);
    auto const c = reg.permittivity_at("GeTe", 810.0, 1.0).value();
    auto const a = reg.permittivity_at("GeTe", 810.0, 0.0).value();
    EXPECT_EQ(c, permittivity(reg.index_at("GeTe-crystalline", 810.0)).value());
    EXPECT_EQ(a, permittivity(reg.index_at("GeTe-amorphous", 810.0)).value());
    auto const half = reg.permittivity_at("GeTe", 810.0, 0.5).value();
    EXPECT_NEAR(std::abs(half - 0.5 * (a + c)), 0.0, 1e-12);
}

TEST(Registry, BuiltinsAndUnknowns)
{
    auto const reg = MaterialRegistry::load_default();
    EXPECT_EQ(reg.permittivity_at("vacuum", 123.0).value(), complex(1.0, 0.0));
    EXPECT_EQ(reg.index_at("air", 5000.0).n(), 1.0);
    EXPECT_THROW(reg.index_at("Unobtainium", 810.0), ValidationError);
    EXPECT_THROW(reg.index_at("Au", 300.0), ValidationError);
}

// Shipped GeTe and Au tables against hand-entered anchor values at the
// design wavelength (2% agreement).
TEST(Registry, AnchorValuesNearDesignWavelength)
{
    auto const reg = MaterialRegistry::load_default();
    auto const c = reg.index_at("GeTe-crystalline", 810.0);
    EXPECT_NEAR(c.n(), 5.3, 0.02 * 5.3);
    EXPECT_NEAR(c.k(), 2.4, 0.02 * 2.4);
    auto const a = reg.index_at("GeTe-amorphous", 810.0);
    EXPECT_NEAR(a.n(), 4.05, 0.02 * 4.05);
    EXPECT_NEAR(a.k(), 0.42, 0.02 * 0.42);
    // Johnson & Christy gold, 1.51 eV sample.
    auto const au = reg.index_at("Au", 821.09);
    EXPECT_NEAR(au.n(), 0.16, 0.02);
    EXPECT_NEAR(au.k(), 5.08, 0.02 * 5.08);
}

TEST(Registry, EnvironmentOverridesDataDirectory)
{
    auto const dir = std::filesystem::path(HOMPCM_TEST_DATA_DIR) / "materials_custom";
    ::setenv("HOMPCM_DATA_DIR", dir.c_str(), 1);
    auto const reg = MaterialRegistry::load_default();
    ::unsetenv("HOMPCM_DATA_DIR");
    EXPECT_TRUE(reg.contains("Glass"));
    EXPECT_FALSE(reg.contains("Au"));
    EXPECT_EQ(reg.files().at("Glass"), dir / "glass.csv");
}
