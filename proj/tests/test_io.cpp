#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <gtest/gtest.h>

#include "hompcm/io.hpp"

using namespace hompcm;

namespace {

MaterialRegistry const& registry()
{
    static MaterialRegistry const reg = MaterialRegistry::load_default();
    return reg;
}

std::filesystem::path fixture(char const* name) { return std::filesystem::path(HOMPCM_TEST_DATA_DIR) / name; }

}  // namespace

TEST(Format, Numbers)
{
    EXPECT_EQ(format_number(0.5), "0.5");
    EXPECT_EQ(format_number(1.0 / 3.0), "0.333333333333");
    EXPECT_EQ(format_number(-2e-20), "-2e-20");
    EXPECT_EQ(format_number(std::numeric_limits<double>::quiet_NaN()), "nan");
    EXPECT_EQ(format_number(-std::numeric_limits<double>::infinity()), "-inf");
    EXPECT_EQ(round12(1.0 / 3.0), 0.333333333333);
}

TEST(Hash, KnownDigests)
{
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    auto const path = std::filesystem::temp_directory_path() / "hompcm_hash_test.txt";
    std::ofstream(path) << "abc";
    EXPECT_EQ(sha256_file(path), sha256_hex("abc"));
    std::filesystem::remove(path);
}

TEST(GeometryJson, PresetsRoundTrip)
{
    for (Geometry const& g : {Geometry(structure_a(0.3)), Geometry(structure_b(0.7, 345.0))})
    {
        json const j = geometry_to_json(g);
        Geometry const back = geometry_from_json(j);
        EXPECT_EQ(geometry_to_json(back), j);
        auto const a = evaluate_network(g, {}, registry());
        auto const b = evaluate_network(back, {}, registry());
        EXPECT_EQ(a.t1, b.t1);
        EXPECT_EQ(a.t2, b.t2);
    }
}

TEST(GeometryJson, EmptyStackFile)
{
    auto const g = load_geometry(fixture("empty_stack.json"));
    ASSERT_TRUE(std::holds_alternative<LayerStack>(g));
    EXPECT_TRUE(std::get<LayerStack>(g).layers.empty());
}

TEST(GeometryJson, Errors)
{
    EXPECT_THROW(geometry_from_json(json::array()), ValidationError);
    EXPECT_THROW(geometry_from_json(json{{"layers", 3}}), ValidationError);
    EXPECT_THROW(geometry_from_json(json::parse(R"({"layers":[{"material":"SiO2"}]})")), ValidationError);
    EXPECT_THROW(geometry_from_json(json::parse(R"({"layers":[{"material_a":"Au","material_b":"GeTe",
                 "filling_ratio":0.5,"thickness_nm":10}]})")),
                 ValidationError);
    EXPECT_THROW(load_geometry(fixture("does_not_exist.json")), ValidationError);
    EXPECT_THROW(load_geometry(fixture("constant.csv")), ValidationError);
}

TEST(NetworkJson, RoundTripAndForms)
{
    auto const T = evaluate_network(structure_b(), {}, registry());
    auto const back = network_from_json(network_to_json(T));
    EXPECT_NEAR(std::abs(back.t1 - T.t1), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(back.t3 - T.t3), 0.0, 1e-12);
    EXPECT_EQ(back.wavelength_nm, 810.0);
    EXPECT_EQ(back.metadata, T.metadata);

    auto const bs = load_network(fixture("bs5050.json"));
    EXPECT_NEAR(std::abs(bs.t2 - complex(0.0, 1.0 / std::sqrt(2.0))), 0.0, 1e-15);
    auto const mixed = network_from_json(json::parse(R"({"t1":[0.6,0],"t2":0.8,"t3":{"re":-0.8,"im":0},"t4":0.6})"));
    EXPECT_EQ(mixed.t2, complex(0.8, 0.0));
    EXPECT_EQ(mixed.t3, complex(-0.8, 0.0));
}

TEST(NetworkJson, Errors)
{
    EXPECT_THROW(network_from_json(json::parse(R"({"t1":1,"t2":0,"t3":0})")), ValidationError);
    EXPECT_THROW(network_from_json(json::parse(R"({"t1":1,"t2":1,"t3":0,"t4":1})")), ValidationError);
    EXPECT_THROW(network_from_json(json::parse(R"({"t1":"a","t2":0,"t3":0,"t4":1})")), ValidationError);
}

TEST(SweepCsv, InvalidCellsPrintNan)
{
    SweepResult r;
    r.spec.axis1 = {"period_nm", 1.0, 2.0, 2};
    r.spec.axis2 = {"wavelength_nm", 1.0, 2.0, 1};
    SweepCell good;
    good.valid = true;
    good.x1 = 1.0;
    good.x2 = 810.0;
    good.coalescence = 0.25;
    good.baseline = 0.5;
    SweepCell bad;
    bad.x1 = 2.0;
    bad.x2 = 810.0;
    r.cells = {good, bad};
    std::ostringstream out;
    write_sweep_csv(out, r);
    EXPECT_EQ(out.str(), "axis1,axis2,coalescence,baseline,re_t1,im_t1,re_t2,im_t2,re_t3,im_t3,re_t4,im_t4,valid\n"
                         "1,810,0.25,0.5,1,0,0,0,0,0,1,0,1\n"
                         "2,810,nan,nan,nan,nan,nan,nan,nan,nan,nan,nan,0\n");
}

TEST(TraceCsv, Layout)
{
    HOMTrace t{{-1e-12, 0.0, 1e-12}, {1.0, 0.5, 1.0}};
    std::ostringstream out;
    write_traces_csv(out, {"kappa=1", "kappa=0"}, {t, t});
    EXPECT_EQ(out.str(), "delay_ps,kappa=1,kappa=0\n-1,1,1\n0,0.5,0.5\n1,1,1\n");
    EXPECT_THROW(write_traces_csv(out, {"a"}, {t, t}), ValidationError);
}

TEST(FieldCsv, Layout)
{
    TemperatureField f;
    f.depth_nm = {1.0, 3.0};
    f.time_s = {0.0, 1e-9};
    f.temperature_k = {293.15, 293.15, 300.0, 301.5};
    std::ostringstream out;
    write_field_csv(out, f);
    EXPECT_EQ(out.str(), "time_s\\depth_nm,1,3\n0,293.15,293.15\n1e-09,300,301.5\n");
}

TEST(Manifest, HashesOutputs)
{
    auto const path = std::filesystem::temp_directory_path() / "hompcm_manifest_test.csv";
    std::ofstream(path) << "abc";
    RunManifest m{"hompcm network", {{"in.json", sha256_hex("x")}}, {path.string()}};
    json const j = m.to_json();
    EXPECT_EQ(j["tool_version"], tool_version);
    EXPECT_EQ(j["outputs"][0]["sha256"], sha256_hex("abc"));
    EXPECT_EQ(j["inputs"]["in.json"], sha256_hex("x"));
    EXPECT_TRUE(j.contains("timestamp"));
    std::filesystem::remove(path);
}
