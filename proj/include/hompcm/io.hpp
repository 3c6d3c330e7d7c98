#pragma once

// File formats: geometry and network-matrix JSON, sweep / trace / field CSV,
// and run manifests.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "design.hpp"
#include "errors.hpp"
#include "hash.hpp"
#include "network.hpp"
#include "quantum.hpp"
#include "rcwa.hpp"
#include "thermal.hpp"
#include "tmm.hpp"

namespace hompcm {

using json = nlohmann::json;

inline constexpr char const* tool_version = "1.0.0";

/// Twelve significant digits; non-finite values print as nan/inf.
inline std::string format_number(double x)
{
    if (std::isnan(x))
        return "nan";
    if (std::isinf(x))
        return x > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

/// Rounds to twelve significant digits so JSON output carries no more.
inline double round12(double x)
{
    if (!std::isfinite(x))
        return x;
    return std::strtod(format_number(x).c_str(), nullptr);
}

namespace detail {

inline json complex_json(complex z) { return {{"re", round12(z.real())}, {"im", round12(z.imag())}}; }

inline complex complex_from_json(json const& j, char const* what)
{
    if (j.is_object() && j.contains("re") && j.contains("im") && j["re"].is_number() && j["im"].is_number())
        return {j["re"].get<double>(), j["im"].get<double>()};
    if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
        return {j[0].get<double>(), j[1].get<double>()};
    if (j.is_number())
        return {j.get<double>(), 0.0};
    throw ValidationError(std::string("entry '") + what + "' must be {\"re\":x,\"im\":y}, [x, y] or a number");
}

inline double number_field(json const& j, char const* key)
{
    if (!j.contains(key) || !j[key].is_number())
        throw ValidationError(std::string("missing or non-numeric field '") + key + "'");
    return j[key].get<double>();
}

inline std::string string_field(json const& j, char const* key, std::string fallback)
{
    if (!j.contains(key))
        return fallback;
    if (!j[key].is_string())
        throw ValidationError(std::string("field '") + key + "' must be a string");
    return j[key].get<std::string>();
}

inline std::optional<double> kappa_field(json const& j)
{
    if (!j.contains("kappa") || j["kappa"].is_null())
        return std::nullopt;
    return number_field(j, "kappa");
}

inline json parse_json_file(std::filesystem::path const& path)
{
    std::ifstream in(path);
    if (!in)
        throw ValidationError("cannot open " + path.string());
    try
    {
        return json::parse(in);
    }
    catch (json::parse_error const& e)
    {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

}  // namespace detail

// Geometry JSON. A document with "period_nm" is a grating; otherwise a
// planar stack. Layers run from the incidence side down.
//   {"incidence_medium": "vacuum", "exit_medium": "vacuum",
//    "layers": [{"material": "TiO2", "thickness_nm": 290},
//               {"material": "GeTe", "thickness_nm": 13, "kappa": 1}]}
// Lamellar layers carry material_a, material_b and filling_ratio.

inline Geometry geometry_from_json(json const& j)
{
    if (!j.is_object())
        throw ValidationError("geometry must be a JSON object");
    if (!j.contains("layers") || !j["layers"].is_array())
        throw ValidationError("geometry needs a 'layers' array");
    std::string const top = detail::string_field(j, "incidence_medium", "vacuum");
    std::string const bottom = detail::string_field(j, "exit_medium", "vacuum");

    if (j.contains("period_nm"))
    {
        Grating1D g;
        g.period_nm = detail::number_field(j, "period_nm");
        g.incidence_medium = top;
        g.exit_medium = bottom;
        for (json const& l : j["layers"])
        {
            if (l.contains("material_a"))
                g.layers.push_back(LamellarLayer{detail::string_field(l, "material_a", ""),
                                                 detail::string_field(l, "material_b", ""),
                                                 detail::number_field(l, "filling_ratio"),
                                                 detail::number_field(l, "thickness_nm"), detail::kappa_field(l)});
            else
                g.layers.push_back(Layer{detail::string_field(l, "material", ""), detail::number_field(l, "thickness_nm"),
                                         detail::kappa_field(l)});
        }
        return g;
    }

    LayerStack s;
    s.incidence_medium = top;
    s.exit_medium = bottom;
    for (json const& l : j["layers"])
    {
        if (l.contains("material_a"))
            throw ValidationError("lamellar layer in a stack without period_nm");
        s.layers.push_back(
            Layer{detail::string_field(l, "material", ""), detail::number_field(l, "thickness_nm"), detail::kappa_field(l)});
    }
    return s;
}

inline json geometry_to_json(Geometry const& g)
{
    auto layer_json = [](Layer const& l) {
        json j = {{"material", l.material}, {"thickness_nm", l.thickness_nm}};
        if (l.kappa)
            j["kappa"] = *l.kappa;
        return j;
    };
    return std::visit(detail::overloaded{
                          [&](LayerStack const& s) {
                              json layers = json::array();
                              for (auto const& l : s.layers)
                                  layers.push_back(layer_json(l));
                              return json{{"incidence_medium", s.incidence_medium},
                                          {"exit_medium", s.exit_medium},
                                          {"layers", layers}};
                          },
                          [&](Grating1D const& gr) {
                              json layers = json::array();
                              for (auto const& l : gr.layers)
                              {
                                  if (auto const* h = std::get_if<Layer>(&l))
                                  {
                                      layers.push_back(layer_json(*h));
                                      continue;
                                  }
                                  auto const& lam = std::get<LamellarLayer>(l);
                                  json j = {{"material_a", lam.material_a},
                                            {"material_b", lam.material_b},
                                            {"filling_ratio", lam.filling_ratio},
                                            {"thickness_nm", lam.thickness_nm}};
                                  if (lam.kappa)
                                      j["kappa"] = *lam.kappa;
                                  layers.push_back(j);
                              }
                              return json{{"period_nm", gr.period_nm},
                                          {"incidence_medium", gr.incidence_medium},
                                          {"exit_medium", gr.exit_medium},
                                          {"layers", layers}};
                          }},
                      g);
}

inline Geometry load_geometry(std::filesystem::path const& path)
{
    return geometry_from_json(detail::parse_json_file(path));
}

inline json network_to_json(NetworkMatrix const& T)
{
    auto const sv = T.singular_values();
    return {{"t1", detail::complex_json(T.t1)},
            {"t2", detail::complex_json(T.t2)},
            {"t3", detail::complex_json(T.t3)},
            {"t4", detail::complex_json(T.t4)},
            {"wavelength_nm", round12(T.wavelength_nm)},
            {"angle_deg", round12(T.angle_deg)},
            {"singular_values", {round12(sv[0]), round12(sv[1])}},
            {"passive", T.passive()},
            {"metadata", T.metadata}};
}

/// Reads t1..t4 (plus optional wavelength, angle, metadata) and validates
/// finiteness and passivity.
inline NetworkMatrix network_from_json(json const& j)
{
    if (!j.is_object())
        throw ValidationError("network matrix must be a JSON object");
    NetworkMatrix T;
    for (char const* key : {"t1", "t2", "t3", "t4"})
        if (!j.contains(key))
            throw ValidationError(std::string("network matrix is missing '") + key + "'");
    T.t1 = detail::complex_from_json(j["t1"], "t1");
    T.t2 = detail::complex_from_json(j["t2"], "t2");
    T.t3 = detail::complex_from_json(j["t3"], "t3");
    T.t4 = detail::complex_from_json(j["t4"], "t4");
    if (j.contains("wavelength_nm"))
        T.wavelength_nm = detail::number_field(j, "wavelength_nm");
    if (j.contains("angle_deg"))
        T.angle_deg = detail::number_field(j, "angle_deg");
    T.metadata = detail::string_field(j, "metadata", "");
    T.validate();
    return T;
}

inline NetworkMatrix load_network(std::filesystem::path const& path)
{
    return network_from_json(detail::parse_json_file(path));
}

inline void write_sweep_csv(std::ostream& out, SweepResult const& r)
{
    out << "axis1,axis2,coalescence,baseline,re_t1,im_t1,re_t2,im_t2,re_t3,im_t3,re_t4,im_t4,valid\n";
    double const nan = std::numeric_limits<double>::quiet_NaN();
    for (auto const& c : r.cells)
    {
        out << format_number(c.x1) << ',' << format_number(c.x2) << ',' << format_number(c.coalescence) << ','
            << format_number(c.baseline);
        for (complex z : {c.network.t1, c.network.t2, c.network.t3, c.network.t4})
            out << ',' << format_number(c.valid ? z.real() : nan) << ',' << format_number(c.valid ? z.imag() : nan);
        out << ',' << (c.valid ? 1 : 0) << '\n';
    }
}

inline json sweep_metadata(SweepResult const& r)
{
    auto axis = [](SweepAxis const& a) {
        return json{{"name", a.name}, {"min", a.min}, {"max", a.max}, {"steps", a.steps}};
    };
    int invalid = 0;
    for (auto const& c : r.cells)
        invalid += c.valid ? 0 : 1;
    return {{"geometry_name", r.spec.geometry_name},
            {"geometry", geometry_to_json(r.spec.geometry)},
            {"axis1", axis(r.spec.axis1)},
            {"axis2", axis(r.spec.axis2)},
            {"fixed", r.spec.fixed},
            {"n_harmonics", r.spec.n_harmonics},
            {"layout", "rows ordered axis1-major; invalid cells have valid=0 and nan values"},
            {"invalid_cells", invalid},
            {"material_hashes", r.material_hashes},
            {"port_convention", port_convention}};
}

/// One delay column (ps) followed by one count column per trace.
inline void write_traces_csv(std::ostream& out, std::vector<std::string> const& labels,
                             std::vector<HOMTrace> const& traces)
{
    if (traces.empty() || labels.size() != traces.size())
        throw ValidationError("trace labels do not match traces");
    out << "delay_ps";
    for (auto const& l : labels)
        out << ',' << l;
    out << '\n';
    for (std::size_t i = 0; i < traces.front().delays.size(); ++i)
    {
        out << format_number(traces.front().delays[i] * 1e12);
        for (auto const& t : traces)
            out << ',' << format_number(t.counts[i]);
        out << '\n';
    }
}

/// First row holds depths (nm); each further row is a time (s) followed by
/// the temperatures (K) at those depths.
inline void write_field_csv(std::ostream& out, TemperatureField const& f)
{
    out << "time_s\\depth_nm";
    for (double z : f.depth_nm)
        out << ',' << format_number(z);
    out << '\n';
    for (std::size_t it = 0; it < f.time_s.size(); ++it)
    {
        out << format_number(f.time_s[it]);
        for (std::size_t iz = 0; iz < f.depth_nm.size(); ++iz)
            out << ',' << format_number(f.at(it, iz));
        out << '\n';
    }
}

struct RunManifest
{
    std::string command_line;
    std::map<std::string, std::string> input_hashes;  ///< path -> sha256
    std::vector<std::string> outputs;

    json to_json() const
    {
        auto const now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
        std::tm tm{};
        gmtime_r(&now, &tm);
        char stamp[32];
        std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &tm);
        json outs = json::array();
        for (auto const& o : outputs)
        {
            json e = {{"path", o}};
            if (std::filesystem::is_regular_file(o))
                e["sha256"] = sha256_file(o);
            outs.push_back(e);
        }
        return {{"command_line", command_line},
                {"tool_version", tool_version},
                {"timestamp", stamp},
                {"inputs", input_hashes},
                {"outputs", outs}};
    }
};

}  // namespace hompcm
