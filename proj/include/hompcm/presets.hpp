#pragma once

// The two device geometries: a GeTe/Au strip grating on silica (A) and a
// TiO2/GeTe/SiO2 multilayer on a TiN heater (B). Crystallinity applies to
// every GeTe film.

#include <string>
#include <variant>

#include "errors.hpp"
#include "rcwa.hpp"
#include "tmm.hpp"

namespace hompcm {

using Geometry = std::variant<LayerStack, Grating1D>;

inline constexpr double design_wavelength_nm = 810.0;
inline constexpr double design_angle_deg = 45.0;

/// Strip grating, period 450 nm: 15 nm GeTe/Au strips (GeTe fraction
/// `filling_ratio`) on a 190 nm fused-silica film. With
/// `substrate_half_space` the silica continues below instead of ending in
/// vacuum.
inline Grating1D structure_a(double kappa = 1.0, double filling_ratio = 0.634, bool substrate_half_space = false)
{
    Grating1D g;
    g.period_nm = 450.0;
    g.layers.push_back(LamellarLayer{"GeTe", "Au", filling_ratio, 15.0, kappa});
    g.layers.push_back(Layer{"SiO2", 190.0, std::nullopt});
    g.incidence_medium = "vacuum";
    g.exit_medium = substrate_half_space ? "SiO2" : "vacuum";
    return g;
}

/// Multilayer, top to bottom: TiO2 290 / GeTe 13 / TiO2 330 / GeTe 21 /
/// SiO2 290 / TiN 15 nm. Layer 2 is the lower TiO2 film.
inline LayerStack structure_b(double kappa = 1.0, double lower_tio2_nm = 330.0)
{
    LayerStack s;
    s.layers = {
        {"TiO2", 290.0, std::nullopt}, {"GeTe", 13.0, kappa},         {"TiO2", lower_tio2_nm, std::nullopt},
        {"GeTe", 21.0, kappa},         {"SiO2", 290.0, std::nullopt}, {"TiN", 15.0, std::nullopt},
    };
    return s;
}

inline Geometry preset_geometry(std::string const& name)
{
    if (name == "structure-A")
        return structure_a();
    if (name == "structure-B")
        return structure_b();
    throw ValidationError("unknown preset '" + name + "' (expected structure-A or structure-B)");
}

/// Lower bound on the distinguishable-photon baseline used when optimizing
/// each preset.
inline double preset_baseline_min(std::string const& name)
{
    if (name == "structure-A")
        return 1.0 / 12.0;
    if (name == "structure-B")
        return 1.0 / 16.0;
    throw ValidationError("no default baseline bound for '" + name + "'");
}

}  // namespace hompcm
