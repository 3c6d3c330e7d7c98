#pragma once

// TE reflection and transmission of planar multilayers by the characteristic
// (2x2 transfer) matrix method.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "materials.hpp"
#include "network.hpp"

namespace hompcm {

enum class Side
{
    top,
    bottom
};

/// One homogeneous film. `kappa` is the crystallinity and only matters for
/// phase-change materials.
struct Layer
{
    std::string material;
    double thickness_nm = 0.0;
    std::optional<double> kappa;
};

/// Layers ordered from the top (incidence side) down to the exit medium.
struct LayerStack
{
    std::string incidence_medium = "vacuum";
    std::vector<Layer> layers;
    std::string exit_medium = "vacuum";
};

struct ReflectionTransmission
{
    complex r;
    complex t;
};

inline void validate_layer(Layer const& layer)
{
    // Zero thickness is allowed and acts as an absent layer.
    if (!(layer.thickness_nm >= 0.0) || !std::isfinite(layer.thickness_nm))
        throw ValidationError("layer '" + layer.material + "' must have non-negative thickness");
    if (layer.kappa && !(*layer.kappa >= 0.0 && *layer.kappa <= 1.0))
        throw ValidationError("layer '" + layer.material + "' crystallinity outside [0, 1]");
}

inline void validate_angle(double angle_deg)
{
    if (!(angle_deg >= 0.0 && angle_deg < 90.0))
        throw ValidationError("incidence angle must lie in [0, 90) degrees");
}

namespace detail {

/// Normal wavevector sqrt(k0^2 eps - kx^2) on the branch that decays or
/// propagates away from the interface (Im >= 0, and Re >= 0 when real).
inline complex normal_wavevector(complex eps, double k0, double kx)
{
    complex q = std::sqrt(k0 * k0 * eps - complex(kx * kx, 0.0));
    if (q.imag() < 0.0 || (q.imag() == 0.0 && q.real() < 0.0))
        q = -q;
    return q;
}

inline double ambient_index(MaterialRegistry const& reg, std::string const& id, double wavelength_nm)
{
    ComplexIndex const idx = reg.index_at(id, wavelength_nm);
    if (idx.k() != 0.0)
        throw ValidationError("ambient medium '" + id + "' must be lossless");
    return idx.n();
}

/// Core solve for a wave incident from the first ambient. Layers are given
/// by permittivity and thickness in propagation order.
inline ReflectionTransmission characteristic_solve(std::vector<complex> const& eps,
                                                   std::vector<double> const& thickness_nm, double n_in,
                                                   double n_out, double k0, double kx)
{
    complex m11(1.0), m12(0.0), m21(0.0), m22(1.0);
    for (std::size_t i = 0; i < eps.size(); ++i)
    {
        complex const q = normal_wavevector(eps[i], k0, kx);
        complex const delta = q * thickness_nm[i];
        complex const c = std::cos(delta);
        complex const s = std::sin(delta);
        // sin(q d)/q stays finite at q -> 0
        complex const s_over_q = std::abs(q) > 1e-300 ? s / q : complex(thickness_nm[i]);
        complex const l11 = c, l12 = complex(0, 1) * s_over_q, l21 = complex(0, 1) * q * s, l22 = c;
        complex const n11 = l11 * m11 + l12 * m21;
        complex const n12 = l11 * m12 + l12 * m22;
        complex const n21 = l21 * m11 + l22 * m21;
        complex const n22 = l21 * m12 + l22 * m22;
        m11 = n11;
        m12 = n12;
        m21 = n21;
        m22 = n22;
    }

    complex const q_in = normal_wavevector(complex(n_in * n_in), k0, kx);
    complex const q_out = normal_wavevector(complex(n_out * n_out), k0, kx);

    // Tangential (E, dE/dz / i) at the bottom = M * (1 + r, q_in (1 - r)),
    // and equals (t, q_out t) in the exit medium.
    complex const a11 = 1.0, a12 = -(m11 - m12 * q_in);
    complex const a21 = q_out, a22 = -(m21 - m22 * q_in);
    complex const b1 = m11 + m12 * q_in;
    complex const b2 = m21 + m22 * q_in;
    complex const det = a11 * a22 - a12 * a21;
    if (std::abs(det) == 0.0 || !std::isfinite(std::abs(det)))
        throw SolverError("singular transfer-matrix system");
    complex const t = (b1 * a22 - a12 * b2) / det;
    complex const r = (a11 * b2 - a21 * b1) / det;

    double const flux_in = q_in.real();
    double const flux_out = q_out.real();
    if (!(flux_in > 0.0))
        throw ValidationError("incident port is evanescent");
    // Evanescent exit: total internal reflection, no transmitted flux.
    complex const t_flux = flux_out > 0.0 ? t * std::sqrt(flux_out / flux_in) : complex(0.0);
    return {r, t_flux};
}

}  // namespace detail

/// Flux-normalized TE (r, t) for a plane wave incident from `side`.
///
/// Both sides share the transverse wavevector k0 n_in sin(angle), so the
/// bottom-side wave is the reciprocal partner of the top-side transmitted
/// wave.
inline ReflectionTransmission tmm_coefficients(LayerStack const& stack, MaterialRegistry const& registry,
                                               double wavelength_nm, double angle_deg, Side side)
{
    validate_angle(angle_deg);
    if (!(wavelength_nm > 0.0))
        throw ValidationError("wavelength must be positive");

    double const n_top = detail::ambient_index(registry, stack.incidence_medium, wavelength_nm);
    double const n_bottom = detail::ambient_index(registry, stack.exit_medium, wavelength_nm);
    double const k0 = 2.0 * std::numbers::pi / wavelength_nm;
    double const kx = k0 * n_top * std::sin(angle_deg * std::numbers::pi / 180.0);

    std::vector<complex> eps;
    std::vector<double> thick;
    eps.reserve(stack.layers.size());
    thick.reserve(stack.layers.size());
    for (Layer const& layer : stack.layers)
    {
        validate_layer(layer);
        eps.push_back(registry.permittivity_at(layer.material, wavelength_nm, layer.kappa).value());
        thick.push_back(layer.thickness_nm);
    }

    if (side == Side::top)
        return detail::characteristic_solve(eps, thick, n_top, n_bottom, k0, kx);

    std::reverse(eps.begin(), eps.end());
    std::reverse(thick.begin(), thick.end());
    return detail::characteristic_solve(eps, thick, n_bottom, n_top, k0, kx);
}

inline NetworkMatrix network_matrix_from_stack(LayerStack const& stack, MaterialRegistry const& registry,
                                               double wavelength_nm, double angle_deg)
{
    auto const top = tmm_coefficients(stack, registry, wavelength_nm, angle_deg, Side::top);
    auto const bottom = tmm_coefficients(stack, registry, wavelength_nm, angle_deg, Side::bottom);

    NetworkMatrix T;
    T.t1 = top.t;
    T.t2 = bottom.r;
    T.t3 = top.r;
    T.t4 = bottom.t;
    T.wavelength_nm = wavelength_nm;
    T.angle_deg = angle_deg;
    T.metadata = std::string("solver=tmm polarization=TE; ") + port_convention;
    if (!T.passive())
        throw SolverError("transfer-matrix result violates passivity");
    return T;
}

}  // namespace hompcm
