#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <string>

#include "errors.hpp"

namespace hompcm {

using complex = std::complex<double>;

/// Tolerance on the largest singular value for a matrix to count as passive.
inline constexpr double passivity_tolerance = 1e-9;

/// Flux-normalized 2x2 transmission matrix [[t1, t2], [t3, t4]] mapping the
/// two input port amplitudes to the two output port amplitudes.
///
/// Port convention for the planar devices: input a enters from the top,
/// input b from the bottom; output a leaves below the device and output b
/// above it. Hence t1 (top to bottom) and t4 (bottom to top) are
/// transmissions, t3 is the reflection seen from the top and t2 the
/// reflection seen from the bottom.
struct NetworkMatrix
{
    complex t1{1.0, 0.0};
    complex t2{0.0, 0.0};
    complex t3{0.0, 0.0};
    complex t4{1.0, 0.0};
    double wavelength_nm = 0.0;
    double angle_deg = 0.0;
    std::string metadata;

    /// Singular values, largest first.
    std::array<double, 2> singular_values() const
    {
        // Eigenvalues of T^H T = [[a, b], [b*, d]]. The discriminant is
        // formed from the entries, not from trace and determinant, so it
        // does not cancel for (near-)unitary T.
        double const a = std::norm(t1) + std::norm(t3);
        double const d = std::norm(t2) + std::norm(t4);
        complex const b = std::conj(t1) * t2 + std::conj(t3) * t4;
        double const half = 0.5 * (a + d);
        double const disc = std::hypot(0.5 * (a - d), std::abs(b));
        double const big = half + disc;
        double const small = big > 0.0 ? std::norm(t1 * t4 - t2 * t3) / big : 0.0;
        return {std::sqrt(big), std::sqrt(std::max(small, 0.0))};
    }

    bool finite() const
    {
        for (complex const& t : {t1, t2, t3, t4})
            if (!std::isfinite(t.real()) || !std::isfinite(t.imag()))
                return false;
        return true;
    }

    bool passive() const { return finite() && singular_values()[0] <= 1.0 + passivity_tolerance; }

    /// Throws ValidationError unless the entries are finite and passive.
    void validate() const
    {
        if (!finite())
            throw ValidationError("network matrix has non-finite entries");
        if (!passive())
            throw ValidationError("network matrix is not passive: largest singular value "
                                  + std::to_string(singular_values()[0]) + " exceeds 1");
    }
};

inline constexpr char const* port_convention =
    "t1=transmission top->bottom, t2=reflection bottom-side, t3=reflection top-side, t4=transmission bottom->top";

}  // namespace hompcm
