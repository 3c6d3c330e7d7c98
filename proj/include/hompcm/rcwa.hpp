#pragma once

// Fourier modal method (RCWA) for 1D lamellar gratings under TE incidence.
//
// E_y is expanded in Floquet harmonics kx_m = kx_0 + m 2pi/period. TE uses
// the direct (Laurent) Toeplitz matrix of eps(x). Layers are cascaded with
// Redheffer star products so evanescent and lossy layers never produce
// growing exponentials.

#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "materials.hpp"
#include "network.hpp"
#include "tmm.hpp"

namespace hompcm {

/// Periodic layer: strips of `material_a` of width filling_ratio*period,
/// centered in the cell, embedded in `material_b`.
struct LamellarLayer
{
    std::string material_a;
    std::string material_b;
    double filling_ratio = 0.5;
    double thickness_nm = 0.0;
    std::optional<double> kappa;
};

using GratingLayer = std::variant<Layer, LamellarLayer>;

/// Layers ordered from the incidence side down.
struct Grating1D
{
    double period_nm = 0.0;
    std::vector<GratingLayer> layers;
    std::string incidence_medium = "vacuum";
    std::string exit_medium = "vacuum";
};

inline constexpr int default_harmonics = 41;

/// Largest period for which only the zeroth diffracted order propagates in
/// an ambient of index n_ambient at the given incidence angle.
inline double floquet_max_period(double wavelength_nm, double angle_deg, double n_ambient)
{
    if (!(angle_deg >= 0.0 && angle_deg <= 90.0))
        throw ValidationError("angle must lie in [0, 90] degrees");
    if (!(n_ambient > 0.0) || !(wavelength_nm > 0.0))
        throw ValidationError("wavelength and ambient index must be positive");
    return wavelength_nm / (n_ambient * (1.0 + std::sin(angle_deg * std::numbers::pi / 180.0)));
}

struct DiffractionOrder
{
    int order = 0;
    complex amplitude;  ///< flux-normalized when propagating, raw field amplitude otherwise
    bool propagating = false;
};

struct RcwaResult
{
    complex r0;
    complex t0;
    std::vector<DiffractionOrder> reflected;
    std::vector<DiffractionOrder> transmitted;
    bool single_mode = true;  ///< only the zeroth order propagates on both sides

    /// Sum of |amplitude|^2 over propagating orders on both sides.
    double total_power() const
    {
        double p = 0.0;
        for (auto const* orders : {&reflected, &transmitted})
            for (auto const& o : *orders)
                if (o.propagating)
                    p += std::norm(o.amplitude);
        return p;
    }
};

namespace detail {

using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

struct LayerModes
{
    Matrix W;       // E-field mode profiles (columns)
    Matrix V;       // W * diag(gamma): tangential H up to a common factor
    Vector gamma;   // normal wavevectors, Im >= 0
    bool homogeneous = false;  // W is the identity
};

struct SMatrix
{
    Matrix s11, s12, s21, s22;
    bool diagonal = false;  // every block diagonal (homogeneous on both sides)
};

inline complex mode_branch(complex eig)
{
    complex g = std::sqrt(eig);
    if (g.imag() < 0.0)
    {
        // Noise-level negative imaginary parts on propagating modes keep
        // their forward (Re > 0) direction.
        if (!(g.real() > 0.0 && -g.imag() <= 1e-12 * std::abs(g)))
            g = -g;
    }
    return g;
}

inline LayerModes homogeneous_modes(complex eps, double k0, Eigen::VectorXd const& kx)
{
    Eigen::Index const m = kx.size();
    LayerModes out{Matrix::Identity(m, m), Matrix::Zero(m, m), Vector(m)};
    for (Eigen::Index i = 0; i < m; ++i)
        out.gamma(i) = normal_wavevector(eps, k0, kx(i));
    out.V = out.gamma.asDiagonal();
    out.homogeneous = true;
    return out;
}

inline LayerModes lamellar_modes(complex eps_a, complex eps_b, double fill, double k0, Eigen::VectorXd const& kx)
{
    Eigen::Index const m = kx.size();
    auto coeff = [&](Eigen::Index n) -> complex {
        if (n == 0)
            return fill * eps_a + (1.0 - fill) * eps_b;
        double const x = std::numbers::pi * static_cast<double>(n);
        return (eps_a - eps_b) * std::sin(x * fill) / x;
    };

    Matrix A(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < m; ++j)
            A(i, j) = k0 * k0 * coeff(i - j);
    for (Eigen::Index i = 0; i < m; ++i)
        A(i, i) -= kx(i) * kx(i);

    LayerModes out;
    bool const hermitian = eps_a.imag() == 0.0 && eps_b.imag() == 0.0;
    if (hermitian)
    {
        Eigen::SelfAdjointEigenSolver<Matrix> es(A);
        if (es.info() != Eigen::Success)
            throw SolverError("eigen-decomposition failed in lamellar layer");
        out.W = es.eigenvectors();
        out.gamma = es.eigenvalues().cast<complex>();
    }
    else
    {
        Eigen::ComplexEigenSolver<Matrix> es(A);
        if (es.info() != Eigen::Success)
            throw SolverError("eigen-decomposition failed in lamellar layer");
        out.W = es.eigenvectors();
        out.gamma = es.eigenvalues();
    }
    for (Eigen::Index i = 0; i < m; ++i)
        out.gamma(i) = mode_branch(out.gamma(i));
    out.V = out.W * out.gamma.asDiagonal();
    return out;
}

/// Scattering matrix of the interface from region 1 (above) to region 2.
/// Continuity of E and H:
///   W1 (c1+ + c1-) = W2 (c2+ + c2-),  V1 (c1+ - c1-) = V2 (c2+ - c2-).
inline SMatrix interface_smatrix(LayerModes const& above, LayerModes const& below)
{
    Eigen::Index const m = above.W.rows();
    Matrix const id = Matrix::Identity(m, m);
    SMatrix out;
    if (above.homogeneous && below.homogeneous)
    {
        // Harmonics decouple: scalar Fresnel coefficients per order.
        Vector r(m), t(m), rb(m), tb(m);
        for (Eigen::Index i = 0; i < m; ++i)
        {
            complex const g1 = above.gamma(i), g2 = below.gamma(i);
            complex const sum = g1 + g2;
            if (sum == 0.0)
                throw SolverError("singular interface system (degenerate grazing order)");
            r(i) = (g1 - g2) / sum;
            t(i) = 2.0 * g1 / sum;
            rb(i) = -r(i);
            tb(i) = 2.0 * g2 / sum;
        }
        out = {r.asDiagonal(), tb.asDiagonal(), t.asDiagonal(), rb.asDiagonal(), true};
    }
    else if (below.homogeneous)
    {
        // Eliminate c2+ through the E equation (W2 = I).
        Matrix const z = above.W;
        Matrix const v2z = below.gamma.asDiagonal() * z;
        auto const lu = (above.V + v2z).partialPivLu();
        out.s11 = lu.solve(above.V - v2z);
        out.s12 = lu.solve(Matrix(2.0 * below.gamma.asDiagonal()));
        out.s21 = z * (id + out.s11);
        out.s22 = z * out.s12 - id;
    }
    else if (above.homogeneous)
    {
        // Eliminate c1- through the E equation (W1 = I).
        Matrix const x = below.W;
        Matrix const v1x = above.gamma.asDiagonal() * x;
        auto const lu = (below.V + v1x).partialPivLu();
        out.s21 = lu.solve(Matrix(2.0 * above.gamma.asDiagonal()));
        out.s22 = lu.solve(below.V - v1x);
        out.s11 = x * out.s21 - id;
        out.s12 = x * (id + out.s22);
    }
    else
    {
        Matrix lhs(2 * m, 2 * m), rhs(2 * m, 2 * m);
        lhs << -above.W, below.W, above.V, below.V;
        rhs << above.W, -below.W, above.V, below.V;
        Matrix const x = lhs.partialPivLu().solve(rhs);
        out = {x.topLeftCorner(m, m), x.topRightCorner(m, m), x.bottomLeftCorner(m, m), x.bottomRightCorner(m, m)};
    }
    if (!out.s11.allFinite() || !out.s12.allFinite() || !out.s21.allFinite() || !out.s22.allFinite())
        throw SolverError("singular interface system (ill-conditioned layer)");
    return out;
}

inline Vector propagation_phases(LayerModes const& modes, double thickness_nm)
{
    Eigen::Index const m = modes.gamma.size();
    Vector phase(m);
    for (Eigen::Index i = 0; i < m; ++i)
        phase(i) = std::exp(complex(0.0, 1.0) * modes.gamma(i) * thickness_nm);
    return phase;
}

inline SMatrix propagation_smatrix(LayerModes const& modes, double thickness_nm)
{
    Eigen::Index const m = modes.gamma.size();
    Matrix const x = propagation_phases(modes, thickness_nm).asDiagonal();
    return {Matrix::Zero(m, m), x, x, Matrix::Zero(m, m)};
}

/// star(s, propagation_smatrix(...)) without the dense algebra.
inline void append_propagation(SMatrix& s, Vector const& phase)
{
    s.s12 = s.s12 * phase.asDiagonal();
    s.s21 = phase.asDiagonal() * s.s21;
    s.s22 = phase.asDiagonal() * s.s22 * phase.asDiagonal();
}

/// Redheffer star product: `a` above `b`.
inline SMatrix star(SMatrix const& a, SMatrix const& b)
{
    Eigen::Index const m = a.s11.rows();
    Matrix const id = Matrix::Identity(m, m);
    if (b.diagonal)
    {
        Vector const b11 = b.s11.diagonal(), b12 = b.s12.diagonal(), b21 = b.s21.diagonal(), b22 = b.s22.diagonal();
        // (I - B11 A22)^-1 B11 = B11 (I - A22 B11)^-1, so one factorization serves both sides.
        auto const g = (id - a.s22 * b11.asDiagonal()).partialPivLu();
        Matrix const ga21 = g.solve(a.s21);
        Matrix const ga22b12 = g.solve(a.s22 * b12.asDiagonal());
        SMatrix out;
        out.s11 = a.s11 + a.s12 * (b11.asDiagonal() * ga21);
        // (I - B11 A22)^-1 = I + B11 (I - A22 B11)^-1 A22
        out.s12 = a.s12 * (Matrix(b12.asDiagonal()) + b11.asDiagonal() * ga22b12);
        out.s21 = b21.asDiagonal() * ga21;
        out.s22 = Matrix(b22.asDiagonal()) + b21.asDiagonal() * ga22b12;
        return out;
    }
    auto const f = (id - b.s11 * a.s22).partialPivLu();
    auto const g = (id - a.s22 * b.s11).partialPivLu();
    SMatrix out;
    out.s11 = a.s11 + a.s12 * f.solve(b.s11 * a.s21);
    out.s12 = a.s12 * f.solve(b.s12);
    out.s21 = b.s21 * g.solve(a.s21);
    out.s22 = b.s22 + b.s21 * g.solve(a.s22 * b.s12);
    return out;
}

struct GratingSolution
{
    SMatrix s;
    Vector gamma_top;
    Vector gamma_bottom;
    int half;  // index of the zeroth order
};

inline GratingSolution solve_grating(Grating1D const& grating, MaterialRegistry const& registry,
                                     double wavelength_nm, double angle_deg, int n_harmonics)
{
    if (!(grating.period_nm > 0.0))
        throw ValidationError("grating period must be positive");
    if (n_harmonics < 3 || n_harmonics % 2 == 0)
        throw ValidationError("number of harmonics must be odd and at least 3");
    validate_angle(angle_deg);
    if (!(wavelength_nm > 0.0))
        throw ValidationError("wavelength must be positive");

    int const half = n_harmonics / 2;
    double const k0 = 2.0 * std::numbers::pi / wavelength_nm;
    double const n_top = ambient_index(registry, grating.incidence_medium, wavelength_nm);
    double const n_bottom = ambient_index(registry, grating.exit_medium, wavelength_nm);
    double const kx0 = k0 * n_top * std::sin(angle_deg * std::numbers::pi / 180.0);
    double const big_k = 2.0 * std::numbers::pi / grating.period_nm;

    Eigen::VectorXd kx(n_harmonics);
    for (int i = 0; i < n_harmonics; ++i)
        kx(i) = kx0 + (i - half) * big_k;

    LayerModes const top = homogeneous_modes(complex(n_top * n_top), k0, kx);
    LayerModes const bottom = homogeneous_modes(complex(n_bottom * n_bottom), k0, kx);

    std::optional<SMatrix> s;
    auto cascade = [&s](SMatrix const& b) { s = s ? star(*s, b) : b; };
    LayerModes const* above = &top;
    LayerModes current;
    LayerModes next;

    for (GratingLayer const& layer : grating.layers)
    {
        double thickness = 0.0;
        if (auto const* h = std::get_if<Layer>(&layer))
        {
            validate_layer(*h);
            thickness = h->thickness_nm;
            next = homogeneous_modes(registry.permittivity_at(h->material, wavelength_nm, h->kappa).value(), k0, kx);
        }
        else
        {
            auto const& l = std::get<LamellarLayer>(layer);
            if (!(l.filling_ratio >= 0.0 && l.filling_ratio <= 1.0))
                throw ValidationError("filling ratio must lie in [0, 1]");
            validate_layer(Layer{l.material_a, l.thickness_nm, l.kappa});
            thickness = l.thickness_nm;
            complex const ea = registry.permittivity_at(l.material_a, wavelength_nm, l.kappa).value();
            complex const eb = registry.permittivity_at(l.material_b, wavelength_nm, l.kappa).value();
            next = lamellar_modes(ea, eb, l.filling_ratio, k0, kx);
        }
        cascade(interface_smatrix(*above, next));
        append_propagation(*s, propagation_phases(next, thickness));
        s->diagonal = false;
        current = std::move(next);
        above = &current;
    }
    cascade(interface_smatrix(*above, bottom));

    if (!s->s11.allFinite() || !s->s12.allFinite() || !s->s21.allFinite() || !s->s22.allFinite())
        throw SolverError("non-finite scattering matrix");
    return {std::move(*s), top.gamma, bottom.gamma, half};
}

inline RcwaResult extract_orders(GratingSolution const& sol, Side side)
{
    bool const from_top = side == Side::top;
    Matrix const& refl = from_top ? sol.s.s11 : sol.s.s22;
    Matrix const& trans = from_top ? sol.s.s21 : sol.s.s12;
    Vector const& g_in = from_top ? sol.gamma_top : sol.gamma_bottom;
    Vector const& g_out = from_top ? sol.gamma_bottom : sol.gamma_top;

    double const flux_in = g_in(sol.half).real();
    if (!(flux_in > 0.0))
        throw ValidationError("incident port is evanescent");

    RcwaResult res;
    auto fill = [&](Matrix const& s, Vector const& g, std::vector<DiffractionOrder>& out) {
        for (Eigen::Index i = 0; i < s.rows(); ++i)
        {
            DiffractionOrder o;
            o.order = static_cast<int>(i) - sol.half;
            o.propagating = g(i).real() > 0.0 && std::abs(g(i).imag()) <= 1e-12 * std::abs(g(i));
            complex const a = s(i, sol.half);
            o.amplitude = o.propagating ? a * std::sqrt(g(i).real() / flux_in) : a;
            if (o.propagating && o.order != 0)
                res.single_mode = false;
            out.push_back(o);
        }
    };
    fill(refl, g_in, res.reflected);
    fill(trans, g_out, res.transmitted);
    res.r0 = res.reflected[sol.half].amplitude;
    auto const& t0 = res.transmitted[sol.half];
    res.t0 = t0.propagating ? t0.amplitude : complex(0.0);
    return res;
}

}  // namespace detail

/// Zeroth-order flux-normalized (r0, t0) plus all order amplitudes for
/// incidence from `side`. A multi-order situation is reported through
/// `single_mode`, not rejected.
inline RcwaResult rcwa_coefficients(Grating1D const& grating, MaterialRegistry const& registry,
                                    double wavelength_nm, double angle_deg, int n_harmonics, Side side)
{
    return detail::extract_orders(detail::solve_grating(grating, registry, wavelength_nm, angle_deg, n_harmonics),
                                  side);
}

/// Network matrix from the zeroth-order coefficients. Requires the
/// single-mode condition on both sides.
inline NetworkMatrix network_matrix_from_grating(Grating1D const& grating, MaterialRegistry const& registry,
                                                 double wavelength_nm, double angle_deg,
                                                 int n_harmonics = default_harmonics)
{
    auto const sol = detail::solve_grating(grating, registry, wavelength_nm, angle_deg, n_harmonics);
    auto const top = detail::extract_orders(sol, Side::top);
    auto const bottom = detail::extract_orders(sol, Side::bottom);
    if (!top.single_mode || !bottom.single_mode)
    {
        std::ostringstream msg;
        msg << "single-mode violation: period " << grating.period_nm
            << " nm lets higher diffraction orders propagate at " << wavelength_nm << " nm";
        throw SingleModeViolation(msg.str());
    }

    NetworkMatrix T;
    T.t1 = top.t0;
    T.t2 = bottom.r0;
    T.t3 = top.r0;
    T.t4 = bottom.t0;
    T.wavelength_nm = wavelength_nm;
    T.angle_deg = angle_deg;
    T.metadata = "solver=rcwa polarization=TE harmonics=" + std::to_string(n_harmonics) + "; " + port_convention;
    if (!T.passive())
        throw SolverError("grating result violates passivity");
    return T;
}

}  // namespace hompcm
