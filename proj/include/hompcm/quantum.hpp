#pragma once

// Two-photon coincidence statistics at the outputs of a (possibly lossy)
// 2x2 network. The detector constant and |G(0)|^2 are normalized to one, so
// every result is a probability ratio or a baseline-normalized count.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "errors.hpp"
#include "network.hpp"

namespace hompcm {

/// Energy-conserving down-conversion spectrum whose temporal envelope is
/// g(tau) = exp(-(bandwidth*tau)^2/2). Frequencies in rad/s.
struct GaussianSpectrum
{
    double pump_frequency = 0.0;
    double bandwidth = 0.0;
};

/// psi(omega_a, omega_b) on a square uniform mesh, stored row-major with
/// omega_a as the row index. Normalized so that sum |psi|^2 d_omega^2 = 1.
class SampledSpectrum
{
  public:
    static constexpr double normalization_tolerance = 1e-9;

    SampledSpectrum(double omega_start, double omega_step, std::size_t count, std::vector<complex> values)
        : start_(omega_start), step_(omega_step), count_(count), values_(std::move(values))
    {
        if (count_ < 2 || !(step_ > 0.0))
            throw ValidationError("spectral mesh needs at least 2 points and a positive step");
        if (values_.size() != count_ * count_)
            throw ValidationError("spectral amplitude size does not match the mesh");
        double const norm = norm_squared();
        if (std::abs(norm - 1.0) > normalization_tolerance)
            throw ValidationError("two-photon amplitude is not normalized (integral of |psi|^2 = "
                                  + std::to_string(norm) + ")");
    }

    /// Samples `f` on the mesh and rescales it to unit norm.
    template <class F>
    static SampledSpectrum from_function(F&& f, double omega_start, double omega_step, std::size_t count)
    {
        std::vector<complex> v(count * count);
        double sum = 0.0;
        for (std::size_t i = 0; i < count; ++i)
            for (std::size_t j = 0; j < count; ++j)
            {
                complex const x = f(omega_start + i * omega_step, omega_start + j * omega_step);
                v[i * count + j] = x;
                sum += std::norm(x);
            }
        double const scale = 1.0 / std::sqrt(sum * omega_step * omega_step);
        for (auto& x : v)
            x *= scale;
        return SampledSpectrum(omega_start, omega_step, count, std::move(v));
    }

    double omega_start() const noexcept { return start_; }
    double omega_step() const noexcept { return step_; }
    std::size_t count() const noexcept { return count_; }
    complex at(std::size_t a, std::size_t b) const { return values_[a * count_ + b]; }

    double norm_squared() const
    {
        double s = 0.0;
        for (auto const& x : values_)
            s += std::norm(x);
        return s * step_ * step_;
    }

  private:
    double start_;
    double step_;
    std::size_t count_;
    std::vector<complex> values_;
};

using SpectralAmplitude = std::variant<GaussianSpectrum, SampledSpectrum>;

struct HOMTrace
{
    std::vector<double> delays;  ///< half relative delay (s)
    std::vector<double> counts;  ///< coincidences divided by the baseline
};

/// Real (or sampled) temporal envelope g(tau) with g(0) = 1, integrated by
/// the trapezoidal rule on [-half_window, half_window].
struct TemporalEnvelope
{
    std::function<double(double)> g;
    double half_window = 0.0;
    std::size_t points = 20001;

    static TemporalEnvelope gaussian(double bandwidth)
    {
        if (!(bandwidth > 0.0))
            throw ValidationError("bandwidth must be positive");
        return {[bandwidth](double t) { return std::exp(-0.5 * bandwidth * bandwidth * t * t); },
                12.0 / bandwidth, 20001};
    }

    /// Unit rectangle of full width `width`; the edges take the midpoint
    /// value 1/2 and fall on grid nodes for the default point count.
    static TemporalEnvelope rectangular(double width, std::size_t points = 16385)
    {
        if (!(width > 0.0))
            throw ValidationError("pulse width must be positive");
        double const h = 0.5 * width;
        return {[h](double t) {
                    double const a = std::abs(t);
                    if (a < h)
                        return 1.0;
                    return a == h ? 0.5 : 0.0;
                },
                2.0 * width, points};
    }

    /// Samples on tau = (i - (n-1)/2) * step, linearly interpolated and zero
    /// outside the sampled span.
    static TemporalEnvelope sampled(double step, std::vector<double> values)
    {
        if (values.size() < 3 || values.size() % 2 == 0 || !(step > 0.0))
            throw ValidationError("sampled envelope needs an odd number (>= 3) of samples centered on tau = 0");
        double const half = 0.5 * static_cast<double>(values.size() - 1) * step;
        auto data = std::make_shared<std::vector<double>>(std::move(values));
        return {[data, step, half](double t) {
                    double const x = (t + half) / step;
                    if (x < 0.0 || x > static_cast<double>(data->size() - 1))
                        return 0.0;
                    auto const i = std::min(static_cast<std::size_t>(x), data->size() - 2);
                    double const u = x - static_cast<double>(i);
                    return (*data)[i] * (1.0 - u) + (*data)[i + 1] * u;
                },
                half, 8 * (data->size() - 1) + 1};
    }
};

namespace detail {

/// t1 t4 conj(t2) conj(t3), the only phase-sensitive combination.
inline complex interference_product(NetworkMatrix const& T)
{
    return T.t1 * T.t4 * std::conj(T.t2) * std::conj(T.t3);
}

inline std::vector<double> envelope_grid(TemporalEnvelope const& env)
{
    if (!env.g || !(env.half_window > 0.0) || env.points < 3)
        throw ValidationError("temporal envelope needs a function, a positive window and >= 3 points");
    std::vector<double> tau(env.points);
    double const step = 2.0 * env.half_window / static_cast<double>(env.points - 1);
    for (std::size_t i = 0; i < env.points; ++i)
        tau[i] = -env.half_window + step * static_cast<double>(i);
    if (env.points % 2 == 1)
        tau[env.points / 2] = 0.0;
    return tau;
}

inline void require_symmetric(TemporalEnvelope const& env, std::vector<double> const& tau)
{
    double scale = 0.0, worst = 0.0;
    for (double t : tau)
    {
        double const a = env.g(t), b = env.g(-t);
        scale = std::max(scale, std::abs(a));
        worst = std::max(worst, std::abs(a - b));
    }
    if (worst > 1e-12 * std::max(scale, 1e-300))
        throw ValidationError("temporal envelope is not symmetric: g(-tau) != g(tau)");
}

template <class F>
double trapezoid(std::vector<double> const& x, F&& f)
{
    double s = 0.0;
    double prev = f(x[0]);
    for (std::size_t i = 1; i < x.size(); ++i)
    {
        double const cur = f(x[i]);
        s += 0.5 * (x[i] - x[i - 1]) * (prev + cur);
        prev = cur;
    }
    return s;
}

}  // namespace detail

/// Coincidence level for fully distinguishable photons,
/// |t2|^2 |t3|^2 + |t1|^2 |t4|^2.
inline double baseline(NetworkMatrix const& T)
{
    return std::norm(T.t2) * std::norm(T.t3) + std::norm(T.t1) * std::norm(T.t4);
}

/// Exchange overlap of psi(w, w') with psi*(w', w). Complex in general;
/// joint_probability consumes it inside Re{t1 t4 t2* t3* I}. For the
/// symmetric sources considered here it is real.
inline complex overlap_integral(SpectralAmplitude const& psi)
{
    if (auto const* g = std::get_if<GaussianSpectrum>(&psi))
    {
        if (!(g->bandwidth > 0.0))
            throw ValidationError("bandwidth must be positive");
        // psi(w_a, w_b) = phi(w_a) delta(w_a + w_b - w0) with phi symmetric
        // about w0/2 is exchange symmetric.
        return {1.0, 0.0};
    }
    auto const& s = std::get<SampledSpectrum>(psi);
    complex sum = 0.0;
    for (std::size_t a = 0; a < s.count(); ++a)
        for (std::size_t b = 0; b < s.count(); ++b)
            sum += s.at(a, b) * std::conj(s.at(b, a));
    return sum * s.omega_step() * s.omega_step();
}

/// Joint detection probability (detector constant normalized out).
inline double joint_probability(NetworkMatrix const& T, complex overlap)
{
    if (std::abs(overlap) > 1.0 + 1e-12)
        throw ValidationError("overlap integral magnitude exceeds 1");
    double const p = baseline(T) + 2.0 * std::real(detail::interference_product(T) * overlap);
    if (p < -1e-12)
        throw SolverError("negative joint probability " + std::to_string(p) + ": network is not passive");
    return std::max(p, 0.0);
}

inline double joint_probability(NetworkMatrix const& T, double overlap)
{
    return joint_probability(T, complex(overlap, 0.0));
}

/// (Baseline - P)/Baseline at unit overlap. Positive values are coalescence
/// (a dip), negative values anti-coalescence (a peak).
inline double coalescence(NetworkMatrix const& T)
{
    double const b = baseline(T);
    if (!(b > 1e-15))
        throw ValidationError("baseline vanishes; coalescence is undefined");
    return -2.0 * std::real(detail::interference_product(T)) / b;
}

/// angle(t2) + angle(t3) - angle(t1) - angle(t4), wrapped to (-pi, pi].
inline double total_phase(NetworkMatrix const& T)
{
    if (T.t1 == 0.0 || T.t2 == 0.0 || T.t3 == 0.0 || T.t4 == 0.0)
        throw ValidationError("total phase undefined: network has a zero entry");
    double const phi = std::arg(T.t2 * T.t3 * std::conj(T.t1) * std::conj(T.t4));
    return phi <= -std::numbers::pi ? std::numbers::pi : phi;
}

/// Closed-form baseline-normalized coincidence trace for the Gaussian
/// envelope: 1 + (2 Re{t1 t4 t2* t3*}/baseline) exp(-(bandwidth dtau)^2).
inline HOMTrace hom_trace_gaussian(NetworkMatrix const& T, double bandwidth, std::span<double const> delays)
{
    if (!(bandwidth > 0.0))
        throw ValidationError("bandwidth must be positive");
    double const b = baseline(T);
    if (!(b > 1e-15))
        throw ValidationError("baseline vanishes; trace cannot be normalized");
    double const depth = 2.0 * std::real(detail::interference_product(T)) / b;
    HOMTrace out;
    out.delays.assign(delays.begin(), delays.end());
    out.counts.reserve(delays.size());
    for (double d : delays)
    {
        double const x = bandwidth * d;
        out.counts.push_back(std::max(1.0 + depth * std::exp(-x * x), 0.0));
    }
    return out;
}

/// Total coincidences for a real symmetric envelope by quadrature:
/// baseline + 2 Re{t1 t4 t2* t3*} * int g(t) g(t - 2 dtau) / int g^2.
inline double coincidence_general(NetworkMatrix const& T, TemporalEnvelope const& env, double delta_tau)
{
    auto const tau = detail::envelope_grid(env);
    detail::require_symmetric(env, tau);
    double const den = detail::trapezoid(tau, [&](double t) {
        double const v = env.g(t);
        return v * v;
    });
    if (!(den > 0.0))
        throw ValidationError("temporal envelope has zero energy");
    double const num = detail::trapezoid(tau, [&](double t) { return env.g(t) * env.g(t - 2.0 * delta_tau); });
    return baseline(T) + 2.0 * std::real(detail::interference_product(T)) * (num / den);
}

/// Time-resolved joint probability (|G(0)|^2 = 1) for detection at delay
/// `tau` between the two detectors.
inline double joint_probability_time(NetworkMatrix const& T, std::function<double(double)> const& g, double tau,
                                     double delta_tau)
{
    if (!g)
        throw ValidationError("temporal envelope function is empty");
    double const a = g(tau);
    double const b = g(2.0 * delta_tau - tau);
    return std::norm(T.t2) * std::norm(T.t3) * b * b + std::norm(T.t1) * std::norm(T.t4) * a * a
           + 2.0 * std::real(detail::interference_product(T)) * a * b;
}

}  // namespace hompcm
