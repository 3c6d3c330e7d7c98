#pragma once

// Transient 1D joule heating across a thin-film stack.
//
// Solves rho*c dT/dt = d/dz(k dT/dz) + q(z, t) with q confined to the heater
// layer, on a cell-centered finite-volume grid with backward-Euler time
// stepping. Interface conductances are series (harmonic-mean) combinations
// of the two half cells, so temperature and heat flux stay continuous
// across material boundaries.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "materials.hpp"

namespace hompcm {

struct ThermalLayer
{
    std::string material;
    double thickness_nm = 0.0;
    double conductivity = 0.0;   ///< W/(m K)
    double heat_capacity = 0.0;  ///< volumetric, J/(m^3 K)
    bool is_heater = false;
};

/// Areal power density (W/m^2) delivered to the heater, piecewise linear
/// between samples and zero outside them.
class CurrentPulse
{
  public:
    CurrentPulse(std::vector<double> time_s, std::vector<double> power_w_m2)
        : time_(std::move(time_s)), power_(std::move(power_w_m2))
    {
        if (time_.size() != power_.size() || time_.size() < 2)
            throw ValidationError("pulse needs at least two (time, power) samples");
        for (std::size_t i = 0; i < time_.size(); ++i)
        {
            if (!std::isfinite(time_[i]) || !std::isfinite(power_[i]))
                throw ValidationError("pulse samples must be finite");
            if (power_[i] < 0.0)
                throw ValidationError("pulse power must be non-negative");
            if (i > 0 && !(time_[i] > time_[i - 1]))
                throw ValidationError("pulse times must be strictly increasing");
        }
    }

    /// Converts a drive current through a heater strip of the given sheet
    /// resistance and width into areal power density I^2 R_s / w^2.
    static CurrentPulse from_current(std::vector<double> time_s, std::vector<double> current_a,
                                     double sheet_resistance_ohm_sq, double width_m)
    {
        if (!(sheet_resistance_ohm_sq > 0.0) || !(width_m > 0.0))
            throw ValidationError("sheet resistance and heater width must be positive");
        for (double& i : current_a)
            i = i * i * sheet_resistance_ohm_sq / (width_m * width_m);
        return CurrentPulse(std::move(time_s), std::move(current_a));
    }

    double power_at(double t) const
    {
        if (t < time_.front() || t > time_.back())
            return 0.0;
        auto hi = std::upper_bound(time_.begin(), time_.end(), t);
        if (hi == time_.end())
            return power_.back();
        auto const i = static_cast<std::size_t>(hi - time_.begin());
        double const u = (t - time_[i - 1]) / (time_[i] - time_[i - 1]);
        return power_[i - 1] + u * (power_[i] - power_[i - 1]);
    }

    /// Exact integral of the piecewise-linear power over [a, b] (J/m^2).
    double energy_between(double a, double b) const
    {
        a = std::max(a, time_.front());
        b = std::min(b, time_.back());
        if (!(b > a))
            return 0.0;
        double e = 0.0;
        for (std::size_t i = 1; i < time_.size(); ++i)
        {
            double const lo = std::max(a, time_[i - 1]);
            double const hi = std::min(b, time_[i]);
            if (hi > lo)
                e += 0.5 * (hi - lo) * (power_at(lo) + power_at(hi));
        }
        return e;
    }

    double total_energy() const { return energy_between(time_.front(), time_.back()); }
    double start_time() const { return time_.front(); }
    /// Last instant with non-zero power.
    double end_time() const
    {
        for (std::size_t i = power_.size(); i-- > 0;)
            if (power_[i] > 0.0)
                return i + 1 < time_.size() ? time_[i + 1] : time_[i];
        return time_.front();
    }

    std::vector<double> const& times() const noexcept { return time_; }
    std::vector<double> const& powers() const noexcept { return power_; }

  private:
    std::vector<double> time_;
    std::vector<double> power_;
};

enum class ThermalBoundary
{
    fixed_ambient,
    insulated
};

struct ThermalGrid
{
    double max_cell_nm = 2.0;
    int min_cells_per_layer = 4;
    double time_step_s = 1e-9;
    /// Spacing of stored snapshots; zero stores every step.
    double output_interval_s = 0.0;
};

struct ThermalOptions
{
    ThermalBoundary top = ThermalBoundary::insulated;
    ThermalBoundary bottom = ThermalBoundary::fixed_ambient;
    double ambient_k = 293.15;
    ThermalGrid grid;
};

/// Temperatures on cell centers (depth measured from the top surface) at
/// stored snapshot times. Row-major: one row per time.
struct TemperatureField
{
    std::vector<double> depth_nm;
    std::vector<double> time_s;
    std::vector<double> temperature_k;
    std::vector<double> cell_width_nm;
    std::vector<double> heat_capacity;  ///< per cell, J/(m^3 K)
    double ambient_k = 293.15;

    double at(std::size_t time_index, std::size_t depth_index) const
    {
        return temperature_k[time_index * depth_nm.size() + depth_index];
    }

    std::span<double const> row(std::size_t time_index) const
    {
        return {temperature_k.data() + time_index * depth_nm.size(), depth_nm.size()};
    }

    /// Stored heat per unit area relative to ambient at a snapshot (J/m^2).
    double internal_energy(std::size_t time_index) const
    {
        double e = 0.0;
        for (std::size_t i = 0; i < depth_nm.size(); ++i)
            e += heat_capacity[i] * cell_width_nm[i] * 1e-9 * (at(time_index, i) - ambient_k);
        return e;
    }
};

namespace detail {

inline void validate_thermal_stack(std::span<ThermalLayer const> layers)
{
    if (layers.empty())
        throw ValidationError("thermal stack is empty");
    int first = -1, last = -1, count = 0;
    for (std::size_t i = 0; i < layers.size(); ++i)
    {
        auto const& l = layers[i];
        if (!(l.thickness_nm > 0.0) || !(l.conductivity > 0.0) || !(l.heat_capacity > 0.0))
            throw ValidationError("thermal layer '" + l.material
                                  + "' needs positive thickness, conductivity and heat capacity");
        if (l.is_heater)
        {
            if (first < 0)
                first = static_cast<int>(i);
            last = static_cast<int>(i);
            ++count;
        }
    }
    if (count == 0)
        throw ValidationError("thermal stack has no heater layer");
    if (last - first + 1 != count)
        throw ValidationError("heater layers must form one contiguous region");
}

/// Thomas algorithm; b is the diagonal, a/c the sub/super diagonals.
inline void solve_tridiagonal(std::vector<double> const& a, std::vector<double> const& b,
                              std::vector<double> const& c, std::vector<double>& d, std::vector<double>& scratch)
{
    std::size_t const n = b.size();
    scratch.resize(n);
    scratch[0] = c[0] / b[0];
    d[0] /= b[0];
    for (std::size_t i = 1; i < n; ++i)
    {
        double const m = b[i] - a[i] * scratch[i - 1];
        scratch[i] = c[i] / m;
        d[i] = (d[i] - a[i] * d[i - 1]) / m;
    }
    for (std::size_t i = n - 1; i-- > 0;)
        d[i] -= scratch[i] * d[i + 1];
}

}  // namespace detail

/// Backward-Euler solve from a uniform ambient start. The heater source in
/// each step is the exact pulse energy over that step, so the discrete
/// energy balance is exact for insulated boundaries.
inline TemperatureField solve_heat_1d(std::span<ThermalLayer const> layers, CurrentPulse const& pulse,
                                      double duration_s, ThermalOptions const& opts = {})
{
    detail::validate_thermal_stack(layers);
    auto const& grid = opts.grid;
    if (!(duration_s > 0.0) || !(grid.time_step_s > 0.0) || !(grid.max_cell_nm > 0.0) || grid.min_cells_per_layer < 1
        || grid.output_interval_s < 0.0)
        throw ValidationError("degenerate thermal grid");

    TemperatureField field;
    field.ambient_k = opts.ambient_k;
    std::vector<double> cond;
    std::vector<double> source_share;  // fraction of heater power deposited per cell
    double heater_thickness = 0.0;
    for (auto const& l : layers)
        if (l.is_heater)
            heater_thickness += l.thickness_nm;

    double z = 0.0;
    for (auto const& l : layers)
    {
        int const cells = std::max(grid.min_cells_per_layer, static_cast<int>(std::ceil(l.thickness_nm / grid.max_cell_nm - 1e-9)));
        double const dz = l.thickness_nm / cells;
        for (int c = 0; c < cells; ++c)
        {
            field.depth_nm.push_back(z + (c + 0.5) * dz);
            field.cell_width_nm.push_back(dz);
            field.heat_capacity.push_back(l.heat_capacity);
            cond.push_back(l.conductivity);
            source_share.push_back(l.is_heater ? dz / heater_thickness : 0.0);
        }
        z += l.thickness_nm;
    }

    std::size_t const n = field.depth_nm.size();
    // Conductances (W/(m^2 K)) between neighbours and to the boundaries.
    std::vector<double> g_face(n + 1, 0.0);
    for (std::size_t i = 1; i < n; ++i)
    {
        double const r = 0.5e-9 * field.cell_width_nm[i - 1] / cond[i - 1] + 0.5e-9 * field.cell_width_nm[i] / cond[i];
        g_face[i] = 1.0 / r;
    }
    if (opts.top == ThermalBoundary::fixed_ambient)
        g_face[0] = 1.0 / (0.5e-9 * field.cell_width_nm[0] / cond[0]);
    if (opts.bottom == ThermalBoundary::fixed_ambient)
        g_face[n] = 1.0 / (0.5e-9 * field.cell_width_nm[n - 1] / cond[n - 1]);

    auto const steps = static_cast<std::size_t>(std::max(1.0, std::round(duration_s / grid.time_step_s)));
    double const dt = duration_s / static_cast<double>(steps);
    std::size_t const stride =
        grid.output_interval_s > 0.0 ? std::max<std::size_t>(1, static_cast<std::size_t>(std::round(grid.output_interval_s / dt)))
                                     : 1;

    // Rise above ambient; fixed boundaries then hold zero.
    std::vector<double> temp(n, 0.0);
    std::vector<double> mass(n);
    for (std::size_t i = 0; i < n; ++i)
        mass[i] = field.heat_capacity[i] * field.cell_width_nm[i] * 1e-9 / dt;

    auto store = [&](double t) {
        field.time_s.push_back(t);
        for (double v : temp)
            field.temperature_k.push_back(opts.ambient_k + v);
    };
    store(0.0);

    std::vector<double> lower(n), diag(n), upper(n), rhs(n), scratch;
    for (std::size_t i = 0; i < n; ++i)
    {
        lower[i] = -g_face[i];
        upper[i] = -g_face[i + 1];
        diag[i] = mass[i] + g_face[i] + g_face[i + 1];
    }
    lower[0] = 0.0;
    upper[n - 1] = 0.0;

    for (std::size_t s = 1; s <= steps; ++s)
    {
        double const t0 = dt * static_cast<double>(s - 1);
        double const t1 = s == steps ? duration_s : dt * static_cast<double>(s);
        double const power = pulse.energy_between(t0, t1) / dt;
        for (std::size_t i = 0; i < n; ++i)
            rhs[i] = mass[i] * temp[i] + power * source_share[i];
        detail::solve_tridiagonal(lower, diag, upper, rhs, scratch);
        temp.swap(rhs);
        if (s % stride == 0 || s == steps)
            store(t1);
    }
    return field;
}

/// Bilinear interpolation in (depth, time).
inline double probe(TemperatureField const& field, double depth_nm, double time_s)
{
    auto const& z = field.depth_nm;
    auto const& t = field.time_s;
    if (z.empty() || t.empty())
        throw ValidationError("empty temperature field");
    if (!(depth_nm >= z.front() && depth_nm <= z.back()) || !(time_s >= t.front() && time_s <= t.back()))
        throw ValidationError("probe point outside the temperature field");

    auto bracket = [](std::vector<double> const& x, double v) -> std::pair<std::size_t, double> {
        if (x.size() == 1)
            return {0, 0.0};
        auto hi = std::upper_bound(x.begin(), x.end(), v);
        std::size_t i = hi == x.end() ? x.size() - 2 : static_cast<std::size_t>(hi - x.begin()) - 1;
        i = std::min(i, x.size() - 2);
        return {i, (v - x[i]) / (x[i + 1] - x[i])};
    };
    auto const [iz, uz] = bracket(z, depth_nm);
    auto const [it, ut] = bracket(t, time_s);
    std::size_t const jz = z.size() == 1 ? iz : iz + 1;
    std::size_t const jt = t.size() == 1 ? it : it + 1;
    double const a = field.at(it, iz) * (1.0 - uz) + field.at(it, jz) * uz;
    double const b = field.at(jt, iz) * (1.0 - uz) + field.at(jt, jz) * uz;
    return a * (1.0 - ut) + b * ut;
}

/// Maximum over all snapshots of cells whose centers lie in [lo, hi] nm.
inline double peak_temperature(TemperatureField const& field, double depth_lo_nm, double depth_hi_nm)
{
    double peak = -1.0;
    for (std::size_t it = 0; it < field.time_s.size(); ++it)
        for (std::size_t iz = 0; iz < field.depth_nm.size(); ++iz)
            if (field.depth_nm[iz] >= depth_lo_nm && field.depth_nm[iz] <= depth_hi_nm)
                peak = std::max(peak, field.at(it, iz));
    if (peak < 0.0)
        throw ValidationError("no grid cell inside the requested depth range");
    return peak;
}

/// Depth interval [top, bottom] (nm from the surface) of layer `index`.
inline std::pair<double, double> layer_span(std::span<ThermalLayer const> layers, std::size_t index)
{
    if (index >= layers.size())
        throw ValidationError("layer index out of range");
    double z = 0.0;
    for (std::size_t i = 0; i < index; ++i)
        z += layers[i].thickness_nm;
    return {z, z + layers[index].thickness_nm};
}

// Thermal stack CSV: material,thickness_nm,k_W_mK,rho_c_J_m3K,is_heater
inline std::vector<ThermalLayer> parse_thermal_stack(std::istream& in)
{
    std::vector<ThermalLayer> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line))
    {
        ++line_no;
        std::string const t = detail::trim(line);
        if (t.empty() || t.front() == '#' || t.rfind("material,", 0) == 0)
            continue;
        std::vector<std::string> f;
        std::istringstream row(t);
        std::string cell;
        while (std::getline(row, cell, ','))
            f.push_back(detail::trim(cell));
        if (f.size() != 5)
            throw ValidationError("line " + std::to_string(line_no) + ": expected 5 fields");
        ThermalLayer l;
        l.material = f[0];
        l.thickness_nm = detail::parse_number(f[1], line_no, "thickness_nm");
        l.conductivity = detail::parse_number(f[2], line_no, "k_W_mK");
        l.heat_capacity = detail::parse_number(f[3], line_no, "rho_c_J_m3K");
        if (f[4] == "1" || f[4] == "true")
            l.is_heater = true;
        else if (f[4] == "0" || f[4] == "false")
            l.is_heater = false;
        else
            throw ValidationError("line " + std::to_string(line_no) + ": is_heater must be 0/1/true/false");
        out.push_back(l);
    }
    detail::validate_thermal_stack(out);
    return out;
}

// Pulse CSV: time_s,power_W_m2
inline CurrentPulse parse_pulse(std::istream& in)
{
    std::vector<double> t, p;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line))
    {
        ++line_no;
        std::string const s = detail::trim(line);
        if (s.empty() || s.front() == '#' || s.rfind("time_s", 0) == 0)
            continue;
        auto const comma = s.find(',');
        if (comma == std::string::npos || s.find(',', comma + 1) != std::string::npos)
            throw ValidationError("line " + std::to_string(line_no) + ": expected time_s,power_W_m2");
        t.push_back(detail::parse_number(s.substr(0, comma), line_no, "time_s"));
        p.push_back(detail::parse_number(s.substr(comma + 1), line_no, "power_W_m2"));
    }
    return CurrentPulse(std::move(t), std::move(p));
}

inline std::vector<ThermalLayer> load_thermal_stack(std::filesystem::path const& path)
{
    std::ifstream in(path);
    if (!in)
        throw ValidationError("cannot open thermal stack file " + path.string());
    return parse_thermal_stack(in);
}

inline CurrentPulse load_pulse(std::filesystem::path const& path)
{
    std::ifstream in(path);
    if (!in)
        throw ValidationError("cannot open pulse file " + path.string());
    return parse_pulse(in);
}

}  // namespace hompcm
