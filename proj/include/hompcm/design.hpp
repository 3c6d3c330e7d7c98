#pragma once

// Parameter sweeps and baseline-constrained switching-contrast optimization
// over the device geometries.

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <exception>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <type_traits>
#include <variant>
#include <vector>

#include "errors.hpp"
#include "hash.hpp"
#include "materials.hpp"
#include "network.hpp"
#include "presets.hpp"
#include "quantum.hpp"
#include "rcwa.hpp"
#include "tmm.hpp"

namespace hompcm {

/// Named parameters: wavelength_nm, angle_deg, filling_ratio, period_nm,
/// crystallinity, crystallinity:<i>, layer_thickness:<i>. Layer indices
/// count from the top.
using ParameterMap = std::map<std::string, double>;

namespace detail {

inline std::optional<std::size_t> indexed_parameter(std::string const& name, std::string_view prefix)
{
    if (name.size() <= prefix.size() || name.compare(0, prefix.size(), prefix) != 0)
        return std::nullopt;
    std::size_t idx = 0;
    char const* first = name.data() + prefix.size();
    char const* last = name.data() + name.size();
    auto [ptr, ec] = std::from_chars(first, last, idx);
    if (ec != std::errc() || ptr != last)
        throw ValidationError("bad layer index in parameter '" + name + "'");
    return idx;
}

inline double lookup(ParameterMap const& p, std::string const& key, double fallback)
{
    auto it = p.find(key);
    return it == p.end() ? fallback : it->second;
}

inline std::size_t layer_count(Geometry const& g)
{
    return std::visit([](auto const& x) { return x.layers.size(); }, g);
}

template <class... Ts>
struct overloaded : Ts...
{
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

inline void set_layer_kappa(GratingLayer& l, double kappa)
{
    std::visit([kappa](auto& x) { x.kappa = kappa; }, l);
}

inline void set_layer_thickness(GratingLayer& l, double t)
{
    std::visit([t](auto& x) { x.thickness_nm = t; }, l);
}

}  // namespace detail

inline void validate_parameter_name(std::string const& name)
{
    static constexpr char const* plain[] = {"wavelength_nm", "angle_deg", "filling_ratio", "period_nm",
                                            "crystallinity"};
    for (char const* p : plain)
        if (name == p)
            return;
    if (detail::indexed_parameter(name, "layer_thickness:") || detail::indexed_parameter(name, "crystallinity:"))
        return;
    throw ValidationError("unknown parameter '" + name + "'");
}

/// Copy of `g` with the geometric and material parameters in `p` applied.
/// `crystallinity` sets every phase-change layer; `crystallinity:<i>` then
/// overrides single layers.
inline Geometry apply_parameters(Geometry g, ParameterMap const& p, MaterialRegistry const& registry)
{
    std::size_t const n = detail::layer_count(g);
    for (auto const& [name, value] : p)
        validate_parameter_name(name);

    auto check_index = [n](std::size_t i, std::string const& name) {
        if (i >= n)
            throw ValidationError("parameter '" + name + "' refers to layer " + std::to_string(i) + " of "
                                  + std::to_string(n));
    };

    std::visit(detail::overloaded{
                   [&](LayerStack& s) {
                       if (p.count("filling_ratio") || p.count("period_nm"))
                           throw ValidationError("filling_ratio and period_nm apply only to gratings");
                       if (auto it = p.find("crystallinity"); it != p.end())
                           for (auto& l : s.layers)
                               if (registry.is_phase_change(l.material))
                                   l.kappa = it->second;
                       for (auto const& [name, value] : p)
                       {
                           if (auto i = detail::indexed_parameter(name, "crystallinity:"))
                           {
                               check_index(*i, name);
                               s.layers[*i].kappa = value;
                           }
                           else if (auto j = detail::indexed_parameter(name, "layer_thickness:"))
                           {
                               check_index(*j, name);
                               s.layers[*j].thickness_nm = value;
                           }
                       }
                   },
                   [&](Grating1D& gr) {
                       if (auto it = p.find("period_nm"); it != p.end())
                           gr.period_nm = it->second;
                       auto const fill = p.find("filling_ratio");
                       bool has_lamellar = false;
                       for (auto& l : gr.layers)
                           if (auto* lam = std::get_if<LamellarLayer>(&l))
                           {
                               has_lamellar = true;
                               if (fill != p.end())
                                   lam->filling_ratio = fill->second;
                           }
                       if (fill != p.end() && !has_lamellar)
                           throw ValidationError("filling_ratio given but the grating has no lamellar layer");
                       if (auto it = p.find("crystallinity"); it != p.end())
                           for (auto& l : gr.layers)
                           {
                               bool pcm = std::visit(
                                   detail::overloaded{
                                       [&](Layer const& x) { return registry.is_phase_change(x.material); },
                                       [&](LamellarLayer const& x) {
                                           return registry.is_phase_change(x.material_a)
                                                  || registry.is_phase_change(x.material_b);
                                       }},
                                   l);
                               if (pcm)
                                   detail::set_layer_kappa(l, it->second);
                           }
                       for (auto const& [name, value] : p)
                       {
                           if (auto i = detail::indexed_parameter(name, "crystallinity:"))
                           {
                               check_index(*i, name);
                               detail::set_layer_kappa(gr.layers[*i], value);
                           }
                           else if (auto j = detail::indexed_parameter(name, "layer_thickness:"))
                           {
                               check_index(*j, name);
                               detail::set_layer_thickness(gr.layers[*j], value);
                           }
                       }
                   }},
               g);
    return g;
}

/// Network matrix of `g` at the operating point in `p` (defaults 810 nm,
/// 45 degrees).
inline NetworkMatrix evaluate_network(Geometry const& g, ParameterMap const& p, MaterialRegistry const& registry,
                                      int n_harmonics = default_harmonics)
{
    Geometry const applied = apply_parameters(g, p, registry);
    double const wl = detail::lookup(p, "wavelength_nm", design_wavelength_nm);
    double const angle = detail::lookup(p, "angle_deg", design_angle_deg);
    return std::visit(detail::overloaded{
                          [&](LayerStack const& s) { return network_matrix_from_stack(s, registry, wl, angle); },
                          [&](Grating1D const& gr) {
                              return network_matrix_from_grating(gr, registry, wl, angle, n_harmonics);
                          }},
                      applied);
}

/// Runs fn(i) for i in [0, count) on up to `jobs` threads. Each index is
/// handled exactly once; the exception thrown for the lowest index wins.
template <class F>
void parallel_for(std::size_t count, unsigned jobs, F&& fn)
{
    jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
    if (jobs == 1)
    {
        for (std::size_t i = 0; i < count; ++i)
            fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(count);
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (unsigned w = 0; w < jobs; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1))
            {
                try
                {
                    fn(i);
                }
                catch (...)
                {
                    errors[i] = std::current_exception();
                }
            }
        });
    for (auto& t : pool)
        t.join();
    for (auto const& e : errors)
        if (e)
            std::rethrow_exception(e);
}

struct SweepAxis
{
    std::string name;
    double min = 0.0;
    double max = 1.0;
    int steps = 2;

    double value(int i) const
    {
        if (i == steps - 1)
            return max;
        return min + (max - min) * static_cast<double>(i) / static_cast<double>(steps - 1);
    }

    void validate() const
    {
        validate_parameter_name(name);
        if (steps < 2)
            throw ValidationError("axis '" + name + "' needs at least 2 steps");
        if (!(min < max))
            throw ValidationError("axis '" + name + "' needs min < max");
    }
};

struct SweepSpec
{
    std::string geometry_name;  ///< preset name or source file, for provenance
    Geometry geometry;
    SweepAxis axis1;
    SweepAxis axis2;
    ParameterMap fixed;
    int n_harmonics = default_harmonics;
};

struct SweepCell
{
    double x1 = 0.0;
    double x2 = 0.0;
    bool valid = false;
    double coalescence = std::numeric_limits<double>::quiet_NaN();
    double baseline = std::numeric_limits<double>::quiet_NaN();
    NetworkMatrix network;
    std::string note;  ///< why the cell is invalid
};

/// Cells are axis1-major: cell(i, j) = cells[i * axis2.steps + j].
struct SweepResult
{
    SweepSpec spec;
    std::vector<SweepCell> cells;
    std::map<std::string, std::string> material_hashes;

    SweepCell const& cell(int i, int j) const { return cells[static_cast<std::size_t>(i * spec.axis2.steps + j)]; }
};

/// SHA-256 of every material file loaded into the registry, keyed by id.
inline std::map<std::string, std::string> material_file_hashes(MaterialRegistry const& registry)
{
    std::map<std::string, std::string> out;
    for (auto const& [id, path] : registry.files())
        out[id] = sha256_file(path);
    return out;
}

inline void validate_sweep(SweepSpec const& spec)
{
    spec.axis1.validate();
    spec.axis2.validate();
    if (spec.axis1.name == spec.axis2.name)
        throw ValidationError("sweep axes must differ");
    for (auto const& [name, _] : spec.fixed)
        validate_parameter_name(name);
}

/// Evaluates the full grid. Cells where higher diffraction orders propagate
/// or the baseline vanishes are kept but marked invalid; any other error
/// aborts the sweep.
inline SweepResult run_sweep(SweepSpec const& spec, MaterialRegistry const& registry, unsigned jobs = 1)
{
    validate_sweep(spec);
    SweepResult res;
    res.spec = spec;
    res.material_hashes = material_file_hashes(registry);
    int const n1 = spec.axis1.steps, n2 = spec.axis2.steps;
    res.cells.resize(static_cast<std::size_t>(n1) * static_cast<std::size_t>(n2));

    parallel_for(res.cells.size(), jobs, [&](std::size_t k) {
        int const i = static_cast<int>(k / static_cast<std::size_t>(n2));
        int const j = static_cast<int>(k % static_cast<std::size_t>(n2));
        SweepCell& cell = res.cells[k];
        cell.x1 = spec.axis1.value(i);
        cell.x2 = spec.axis2.value(j);
        ParameterMap p = spec.fixed;
        p[spec.axis1.name] = cell.x1;
        p[spec.axis2.name] = cell.x2;
        try
        {
            cell.network = evaluate_network(spec.geometry, p, registry, spec.n_harmonics);
        }
        catch (SingleModeViolation const& e)
        {
            cell.note = e.what();
            return;
        }
        cell.baseline = baseline(cell.network);
        if (!(cell.baseline > 1e-15))
        {
            cell.note = "baseline vanishes";
            return;
        }
        cell.coalescence = coalescence(cell.network);
        cell.valid = true;
    });
    return res;
}

struct SwitchingContrast
{
    double coal_crystalline = 0.0;
    double coal_amorphous = 0.0;
    double contrast = 0.0;  ///< amorphous minus crystalline
    double baseline_crystalline = 0.0;
    double baseline_amorphous = 0.0;

    double min_baseline() const { return std::min(baseline_crystalline, baseline_amorphous); }
};

/// Coalescence with every phase-change layer fully crystalline and fully
/// amorphous. Per-layer crystallinity entries in `p` are ignored.
inline SwitchingContrast switching_contrast(Geometry const& g, ParameterMap p, MaterialRegistry const& registry,
                                            int n_harmonics = default_harmonics)
{
    std::erase_if(p, [](auto const& kv) { return kv.first.rfind("crystallinity", 0) == 0; });
    SwitchingContrast out;
    p["crystallinity"] = 1.0;
    NetworkMatrix const tc = evaluate_network(g, p, registry, n_harmonics);
    p["crystallinity"] = 0.0;
    NetworkMatrix const ta = evaluate_network(g, p, registry, n_harmonics);
    out.coal_crystalline = coalescence(tc);
    out.coal_amorphous = coalescence(ta);
    out.contrast = out.coal_amorphous - out.coal_crystalline;
    out.baseline_crystalline = baseline(tc);
    out.baseline_amorphous = baseline(ta);
    return out;
}

struct FreeParameter
{
    std::string name;
    double lower = 0.0;
    double upper = 0.0;
};

struct OptimizeOptions
{
    double baseline_min = 0.0;
    int grid_points = 21;          ///< per parameter, when at most two are free
    int random_samples = 400;      ///< scan size when three or more are free
    int refine_rounds = 3;
    int golden_iterations = 30;
    std::uint64_t seed = 0;
    int n_harmonics = default_harmonics;
    unsigned jobs = 1;
};

struct OptimizeResult
{
    ParameterMap best;  ///< fixed parameters plus the optimized free ones
    SwitchingContrast value;
    bool constraint_active = false;
    double unconstrained_scan_contrast = 0.0;
    int evaluations = 0;
    std::string constraint = "min(baseline_crystalline, baseline_amorphous) >= baseline_min";
};

/// Maximizes switching contrast over the free parameters subject to the
/// baseline bound in both phases. Grid (or seeded random) scan, then
/// coordinate-wise golden-section refinement around the best feasible point.
inline OptimizeResult optimize_contrast(Geometry const& g, ParameterMap const& fixed,
                                        std::vector<FreeParameter> const& free, MaterialRegistry const& registry,
                                        OptimizeOptions const& opts)
{
    if (free.empty())
        throw ValidationError("empty search region: no free parameters");
    for (auto const& f : free)
    {
        validate_parameter_name(f.name);
        if (!std::isfinite(f.lower) || !std::isfinite(f.upper) || f.lower > f.upper)
            throw ValidationError("infeasible bounds for '" + f.name + "'");
        if (f.name.rfind("crystallinity", 0) == 0)
            throw ValidationError("crystallinity cannot be a free parameter of the switching contrast");
    }
    if (opts.grid_points < 2 || opts.random_samples < 1 || opts.refine_rounds < 0 || opts.golden_iterations < 0)
        throw ValidationError("invalid optimizer settings");

    std::size_t const d = free.size();
    std::vector<std::vector<double>> candidates;
    if (d <= 2)
    {
        std::size_t total = 1;
        for (std::size_t k = 0; k < d; ++k)
            total *= static_cast<std::size_t>(opts.grid_points);
        for (std::size_t c = 0; c < total; ++c)
        {
            std::vector<double> x(d);
            std::size_t rem = c;
            for (std::size_t k = d; k-- > 0;)
            {
                int const idx = static_cast<int>(rem % static_cast<std::size_t>(opts.grid_points));
                rem /= static_cast<std::size_t>(opts.grid_points);
                double const u = static_cast<double>(idx) / static_cast<double>(opts.grid_points - 1);
                x[k] = idx == opts.grid_points - 1 ? free[k].upper : free[k].lower + u * (free[k].upper - free[k].lower);
            }
            candidates.push_back(std::move(x));
        }
    }
    else
    {
        std::mt19937_64 rng(opts.seed);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        for (int s = 0; s < opts.random_samples; ++s)
        {
            std::vector<double> x(d);
            for (std::size_t k = 0; k < d; ++k)
                x[k] = free[k].lower + unit(rng) * (free[k].upper - free[k].lower);
            candidates.push_back(std::move(x));
        }
    }

    struct Eval
    {
        bool ok = false;
        SwitchingContrast v;
    };
    auto evaluate = [&](std::vector<double> const& x) {
        ParameterMap p = fixed;
        for (std::size_t k = 0; k < d; ++k)
            p[free[k].name] = x[k];
        Eval e;
        try
        {
            e.v = switching_contrast(g, p, registry, opts.n_harmonics);
            e.ok = true;
        }
        catch (SingleModeViolation const&)
        {
        }
        catch (ValidationError const& err)
        {
            // vanishing baseline leaves coalescence undefined
            if (std::string(err.what()).find("baseline vanishes") == std::string::npos)
                throw;
        }
        return e;
    };
    auto feasible = [&](Eval const& e) { return e.ok && e.v.min_baseline() >= opts.baseline_min; };

    std::vector<Eval> scan(candidates.size());
    parallel_for(candidates.size(), opts.jobs, [&](std::size_t i) { scan[i] = evaluate(candidates[i]); });

    OptimizeResult out;
    out.evaluations = static_cast<int>(candidates.size());
    double best_unconstrained = -std::numeric_limits<double>::infinity();
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < scan.size(); ++i)
    {
        if (!scan[i].ok)
            continue;
        best_unconstrained = std::max(best_unconstrained, scan[i].v.contrast);
        if (feasible(scan[i]) && (!best || scan[i].v.contrast > scan[*best].v.contrast))
            best = i;
    }
    if (!best)
        throw ValidationError("no point in the search region satisfies the baseline bound "
                              + std::to_string(opts.baseline_min));

    std::vector<double> x = candidates[*best];
    Eval current = scan[*best];

    std::vector<double> step(d);
    for (std::size_t k = 0; k < d; ++k)
    {
        double const span = free[k].upper - free[k].lower;
        step[k] = d <= 2 ? span / static_cast<double>(opts.grid_points - 1) : 0.25 * span;
    }

    double const inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int round = 0; round < opts.refine_rounds; ++round)
    {
        for (std::size_t k = 0; k < d; ++k)
        {
            double lo = std::max(free[k].lower, x[k] - step[k]);
            double hi = std::min(free[k].upper, x[k] + step[k]);
            if (!(hi > lo))
                continue;
            // Infeasible points score -inf; the best feasible point seen is kept
            // regardless of where the bracket converges.
            auto score = [&](double v) {
                std::vector<double> y = x;
                y[k] = v;
                Eval e = evaluate(y);
                ++out.evaluations;
                if (e.ok)
                    best_unconstrained = std::max(best_unconstrained, e.v.contrast);
                if (feasible(e))
                {
                    if (e.v.contrast > current.v.contrast)
                    {
                        current = e;
                        x = y;
                    }
                    return e.v.contrast;
                }
                return -std::numeric_limits<double>::infinity();
            };
            double a = lo, b = hi;
            double c = b - inv_phi * (b - a), e = a + inv_phi * (b - a);
            double fc = score(c), fe = score(e);
            for (int it = 0; it < opts.golden_iterations; ++it)
            {
                if (fc >= fe)
                {
                    b = e;
                    e = c;
                    fe = fc;
                    c = b - inv_phi * (b - a);
                    fc = score(c);
                }
                else
                {
                    a = c;
                    c = e;
                    fc = fe;
                    e = a + inv_phi * (b - a);
                    fe = score(e);
                }
            }
            step[k] *= 0.5;
        }
    }

    out.best = fixed;
    for (std::size_t k = 0; k < d; ++k)
        out.best[free[k].name] = x[k];
    out.value = current.v;
    out.unconstrained_scan_contrast = best_unconstrained;
    out.constraint_active = best_unconstrained > current.v.contrast + 1e-9;
    return out;
}

}  // namespace hompcm
