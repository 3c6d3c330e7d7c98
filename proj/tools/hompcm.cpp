// hompcm: command-line front end.
//
// Exit codes: 0 success, 2 invalid input, 3 solver failure.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"

#include "hompcm/hompcm.hpp"

using namespace hompcm;

namespace {

struct GlobalOptions
{
    unsigned jobs = 0;
    std::string out;
    std::string format = "auto";
    std::string manifest;
    std::string command_line;
};

struct GeometryOptions
{
    std::string preset;
    std::string geometry_file;
    std::vector<std::string> params;
    std::optional<double> wavelength;
    std::optional<double> angle;
    std::optional<double> kappa;
    std::optional<double> period;
    std::optional<double> filling;
    bool substrate = false;
    int harmonics = default_harmonics;
};

struct ResolvedGeometry
{
    std::string name;
    Geometry geometry;
    ParameterMap params;
    std::vector<std::string> inputs;
};

void add_geometry_options(CLI::App* cmd, GeometryOptions& g, bool with_kappa = true)
{
    cmd->add_option("--preset", g.preset, "structure-A or structure-B");
    cmd->add_option("--stack,--geometry", g.geometry_file, "geometry JSON (planar stack, or grating when period_nm is set)");
    cmd->add_option("--wavelength", g.wavelength, "wavelength in nm (default 810)");
    cmd->add_option("--angle", g.angle, "incidence angle in degrees (default 45)");
    if (with_kappa)
        cmd->add_option("--kappa", g.kappa, "crystallinity of every GeTe layer, 0 (amorphous) to 1 (crystalline)");
    cmd->add_option("--period", g.period, "grating period in nm");
    cmd->add_option("--filling", g.filling, "GeTe filling ratio of lamellar layers");
    cmd->add_option("--param", g.params, "extra parameter name=value (e.g. layer_thickness:2=330)");
    cmd->add_flag("--substrate", g.substrate, "structure-A on a silica half space instead of a free film");
    cmd->add_option("--harmonics", g.harmonics, "RCWA Fourier harmonics (odd)");
}

double number(std::string const& text, char const* what)
{
    std::string const t = detail::trim(text);
    char* end = nullptr;
    double const v = std::strtod(t.c_str(), &end);
    if (t.empty() || end != t.c_str() + t.size() || !std::isfinite(v))
        throw ValidationError(std::string("cannot parse ") + what + " '" + t + "'");
    return v;
}

ParameterMap parse_params(std::vector<std::string> const& items)
{
    ParameterMap out;
    for (auto const& item : items)
    {
        auto const eq = item.find('=');
        if (eq == std::string::npos)
            throw ValidationError("parameter '" + item + "' must look like name=value");
        std::string const name = item.substr(0, eq);
        validate_parameter_name(name);
        out[name] = number(item.substr(eq + 1), name.c_str());
    }
    return out;
}

ResolvedGeometry resolve_geometry(GeometryOptions const& g)
{
    if (!g.preset.empty() && !g.geometry_file.empty())
        throw ValidationError("give either --preset or --stack, not both");
    ResolvedGeometry r;
    if (!g.geometry_file.empty())
    {
        r.name = g.geometry_file;
        r.geometry = load_geometry(g.geometry_file);
        r.inputs.push_back(g.geometry_file);
    }
    else
    {
        if (g.preset.empty())
            throw ValidationError("a geometry is required: --preset structure-A|structure-B or --stack FILE");
        r.name = g.preset;
        r.geometry = preset_geometry(g.preset);
        if (g.substrate)
        {
            if (g.preset != "structure-A")
                throw ValidationError("--substrate applies to structure-A only");
            r.geometry = structure_a(1.0, 0.634, true);
        }
    }
    r.params = parse_params(g.params);
    if (g.wavelength)
        r.params["wavelength_nm"] = *g.wavelength;
    if (g.angle)
        r.params["angle_deg"] = *g.angle;
    if (g.kappa)
        r.params["crystallinity"] = *g.kappa;
    if (g.period)
        r.params["period_nm"] = *g.period;
    if (g.filling)
        r.params["filling_ratio"] = *g.filling;
    return r;
}

unsigned job_count(GlobalOptions const& opts)
{
    if (opts.jobs > 0)
        return opts.jobs;
    return std::max(1u, std::thread::hardware_concurrency());
}

std::string resolve_format(GlobalOptions const& opts, char const* fallback)
{
    std::string const f = opts.format == "auto" ? fallback : opts.format;
    if (f != "csv" && f != "json")
        throw ValidationError("--format must be csv or json");
    return f;
}

void write_text(std::string const& path, std::string const& text)
{
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw ValidationError("cannot write " + path);
    f << text;
    if (!f)
        throw ValidationError("failed writing " + path);
}

/// Writes `text` to --out (or stdout) and the run manifest next to it.
void emit(GlobalOptions const& opts, std::string const& text, std::vector<std::string> inputs,
          MaterialRegistry const* registry, std::vector<std::string> extra_outputs = {})
{
    RunManifest m;
    m.command_line = opts.command_line;
    if (registry)
        for (auto const& [id, path] : registry->files())
            inputs.push_back(path.string());
    for (auto const& in : inputs)
        m.input_hashes[in] = sha256_file(in);

    if (opts.out.empty())
        std::cout << text;
    else
    {
        write_text(opts.out, text);
        m.outputs.push_back(opts.out);
    }
    for (auto& e : extra_outputs)
        m.outputs.push_back(std::move(e));

    std::string manifest = opts.manifest;
    if (manifest.empty() && !opts.out.empty())
        manifest = opts.out + ".manifest.json";
    if (!manifest.empty())
        write_text(manifest, m.to_json().dump(2) + "\n");
}

std::string csv_row(std::vector<double> const& values)
{
    std::string s;
    for (std::size_t i = 0; i < values.size(); ++i)
    {
        if (i)
            s += ',';
        s += format_number(values[i]);
    }
    return s + "\n";
}

// ----------------------------------------------------------------- material

struct MaterialOptions
{
    std::string id;
    std::vector<double> wavelengths;
    std::optional<double> kappa;
    bool list = false;
};

int cmd_material(GlobalOptions const& opts, MaterialOptions const& mo)
{
    auto const reg = MaterialRegistry::load_default();
    std::string const fmt = resolve_format(opts, "csv");
    std::ostringstream out;
    if (mo.list)
    {
        json j = json::array();
        for (auto const& id : reg.ids())
        {
            auto const& t = reg.table(id);
            j.push_back({{"id", id},
                         {"min_nm", t.min_wavelength()},
                         {"max_nm", t.max_wavelength()},
                         {"source", t.source()}});
        }
        if (fmt == "json")
            out << j.dump(2) << "\n";
        else
        {
            out << "id,min_nm,max_nm,source\n";
            for (auto const& e : j)
                out << e["id"].get<std::string>() << ',' << format_number(e["min_nm"].get<double>()) << ','
                    << format_number(e["max_nm"].get<double>()) << ",\"" << e["source"].get<std::string>() << "\"\n";
        }
        emit(opts, out.str(), {}, &reg);
        return 0;
    }
    if (mo.id.empty() || mo.wavelengths.empty())
        throw ValidationError("material needs --id and at least one --wavelength (or --list)");
    json rows = json::array();
    if (fmt == "csv")
        out << "wavelength_nm,n,k,eps_re,eps_im\n";
    for (double wl : mo.wavelengths)
    {
        ComplexIndex const idx = reg.index_at(mo.id, wl, mo.kappa);
        complex const eps = permittivity(idx).value();
        if (fmt == "csv")
            out << csv_row({wl, idx.n(), idx.k(), eps.real(), eps.imag()});
        else
            rows.push_back({{"wavelength_nm", round12(wl)},
                            {"n", round12(idx.n())},
                            {"k", round12(idx.k())},
                            {"eps", detail::complex_json(eps)}});
    }
    if (fmt == "json")
    {
        json j = {{"material", mo.id}, {"samples", rows}};
        if (mo.kappa)
            j["crystallinity"] = *mo.kappa;
        out << j.dump(2) << "\n";
    }
    emit(opts, out.str(), {}, &reg);
    return 0;
}

// ------------------------------------------------------------------ network

int cmd_network(GlobalOptions const& opts, GeometryOptions const& go)
{
    auto const reg = MaterialRegistry::load_default();
    auto const g = resolve_geometry(go);
    NetworkMatrix const T = evaluate_network(g.geometry, g.params, reg, go.harmonics);
    std::ostringstream out;
    if (resolve_format(opts, "json") == "json")
        out << network_to_json(T).dump(2) << "\n";
    else
    {
        out << "re_t1,im_t1,re_t2,im_t2,re_t3,im_t3,re_t4,im_t4,passive\n";
        out << csv_row({T.t1.real(), T.t1.imag(), T.t2.real(), T.t2.imag(), T.t3.real(), T.t3.imag(), T.t4.real(),
                        T.t4.imag(), T.passive() ? 1.0 : 0.0});
    }
    emit(opts, out.str(), g.inputs, &reg);
    return 0;
}

// -------------------------------------------------------------- coalescence

int cmd_coalescence(GlobalOptions const& opts, GeometryOptions const& go, std::string const& matrix_file)
{
    std::optional<MaterialRegistry> reg;
    NetworkMatrix T;
    std::vector<std::string> inputs;
    if (!matrix_file.empty())
    {
        T = load_network(matrix_file);
        inputs.push_back(matrix_file);
    }
    else
    {
        reg = MaterialRegistry::load_default();
        auto const g = resolve_geometry(go);
        T = evaluate_network(g.geometry, g.params, *reg, go.harmonics);
        inputs = g.inputs;
    }
    double const c = coalescence(T);
    double const b = baseline(T);
    std::optional<double> phase;
    if (T.t1 != 0.0 && T.t2 != 0.0 && T.t3 != 0.0 && T.t4 != 0.0)
        phase = total_phase(T);
    std::ostringstream out;
    if (resolve_format(opts, "csv") == "json")
    {
        json j = {{"coalescence", round12(c)}, {"baseline", round12(b)}};
        j["total_phase_rad"] = phase ? json(round12(*phase)) : json(nullptr);
        out << j.dump(2) << "\n";
    }
    else
    {
        out << "coalescence,baseline,total_phase_rad\n";
        out << format_number(c) << ',' << format_number(b) << ',' << (phase ? format_number(*phase) : "nan") << "\n";
    }
    emit(opts, out.str(), inputs, reg ? &*reg : nullptr);
    return 0;
}

// ---------------------------------------------------------------------- hom

struct HomOptions
{
    std::string replica;
    std::string matrix_file;
    std::vector<double> kappas;
    double bandwidth_thz = 2.0;
    double range_ps = 0.5;
    int points = 401;
    std::string envelope = "gaussian";
    double width_ps = 0.0;
};

int cmd_hom(GlobalOptions const& opts, GeometryOptions go, HomOptions ho)
{
    if (!ho.replica.empty())
    {
        if (ho.replica != "fig5a" && ho.replica != "fig5b")
            throw ValidationError("hom replicas are fig5a and fig5b");
        go.preset = ho.replica == "fig5a" ? "structure-A" : "structure-B";
        if (ho.kappas.empty())
            ho.kappas = {0.0, 0.25, 0.5, 0.75, 1.0};
    }
    if (ho.points < 2 || !(ho.range_ps > 0.0))
        throw ValidationError("--points must be >= 2 and --range-ps positive");
    double const bandwidth = 2.0 * std::numbers::pi * ho.bandwidth_thz * 1e12;
    if (!(bandwidth > 0.0))
        throw ValidationError("--bandwidth-thz must be positive");

    std::vector<double> delays(static_cast<std::size_t>(ho.points));
    for (int i = 0; i < ho.points; ++i)
        delays[static_cast<std::size_t>(i)] =
            i == ho.points - 1 ? ho.range_ps * 1e-12 : (-ho.range_ps + 2.0 * ho.range_ps * i / (ho.points - 1)) * 1e-12;

    std::optional<MaterialRegistry> reg;
    std::vector<std::string> inputs;
    std::vector<std::string> labels;
    std::vector<NetworkMatrix> networks;
    if (!ho.matrix_file.empty())
    {
        networks.push_back(load_network(ho.matrix_file));
        labels.push_back("counts");
        inputs.push_back(ho.matrix_file);
    }
    else
    {
        reg = MaterialRegistry::load_default();
        auto g = resolve_geometry(go);
        inputs = g.inputs;
        if (ho.kappas.empty())
        {
            networks.push_back(evaluate_network(g.geometry, g.params, *reg, go.harmonics));
            labels.push_back("counts");
        }
        for (double k : ho.kappas)
        {
            g.params["crystallinity"] = k;
            networks.push_back(evaluate_network(g.geometry, g.params, *reg, go.harmonics));
            labels.push_back("kappa_" + format_number(k));
        }
    }

    std::vector<HOMTrace> traces;
    for (auto const& T : networks)
    {
        if (ho.envelope == "gaussian")
            traces.push_back(hom_trace_gaussian(T, bandwidth, delays));
        else if (ho.envelope == "rectangular")
        {
            if (!(ho.width_ps > 0.0))
                throw ValidationError("rectangular envelope needs --width-ps");
            auto const env = TemporalEnvelope::rectangular(ho.width_ps * 1e-12);
            double const b = baseline(T);
            if (!(b > 1e-15))
                throw ValidationError("baseline vanishes; trace cannot be normalized");
            HOMTrace t;
            t.delays = delays;
            for (double d : delays)
                t.counts.push_back(coincidence_general(T, env, d) / b);
            traces.push_back(std::move(t));
        }
        else
            throw ValidationError("--envelope must be gaussian or rectangular");
    }

    std::ostringstream out;
    if (resolve_format(opts, "csv") == "json")
    {
        json j = {{"delay_ps", json::array()}, {"traces", json::object()}};
        for (double d : delays)
            j["delay_ps"].push_back(round12(d * 1e12));
        for (std::size_t i = 0; i < traces.size(); ++i)
        {
            json c = json::array();
            for (double v : traces[i].counts)
                c.push_back(round12(v));
            j["traces"][labels[i]] = {{"counts", c}, {"coalescence", round12(coalescence(networks[i]))}};
        }
        out << j.dump(2) << "\n";
    }
    else
        write_traces_csv(out, labels, traces);
    emit(opts, out.str(), inputs, reg ? &*reg : nullptr);
    return 0;
}

// -------------------------------------------------------------------- sweep

struct SweepOptions
{
    std::string replica;
    std::string axis1;
    std::string axis2;
    std::string meta;
};

SweepAxis parse_axis(std::string const& text)
{
    // name:min:max:steps; the name itself may contain one ':' (layer_thickness:2)
    auto const last = text.rfind(':');
    auto const mid = last == std::string::npos ? last : text.rfind(':', last - 1);
    auto const first = mid == std::string::npos || mid == 0 ? std::string::npos : text.rfind(':', mid - 1);
    if (first == std::string::npos)
        throw ValidationError("axis '" + text + "' must look like name:min:max:steps");
    SweepAxis a;
    a.name = text.substr(0, first);
    a.min = number(text.substr(first + 1, mid - first - 1), "axis min");
    a.max = number(text.substr(mid + 1, last - mid - 1), "axis max");
    double const steps = number(text.substr(last + 1), "axis steps");
    if (steps != std::floor(steps) || steps < 2 || steps > 1e6)
        throw ValidationError("axis steps must be an integer >= 2");
    a.steps = static_cast<int>(steps);
    a.validate();
    return a;
}

SweepSpec replica_sweep(std::string const& name)
{
    SweepSpec s;
    SweepAxis const wl{"wavelength_nm", 770.0, 900.0, 131};
    if (name == "fig2a" || name == "fig2b")
    {
        s.geometry_name = "structure-A";
        s.geometry = structure_a();
        s.axis1 = {"filling_ratio", 0.0, 1.0, 101};
        s.fixed["crystallinity"] = name == "fig2a" ? 1.0 : 0.0;
    }
    else if (name == "fig3a" || name == "fig3b")
    {
        s.geometry_name = "structure-B";
        s.geometry = structure_b();
        s.axis1 = {"layer_thickness:2", 250.0, 450.0, 101};
        s.fixed["crystallinity"] = name == "fig3a" ? 1.0 : 0.0;
    }
    else if (name == "fig4a" || name == "fig4b")
    {
        s.geometry_name = name == "fig4a" ? "structure-A" : "structure-B";
        s.geometry = preset_geometry(s.geometry_name);
        s.axis1 = {"crystallinity", 0.0, 1.0, 101};
    }
    else
        throw ValidationError("unknown sweep replica '" + name + "' (fig2a, fig2b, fig3a, fig3b, fig4a, fig4b)");
    s.axis2 = wl;
    s.fixed["angle_deg"] = design_angle_deg;
    return s;
}

int cmd_sweep(GlobalOptions const& opts, GeometryOptions const& go, SweepOptions const& so)
{
    auto const reg = MaterialRegistry::load_default();
    SweepSpec spec;
    std::vector<std::string> inputs;
    if (!so.replica.empty())
    {
        spec = replica_sweep(so.replica);
        for (auto const& [k, v] : parse_params(go.params))
            spec.fixed[k] = v;
        if (!so.axis1.empty())
            spec.axis1 = parse_axis(so.axis1);
        if (!so.axis2.empty())
            spec.axis2 = parse_axis(so.axis2);
    }
    else
    {
        auto const g = resolve_geometry(go);
        if (so.axis1.empty() || so.axis2.empty())
            throw ValidationError("sweep needs --replica or both --axis1 and --axis2");
        spec.geometry_name = g.name;
        spec.geometry = g.geometry;
        spec.fixed = g.params;
        spec.axis1 = parse_axis(so.axis1);
        spec.axis2 = parse_axis(so.axis2);
        inputs = g.inputs;
    }
    spec.n_harmonics = go.harmonics;
    for (auto const* a : {&spec.axis1, &spec.axis2})
        spec.fixed.erase(a->name);

    SweepResult const r = run_sweep(spec, reg, job_count(opts));
    json const meta = sweep_metadata(r);
    std::ostringstream out;
    std::vector<std::string> extra;
    if (resolve_format(opts, "csv") == "json")
    {
        json cells = json::array();
        for (auto const& c : r.cells)
        {
            json e = {{"axis1", round12(c.x1)}, {"axis2", round12(c.x2)}, {"valid", c.valid}};
            if (c.valid)
            {
                e["coalescence"] = round12(c.coalescence);
                e["baseline"] = round12(c.baseline);
                e["network"] = network_to_json(c.network);
            }
            else
                e["note"] = c.note;
            cells.push_back(e);
        }
        out << json{{"metadata", meta}, {"cells", cells}}.dump(2) << "\n";
    }
    else
    {
        write_sweep_csv(out, r);
        std::string meta_path = so.meta;
        if (meta_path.empty() && !opts.out.empty())
            meta_path = opts.out + ".meta.json";
        if (!meta_path.empty())
        {
            write_text(meta_path, meta.dump(2) + "\n");
            extra.push_back(meta_path);
        }
    }
    emit(opts, out.str(), inputs, &reg, extra);
    return 0;
}

// ----------------------------------------------------------------- optimize

struct OptimizeCliOptions
{
    std::vector<std::string> free;
    std::optional<double> baseline_min;
    int grid_points = 21;
    int refine_rounds = 3;
    std::uint64_t seed = 0;
};

int cmd_optimize(GlobalOptions const& opts, GeometryOptions const& go, OptimizeCliOptions const& oo)
{
    auto const reg = MaterialRegistry::load_default();
    auto g = resolve_geometry(go);
    std::vector<FreeParameter> free;
    for (auto const& f : oo.free)
    {
        // name:lower:upper, parsed like an axis without steps
        SweepAxis a;
        auto const last = f.rfind(':');
        auto const mid = last == std::string::npos || last == 0 ? std::string::npos : f.rfind(':', last - 1);
        if (mid == std::string::npos)
            throw ValidationError("free parameter '" + f + "' must look like name:lower:upper");
        FreeParameter p{f.substr(0, mid), number(f.substr(mid + 1, last - mid - 1), "lower"),
                        number(f.substr(last + 1), "upper")};
        free.push_back(p);
        g.params.erase(p.name);
    }
    OptimizeOptions o;
    if (oo.baseline_min)
        o.baseline_min = *oo.baseline_min;
    else if (!go.preset.empty())
        o.baseline_min = preset_baseline_min(go.preset);
    else
        throw ValidationError("--baseline-min is required for custom geometries");
    o.grid_points = oo.grid_points;
    o.refine_rounds = oo.refine_rounds;
    o.seed = oo.seed;
    o.n_harmonics = go.harmonics;
    o.jobs = job_count(opts);

    OptimizeResult const r = optimize_contrast(g.geometry, g.params, free, reg, o);
    json best = json::object();
    for (auto const& [k, v] : r.best)
        best[k] = round12(v);
    json const j = {{"geometry", g.name},
                    {"best", best},
                    {"coal_crystalline", round12(r.value.coal_crystalline)},
                    {"coal_amorphous", round12(r.value.coal_amorphous)},
                    {"contrast", round12(r.value.contrast)},
                    {"baseline_crystalline", round12(r.value.baseline_crystalline)},
                    {"baseline_amorphous", round12(r.value.baseline_amorphous)},
                    {"baseline_min", round12(o.baseline_min)},
                    {"constraint", r.constraint},
                    {"constraint_active", r.constraint_active},
                    {"unconstrained_scan_contrast", round12(r.unconstrained_scan_contrast)},
                    {"evaluations", r.evaluations},
                    {"seed", o.seed}};
    std::ostringstream out;
    if (resolve_format(opts, "json") == "json")
        out << j.dump(2) << "\n";
    else
    {
        out << "parameter,value\n";
        for (auto const& [k, v] : r.best)
            out << k << ',' << format_number(v) << "\n";
        out << "contrast," << format_number(r.value.contrast) << "\n";
        out << "coal_crystalline," << format_number(r.value.coal_crystalline) << "\n";
        out << "coal_amorphous," << format_number(r.value.coal_amorphous) << "\n";
        out << "constraint_active," << (r.constraint_active ? 1 : 0) << "\n";
    }
    emit(opts, out.str(), g.inputs, &reg);
    return 0;
}

// ------------------------------------------------------------------ thermal

struct ThermalCliOptions
{
    std::string replica;
    std::string stack_file;
    std::string pulse_file;
    double duration_ns = 1500.0;
    double dt_ns = 0.5;
    double dz_nm = 2.0;
    double output_ns = 10.0;
    double ambient_k = 293.15;
    std::string top = "insulated";
    std::string bottom = "fixed";
    std::vector<std::string> probes;
};

ThermalBoundary parse_boundary(std::string const& s)
{
    if (s == "insulated")
        return ThermalBoundary::insulated;
    if (s == "fixed" || s == "fixed-ambient")
        return ThermalBoundary::fixed_ambient;
    throw ValidationError("boundary must be insulated or fixed");
}

int cmd_thermal(GlobalOptions const& opts, ThermalCliOptions to)
{
    if (!to.replica.empty())
    {
        if (to.replica != "fig6")
            throw ValidationError("the thermal replica is fig6");
        auto const dir = std::filesystem::path(HOMPCM_DEFAULT_DATA_DIR) / "thermal";
        if (to.stack_file.empty())
            to.stack_file = (dir / "structure_b_stack.csv").string();
        if (to.pulse_file.empty())
            to.pulse_file = (dir / "structure_b_pulse.csv").string();
    }
    if (to.stack_file.empty() || to.pulse_file.empty())
        throw ValidationError("thermal needs --stack and --pulse (or --replica fig6)");
    auto const stack = load_thermal_stack(to.stack_file);
    auto const pulse = load_pulse(to.pulse_file);
    ThermalOptions o;
    o.top = parse_boundary(to.top);
    o.bottom = parse_boundary(to.bottom);
    o.ambient_k = to.ambient_k;
    o.grid.time_step_s = to.dt_ns * 1e-9;
    o.grid.max_cell_nm = to.dz_nm;
    o.grid.output_interval_s = to.output_ns * 1e-9;
    TemperatureField const f = solve_heat_1d(stack, pulse, to.duration_ns * 1e-9, o);

    std::ostringstream out;
    std::string const fmt = resolve_format(opts, "csv");
    if (!to.probes.empty())
    {
        json rows = json::array();
        if (fmt == "csv")
            out << "depth_nm,time_s,temperature_k\n";
        for (auto const& p : to.probes)
        {
            auto const colon = p.find(':');
            if (colon == std::string::npos)
                throw ValidationError("probe '" + p + "' must look like depth_nm:time_ns");
            double const z = number(p.substr(0, colon), "probe depth");
            double const t = number(p.substr(colon + 1), "probe time") * 1e-9;
            double const v = probe(f, z, t);
            if (fmt == "csv")
                out << csv_row({z, t, v});
            else
                rows.push_back({{"depth_nm", round12(z)}, {"time_s", round12(t)}, {"temperature_k", round12(v)}});
        }
        if (fmt == "json")
            out << rows.dump(2) << "\n";
    }
    else if (fmt == "json")
    {
        json layers = json::array();
        for (std::size_t i = 0; i < stack.size(); ++i)
        {
            auto const [lo, hi] = layer_span(std::span<ThermalLayer const>(stack), i);
            layers.push_back({{"material", stack[i].material},
                              {"top_nm", round12(lo)},
                              {"bottom_nm", round12(hi)},
                              {"peak_temperature_k", round12(peak_temperature(f, lo, hi))}});
        }
        out << json{{"ambient_k", o.ambient_k},
                    {"pulse_energy_j_m2", round12(pulse.total_energy())},
                    {"duration_s", round12(to.duration_ns * 1e-9)},
                    {"cells", f.depth_nm.size()},
                    {"snapshots", f.time_s.size()},
                    {"layers", layers}}
                   .dump(2)
            << "\n";
    }
    else
        write_field_csv(out, f);
    emit(opts, out.str(), {to.stack_file, to.pulse_file}, nullptr);
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    GlobalOptions opts;
    for (int i = 0; i < argc; ++i)
        opts.command_line += (i ? " " : "") + std::string(argv[i]);

    CLI::App app{"Tunable two-photon interference at GeTe phase-change metasurfaces"};
    app.set_version_flag("--version", tool_version);
    app.require_subcommand(1);
    app.fallthrough();
    app.add_option("--jobs,-j", opts.jobs, "worker threads for sweeps and scans (default: all cores)");
    app.add_option("--out,-o", opts.out, "output file (default stdout); a manifest is written next to it");
    app.add_option("--format", opts.format, "csv or json (default depends on the command)")
        ->check(CLI::IsMember({"auto", "csv", "json"}));
    app.add_option("--manifest", opts.manifest, "manifest path (default <out>.manifest.json)");
    app.footer("Material data: $HOMPCM_DATA_DIR or " HOMPCM_DEFAULT_DATA_DIR "/materials.\n"
               "Exit codes: 0 success, 2 invalid input, 3 solver failure.");

    MaterialOptions mo;
    auto* material = app.add_subcommand("material", "interpolated refractive index and permittivity");
    material->add_option("--id", mo.id, "material id (GeTe, Au, SiO2, TiO2, TiN, ...)");
    material->add_option("--wavelength", mo.wavelengths, "wavelength(s) in nm");
    material->add_option("--kappa", mo.kappa, "crystallinity for phase-change materials");
    material->add_flag("--list", mo.list, "list loaded tables");

    GeometryOptions net_go;
    auto* network = app.add_subcommand("network", "2x2 network matrix of a geometry as JSON");
    add_geometry_options(network, net_go);

    GeometryOptions coal_go;
    std::string matrix_file;
    auto* coal = app.add_subcommand("coalescence", "zero-delay (anti-)coalescence, baseline and total phase");
    add_geometry_options(coal, coal_go);
    coal->add_option("--matrix", matrix_file, "network matrix JSON instead of a geometry");

    GeometryOptions hom_go;
    HomOptions ho;
    auto* hom = app.add_subcommand("hom", "baseline-normalized coincidence trace versus delay");
    add_geometry_options(hom, hom_go, false);
    hom->add_option("--kappa", ho.kappas, "crystallinity; repeat for one trace per value");
    hom->add_option("--matrix", ho.matrix_file, "network matrix JSON instead of a geometry");
    hom->add_option("--replica", ho.replica, "fig5a (structure-A) or fig5b (structure-B)");
    hom->add_option("--bandwidth-thz", ho.bandwidth_thz, "envelope bandwidth in THz; angular bandwidth is 2 pi times this");
    hom->add_option("--range-ps", ho.range_ps, "delays span [-range, range] ps");
    hom->add_option("--points", ho.points, "number of delay samples");
    hom->add_option("--envelope", ho.envelope, "gaussian (closed form) or rectangular (quadrature)");
    hom->add_option("--width-ps", ho.width_ps, "rectangular envelope width in ps");

    GeometryOptions sweep_go;
    SweepOptions so;
    auto* sweep = app.add_subcommand("sweep", "coalescence over a two-parameter grid (CSV plus JSON sidecar)");
    add_geometry_options(sweep, sweep_go);
    sweep->add_option("--replica", so.replica, "fig2a, fig2b, fig3a, fig3b, fig4a or fig4b");
    sweep->add_option("--axis1", so.axis1, "name:min:max:steps");
    sweep->add_option("--axis2", so.axis2, "name:min:max:steps");
    sweep->add_option("--meta", so.meta, "metadata sidecar path (default <out>.meta.json)");

    GeometryOptions opt_go;
    OptimizeCliOptions oo;
    auto* optimize = app.add_subcommand("optimize", "maximize switching contrast under a baseline bound");
    add_geometry_options(optimize, opt_go, false);
    optimize->add_option("--free", oo.free, "free parameter name:lower:upper (repeatable)")->required();
    optimize->add_option("--baseline-min", oo.baseline_min, "baseline bound in both phases (preset default 1/12 or 1/16)");
    optimize->add_option("--grid-points", oo.grid_points, "scan points per free parameter");
    optimize->add_option("--refine-rounds", oo.refine_rounds, "golden-section refinement rounds");
    optimize->add_option("--seed", oo.seed, "seed for random scans (three or more free parameters)");

    ThermalCliOptions to;
    auto* thermal = app.add_subcommand("thermal", "1D transient joule heating across a layer stack");
    thermal->add_option("--replica", to.replica, "fig6: structure-B stack with the calibrated 500 ns pulse");
    thermal->add_option("--stack", to.stack_file, "thermal stack CSV");
    thermal->add_option("--pulse", to.pulse_file, "pulse CSV (time_s,power_W_m2)");
    thermal->add_option("--duration-ns", to.duration_ns, "simulated time");
    thermal->add_option("--dt-ns", to.dt_ns, "time step");
    thermal->add_option("--dz-nm", to.dz_nm, "largest cell width");
    thermal->add_option("--output-ns", to.output_ns, "snapshot spacing (0 stores every step)");
    thermal->add_option("--ambient-k", to.ambient_k, "ambient and initial temperature");
    thermal->add_option("--top", to.top, "insulated or fixed");
    thermal->add_option("--bottom", to.bottom, "insulated or fixed");
    thermal->add_option("--probe", to.probes, "depth_nm:time_ns (repeatable) instead of the full field");

    try
    {
        app.parse(argc, argv);
    }
    catch (CLI::CallForHelp const& e)
    {
        return app.exit(e);
    }
    catch (CLI::CallForAllHelp const& e)
    {
        return app.exit(e);
    }
    catch (CLI::CallForVersion const& e)
    {
        return app.exit(e);
    }
    catch (CLI::ParseError const& e)
    {
        app.exit(e);
        return 2;
    }

    try
    {
        if (*material)
            return cmd_material(opts, mo);
        if (*network)
            return cmd_network(opts, net_go);
        if (*coal)
            return cmd_coalescence(opts, coal_go, matrix_file);
        if (*hom)
            return cmd_hom(opts, hom_go, ho);
        if (*sweep)
            return cmd_sweep(opts, sweep_go, so);
        if (*optimize)
            return cmd_optimize(opts, opt_go, oo);
        if (*thermal)
            return cmd_thermal(opts, to);
    }
    catch (SolverError const& e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    catch (Error const& e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    catch (std::exception const& e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
