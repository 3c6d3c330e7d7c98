#pragma once

// Dispersive optical constants and the crystallinity mixing model.
//
// Time convention throughout the library is exp(-i*omega*t): a lossy medium
// has k > 0 and Im(eps) > 0.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "errors.hpp"

#ifndef HOMPCM_DEFAULT_DATA_DIR
#define HOMPCM_DEFAULT_DATA_DIR "data"
#endif

namespace hompcm {

using complex = std::complex<double>;

/// Complex refractive index n + ik of a passive medium.
class ComplexIndex
{
  public:
    ComplexIndex(double n, double k) : n_(n), k_(k)
    {
        if (!std::isfinite(n) || !std::isfinite(k))
            throw ValidationError("refractive index must be finite");
        if (!(n > 0.0))
            throw ValidationError("refractive index n must be positive, got " + std::to_string(n));
        if (k < 0.0)
            throw ValidationError("extinction coefficient k must be non-negative (passive media only), got "
                                  + std::to_string(k));
    }

    double n() const noexcept { return n_; }
    double k() const noexcept { return k_; }
    complex value() const noexcept { return {n_, k_}; }

    friend bool operator==(ComplexIndex const&, ComplexIndex const&) = default;

  private:
    double n_;
    double k_;
};

/// Relative permittivity with Im(eps) >= 0.
class ComplexPermittivity
{
  public:
    explicit ComplexPermittivity(complex eps) : eps_(eps)
    {
        if (!std::isfinite(eps.real()) || !std::isfinite(eps.imag()))
            throw ValidationError("permittivity must be finite");
        if (eps.imag() < 0.0)
            throw ValidationError("permittivity has Im(eps) < 0: medium is not passive");
    }

    complex value() const noexcept { return eps_; }

    friend bool operator==(ComplexPermittivity const&, ComplexPermittivity const&) = default;

  private:
    complex eps_;
};

inline ComplexPermittivity permittivity(ComplexIndex const& idx)
{
    complex const nk = idx.value();
    return ComplexPermittivity(nk * nk);
}

/// Principal square root; the passive branch always has k >= 0. A purely
/// negative real permittivity would need n = 0, which is rejected.
inline ComplexIndex index_from_permittivity(ComplexPermittivity const& eps)
{
    complex const e = eps.value();
    if (e == complex(0.0, 0.0))
        throw ValidationError("cannot take index of zero permittivity");
    complex root = std::sqrt(e);
    if (root.imag() < 0.0)
        root = -root;
    if (!(root.real() > 0.0))
        throw ValidationError("permittivity " + std::to_string(e.real()) + "+" + std::to_string(e.imag())
                              + "i maps to an index with n = 0");
    return ComplexIndex(root.real(), std::max(root.imag(), 0.0));
}

/// Linear blend eps = kappa*eps_c + (1-kappa)*eps_a of crystalline and
/// amorphous permittivities; kappa is the crystalline fraction.
inline ComplexPermittivity
mix_crystallinity(ComplexPermittivity const& eps_c, ComplexPermittivity const& eps_a, double kappa)
{
    if (!(kappa >= 0.0 && kappa <= 1.0))
        throw ValidationError("crystallinity must lie in [0, 1], got " + std::to_string(kappa));
    if (kappa == 0.0)
        return eps_a;
    if (kappa == 1.0)
        return eps_c;
    return ComplexPermittivity(kappa * eps_c.value() + (1.0 - kappa) * eps_a.value());
}

struct DispersionSample
{
    double wavelength_nm;
    ComplexIndex index;
};

/// Tabulated n, k against vacuum wavelength for one material (or one phase
/// of a phase-change material).
class DispersionTable
{
  public:
    DispersionTable(std::string material_id, std::vector<DispersionSample> samples, std::string source = {})
        : id_(std::move(material_id)), source_(std::move(source)), samples_(std::move(samples))
    {
        if (samples_.size() < 2)
            throw ValidationError("dispersion table '" + id_ + "' needs at least 2 samples");
        for (std::size_t i = 1; i < samples_.size(); ++i)
        {
            if (!(samples_[i].wavelength_nm > samples_[i - 1].wavelength_nm))
                throw ValidationError("dispersion table '" + id_ + "': non-monotone wavelengths at sample "
                                      + std::to_string(i + 1));
        }
    }

    std::string const& material_id() const noexcept { return id_; }
    std::string const& source() const noexcept { return source_; }
    std::vector<DispersionSample> const& samples() const noexcept { return samples_; }
    double min_wavelength() const noexcept { return samples_.front().wavelength_nm; }
    double max_wavelength() const noexcept { return samples_.back().wavelength_nm; }

  private:
    std::string id_;
    std::string source_;
    std::vector<DispersionSample> samples_;
};

/// Linear interpolation of n and k separately.
inline ComplexIndex index_at(DispersionTable const& table, double wavelength_nm)
{
    auto const& s = table.samples();
    if (!(wavelength_nm >= table.min_wavelength() && wavelength_nm <= table.max_wavelength()))
    {
        std::ostringstream msg;
        msg << "wavelength " << wavelength_nm << " nm outside table range [" << table.min_wavelength() << ", "
            << table.max_wavelength() << "] of '" << table.material_id() << "'";
        throw ValidationError(msg.str());
    }
    auto hi = std::upper_bound(s.begin(), s.end(), wavelength_nm,
                               [](double w, DispersionSample const& x) { return w < x.wavelength_nm; });
    if (hi == s.end())
        return s.back().index;
    auto lo = std::prev(hi);
    if (lo->wavelength_nm == wavelength_nm)
        return lo->index;
    double const u = (wavelength_nm - lo->wavelength_nm) / (hi->wavelength_nm - lo->wavelength_nm);
    double const n = lo->index.n() + u * (hi->index.n() - lo->index.n());
    double const k = lo->index.k() + u * (hi->index.k() - lo->index.k());
    return ComplexIndex(n, std::max(k, 0.0));
}

namespace detail {

inline std::string trim(std::string_view s)
{
    auto const b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos)
        return {};
    auto const e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

inline double parse_number(std::string const& field, std::size_t line, char const* what)
{
    std::string const f = trim(field);
    char* end = nullptr;
    double const v = std::strtod(f.c_str(), &end);
    if (f.empty() || end != f.c_str() + f.size() || !std::isfinite(v))
        throw ValidationError("line " + std::to_string(line) + ": cannot parse " + what + " '" + f + "'");
    return v;
}

/// Extracts `key=value` from a header of the form `# material=X source=...`.
/// The source value runs to the end of the line.
inline std::map<std::string, std::string> parse_header(std::string const& line)
{
    std::map<std::string, std::string> out;
    std::string body = trim(std::string_view(line).substr(1));
    auto const src = body.find("source=");
    if (src != std::string::npos)
    {
        out["source"] = trim(std::string_view(body).substr(src + 7));
        body = body.substr(0, src);
    }
    std::istringstream words(body);
    std::string w;
    while (words >> w)
    {
        auto const eq = w.find('=');
        if (eq != std::string::npos)
            out[w.substr(0, eq)] = w.substr(eq + 1);
    }
    return out;
}

}  // namespace detail

/// Parses the dispersion CSV format:
///
///     # material=<id> source=<free text>
///     wavelength_nm,n,k
///     ...
///
/// If `material_id` is empty the id is taken from the header; otherwise it
/// must match the header.
inline DispersionTable parse_dispersion(std::istream& in, std::string material_id = {})
{
    std::string line;
    std::size_t line_no = 0;
    std::optional<std::map<std::string, std::string>> header;
    std::vector<DispersionSample> samples;

    while (std::getline(in, line))
    {
        ++line_no;
        std::string const t = detail::trim(line);
        if (t.empty())
            continue;
        if (t.front() == '#')
        {
            if (!header)
                header = detail::parse_header(t);
            continue;
        }
        if (!header)
            throw ValidationError("line " + std::to_string(line_no) + ": missing '# material=<id>' header");

        std::vector<std::string> fields;
        std::istringstream row(t);
        std::string f;
        while (std::getline(row, f, ','))
            fields.push_back(f);
        if (fields.size() != 3)
            throw ValidationError("line " + std::to_string(line_no) + ": expected 3 fields wavelength_nm,n,k, got "
                                  + std::to_string(fields.size()));

        double const w = detail::parse_number(fields[0], line_no, "wavelength");
        double const n = detail::parse_number(fields[1], line_no, "n");
        double const k = detail::parse_number(fields[2], line_no, "k");
        if (k < 0.0)
            throw ValidationError("line " + std::to_string(line_no) + ": negative k");
        if (!(n > 0.0))
            throw ValidationError("line " + std::to_string(line_no) + ": n must be positive");
        if (!samples.empty() && !(w > samples.back().wavelength_nm))
            throw ValidationError("line " + std::to_string(line_no) + ": non-monotone wavelength " + fields[0]);
        samples.push_back({w, ComplexIndex(n, k)});
    }

    if (!header)
        throw ValidationError("missing '# material=<id>' header");
    auto const it = header->find("material");
    if (it == header->end() || it->second.empty())
        throw ValidationError("header lacks material=<id>");
    if (material_id.empty())
        material_id = it->second;
    else if (material_id != it->second)
        throw ValidationError("material id '" + material_id + "' does not match file header '" + it->second + "'");

    std::string source = header->count("source") ? header->at("source") : std::string{};
    return DispersionTable(material_id, std::move(samples), std::move(source));
}

inline DispersionTable load_dispersion(std::filesystem::path const& path, std::string material_id = {})
{
    std::ifstream in(path);
    if (!in)
        throw ValidationError("cannot open dispersion file " + path.string());
    try
    {
        return parse_dispersion(in, std::move(material_id));
    }
    catch (ValidationError const& e)
    {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

/// Named material lookup. A base id `X` is a phase-change material when
/// tables `X-crystalline` and `X-amorphous` are both present; its
/// permittivity then depends on the crystallinity.
class MaterialRegistry
{
  public:
    static constexpr char const* crystalline_suffix = "-crystalline";
    static constexpr char const* amorphous_suffix = "-amorphous";

    MaterialRegistry() = default;

    /// Directory from $HOMPCM_DATA_DIR, falling back to the data tree the
    /// build was configured with.
    static std::filesystem::path default_data_dir()
    {
        if (char const* env = std::getenv("HOMPCM_DATA_DIR"); env && *env)
            return env;
        return std::filesystem::path(HOMPCM_DEFAULT_DATA_DIR) / "materials";
    }

    static MaterialRegistry load_directory(std::filesystem::path const& dir)
    {
        if (!std::filesystem::is_directory(dir))
            throw ValidationError("material data directory not found: " + dir.string());
        std::vector<std::filesystem::path> files;
        for (auto const& entry : std::filesystem::directory_iterator(dir))
        {
            if (entry.is_regular_file() && entry.path().extension() == ".csv")
                files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end());
        MaterialRegistry reg;
        for (auto const& f : files)
            reg.add(load_dispersion(f), f);
        return reg;
    }

    static MaterialRegistry load_default() { return load_directory(default_data_dir()); }

    void add(DispersionTable table, std::filesystem::path origin = {})
    {
        std::string id = table.material_id();
        if (is_builtin(id))
            throw ValidationError("material id '" + id + "' is reserved");
        if (!origin.empty())
            files_[id] = origin;
        tables_.insert_or_assign(std::move(id), std::move(table));
    }

    bool contains(std::string const& id) const { return is_builtin(id) || tables_.count(id) || is_phase_change(id); }

    bool is_phase_change(std::string const& id) const
    {
        return tables_.count(id + crystalline_suffix) && tables_.count(id + amorphous_suffix);
    }

    DispersionTable const& table(std::string const& id) const
    {
        auto it = tables_.find(id);
        if (it == tables_.end())
            throw ValidationError("unknown material '" + id + "'");
        return it->second;
    }

    ComplexPermittivity permittivity_at(std::string const& id, double wavelength_nm,
                                        std::optional<double> kappa = std::nullopt) const
    {
        if (is_builtin(id))
            return ComplexPermittivity(complex(1.0, 0.0));
        if (is_phase_change(id))
        {
            if (!kappa)
                throw ValidationError("phase-change material '" + id + "' requires a crystallinity value");
            auto const c = permittivity(hompcm::index_at(table(id + crystalline_suffix), wavelength_nm));
            auto const a = permittivity(hompcm::index_at(table(id + amorphous_suffix), wavelength_nm));
            return mix_crystallinity(c, a, *kappa);
        }
        return permittivity(hompcm::index_at(table(id), wavelength_nm));
    }

    ComplexIndex index_at(std::string const& id, double wavelength_nm,
                          std::optional<double> kappa = std::nullopt) const
    {
        if (is_builtin(id))
            return ComplexIndex(1.0, 0.0);
        if (is_phase_change(id))
            return index_from_permittivity(permittivity_at(id, wavelength_nm, kappa));
        return hompcm::index_at(table(id), wavelength_nm);
    }

    std::vector<std::string> ids() const
    {
        std::vector<std::string> out;
        for (auto const& [id, _] : tables_)
            out.push_back(id);
        return out;
    }

    /// Files the tables were read from, keyed by material id.
    std::map<std::string, std::filesystem::path> const& files() const noexcept { return files_; }

  private:
    static bool is_builtin(std::string const& id) { return id == "vacuum" || id == "air"; }

    std::map<std::string, DispersionTable> tables_;
    std::map<std::string, std::filesystem::path> files_;
};

}  // namespace hompcm
