#include "tds/io.hpp"

#include "tds/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

namespace tds {

using nlohmann::json;

namespace {

// Alternative spellings accepted on input, as a factor onto the canonical unit.
struct UnitAlias {
    std::string_view unit;
    std::string_view canonical;
    double factor;
};

constexpr UnitAlias kAliases[] = {
    {"kJ/mol", "J/mol", 1e3},     {"eV", "J/mol", 96485.33212},
    {"mm", "m", 1e-3},            {"cm", "m", 1e-2},
    {"um", "m", 1e-6},            {"K/min", "K/s", 1.0 / 60.0},
    {"min", "s", 60.0},           {"h", "s", 3600.0},
    {"1/cm^3", "1/m^3", 1e6},     {"cm^2/s", "m^2/s", 1e-4},
    {"mm^2/s", "m^2/s", 1e-6},    {"mol/cm^3", "mol/m^3", 1e6},
    {"mol/mm^3", "mol/m^3", 1e9}, {"kg/m^3", "g/cm^3", 1e-3},
    {"kg/mol", "g/mol", 1e3},     {"Hz", "1/s", 1.0},
};

json quantity(double v, std::string_view unit) {
    return json{{"value", v}, {"unit", unit}};
}

std::string where(std::string_view section, std::string_view key) {
    return std::string(section) + "." + std::string(key);
}

double read_number(const json& j, const std::string& path) {
    if (!j.is_number()) {
        throw FormatError("project field '" + path + "' must be a number");
    }
    return j.get<double>();
}

// Reads a quantity stored as {"value", "unit"} or as a bare number in the
// canonical unit.
double read_quantity(const json& j, const std::string& path, std::string_view canonical) {
    if (j.is_number()) {
        return j.get<double>();
    }
    if (!j.is_object() || !j.contains("value")) {
        throw FormatError("project field '" + path + "' must be {\"value\", \"unit\"}");
    }
    const double v = read_number(j.at("value"), path + ".value");
    if (!j.contains("unit")) {
        return v;
    }
    const auto unit = j.at("unit").get<std::string>();
    if (unit == canonical) {
        return v;
    }
    if (canonical == "K" && unit == "C") {
        return v + constants::celsius_offset;
    }
    if (canonical == "K/s" && unit == "C/s") {
        return v;
    }
    for (const auto& a : kAliases) {
        if (a.unit == unit && a.canonical == canonical) {
            return v * a.factor;
        }
    }
    throw FormatError("project field '" + path + "': unit '" + unit + "' is not convertible to '" +
                      std::string(canonical) + "'");
}

template <typename T, typename Fn>
void read_if(const json& obj, const char* key, T& target, Fn&& read) {
    if (obj.contains(key)) {
        target = read(obj.at(key));
    }
}

json material_to_json(const MaterialParams& m) {
    return json{{"E_L", quantity(m.E_L, "J/mol")},   {"D_0", quantity(m.D_0, "m^2/s")},
                {"M_M", quantity(m.M_M, "g/mol")},   {"rho_M", quantity(m.rho_M, "g/cm^3")},
                {"N_L", quantity(m.N_L, "1/m^3")},   {"C_L0", quantity(m.C_L0, "mol/m^3")}};
}

MaterialParams material_from_json(const json& j) {
    MaterialParams m;
    const auto q = [&](const char* key, double& target, std::string_view unit) {
        read_if(j, key, target,
                [&](const json& v) { return read_quantity(v, where("material", key), unit); });
    };
    q("E_L", m.E_L, "J/mol");
    q("D_0", m.D_0, "m^2/s");
    q("M_M", m.M_M, "g/mol");
    q("rho_M", m.rho_M, "g/cm^3");
    q("N_L", m.N_L, "1/m^3");
    q("C_L0", m.C_L0, "mol/m^3");
    return m;
}

json protocol_to_json(const TestProtocol& p) {
    return json{{"L", quantity(p.L, "m")},         {"phi", quantity(p.phi, "K/s")},
                {"t_rest", quantity(p.t_rest, "s")}, {"T_min", quantity(p.T_min, "K")},
                {"T_max", quantity(p.T_max, "K")}};
}

TestProtocol protocol_from_json(const json& j) {
    TestProtocol p;
    const auto q = [&](const char* key, double& target, std::string_view unit) {
        read_if(j, key, target,
                [&](const json& v) { return read_quantity(v, where("protocol", key), unit); });
    };
    q("L", p.L, "m");
    q("phi", p.phi, "K/s");
    q("t_rest", p.t_rest, "s");
    q("T_min", p.T_min, "K");
    q("T_max", p.T_max, "K");
    return p;
}

json numerics_to_json(const NumericsConfig& n) {
    return json{{"n_temperature_evals", n.n_temperature_evals},
                {"n_elements", n.n_elements},
                {"rel_tol", n.rel_tol},
                {"abs_tol", n.abs_tol},
                {"series_terms", n.series_terms}};
}

NumericsConfig numerics_from_json(const json& j) {
    NumericsConfig n;
    const auto as_int = [](const json& v) { return v.get<int>(); };
    const auto as_double = [](const json& v) { return v.get<double>(); };
    read_if(j, "n_temperature_evals", n.n_temperature_evals, as_int);
    read_if(j, "n_elements", n.n_elements, as_int);
    read_if(j, "rel_tol", n.rel_tol, as_double);
    read_if(j, "abs_tol", n.abs_tol, as_double);
    read_if(j, "series_terms", n.series_terms, as_int);
    return n;
}

json trap_to_json(const TrapSpec& t) {
    json j{{"N_T", quantity(t.N_T, "1/m^3")},   {"delta_H", quantity(t.delta_H, "J/mol")},
           {"E_t", quantity(t.E_t, "J/mol")},   {"E_d", quantity(t.E_d, "J/mol")},
           {"nu_t", quantity(t.nu_t, "1/s")},   {"nu_d", quantity(t.nu_d, "1/s")}};
    if (t.theta_T0) {
        j["theta_T0"] = quantity(*t.theta_T0, "1");
    }
    return j;
}

// E_t defaults to the lattice activation energy and E_d to E_t - delta_H.
TrapSpec trap_from_json(const json& j, std::size_t index, double E_L) {
    const std::string section = "traps[" + std::to_string(index) + "]";
    const auto q = [&](const char* key, std::string_view unit) {
        return read_quantity(j.at(key), where(section, key), unit);
    };
    if (!j.is_object()) {
        throw FormatError("project field '" + section + "' must be an object");
    }
    for (const char* key : {"N_T", "delta_H"}) {
        if (!j.contains(key)) {
            throw FormatError("project field '" + where(section, key) + "' is missing");
        }
    }
    TrapSpec t;
    t.N_T = q("N_T", "1/m^3");
    t.delta_H = q("delta_H", "J/mol");
    t.E_t = j.contains("E_t") ? q("E_t", "J/mol") : E_L;
    t.E_d = j.contains("E_d") ? q("E_d", "J/mol") : t.E_t - t.delta_H;
    t.nu_t = j.contains("nu_t") ? q("nu_t", "1/s") : constants::debye_frequency;
    t.nu_d = j.contains("nu_d") ? q("nu_d", "1/s") : constants::debye_frequency;
    if (j.contains("theta_T0") && !j.at("theta_T0").is_null()) {
        t.theta_T0 = q("theta_T0", "1");
    }
    return t;
}

std::vector<TrapSpec> traps_from_json(const json& j, double E_L) {
    if (!j.is_array()) {
        throw FormatError("project field 'traps' must be an array");
    }
    std::vector<TrapSpec> traps;
    for (std::size_t i = 0; i < j.size(); ++i) {
        traps.push_back(trap_from_json(j[i], i, E_L));
    }
    return traps;
}

json units_to_json(const UnitSystem& u) {
    return json{{"flux", token(u.flux)},
                {"content", token(u.content)},
                {"rate", token(u.rate)},
                {"temperature", token(u.temperature)},
                {"time", token(u.time)}};
}

UnitSystem units_from_json(const json& j) {
    UnitSystem u;
    const auto read = [&](const char* key, Unit& target, UnitFamily family) {
        if (!j.contains(key)) {
            return;
        }
        const Unit parsed = parse_unit(j.at(key).get<std::string>());
        if (family_of(parsed) != family) {
            throw FormatError("project field 'units." + std::string(key) +
                              "' names a unit of another kind");
        }
        target = parsed;
    };
    read("flux", u.flux, UnitFamily::flux);
    read("content", u.content, UnitFamily::content);
    read("rate", u.rate, UnitFamily::rate);
    read("temperature", u.temperature, UnitFamily::temperature);
    read("time", u.time, UnitFamily::time);
    return u;
}

json fit_settings_to_json(const FitSettings& f) {
    return json{{"bounds", bounds_tag(f.bounds)},
                {"update_CL0", f.update_CL0},
                {"rel_tol", f.rel_tol},
                {"max_iterations", f.pso.max_iterations},
                {"population", f.pso.population},
                {"tolerance", f.pso.tolerance},
                {"stall_window", f.pso.stall_window},
                {"seed", f.pso.seed},
                {"inertia", f.pso.inertia},
                {"cognitive", f.pso.cognitive},
                {"social", f.pso.social},
                {"neighborhood", f.pso.neighborhood}};
}

}  // namespace

FitSettings fit_settings_from_json(const json& j, FitSettings f) {
    const auto as_int = [](const json& v) { return v.get<int>(); };
    const auto as_double = [](const json& v) { return v.get<double>(); };
    read_if(j, "bounds", f.bounds,
            [](const json& v) { return parse_bounds(v.get<std::string>()); });
    read_if(j, "update_CL0", f.update_CL0, [](const json& v) { return v.get<bool>(); });
    read_if(j, "rel_tol", f.rel_tol, as_double);
    read_if(j, "max_iterations", f.pso.max_iterations, as_int);
    read_if(j, "population", f.pso.population, as_int);
    read_if(j, "tolerance", f.pso.tolerance, as_double);
    read_if(j, "stall_window", f.pso.stall_window, as_int);
    read_if(j, "seed", f.pso.seed, [](const json& v) { return v.get<std::uint64_t>(); });
    read_if(j, "inertia", f.pso.inertia, as_double);
    read_if(j, "cognitive", f.pso.cognitive, as_double);
    read_if(j, "social", f.pso.social, as_double);
    read_if(j, "neighborhood", f.pso.neighborhood, as_int);
    return f;
}

namespace {

json experiment_to_json(const ExperimentalSpectrum& e) {
    return json{{"source", e.source},
                {"T", {{"unit", "K"}, {"values", e.T}}},
                {"deltaC", {{"unit", "mol/(m^3*s)"}, {"values", e.deltaC}}}};
}

// A bare array is taken in the canonical unit.
std::vector<double> read_series(const json& j, const std::string& path, Unit canonical,
                                const MaterialParams& mat) {
    if (j.is_array()) {
        return j.get<std::vector<double>>();
    }
    if (!j.is_object() || !j.contains("values")) {
        throw FormatError("project field '" + path + "' must hold a 'values' array");
    }
    auto values = j.at("values").get<std::vector<double>>();
    if (j.contains("unit")) {
        const Unit u = parse_unit(j.at("unit").get<std::string>());
        if (u != canonical) {
            for (double& v : values) {
                v = convert(v, u, canonical, mat);
            }
        }
    }
    return values;
}

}  // namespace

ExperimentalSpectrum experiment_from_json(const json& j, const MaterialParams& mat) {
    ExperimentalSpectrum e;
    if (j.contains("source")) {
        e.source = j.at("source").get<std::string>();
    }
    e.T = read_series(j.at("T"), "experiment.T", Unit::kelvin, mat);
    e.deltaC = read_series(j.at("deltaC"), "experiment.deltaC", Unit::mol_per_m3_s, mat);
    validate(e);
    return e;
}

namespace {

IterationRecord record_from_json(const json& j) {
    IterationRecord r;
    r.iteration = j.at("iteration").get<int>();
    r.f_count = j.at("f_count").get<std::size_t>();
    r.best_f = j.at("best_f").get<double>();
    r.mean_f = j.at("mean_f").get<double>();
    r.stall = j.at("stall").get<int>();
    r.best_position = j.at("best_position").get<std::vector<double>>();
    return r;
}

Termination parse_termination(std::string_view tag) {
    for (Termination t : {Termination::max_iterations, Termination::stalled,
                          Termination::cancelled}) {
        if (termination_tag(t) == tag) {
            return t;
        }
    }
    throw FormatError("unknown termination reason '" + std::string(tag) + "'");
}

json fit_summary_to_json(const FitSummary& s) {
    json trace = json::array();
    for (const auto& r : s.trace) {
        trace.push_back(trace_record_to_json(r));
    }
    json j{{"traps", traps_to_json(s.traps)},
           {"best_f", s.best_f},
           {"reason", termination_tag(s.reason)},
           {"f_count", s.f_count},
           {"failed_evaluations", s.failed_evaluations},
           {"trace", trace}};
    if (s.C_L0) {
        j["C_L0"] = quantity(*s.C_L0, "mol/m^3");
    }
    return j;
}

FitSummary fit_summary_from_json(const json& j, double E_L) {
    FitSummary s;
    s.traps = traps_from_json(j.at("traps"), E_L);
    s.best_f = j.at("best_f").get<double>();
    s.reason = parse_termination(j.at("reason").get<std::string>());
    s.f_count = j.value("f_count", std::size_t{0});
    s.failed_evaluations = j.value("failed_evaluations", std::size_t{0});
    if (j.contains("C_L0") && !j.at("C_L0").is_null()) {
        s.C_L0 = read_quantity(j.at("C_L0"), "last_fit.C_L0", "mol/m^3");
    }
    if (j.contains("trace")) {
        for (const auto& r : j.at("trace")) {
            s.trace.push_back(record_from_json(r));
        }
    }
    return s;
}

std::string header_name(std::string_view name, Unit u) {
    return std::string(name) + " [" + std::string(label(u)) + "]";
}

std::ofstream open_for_writing(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write '" + path.string() + "'");
    }
    return out;
}

void finish_writing(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) {
        throw IoError("write to '" + path.string() + "' failed");
    }
}

bool is_separator(char c) {
    return c == ',' || c == ';' || c == ' ' || c == '\t' || c == '\r';
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && is_separator(line[i])) {
            ++i;
        }
        const std::size_t start = i;
        while (i < line.size() && !is_separator(line[i])) {
            ++i;
        }
        if (i > start) {
            out.push_back(line.substr(start, i - start));
        }
    }
    return out;
}

std::optional<double> parse_double(std::string_view s) {
    if (!s.empty() && s.front() == '+') {
        s.remove_prefix(1);
    }
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        return std::nullopt;
    }
    return v;
}

}  // namespace

bool operator==(const FitSettings& a, const FitSettings& b) {
    // Thread count is a runtime choice and not part of the stored settings.
    const auto& p = a.pso;
    const auto& q = b.pso;
    return a.bounds == b.bounds && a.update_CL0 == b.update_CL0 && a.rel_tol == b.rel_tol &&
           p.max_iterations == q.max_iterations && p.population == q.population &&
           p.tolerance == q.tolerance && p.stall_window == q.stall_window && p.seed == q.seed &&
           p.inertia == q.inertia && p.cognitive == q.cognitive && p.social == q.social &&
           p.neighborhood == q.neighborhood;
}

FitSummary summarize(const FitResult& r) {
    return FitSummary{r.traps, r.best_f, r.C_L0, r.reason, r.f_count, r.failed_evaluations,
                      r.trace};
}

FitProblem make_fit_problem(const Project& p, std::optional<Model> model) {
    if (!p.experiment) {
        throw ValidationError("project has no experimental spectrum to fit");
    }
    if (!model && p.models.empty()) {
        throw ValidationError("project selects no model");
    }
    FitProblem f;
    f.model = model.value_or(p.models.front());
    f.mat = p.mat;
    f.traps = p.traps;
    f.protocol = p.protocol;
    f.numerics = p.numerics;
    f.numerics.rel_tol = p.fit.rel_tol;
    f.exp = *p.experiment;
    f.bounds = p.fit.bounds;
    f.update_CL0 = p.fit.update_CL0;
    return f;
}

Project apply_fit(Project p, const FitResult& r) {
    p.traps = r.traps;
    if (r.C_L0) {
        p.mat.C_L0 = *r.C_L0;
    }
    p.last_fit = summarize(r);
    return p;
}

std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.15g", v);
    return buf;
}

json traps_to_json(const std::vector<TrapSpec>& traps) {
    json a = json::array();
    for (const auto& t : traps) {
        a.push_back(trap_to_json(t));
    }
    return a;
}

json trace_record_to_json(const IterationRecord& r) {
    return json{{"iteration", r.iteration}, {"f_count", r.f_count},
                {"best_f", r.best_f},       {"mean_f", r.mean_f},
                {"stall", r.stall},         {"best_position", r.best_position}};
}

json spectrum_to_json(const DesorptionSpectrum& s) {
    return json{{"model", model_tag(s.model)},
                {"units",
                 {{"t", "s"}, {"T", "K"}, {"deltaC", "mol/(m^3*s)"}, {"flux", "mol/(m^2*s)"}}},
                {"t", s.t},
                {"T", s.T},
                {"deltaC_total", s.deltaC_total},
                {"deltaC_lattice", s.deltaC_lattice},
                {"deltaC_trap", s.deltaC_trap},
                {"flux", s.flux}};
}

json project_to_json(const Project& p) {
    json models = json::array();
    for (Model m : p.models) {
        models.push_back(model_tag(m));
    }
    json j{{"schema_version", p.schema_version},
           {"material", material_to_json(p.mat)},
           {"protocol", protocol_to_json(p.protocol)},
           {"numerics", numerics_to_json(p.numerics)},
           {"traps", traps_to_json(p.traps)},
           {"models", models},
           {"units", units_to_json(p.units)},
           {"fit", fit_settings_to_json(p.fit)}};
    if (p.experiment) {
        j["experiment"] = experiment_to_json(*p.experiment);
    }
    if (p.last_fit) {
        j["last_fit"] = fit_summary_to_json(*p.last_fit);
    }
    return j;
}

Project project_from_json(const json& j) {
    try {
        if (!j.is_object()) {
            throw FormatError("project must be a JSON object");
        }
        Project p;
        p.schema_version = j.value("schema_version", project_schema_version);
        if (p.schema_version < 1 || p.schema_version > project_schema_version) {
            throw FormatError("unsupported project schema version " +
                              std::to_string(p.schema_version));
        }
        if (j.contains("material")) {
            p.mat = material_from_json(j.at("material"));
        }
        if (j.contains("protocol")) {
            p.protocol = protocol_from_json(j.at("protocol"));
        }
        if (j.contains("numerics")) {
            p.numerics = numerics_from_json(j.at("numerics"));
        }
        if (j.contains("traps")) {
            p.traps = traps_from_json(j.at("traps"), p.mat.E_L);
        }
        if (j.contains("models")) {
            p.models.clear();
            for (const auto& m : j.at("models")) {
                p.models.push_back(parse_model(m.get<std::string>()));
            }
        }
        if (j.contains("units")) {
            p.units = units_from_json(j.at("units"));
        }
        if (j.contains("fit")) {
            p.fit = fit_settings_from_json(j.at("fit"), p.fit);
        }
        if (j.contains("experiment") && !j.at("experiment").is_null()) {
            p.experiment = experiment_from_json(j.at("experiment"), p.mat);
        }
        if (j.contains("last_fit") && !j.at("last_fit").is_null()) {
            p.last_fit = fit_summary_from_json(j.at("last_fit"), p.mat.E_L);
        }
        return p;
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed project: ") + e.what());
    } catch (const UnitError& e) {
        throw FormatError(std::string("malformed project: ") + e.what());
    } catch (const DomainError& e) {
        throw FormatError(std::string("malformed project: ") + e.what());
    }
}

void save_project(const Project& p, const std::filesystem::path& path) {
    auto out = open_for_writing(path);
    out << project_to_json(p).dump(2) << '\n';
    finish_writing(out, path);
}

Project load_project(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot read '" + path.string() + "'");
    }
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
    return project_from_json(j);
}

ColumnKind parse_column_kind(std::string_view tag) {
    if (tag == "deltaC") {
        return ColumnKind::deltaC;
    }
    if (tag == "flux") {
        return ColumnKind::flux;
    }
    throw DomainError("column kind must be 'deltaC' or 'flux', got '" + std::string(tag) + "'");
}

ColumnUnits parse_column_units(std::string_view spec) {
    const auto comma = spec.find(',');
    if (comma == std::string_view::npos) {
        throw UnitError("expected 'temperature,value' units, got '" + std::string(spec) + "'");
    }
    ColumnUnits u{parse_unit(spec.substr(0, comma)), parse_unit(spec.substr(comma + 1))};
    if (family_of(u.temperature) != UnitFamily::temperature) {
        throw UnitError("first unit must be a temperature");
    }
    return u;
}

ExperimentalSpectrum parse_experiment(std::istream& in, ColumnKind kind, ColumnUnits units,
                                      const MaterialParams& mat, const TestProtocol& protocol,
                                      std::string source) {
    if (family_of(units.temperature) != UnitFamily::temperature) {
        throw UnitError("first column unit must be a temperature");
    }
    const UnitFamily want = kind == ColumnKind::flux ? UnitFamily::flux : UnitFamily::rate;
    if (family_of(units.value) != want) {
        throw UnitError(std::string("second column unit '") + std::string(token(units.value)) +
                        "' does not match the column kind");
    }

    std::vector<std::pair<double, double>> rows;
    std::string line;
    std::size_t line_no = 0;
    bool seen_content = false;
    while (std::getline(in, line)) {
        ++line_no;
        const auto fields = split_fields(line);
        if (fields.empty() || fields.front().front() == '#') {
            continue;
        }
        const bool first = !seen_content;
        seen_content = true;
        const auto T = parse_double(fields.front());
        if (!T && first) {
            continue;  // header
        }
        const auto where = "line " + std::to_string(line_no) + ": ";
        if (fields.size() < 2) {
            throw FormatError(where + "expected two columns");
        }
        const auto v = parse_double(fields[1]);
        if (!T || !v) {
            throw FormatError(where + "not a number");
        }
        if (!std::isfinite(*T) || !std::isfinite(*v)) {
            throw FormatError(where + "non-finite value");
        }
        double value = 0.0;
        if (kind == ColumnKind::flux) {
            value = 2.0 * convert(*v, units.value, Unit::mol_per_m2_s, mat) / protocol.L;
        } else {
            value = convert(*v, units.value, Unit::mol_per_m3_s, mat);
        }
        rows.emplace_back(convert(*T, units.temperature, Unit::kelvin, mat), value);
    }

    std::stable_sort(rows.begin(), rows.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    ExperimentalSpectrum e;
    e.source = std::move(source);
    for (std::size_t i = 0; i < rows.size();) {
        std::size_t j = i;
        double sum = 0.0;
        while (j < rows.size() && rows[j].first == rows[i].first) {
            sum += rows[j].second;
            ++j;
        }
        e.T.push_back(rows[i].first);
        e.deltaC.push_back(sum / static_cast<double>(j - i));
        i = j;
    }
    if (e.size() < 4) {
        throw FormatError("need at least 4 distinct temperatures, found " +
                          std::to_string(e.size()));
    }
    return e;
}

ExperimentalSpectrum load_experiment(const std::filesystem::path& path, ColumnKind kind,
                                     ColumnUnits units, const MaterialParams& mat,
                                     const TestProtocol& protocol) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot read '" + path.string() + "'");
    }
    try {
        return parse_experiment(in, kind, units, mat, protocol, path.filename().string());
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

void write_spectrum_csv(std::ostream& out, const DesorptionSpectrum& s, const UnitSystem& units,
                        const MaterialParams& mat) {
    out << header_name("T", units.temperature) << ',' << header_name("deltaC_total", units.rate)
        << ',' << header_name("deltaC_CL", units.rate);
    for (std::size_t i = 0; i < s.deltaC_trap.size(); ++i) {
        out << ',' << header_name("deltaC_CT" + std::to_string(i + 1), units.rate);
    }
    out << ',' << header_name("flux", units.flux) << '\n';
    const auto rate = [&](double v) {
        return format_number(convert(v, Unit::mol_per_m3_s, units.rate, mat));
    };
    for (std::size_t k = 0; k < s.size(); ++k) {
        out << format_number(convert(s.T[k], Unit::kelvin, units.temperature, mat)) << ','
            << rate(s.deltaC_total[k]) << ',' << rate(s.deltaC_lattice[k]);
        for (const auto& trap : s.deltaC_trap) {
            out << ',' << rate(trap[k]);
        }
        out << ','
            << format_number(convert(s.flux[k], Unit::mol_per_m2_s, units.flux, mat)) << '\n';
    }
}

void export_spectrum(const DesorptionSpectrum& s, const std::filesystem::path& path,
                     const UnitSystem& units, const MaterialParams& mat) {
    auto out = open_for_writing(path);
    write_spectrum_csv(out, s, units, mat);
    finish_writing(out, path);
}

void export_spectrum(const ExperimentalSpectrum& s, const std::filesystem::path& path,
                     const UnitSystem& units, const MaterialParams& mat) {
    auto out = open_for_writing(path);
    out << header_name("T", units.temperature) << ',' << header_name("deltaC", units.rate)
        << '\n';
    for (std::size_t k = 0; k < s.size(); ++k) {
        out << format_number(convert(s.T[k], Unit::kelvin, units.temperature, mat)) << ','
            << format_number(convert(s.deltaC[k], Unit::mol_per_m3_s, units.rate, mat)) << '\n';
    }
    finish_writing(out, path);
}

void write_trace_csv(std::ostream& out, const std::vector<IterationRecord>& trace) {
    out << "iteration,f_count,best_f,mean_f,stall";
    const std::size_t dim = trace.empty() ? 0 : trace.front().best_position.size();
    for (std::size_t d = 0; d < dim; ++d) {
        const auto trap = std::to_string(d / 2 + 1);
        out << (d % 2 == 0 ? ",delta_H" + trap + " [J/mol]" : ",log10_N_T" + trap + " [1/m^3]");
    }
    out << '\n';
    for (const auto& r : trace) {
        out << r.iteration << ',' << r.f_count << ',' << format_number(r.best_f) << ','
            << format_number(r.mean_f) << ',' << r.stall;
        for (double x : r.best_position) {
            out << ',' << format_number(x);
        }
        out << '\n';
    }
}

}  // namespace tds
