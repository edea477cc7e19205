#pragma once

#include "tds/core.hpp"
#include "tds/fit.hpp"
#include "tds/simulation.hpp"
#include "tds/spectrum.hpp"
#include "tds/units.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace tds {

inline constexpr int project_schema_version = 1;

/// Inference settings stored with a project; CLI flags override them.
struct FitSettings {
    BoundsMode bounds = BoundsMode::global;
    bool update_CL0 = false;
    // Forward-solve tolerance during the search; spectrum errors stay near
    // 1e-5 of the peak at a quarter of the cost of the default 1e-6.
    double rel_tol = 1e-4;
    PsoOptions pso;

    friend bool operator==(const FitSettings& a, const FitSettings& b);
};

/// What a project keeps of a finished fit.
struct FitSummary {
    std::vector<TrapSpec> traps;
    double best_f = 0.0;
    std::optional<double> C_L0;
    Termination reason = Termination::max_iterations;
    std::size_t f_count = 0;
    std::size_t failed_evaluations = 0;
    std::vector<IterationRecord> trace;

    friend bool operator==(const FitSummary&, const FitSummary&) = default;
};

FitSummary summarize(const FitResult& r);

struct Project {
    int schema_version = project_schema_version;
    MaterialParams mat;
    TestProtocol protocol;
    NumericsConfig numerics;
    std::vector<TrapSpec> traps;
    std::vector<Model> models{Model::oriani};
    UnitSystem units;
    FitSettings fit;
    std::optional<ExperimentalSpectrum> experiment;
    std::optional<FitSummary> last_fit;

    friend bool operator==(const Project&, const Project&) = default;
};

/// Inverse problem for the project's traps (initial guesses) and embedded
/// experiment, using the first selected model unless one is given.
FitProblem make_fit_problem(const Project& p, std::optional<Model> model = std::nullopt);

/// Project with the fitted traps (and C_L0 when updated) and a fit summary.
Project apply_fit(Project p, const FitResult& r);

/// Physical fields are written as {"value": v, "unit": "..."}. The reader
/// also accepts bare numbers (canonical unit) and a few alternative units.
nlohmann::json project_to_json(const Project& p);
Project project_from_json(const nlohmann::json& j);

/// Overrides the fields present in j on top of base.
FitSettings fit_settings_from_json(const nlohmann::json& j, FitSettings base = {});

/// {"T": ..., "deltaC": ...}, each a bare array in internal units or
/// {"unit": u, "values": [...]}.
ExperimentalSpectrum experiment_from_json(const nlohmann::json& j, const MaterialParams& mat);

void save_project(const Project& p, const std::filesystem::path& path);
Project load_project(const std::filesystem::path& path);

enum class ColumnKind { deltaC, flux };
ColumnKind parse_column_kind(std::string_view tag);

struct ColumnUnits {
    Unit temperature = Unit::kelvin;
    Unit value = Unit::mol_per_m3_s;
};

/// Parses "temp,value" from a token pair such as "C,wppm_s".
ColumnUnits parse_column_units(std::string_view spec);

/// Two-column (or wider) numeric text, comma or whitespace separated. Lines
/// starting with '#' and one leading header line are skipped. Values are
/// converted to K and mol/(m^3 s); flux is turned into a desorption rate
/// with 2 J / L. Rows are sorted by T and duplicate temperatures averaged.
ExperimentalSpectrum parse_experiment(std::istream& in, ColumnKind kind, ColumnUnits units,
                                      const MaterialParams& mat, const TestProtocol& protocol,
                                      std::string source = {});
ExperimentalSpectrum load_experiment(const std::filesystem::path& path, ColumnKind kind,
                                     ColumnUnits units, const MaterialParams& mat,
                                     const TestProtocol& protocol);

/// CSV with a header naming each column and its unit: T, deltaC_total,
/// deltaC_CL, deltaC_CT1..n, flux.
void write_spectrum_csv(std::ostream& out, const DesorptionSpectrum& s, const UnitSystem& units,
                        const MaterialParams& mat);
void export_spectrum(const DesorptionSpectrum& s, const std::filesystem::path& path,
                     const UnitSystem& units, const MaterialParams& mat);
/// CSV with T and deltaC columns.
void export_spectrum(const ExperimentalSpectrum& s, const std::filesystem::path& path,
                     const UnitSystem& units, const MaterialParams& mat);

/// Per-iteration trace as CSV.
void write_trace_csv(std::ostream& out, const std::vector<IterationRecord>& trace);

/// Spectrum payload in internal units for the service.
nlohmann::json spectrum_to_json(const DesorptionSpectrum& s);
nlohmann::json trace_record_to_json(const IterationRecord& r);
nlohmann::json traps_to_json(const std::vector<TrapSpec>& traps);

/// "%.15g"
std::string format_number(double v);

}  // namespace tds
