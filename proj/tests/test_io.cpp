#include "tds/errors.hpp"
#include "tds/io.hpp"
#include "tds/simulate.hpp"
#include "tds/units.hpp"

#include "validation_cases.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace tds;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "tds_io_tests";
    fs::create_directories(dir);
    return dir / name;
}

Project full_project() {
    Project p;
    const auto c = cases::drexler();
    p.mat = c.mat;
    p.protocol = c.protocol;
    p.traps = c.traps;
    p.traps[1].theta_T0 = 0.75;
    p.traps[0].nu_t = 3.3e11;
    p.models = {Model::oriani, Model::mcnabb_foster};
    p.units.rate = Unit::wppm_per_s;
    p.units.temperature = Unit::celsius;
    p.fit.bounds = BoundsMode::local;
    p.fit.update_CL0 = true;
    p.fit.pso.seed = 1234567890123ULL;
    p.fit.pso.population = 64;
    p.experiment = ExperimentalSpectrum{{300.0, 310.5, 320.0, 333.3}, {0.1, 0.25, 0.2, 1e-17},
                                        "run 7.csv"};
    FitSummary s;
    s.traps = c.traps;
    s.best_f = 0.1 + 0.2;  // not representable in short decimal form
    s.C_L0 = 0.0123;
    s.reason = Termination::stalled;
    s.f_count = 640;
    s.failed_evaluations = 3;
    s.trace = {IterationRecord{0, 64, 1.5, 2.5, 0, {-30e3, 25.1, -70e3, 24.3}},
               IterationRecord{1, 128, 1.25, 2.0, 0, {-31e3, 25.0, -69e3, 24.4}}};
    p.last_fit = s;
    return p;
}

ExperimentalSpectrum parse(const std::string& text, ColumnKind kind = ColumnKind::deltaC,
                           ColumnUnits units = {}) {
    std::istringstream in(text);
    const auto c = cases::drexler();
    return parse_experiment(in, kind, units, c.mat, c.protocol);
}

std::string format_error(const std::string& text) {
    try {
        parse(text);
    } catch (const FormatError& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("project round trip is lossless") {
    const Project p = full_project();
    const json j = project_to_json(p);
    CHECK(project_from_json(j) == p);
    // through text as well
    CHECK(project_from_json(json::parse(j.dump())) == p);

    const auto path = scratch("round_trip.json");
    save_project(p, path);
    CHECK(load_project(path) == p);

    // physical fields carry their units
    CHECK(j.at("material").at("E_L").at("unit") == "J/mol");
    CHECK(j.at("protocol").at("phi").at("unit") == "K/s");
    CHECK(j.at("traps").at(0).at("N_T").at("unit") == "1/m^3");
    CHECK(j.at("schema_version") == 1);
}

TEST_CASE("project reader accepts aliases and bare numbers") {
    const Project p = load_project(fs::path(TDS_TEST_DATA) / "drexler.json");
    const auto c = cases::drexler();
    CHECK(p.mat.E_L == doctest::Approx(c.mat.E_L).epsilon(1e-14));
    CHECK(p.mat.D_0 == doctest::Approx(c.mat.D_0).epsilon(1e-14));
    CHECK(p.protocol.L == doctest::Approx(c.protocol.L).epsilon(1e-14));
    REQUIRE(p.traps.size() == 2);
    CHECK(p.traps[1].delta_H == doctest::Approx(-70e3).epsilon(1e-14));
    // defaults: E_t = E_L and E_d from the binding energy
    CHECK(p.traps[1].E_t == p.mat.E_L);
    CHECK(p.traps[1].E_d == doctest::Approx(p.mat.E_L + 70e3));
    CHECK(p.traps[1].nu_d == constants::debye_frequency);

    json j = project_to_json(p);
    j["protocol"]["phi"] = json{{"value", 120.0}, {"unit", "K/min"}};
    j["protocol"]["T_min"] = json{{"value", 20.0}, {"unit", "C"}};
    j["protocol"]["t_rest"] = json{{"value", 0.5}, {"unit", "h"}};
    j["material"]["C_L0"] = 0.2;
    const Project q = project_from_json(j);
    CHECK(q.protocol.phi == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(q.protocol.T_min == doctest::Approx(293.15).epsilon(1e-14));
    CHECK(q.protocol.t_rest == doctest::Approx(1800.0).epsilon(1e-14));
    CHECK(q.mat.C_L0 == 0.2);

    // missing sections keep their defaults
    const Project d = project_from_json(json{{"schema_version", 1}});
    CHECK(d.mat == MaterialParams{});
    CHECK(d.models == std::vector<Model>{Model::oriani});
}

TEST_CASE("malformed projects are reported") {
    const Project p = full_project();
    json j = project_to_json(p);
    j["schema_version"] = 2;
    CHECK_THROWS_AS(project_from_json(j), FormatError);
    j = project_to_json(p);
    j["material"]["E_L"] = json{{"value", 1.0}, {"unit", "K"}};
    CHECK_THROWS_AS(project_from_json(j), FormatError);
    j = project_to_json(p);
    j["material"]["E_L"] = "fast";
    CHECK_THROWS_AS(project_from_json(j), FormatError);
    j = project_to_json(p);
    j["traps"] = 3;
    CHECK_THROWS_AS(project_from_json(j), FormatError);
    CHECK_THROWS_AS(project_from_json(json::array()), FormatError);

    const auto bad = scratch("bad.json");
    std::ofstream(bad) << "{ not json";
    CHECK_THROWS_AS(load_project(bad), FormatError);
    CHECK_THROWS_AS(load_project(scratch("missing.json")), IoError);
}

TEST_CASE("fit problem from a project") {
    Project p = full_project();
    p.fit.rel_tol = 3e-5;
    const FitProblem f = make_fit_problem(p);
    CHECK(f.model == Model::oriani);
    CHECK(f.numerics.rel_tol == 3e-5);
    CHECK(f.bounds == BoundsMode::local);
    CHECK(f.update_CL0);
    CHECK(f.exp == *p.experiment);
    CHECK(make_fit_problem(p, Model::mcnabb_foster).model == Model::mcnabb_foster);
    p.experiment.reset();
    CHECK_THROWS_AS(make_fit_problem(p), ValidationError);

    FitResult r;
    r.traps = {make_trap(1e24, -40e3, p.mat.E_L)};
    r.C_L0 = 0.5;
    r.best_f = 0.01;
    const Project q = apply_fit(full_project(), r);
    CHECK(q.traps == r.traps);
    CHECK(q.mat.C_L0 == 0.5);
    REQUIRE(q.last_fit);
    CHECK(q.last_fit->best_f == 0.01);
}

TEST_CASE("experiment files in other units") {
    const auto c = cases::drexler();
    const std::string text =
        "# furnace 2\n"
        "T [C];rate [wppm/s]\n"
        "26.85;0.001\n"
        "36.85;0.002\n"
        "\n"
        "46.85;0.004\n"
        "56.85\t0.003\n";
    const auto e = parse(text, ColumnKind::deltaC, parse_column_units("C,wppm_s"));
    REQUIRE(e.size() == 4);
    CHECK(e.T[0] == doctest::Approx(300.0).epsilon(1e-14));
    CHECK(e.T[3] == doctest::Approx(330.0).epsilon(1e-14));
    // 1 wppm is rho_M / M_H mol/m^3 with rho_M in g/cm^3
    const double per_wppm = c.mat.rho_M / constants::hydrogen_molar_mass;
    CHECK(e.deltaC[2] == doctest::Approx(0.004 * per_wppm).epsilon(1e-12));

    // flux turns into a volumetric rate through both faces
    const auto f = parse("300 1e-6\n310 2e-6\n320 3e-6\n330 1e-6\n", ColumnKind::flux,
                         parse_column_units("K,mol_m2_s"));
    CHECK(f.deltaC[1] == doctest::Approx(2.0 * 2e-6 / c.protocol.L).epsilon(1e-14));
}

TEST_CASE("experiment rows are sorted and duplicates averaged") {
    const auto e = parse("T,deltaC\n320,3\n300,1\n310,2\n310,4\n330,5\n300,3\n");
    REQUIRE(e.size() == 4);
    CHECK(e.T == std::vector<double>{300.0, 310.0, 320.0, 330.0});
    CHECK(e.deltaC == std::vector<double>{2.0, 3.0, 3.0, 5.0});
    CHECK_NOTHROW(validate(e));
}

TEST_CASE("experiment errors name the line") {
    CHECK(format_error("300,1\n310,2\n300, abc\n") == "line 3: not a number");
    CHECK(format_error("T,x\n300,1\n310,nan\n") == "line 3: non-finite value");
    CHECK(format_error("300,1\n310\n") == "line 2: expected two columns");
    CHECK(format_error("300,1\n310,2\n320,3\n").find("at least 4") != std::string::npos);
    CHECK(format_error("300,1\n300,2\n310,2\n310,1\n320,0\n").find("found 3") !=
          std::string::npos);

    const auto c = cases::drexler();
    CHECK_THROWS_AS(parse("300,1\n", ColumnKind::flux, parse_column_units("K,wppm_s")), UnitError);
    CHECK_THROWS_AS(parse_column_units("wppm_s,K"), UnitError);
    CHECK_THROWS_AS(parse_column_units("K"), UnitError);
    CHECK_THROWS_AS(parse_column_kind("rate"), DomainError);
    CHECK_THROWS_AS(load_experiment(scratch("absent.csv"), ColumnKind::deltaC, {}, c.mat,
                                    c.protocol),
                    IoError);

    const auto path = scratch("broken.csv");
    std::ofstream(path) << "300,1\n310,x\n";
    try {
        load_experiment(path, ColumnKind::deltaC, {}, c.mat, c.protocol);
        FAIL("expected a FormatError");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find(path.string()) == 0);
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
}

TEST_CASE("spectrum export") {
    const auto c = cases::drexler();
    NumericsConfig num;
    num.n_temperature_evals = 30;
    const auto s = desorption_rate(simulate(Model::oriani, c.mat, c.traps, c.protocol, num));

    std::ostringstream out;
    write_spectrum_csv(out, s, UnitSystem{}, c.mat);
    std::istringstream in(out.str());
    std::string header;
    std::getline(in, header);
    CHECK(header ==
          "T [K],deltaC_total [mol/(m^3*s)],deltaC_CL [mol/(m^3*s)],deltaC_CT1 [mol/(m^3*s)],"
          "deltaC_CT2 [mol/(m^3*s)],flux [mol/(m^2*s)]");
    std::size_t rows = 0;
    std::string line;
    while (std::getline(in, line)) {
        ++rows;
    }
    CHECK(rows == s.size());

    // exported deltaC_total re-read as an experiment in the same units
    UnitSystem units;
    units.temperature = Unit::celsius;
    units.rate = Unit::wppm_per_s;
    const auto path = scratch("spectrum.csv");
    export_spectrum(s, path, units, c.mat);
    const auto e = load_experiment(path, ColumnKind::deltaC, parse_column_units("C,wppm_s"),
                                   c.mat, c.protocol);
    REQUIRE(e.size() == s.size());
    for (std::size_t k = 0; k < e.size(); ++k) {
        CHECK(e.T[k] == doctest::Approx(s.T[k]).epsilon(1e-13));
        CHECK(e.deltaC[k] == doctest::Approx(s.deltaC_total[k]).epsilon(1e-13));
    }

    ExperimentalSpectrum x{{300.0, 310.0, 320.0, 330.0}, {1.0, 2.0, 3.0, 4.0}, "x"};
    const auto xp = scratch("exp.csv");
    export_spectrum(x, xp, UnitSystem{}, c.mat);
    CHECK(load_experiment(xp, ColumnKind::deltaC, {}, c.mat, c.protocol).deltaC == x.deltaC);

    CHECK_THROWS_AS(export_spectrum(s, scratch("no_such_dir") / "a" / "b.csv", units, c.mat),
                    IoError);
}

TEST_CASE("trace export") {
    std::ostringstream out;
    write_trace_csv(out, {IterationRecord{0, 10, 0.5, 1.0, 0, {-50e3, 24.0}},
                          IterationRecord{1, 20, 0.25, 0.75, 0, {-51e3, 24.1}}});
    CHECK(out.str() ==
          "iteration,f_count,best_f,mean_f,stall,delta_H1 [J/mol],log10_N_T1 [1/m^3]\n"
          "0,10,0.5,1,0,-50000,24\n"
          "1,20,0.25,0.75,0,-51000,24.1\n");
    CHECK(format_number(0.1 + 0.2) == "0.3");
    CHECK(format_number(1e-300) == "1e-300");
}

}  // TEST_SUITE io
