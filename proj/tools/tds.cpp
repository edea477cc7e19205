// Command line front end: simulate, fit, convert, serve.

#include "tds/errors.hpp"
#include "tds/fit.hpp"
#include "tds/io.hpp"
#include "tds/service.hpp"
#include "tds/simulate.hpp"
#include "tds/spectrum.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kData = 2;
constexpr int kSolver = 3;

// Usage problems detected after parsing, e.g. inconsistent flags.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

fs::path with_suffix(const fs::path& p, const std::string& suffix) {
    fs::path out = p;
    out.replace_filename(p.stem().string() + suffix + p.extension().string());
    return out;
}

struct SimulateArgs {
    std::string project;
    std::vector<std::string> models;
    std::string out;
};

int run_simulate(const SimulateArgs& a) {
    const tds::Project p = tds::load_project(a.project);
    std::vector<tds::Model> models;
    for (const auto& m : a.models) {
        models.push_back(tds::parse_model(m));
    }
    if (models.empty()) {
        models = p.models;
    }
    if (models.empty()) {
        throw UsageError("no model selected in the project or with --model");
    }
    if (models.size() > 1 && a.out.empty()) {
        throw UsageError("--out is required when running several models");
    }
    for (tds::Model m : models) {
        const auto r = tds::simulate(m, p.mat, p.traps, p.protocol, p.numerics);
        for (const auto& w : r.warnings) {
            std::cerr << "warning: " << w << '\n';
        }
        const auto s = tds::desorption_rate(r);
        if (a.out.empty()) {
            tds::write_spectrum_csv(std::cout, s, p.units, p.mat);
            continue;
        }
        const fs::path out =
            models.size() == 1 ? fs::path(a.out)
                               : with_suffix(a.out, "_" + std::string(tds::model_tag(m)));
        tds::export_spectrum(s, out, p.units, p.mat);
        std::cerr << tds::model_tag(m) << ": " << out.string() << " (mass balance residual "
                  << tds::format_number(tds::mass_balance_residual(r)) << ")\n";
    }
    return kOk;
}

struct FitArgs {
    std::string project;
    std::string data;
    std::string col2 = "deltaC";
    std::string units = "K,mol_m3_s";
    std::string bounds;
    bool update_cl0 = false;
    std::optional<std::uint64_t> seed;
    std::optional<int> iters;
    std::optional<int> pop;
    std::optional<double> tol;
    std::optional<unsigned> threads;
    std::string model;
    std::string out;
    std::string trace;
    std::string spectrum;
    bool quiet = false;
};

int run_fit(const FitArgs& a) {
    tds::Project p = tds::load_project(a.project);
    p.experiment = tds::load_experiment(a.data, tds::parse_column_kind(a.col2),
                                        tds::parse_column_units(a.units), p.mat, p.protocol);
    if (!a.bounds.empty()) {
        p.fit.bounds = tds::parse_bounds(a.bounds);
    }
    if (a.update_cl0) {
        p.fit.update_CL0 = true;
    }
    if (a.seed) {
        p.fit.pso.seed = *a.seed;
    }
    if (a.iters) {
        p.fit.pso.max_iterations = *a.iters;
    }
    if (a.pop) {
        p.fit.pso.population = *a.pop;
    }
    if (a.tol) {
        p.fit.pso.tolerance = *a.tol;
    }
    std::optional<tds::Model> model;
    if (!a.model.empty()) {
        model = tds::parse_model(a.model);
    }
    const tds::FitProblem problem = tds::make_fit_problem(p, model);
    tds::PsoOptions opts = p.fit.pso;
    opts.threads = a.threads.value_or(0);

    tds::ProgressFn progress;
    if (!a.quiet) {
        progress = [](const tds::IterationRecord& r) {
            std::fprintf(stderr, "iter %4d  evals %7zu  best %.6e  mean %.6e  stall %d\n",
                         r.iteration, r.f_count, r.best_f, r.mean_f, r.stall);
        };
    }
    const tds::FitResult r = tds::run_pso(problem, opts, progress);
    const tds::Project fitted = tds::apply_fit(p, r);

    // default outputs go next to the project file
    const fs::path base = fs::path(a.project).replace_extension();
    const fs::path out = a.out.empty() ? fs::path(base.string() + "_fit.json") : fs::path(a.out);
    const fs::path trace =
        a.trace.empty() ? fs::path(base.string() + "_trace.csv") : fs::path(a.trace);
    tds::save_project(fitted, out);
    {
        std::ofstream t(trace);
        if (!t) {
            throw tds::IoError("cannot write '" + trace.string() + "'");
        }
        tds::write_trace_csv(t, r.trace);
    }
    if (!a.spectrum.empty()) {
        tds::export_spectrum(r.best_spectrum, a.spectrum, p.units, p.mat);
    }

    std::printf("termination: %s after %zu evaluations (%zu failed)\n",
                std::string(tds::termination_tag(r.reason)).c_str(), r.f_count,
                r.failed_evaluations);
    std::printf("best rms misfit: %.6e mol/(m^3*s)\n", r.best_f);
    if (r.C_L0) {
        std::printf("C_L0: %.6e mol/m^3\n", *r.C_L0);
    }
    for (std::size_t i = 0; i < r.traps.size(); ++i) {
        const double share = r.total_area > 0.0 ? r.trap_areas[i] / r.total_area : 0.0;
        std::printf("trap %zu: delta_H %.3f kJ/mol  N_T %.6e 1/m^3  share %.1f %%\n", i + 1,
                    r.traps[i].delta_H / 1e3, r.traps[i].N_T, 100.0 * share);
    }
    std::printf("project: %s\ntrace: %s\n", out.string().c_str(), trace.string().c_str());
    return kOk;
}

struct ConvertArgs {
    std::string in;
    std::optional<double> value;
    std::string from;
    std::string to;
    std::string out;
    std::string project;
};

std::vector<tds::Unit> unit_list(const std::string& spec) {
    std::vector<tds::Unit> units;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        units.push_back(tds::parse_unit(item));
    }
    if (units.empty() || units.size() > 2) {
        throw UsageError("expected one unit or a 'temperature,value' pair, got '" + spec + "'");
    }
    return units;
}

// Converts a single value, or every numeric row of a file. With a unit pair
// the first column takes the first unit and the others the second.
int run_convert(const ConvertArgs& a) {
    const tds::MaterialParams mat =
        a.project.empty() ? tds::MaterialParams{} : tds::load_project(a.project).mat;
    const auto from = unit_list(a.from);
    const auto to = unit_list(a.to);
    if (from.size() != to.size()) {
        throw UsageError("--from and --to must list the same number of units");
    }
    if (a.value) {
        if (from.size() != 1) {
            throw UsageError("--value takes a single unit");
        }
        std::printf("%s\n", tds::format_number(tds::convert(*a.value, from[0], to[0], mat)).c_str());
        return kOk;
    }
    if (a.in.empty()) {
        throw UsageError("give --in or --value");
    }
    std::ifstream in(a.in);
    if (!in) {
        throw tds::IoError("cannot read '" + a.in + "'");
    }
    std::ofstream file;
    if (!a.out.empty()) {
        file.open(a.out);
        if (!file) {
            throw tds::IoError("cannot write '" + a.out + "'");
        }
    }
    std::ostream& out = a.out.empty() ? std::cout : file;

    const tds::Unit to_first = to.front();
    const tds::Unit to_rest = to.back();
    std::string line;
    std::size_t line_no = 0;
    bool header_written = false;
    bool header_skipped = false;
    while (std::getline(in, line)) {
        ++line_no;
        std::string cleaned = line;
        for (char& c : cleaned) {
            if (c == ',' || c == ';' || c == '\t') {
                c = ' ';
            }
        }
        std::istringstream fields(cleaned);
        std::vector<std::string> tokens;
        for (std::string tok; fields >> tok;) {
            tokens.push_back(tok);
        }
        if (tokens.empty() || tokens.front().front() == '#') {
            continue;
        }
        std::vector<double> values;
        for (const auto& tok : tokens) {
            try {
                std::size_t used = 0;
                values.push_back(std::stod(tok, &used));
                if (used != tok.size()) {
                    throw std::invalid_argument(tok);
                }
            } catch (const std::logic_error&) {
                values.clear();
                break;
            }
        }
        if (values.empty()) {
            if (!header_written && !header_skipped) {
                header_skipped = true;  // the input's own header
                continue;
            }
            throw tds::FormatError(a.in + ": line " + std::to_string(line_no) + ": not a number");
        }
        if (!header_written) {
            out << "col1 [" << tds::label(to_first) << "]";
            for (std::size_t c = 1; c < values.size(); ++c) {
                out << ",col" << c + 1 << " [" << tds::label(to_rest) << "]";
            }
            out << '\n';
            header_written = true;
        }
        for (std::size_t c = 0; c < values.size(); ++c) {
            const tds::Unit f = c == 0 ? from.front() : from.back();
            const tds::Unit t = c == 0 ? to_first : to_rest;
            out << (c ? "," : "") << tds::format_number(tds::convert(values[c], f, t, mat));
        }
        out << '\n';
    }
    return kOk;
}

tds::service::Server* g_server = nullptr;

extern "C" void on_signal(int) {
    if (g_server) {
        g_server->stop();
    }
}

int run_serve(const std::string& host, int port) {
    tds::service::Server server;
    const int bound = server.bind(host, port);
    if (bound <= 0) {
        throw tds::IoError("cannot listen on " + host + ":" + std::to_string(port));
    }
    g_server = &server;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::fprintf(stderr, "listening on http://%s:%d\n", host.c_str(), bound);
    server.run();
    g_server = nullptr;
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Thermal desorption spectroscopy simulation and trap parameter inference"};
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Run forward simulations of a project");
    simulate->add_option("--project", sim.project, "Project file")->required();
    simulate->add_option("--model", sim.models, "lattice, oriani or mf (repeatable)");
    simulate->add_option("--out", sim.out,
                         "Spectrum CSV; with several models a _<model> suffix is added");

    FitArgs fit;
    auto* fitc = app.add_subcommand("fit", "Infer trap parameters from a measured spectrum");
    fitc->add_option("--project", fit.project, "Project file with the initial traps")->required();
    fitc->add_option("--data", fit.data, "Two-column text file: temperature, value")->required();
    fitc->add_option("--col2", fit.col2, "Second column: deltaC or flux")
        ->check(CLI::IsMember({"deltaC", "flux"}));
    fitc->add_option("--units", fit.units, "Column units, e.g. C,wppm_s");
    fitc->add_option("--bounds", fit.bounds, "global or local")
        ->check(CLI::IsMember({"global", "local"}));
    fitc->add_flag("--update-cl0", fit.update_cl0, "Re-derive C_L0 from the measured total");
    fitc->add_option("--seed", fit.seed, "Random seed");
    fitc->add_option("--iters", fit.iters, "Maximum iterations")->check(CLI::PositiveNumber);
    fitc->add_option("--pop", fit.pop, "Swarm size")->check(CLI::PositiveNumber);
    fitc->add_option("--tol", fit.tol, "Stall tolerance")->check(CLI::PositiveNumber);
    fitc->add_option("--threads", fit.threads, "Worker threads (0: all cores)");
    fitc->add_option("--model", fit.model, "oriani or mf (default: first project model)");
    fitc->add_option("--out", fit.out, "Fitted project (default <project>_fit.json)");
    fitc->add_option("--trace", fit.trace, "Iteration trace CSV (default <project>_trace.csv)");
    fitc->add_option("--spectrum", fit.spectrum, "Best-fit spectrum CSV");
    fitc->add_flag("--quiet", fit.quiet, "No per-iteration progress");

    ConvertArgs conv;
    auto* convert = app.add_subcommand("convert", "Convert values or text columns between units");
    auto* in_opt = convert->add_option("--in", conv.in, "Input text file");
    auto* value_opt = convert->add_option("--value", conv.value, "Single value");
    in_opt->excludes(value_opt);
    convert->add_option("--from", conv.from, "Unit or temperature,value pair")->required();
    convert->add_option("--to", conv.to, "Unit or temperature,value pair")->required();
    convert->add_option("--out", conv.out, "Output file (default stdout)");
    convert->add_option("--project", conv.project, "Project whose density is used for wppm");

    std::string host = "127.0.0.1";
    int port = 8080;
    auto* serve = app.add_subcommand("serve", "Start the local HTTP service");
    serve->add_option("--port", port, "TCP port (0: any free port)")
        ->check(CLI::Range(0, 65535));
    serve->add_option("--host", host, "Interface to bind");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        std::cout << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        std::cout << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kUsage;
    }

    try {
        if (simulate->parsed()) {
            return run_simulate(sim);
        }
        if (fitc->parsed()) {
            return run_fit(fit);
        }
        if (convert->parsed()) {
            return run_convert(conv);
        }
        return run_serve(host, port);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const tds::SolverError& e) {
        std::cerr << "solver failure: " << e.what() << '\n';
        return kSolver;
    } catch (const tds::OptimizationStalledError& e) {
        std::cerr << "solver failure: " << e.what() << '\n';
        return kSolver;
    } catch (const tds::UndefinedResidualError& e) {
        std::cerr << "solver failure: " << e.what() << '\n';
        return kSolver;
    } catch (const tds::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kSolver;
    }
}
