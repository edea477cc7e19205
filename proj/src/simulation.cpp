#include "tds/simulation.hpp"

#include "tds/errors.hpp"

#include <string>

namespace tds {

std::string_view model_tag(Model m) {
    switch (m) {
        case Model::lattice:
            return "lattice";
        case Model::oriani:
            return "oriani";
        case Model::mcnabb_foster:
            return "mf";
    }
    return "unknown";
}

Model parse_model(std::string_view tag) {
    if (tag == "lattice") {
        return Model::lattice;
    }
    if (tag == "oriani") {
        return Model::oriani;
    }
    if (tag == "mf" || tag == "mcnabb_foster" || tag == "mcnabb-foster") {
        return Model::mcnabb_foster;
    }
    throw ValidationError("unknown model '" + std::string(tag) + "'");
}

std::vector<double> output_times(const TestProtocol& protocol, int n_temperature_evals) {
    const double t_end = protocol.end_time();
    const auto n = static_cast<std::size_t>(n_temperature_evals);
    std::vector<double> t(n);
    for (std::size_t k = 0; k < n; ++k) {
        t[k] = t_end * static_cast<double>(k) / static_cast<double>(n - 1);
    }
    t.back() = t_end;
    return t;
}

std::vector<double> spatial_grid(double L, int n_elements) {
    const auto n = static_cast<std::size_t>(n_elements);
    std::vector<double> x(n + 1);
    for (std::size_t j = 0; j <= n; ++j) {
        x[j] = L * (static_cast<double>(j) / static_cast<double>(n) - 0.5);
    }
    x[n / 2] = 0.0;
    return x;
}

}  // namespace tds
