#pragma once

#include "tds/core.hpp"

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace tds {

enum class Model { lattice, oriani, mcnabb_foster };

std::string_view model_tag(Model m);
/// Accepts "lattice", "oriani", "mf" and "mcnabb_foster".
Model parse_model(std::string_view tag);

/// Row-major (time x space) samples of one concentration field.
class Field {
public:
    Field() = default;
    Field(std::size_t n_times, std::size_t n_nodes)
        : n_times_(n_times), n_nodes_(n_nodes), data_(n_times * n_nodes, 0.0) {}

    [[nodiscard]] std::size_t n_times() const { return n_times_; }
    [[nodiscard]] std::size_t n_nodes() const { return n_nodes_; }
    [[nodiscard]] bool empty() const { return data_.empty(); }

    double& operator()(std::size_t k, std::size_t j) { return data_[k * n_nodes_ + j]; }
    double operator()(std::size_t k, std::size_t j) const { return data_[k * n_nodes_ + j]; }

    [[nodiscard]] std::span<const double> row(std::size_t k) const {
        return {data_.data() + k * n_nodes_, n_nodes_};
    }
    std::span<double> row(std::size_t k) { return {data_.data() + k * n_nodes_, n_nodes_}; }

private:
    std::size_t n_times_ = 0;
    std::size_t n_nodes_ = 0;
    std::vector<double> data_;
};

/// Space-time solution of one forward run in dimensional units
/// (m, s, K, mol/m^3). Row 0 of every field holds the initial condition.
/// The optional rate fields hold dC/dt of the semi-discrete system at each
/// output time; post-processing falls back to finite differences without them.
struct SimulationResult {
    Model model = Model::oriani;
    MaterialParams mat;
    TestProtocol protocol;
    std::vector<TrapSpec> traps;

    std::vector<double> x;  // m, n_elements + 1 nodes on [-L/2, L/2]
    std::vector<double> t;  // s
    std::vector<double> T;  // K

    Field C_L;
    std::vector<Field> C_T;
    Field dC_L_dt;
    std::vector<Field> dC_T_dt;

    std::vector<std::string> warnings;

    [[nodiscard]] std::size_t n_times() const { return t.size(); }
    [[nodiscard]] std::size_t n_nodes() const { return x.size(); }
    [[nodiscard]] bool has_rates() const { return !dC_L_dt.empty(); }
};

/// Output times shared by every model: n points uniform on [0, t_end].
std::vector<double> output_times(const TestProtocol& protocol, int n_temperature_evals);

/// Uniform nodes on [-L/2, L/2].
std::vector<double> spatial_grid(double L, int n_elements);

}  // namespace tds
