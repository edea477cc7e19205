#include "tds/simulate.hpp"

#include "tds/lattice_analytic.hpp"
#include "tds/mcnabb_foster.hpp"
#include "tds/oriani.hpp"

namespace tds {

SimulationResult simulate(Model model, const MaterialParams& mat, std::span<const TrapSpec> traps,
                          const TestProtocol& protocol, const NumericsConfig& numerics) {
    switch (model) {
        case Model::lattice:
            return lattice_result(SeriesSolution{mat, protocol, numerics.series_terms}, numerics);
        case Model::oriani:
            return solve_oriani(
                OrianiProblem{mat, {traps.begin(), traps.end()}, protocol, numerics});
        case Model::mcnabb_foster:
            return solve_mcnabb_foster(
                McNabbFosterProblem{mat, {traps.begin(), traps.end()}, protocol, numerics});
    }
    return {};
}

}  // namespace tds
