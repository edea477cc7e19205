#pragma once

#include "tds/core.hpp"
#include "tds/simulation.hpp"

#include <span>

namespace tds {

/// Forward run of the chosen model. The lattice model ignores the traps and
/// evaluates the analytic series with numerics.series_terms terms.
SimulationResult simulate(Model model, const MaterialParams& mat, std::span<const TrapSpec> traps,
                          const TestProtocol& protocol, const NumericsConfig& numerics);

}  // namespace tds
