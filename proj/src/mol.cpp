#include "tds/mol.hpp"

#include <algorithm>

namespace tds {

void RampedSystem::time_derivative(double t, std::span<const double> y,
                                   std::span<const double> f0, std::span<double> dfdt) const {
    if (!ramp_) {
        std::fill(dfdt.begin(), dfdt.end(), 0.0);
        return;
    }
    ode::StiffSystem::time_derivative(t, y, f0, dfdt);
}

ode::IntegratorStats integrate_to_outputs(RampedSystem& system, std::span<double> y,
                                          std::span<const double> t_out,
                                          const ode::IntegratorOptions& options,
                                          const SampleFn& sample) {
    const double t_rest = system.params().t_rest_bar;
    system.set_ramp(t_rest <= 0.0);
    ode::Rodas3 stepper(system, options);
    double t = 0.0;
    for (std::size_t k = 0; k < t_out.size(); ++k) {
        const double target = t_out[k];
        if (!system.ramp_active() && target > t_rest) {
            stepper.integrate(t, y, t_rest);
            t = t_rest;
            system.set_ramp(true);
        }
        stepper.integrate(t, y, target);
        t = target;
        sample(k, t, y);
    }
    return stepper.stats();
}

}  // namespace tds
