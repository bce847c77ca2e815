#pragma once

#include "collide/grid.hpp"
#include "collide/integrator.hpp"
#include "collide/kernels.hpp"

#include <cstddef>

namespace collide {

struct GridSpec {
    double zmin = 1e-4;
    double n = 1.0;
    std::size_t cells = 128;
    Spacing spacing = Spacing::Geometric;

    GridPtr build() const;
};

/// A complete, self-contained simulation description.
struct SimulationSetup {
    Model model;
    GridSpec grid;
    InitialCondition initial = ExponentialInitial{};
    TimeStepperConfig time;
    unsigned threads = 1;
};

struct SimulationOutcome {
    Projection projection;
    RunResult run;
};

/// Ties the kernel truncation to the grid domain, projects g0 and integrates.
/// Throws RunAborted (with partial results) if integration fails.
SimulationOutcome simulate(const SimulationSetup& setup);

} // namespace collide
