#include "collide/simulation.hpp"

#include "collide/operators.hpp"

#include <algorithm>

namespace collide {

GridPtr GridSpec::build() const
{
    return std::make_shared<const VolumeGrid>(VolumeGrid::build(zmin, n, cells, spacing));
}

SimulationOutcome simulate(const SimulationSetup& setup)
{
    const GridPtr grid = setup.grid.build();
    Model model = setup.model;
    model.kernel = model.kernel.with_truncation(std::min(model.kernel.truncation_n(), grid->domain_max()));
    const OperatorWorkspace ws(grid, std::move(model), setup.threads);
    SimulationOutcome out{project_initial(setup.initial, grid), {}};
    out.run = run(out.projection.density, ws, setup.time);
    return out;
}

} // namespace collide
