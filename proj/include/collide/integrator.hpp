#pragma once

#include "collide/error.hpp"
#include "collide/grid.hpp"
#include "collide/operators.hpp"

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace collide {

enum class Method { RK4, Heun, Euler };

std::string to_string(Method method);
/// Convergence order of the one-step method.
int order(Method method);

struct TimeStepperConfig {
    Method method = Method::RK4;
    double dt_init = 1e-3;
    double dt_min = 1e-12;
    double dt_max = 0.25;
    double rel_tol = 1e-6;
    double abs_tol = 1e-12;
    double t_end = 1.0;
    std::vector<double> snapshot_times;
    /// false: fixed steps of dt_init, no error control
    bool adaptive = true;
    /// Mass removed by clipping negative cells, relative to M1, allowed per step.
    double clip_budget = 1e-10;
    std::size_t max_steps = 5'000'000;

    /// Throws ConfigError listing every violated invariant.
    void validate() const;
};

struct StepReport {
    double t = 0.0;
    double dt_used = 0.0;
    /// (M1(t) - M1(0)) / M1(0)
    double mass_drift = 0.0;
    std::size_t negativity_clips = 0;
    std::size_t rejected_steps = 0;
    double clipped_mass = 0.0;
};

struct MomentRecord {
    double t = 0.0;
    double m0 = 0.0;
    double m1 = 0.0;
    double m2 = 0.0;
    double norm_1plusz = 0.0;
    double mass_drift = 0.0;
    double dt = 0.0;
};

struct MomentSeries {
    std::vector<MomentRecord> rows;

    void record(const NumberDensity& g, double reference_mass, double dt);
    /// moments.csv with the versioned header comment
    void write_csv(std::ostream& out) const;
};

struct StepResult {
    NumberDensity state;
    StepReport report;
    /// Suggested size of the next step.
    double dt_next = 0.0;
};

/// Repeated rejection drove the step below dt_min. Carries the last
/// accepted state for diagnostics.
class StiffnessFailure : public Error {
public:
    StiffnessFailure(const std::string& what, NumberDensity state, double dt)
        : Error(what), state_(std::move(state)), dt_(dt) {}

    const NumberDensity& state() const noexcept { return state_; }
    double dt() const noexcept { return dt_; }

private:
    NumberDensity state_;
    double dt_;
};

/**
 * One accepted step of dg/dt = rhs(g) starting with trial size dt.
 *
 * Adaptive mode estimates the local error by step doubling and halves dt
 * until the estimate is within tolerance; accepted states are clipped at
 * zero and the step is also rejected if clipping would remove more than
 * clip_budget * M1. The returned state is the two-half-step solution.
 * reference_mass is M1(0) for the drift diagnostic.
 */
StepResult step(const NumberDensity& g, const OperatorWorkspace& ws, const TimeStepperConfig& cfg, double dt,
                double reference_mass);

struct RunResult {
    NumberDensity final_state;
    MomentSeries moments;
    std::vector<StepReport> steps;
    std::vector<NumberDensity> snapshots;
    std::vector<std::string> warnings;
};

/// Integration aborted; holds everything produced up to the failure.
class RunAborted : public Error {
public:
    RunAborted(const std::string& what, RunResult partial) : Error(what), partial_(std::move(partial)) {}
    const RunResult& partial() const noexcept { return partial_; }

private:
    RunResult partial_;
};

/**
 * Integrates from g0.time to cfg.t_end. Moments are recorded at the start
 * and after every accepted step; steps are shortened to land exactly on
 * snapshot times, and snapshots (including t = 0) are stored in order.
 * t_end == g0.time returns g0 unchanged with a single moment row.
 */
RunResult run(const NumberDensity& g0, const OperatorWorkspace& ws, const TimeStepperConfig& cfg);

} // namespace collide
