#include "collide/integrator.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <cmath>
#include <ostream>

namespace collide {

std::string to_string(Method method)
{
    switch (method) {
    case Method::RK4:
        return "rk4";
    case Method::Heun:
        return "heun";
    case Method::Euler:
        return "euler";
    }
    return "unknown";
}

int order(Method method)
{
    switch (method) {
    case Method::RK4:
        return 4;
    case Method::Heun:
        return 2;
    case Method::Euler:
        return 1;
    }
    return 1;
}

void TimeStepperConfig::validate() const
{
    std::vector<std::string> problems;
    if (!(dt_min > 0.0))
        problems.push_back(fmt::format("time.dt_min must be positive (got {})", dt_min));
    if (!(dt_init >= dt_min))
        problems.push_back(fmt::format("time.dt_init must be >= time.dt_min (got {} < {})", dt_init, dt_min));
    if (!(dt_max >= dt_init))
        problems.push_back(fmt::format("time.dt_max must be >= time.dt_init (got {} < {})", dt_max, dt_init));
    if (!(rel_tol > 0.0))
        problems.push_back(fmt::format("time.rel_tol must be positive (got {})", rel_tol));
    if (!(abs_tol >= 0.0))
        problems.push_back(fmt::format("time.abs_tol must be nonnegative (got {})", abs_tol));
    if (!(t_end >= 0.0) || !std::isfinite(t_end))
        problems.push_back(fmt::format("time.t_end must be finite and nonnegative (got {})", t_end));
    if (!(clip_budget >= 0.0))
        problems.push_back(fmt::format("clip budget must be nonnegative (got {})", clip_budget));
    for (double s : snapshot_times)
        if (!(s >= 0.0) || !std::isfinite(s))
            problems.push_back(fmt::format("time.snapshots entries must be finite and nonnegative (got {})", s));
    if (!problems.empty())
        throw ConfigError(std::move(problems));
}

// ---------------------------------------------------------------------------

void MomentSeries::record(const NumberDensity& g, double reference_mass, double dt)
{
    MomentRecord row;
    row.t = g.time;
    row.m0 = moment(g, 0.0);
    row.m1 = moment(g, 1.0);
    row.m2 = moment(g, 2.0);
    row.norm_1plusz = weighted_norm(g);
    row.mass_drift = reference_mass > 0.0 ? (row.m1 - reference_mass) / reference_mass : 0.0;
    row.dt = dt;
    rows.push_back(row);
}

void MomentSeries::write_csv(std::ostream& out) const
{
    fmt::print(out, "# collide-pbe v1\n");
    fmt::print(out, "t,M0,M1,M2,norm_1plusz,mass_drift,dt\n");
    for (const auto& r : rows)
        fmt::print(out, "{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", r.t, r.m0, r.m1, r.m2,
                   r.norm_1plusz, r.mass_drift, r.dt);
}

// ---------------------------------------------------------------------------

namespace {

class OneStep {
public:
    OneStep(const OperatorWorkspace& ws, Method method)
        : ws_(ws), method_(method), n_(ws.grid()->size()), k1_(n_), k2_(n_), k3_(n_), k4_(n_), tmp_(n_)
    {
    }

    /// y + dt * increment, with f(y) supplied by the caller.
    void advance(std::span<const double> y, std::span<const double> fy, double dt, std::span<double> out)
    {
        switch (method_) {
        case Method::Euler:
            for (std::size_t i = 0; i < n_; ++i)
                out[i] = y[i] + dt * fy[i];
            break;
        case Method::Heun:
            for (std::size_t i = 0; i < n_; ++i)
                tmp_[i] = y[i] + dt * fy[i];
            ws_.rhs_into(tmp_, k2_);
            for (std::size_t i = 0; i < n_; ++i)
                out[i] = y[i] + 0.5 * dt * (fy[i] + k2_[i]);
            break;
        case Method::RK4:
            for (std::size_t i = 0; i < n_; ++i)
                tmp_[i] = y[i] + 0.5 * dt * fy[i];
            ws_.rhs_into(tmp_, k2_);
            for (std::size_t i = 0; i < n_; ++i)
                tmp_[i] = y[i] + 0.5 * dt * k2_[i];
            ws_.rhs_into(tmp_, k3_);
            for (std::size_t i = 0; i < n_; ++i)
                tmp_[i] = y[i] + dt * k3_[i];
            ws_.rhs_into(tmp_, k4_);
            for (std::size_t i = 0; i < n_; ++i)
                out[i] = y[i] + dt / 6.0 * (fy[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]);
            break;
        }
    }

    void derivative(std::span<const double> y, std::span<double> out) { ws_.rhs_into(y, out); }

private:
    const OperatorWorkspace& ws_;
    Method method_;
    std::size_t n_;
    std::vector<double> k1_, k2_, k3_, k4_, tmp_;
};

} // namespace

StepResult step(const NumberDensity& g, const OperatorWorkspace& ws, const TimeStepperConfig& cfg, double dt,
                double reference_mass)
{
    const std::size_t n = g.values.size();
    if (g.grid != ws.grid() && !(*g.grid == *ws.grid()))
        throw ContractViolation("step: state and workspace use different grids");
    if (!(dt > 0.0))
        throw ContractViolation(fmt::format("step: dt must be positive (got {})", dt));

    const auto pivots = g.grid->pivots();
    const auto widths = g.grid->widths();
    const double mass_before = moment(g, 1.0);
    const int p = order(cfg.method);

    OneStep stepper(ws, cfg.method);
    std::vector<double> f0(n), full(n), half(n), f_half(n), candidate(n);
    stepper.derivative(g.values, f0);

    StepReport report;
    double error_norm = 0.0;
    for (;;) {
        bool accept = true;
        if (cfg.adaptive) {
            stepper.advance(g.values, f0, dt, full);
            stepper.advance(g.values, f0, 0.5 * dt, half);
            stepper.derivative(half, f_half);
            stepper.advance(half, f_half, 0.5 * dt, candidate);
            const double scale = std::pow(2.0, p) - 1.0;
            error_norm = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double err = std::abs(candidate[i] - full[i]) / scale;
                const double tol = cfg.abs_tol + cfg.rel_tol * std::max(std::abs(g.values[i]), std::abs(candidate[i]));
                const double ratio = err / tol;
                if (!std::isfinite(ratio)) {
                    error_norm = kInfinite;
                    break;
                }
                error_norm = std::max(error_norm, ratio);
            }
            accept = error_norm <= 1.0;
        } else {
            stepper.advance(g.values, f0, dt, candidate);
            for (double v : candidate)
                if (!std::isfinite(v))
                    throw StiffnessFailure(fmt::format("fixed step of {} produced a nonfinite state at t={}", dt, g.time),
                                           g, dt);
        }

        double clipped = 0.0;
        std::size_t clips = 0;
        if (accept) {
            for (std::size_t i = 0; i < n; ++i) {
                if (candidate[i] < 0.0) {
                    clipped += -candidate[i] * pivots[i] * widths[i];
                    ++clips;
                }
            }
            if (clipped > cfg.clip_budget * mass_before) {
                accept = false;
                if (!cfg.adaptive)
                    throw StiffnessFailure(fmt::format("fixed step of {} at t={} would clip mass {:.3e} (budget {:.3e})", dt,
                                                       g.time, clipped, cfg.clip_budget * mass_before),
                                           g, dt);
            }
        }

        if (accept) {
            for (auto& v : candidate)
                v = std::max(v, 0.0);
            report.dt_used = dt;
            report.negativity_clips = clips;
            report.clipped_mass = clipped;
            break;
        }

        ++report.rejected_steps;
        dt *= 0.5;
        if (dt < cfg.dt_min)
            throw StiffnessFailure(fmt::format("step size fell below dt_min={} at t={} after {} rejections "
                                               "(error norm {:.3e})",
                                               cfg.dt_min, g.time, report.rejected_steps, error_norm),
                                   g, dt);
    }

    StepResult result{NumberDensity(g.grid, std::move(candidate), g.time + report.dt_used), report, cfg.dt_init};
    result.report.t = result.state.time;
    const double mass_after = moment(result.state, 1.0);
    result.report.mass_drift = reference_mass > 0.0 ? (mass_after - reference_mass) / reference_mass : 0.0;
    if (cfg.adaptive) {
        const double growth = error_norm == 0.0 ? 2.0 : std::clamp(0.9 * std::pow(error_norm, -1.0 / (p + 1)), 0.2, 2.0);
        result.dt_next = std::clamp(report.dt_used * growth, cfg.dt_min, cfg.dt_max);
    }
    return result;
}

// ---------------------------------------------------------------------------

namespace {

// Flags runs where the (1+z)-weighted norm grows faster late in the run
// than early on, i.e. faster than any single exponential fit.
void check_growth(const MomentSeries& series, std::vector<std::string>& warnings)
{
    const auto& rows = series.rows;
    if (rows.size() < 8)
        return;
    const std::size_t q = rows.size() / 4;
    auto rate = [&](std::size_t a, std::size_t b) {
        const double dt = rows[b].t - rows[a].t;
        if (!(dt > 0.0) || !(rows[a].norm_1plusz > 0.0) || !(rows[b].norm_1plusz > 0.0))
            return 0.0;
        return (std::log(rows[b].norm_1plusz) - std::log(rows[a].norm_1plusz)) / dt;
    };
    const double early = rate(0, q);
    const double late = rate(rows.size() - 1 - q, rows.size() - 1);
    if (late > 1e-8 && late > 2.0 * std::max(early, 0.0))
        warnings.push_back(fmt::format("norm_1plusz grows super-exponentially (early rate {:.3e}, late rate {:.3e})",
                                       early, late));
}

} // namespace

RunResult run(const NumberDensity& g0, const OperatorWorkspace& ws, const TimeStepperConfig& cfg)
{
    cfg.validate();
    RunResult result;
    result.final_state = g0;
    const double reference_mass = moment(g0, 1.0);
    result.moments.record(g0, reference_mass, 0.0);

    std::vector<double> targets;
    for (double s : cfg.snapshot_times) {
        if (s <= g0.time)
            result.snapshots.push_back(g0);
        else if (s <= cfg.t_end)
            targets.push_back(s);
    }
    std::sort(targets.begin(), targets.end());
    targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
    std::size_t next_target = 0;

    double dt = cfg.dt_init;
    NumberDensity state = g0;
    try {
        while (state.time < cfg.t_end) {
            if (result.steps.size() >= cfg.max_steps)
                throw StiffnessFailure(fmt::format("exceeded {} steps before t_end", cfg.max_steps), state, dt);
            const bool to_snapshot = next_target < targets.size();
            const double target = to_snapshot ? targets[next_target] : cfg.t_end;
            const double remaining = target - state.time;
            const bool truncated = dt >= remaining;
            const double h = truncated ? remaining : dt;

            StepResult s = step(state, ws, cfg, h, reference_mass);
            const bool landed = truncated && s.report.dt_used == h;
            if (landed) {
                s.state.time = target;
                s.report.t = target;
            }
            state = std::move(s.state);
            result.steps.push_back(s.report);
            result.moments.record(state, reference_mass, s.report.dt_used);

            if (landed && to_snapshot) {
                result.snapshots.push_back(state);
                ++next_target;
            }
            dt = (landed && s.report.rejected_steps == 0) ? std::max(dt, s.dt_next) : s.dt_next;
            if (!cfg.adaptive)
                dt = cfg.dt_init;
        }
    } catch (const StiffnessFailure& failure) {
        result.final_state = failure.state();
        throw RunAborted(failure.what(), std::move(result));
    }

    result.final_state = std::move(state);
    check_growth(result.moments, result.warnings);
    const double drift = result.moments.rows.back().mass_drift;
    if (std::abs(drift) > 1e-6)
        result.warnings.push_back(fmt::format("relative mass drift {:.3e} exceeds 1e-6 (clipping or gelation)", drift));
    return result;
}

} // namespace collide
