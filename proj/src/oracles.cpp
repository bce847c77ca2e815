#include "collide/oracles.hpp"

#include "collide/error.hpp"
#include "collide/operators.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>

namespace collide {

double smoluchowski_constant_analytic(double z, double t)
{
    if (!(t >= 0.0))
        throw DomainError(fmt::format("analytic solution needs t >= 0 (got {})", t));
    const double a = 2.0 / (2.0 + t);
    return a * a * std::exp(-a * z);
}

double smoluchowski_constant_cell_average(double a, double b, double t)
{
    if (!(t >= 0.0))
        throw DomainError(fmt::format("analytic solution needs t >= 0 (got {})", t));
    const double c = 2.0 / (2.0 + t);
    // integral of c^2 exp(-c z) over [a, b] is c (exp(-c a) - exp(-c b))
    return c * (std::exp(-c * a) - std::exp(-c * b)) / (b - a);
}

double smoluchowski_constant_l1_error(const NumberDensity& g, double t)
{
    double diff = 0.0;
    double norm = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
        const Cell& cell = (*g.grid)[k];
        const double exact = smoluchowski_constant_cell_average(cell.lower, cell.upper, t);
        diff += std::abs(g.values[k] - exact) * cell.width();
        norm += exact * cell.width();
    }
    return diff / norm;
}

// ---------------------------------------------------------------------------

namespace {

// Number weight that a particle of volume v contributes to pivot k.
double split_weight(double v, std::size_t k, std::span<const double> x)
{
    const std::size_t last = x.size() - 1;
    if (v >= x[last])
        return k == last ? v / x[last] : 0.0;
    for (std::size_t j = 0; j < last; ++j) {
        if (x[j] <= v && v < x[j + 1]) {
            if (k == j)
                return (x[j + 1] - v) / (x[j + 1] - x[j]);
            if (k == j + 1)
                return (v - x[j]) / (x[j + 1] - x[j]);
            return 0.0;
        }
    }
    return 0.0;
}

// Expected fragment count at every pivot for a parent pair of volume s.
std::vector<double> reference_fragments(const BreakupDistribution& breakup, const VolumeGrid& grid, double s)
{
    const auto x = grid.pivots();
    const std::size_t cells = x.size();
    const std::size_t last = cells - 1;
    std::vector<double> counts(cells, 0.0), masses(cells, 0.0);
    for (std::size_t k = 0; k < cells; ++k) {
        const double a = k == 0 ? 0.0 : grid[k].lower;
        counts[k] = breakup.count_on(a, grid[k].upper, s);
        masses[k] = breakup.mass_on(a, grid[k].upper, s);
    }

    std::vector<double> w(cells, 0.0);
    double low_surplus = 0.0;
    double high_surplus = 0.0;
    for (std::size_t k = 0; k < cells; ++k) {
        if (!(counts[k] > 0.0))
            continue;
        const double mean = masses[k] / counts[k];
        if (mean < x[0]) {
            w[0] += counts[k];
            low_surplus += counts[k] * x[0] - masses[k];
        } else if (mean >= x[last]) {
            w[last] += masses[k] / x[last];
            high_surplus += masses[k] / x[last] - counts[k];
        } else {
            for (std::size_t t = 0; t < cells; ++t)
                w[t] += counts[k] * split_weight(mean, t, x);
        }
    }

    if (low_surplus > 0.0) {
        // Smallest prefix 1..J whose downward shift absorbs the surplus.
        double absorbed = 0.0;
        std::size_t j = 1;
        for (; j < cells; ++j) {
            const double capacity = w[j] * (x[j] - x[0]);
            if (absorbed + capacity >= low_surplus)
                break;
            absorbed += capacity;
        }
        if (j == cells && low_surplus - absorbed > 1e-13 * s) {
            std::vector<double> lumped(cells, 0.0);
            lumped[0] = s / x[0];
            return lumped;
        }
        for (std::size_t t = 1; t < std::min(j, cells); ++t) {
            w[0] += w[t];
            w[t] = 0.0;
        }
        if (j < cells) {
            const double moved = std::min(w[j], (low_surplus - absorbed) / (x[j] - x[0]));
            w[j] -= moved;
            w[0] += moved;
        }
    }

    if (high_surplus > 0.0) {
        double removed = 0.0;
        for (std::size_t j = last; j-- > 0 && removed < high_surplus;) {
            const double factor = 1.0 - x[j] / x[last];
            const double moved = std::min(w[j], (high_surplus - removed) / factor);
            w[j] -= moved;
            w[last] += moved * x[j] / x[last];
            removed += moved * factor;
        }
    }
    return w;
}

} // namespace

BruteForceTerms brute_force_terms(const NumberDensity& g, const Model& model)
{
    const VolumeGrid& grid = *g.grid;
    const std::size_t cells = grid.size();
    if (cells > kBruteForceMaxCells)
        throw ContractViolation(
            fmt::format("brute_force_rhs refuses {} cells (limit {})", cells, kBruteForceMaxCells));
    const auto x = grid.pivots();
    const auto w = grid.widths();
    const double n = grid.domain_max();
    const CollisionKernel kernel = model.kernel.with_truncation(std::min(model.kernel.truncation_n(), n));

    BruteForceTerms out{std::vector<double>(cells, 0.0), std::vector<double>(cells, 0.0),
                        std::vector<double>(cells, 0.0)};
    for (std::size_t k = 0; k < cells; ++k) {
        double gain = 0.0;
        double fragments = 0.0;
        double loss_sum = 0.0;
        for (std::size_t i = 0; i < cells; ++i) {
            for (std::size_t j = 0; j < cells; ++j) {
                const double s = x[i] + x[j];
                if (s >= n)
                    continue;
                const double phi = kernel.evaluate_truncated(x[i], x[j]);
                const double e = model.probability.evaluate(x[i], x[j]);
                const double pair = phi * g.values[i] * w[i] * g.values[j] * w[j];
                gain += 0.5 * e * pair * split_weight(s, k, x);
                if (e < 1.0 && phi > 0.0)
                    fragments += 0.5 * (1.0 - e) * pair * reference_fragments(model.breakup, grid, s)[k];
            }
        }
        for (std::size_t j = 0; j < cells; ++j)
            if (x[k] + x[j] < n)
                loss_sum += kernel.evaluate_truncated(x[k], x[j]) * g.values[j] * w[j];
        out.coagulation_gain[k] = gain / w[k];
        out.collision_loss[k] = g.values[k] * loss_sum;
        out.breakage_gain[k] = fragments / w[k];
    }
    return out;
}

std::vector<double> brute_force_rhs(const NumberDensity& g, const Model& model)
{
    const BruteForceTerms t = brute_force_terms(g, model);
    std::vector<double> out(t.coagulation_gain.size());
    for (std::size_t k = 0; k < out.size(); ++k)
        out[k] = (t.coagulation_gain[k] - t.collision_loss[k]) + t.breakage_gain[k];
    return out;
}

// ---------------------------------------------------------------------------

ConvergenceStudy truncation_convergence_study(const SimulationSetup& base, std::vector<double> n_values)
{
    if (n_values.empty())
        throw ContractViolation("truncation study needs at least one n");
    std::sort(n_values.begin(), n_values.end());
    const double n_min = n_values.front();
    const GridSpec& spec = base.grid;
    if (!(spec.zmin > 0.0) || !(spec.zmin < n_min))
        throw ConfigError(fmt::format("truncation study needs 0 < grid.zmin < smallest n (got zmin={}, n={})", spec.zmin, n_min));

    // Common zmin and edge lattice for all truncations.
    double zmin = spec.zmin;
    double ratio_log = 0.0;
    double uniform_h = 0.0;
    if (spec.spacing == Spacing::Geometric) {
        const double base_log = std::log(spec.n / spec.zmin) / static_cast<double>(spec.cells);
        const double per_octave = std::max(1.0, std::round(std::log(2.0) / base_log));
        ratio_log = std::log(2.0) / per_octave;
        zmin = n_min / std::exp2(std::round(std::log2(n_min / spec.zmin)));
    } else {
        uniform_h = (spec.n - spec.zmin) / static_cast<double>(spec.cells);
    }

    SimulationSetup setup = base;
    setup.time.adaptive = false;
    setup.time.snapshot_times.clear();

    std::vector<NumberDensity> finals;
    ConvergenceStudy study;
    for (double n : n_values) {
        GridSpec g = spec;
        g.zmin = zmin;
        g.n = n;
        if (spec.spacing == Spacing::Geometric)
            g.cells = static_cast<std::size_t>(std::max(2.0, std::round(std::log(n / zmin) / ratio_log)));
        else
            g.cells = static_cast<std::size_t>(std::max(2.0, std::round((n - zmin) / uniform_h)));
        setup.grid = g;
        setup.model.kernel = base.model.kernel.with_truncation(n);
        SimulationOutcome outcome = simulate(setup);
        finals.push_back(std::move(outcome.run.final_state));
        study.rows.push_back(ConvergenceRow{n, g.cells, 0.0});
    }

    study.reference_n = n_values.back();
    study.overlap_upper = n_min;
    const NumberDensity& reference = finals.back();
    for (std::size_t r = 0; r < finals.size(); ++r)
        study.rows[r].l1_distance = l1_distance(finals[r], reference, study.rows[r].n);

    for (std::size_t r = 1; r + 1 < study.rows.size(); ++r) {
        if (study.rows[r].l1_distance > study.rows[r - 1].l1_distance)
            study.monotone = false;
        if (!(study.rows[r].l1_distance < study.rows[r - 1].l1_distance))
            study.strictly_decreasing = false;
    }
    return study;
}

// ---------------------------------------------------------------------------

std::string to_string(ReferenceKind kind)
{
    switch (kind) {
    case ReferenceKind::AnalyticClosedForm:
        return "analytic_closed_form";
    case ReferenceKind::RefinedSelfConvergence:
        return "refined_self_convergence";
    case ReferenceKind::BruteForceSmallGrid:
        return "brute_force_small_grid";
    }
    return "unknown";
}

namespace {

OracleOutcome evaluate_analytic(const OracleCase& oracle)
{
    OracleOutcome out{oracle.name, oracle.reference, {}, false, {}};
    const SimulationOutcome sim = simulate(oracle.setup);
    const NumberDensity& g = sim.run.final_state;
    const double t = g.time;
    const double l1 = smoluchowski_constant_l1_error(g, t);
    const double m0_exact = 2.0 / (2.0 + t);
    const double m0_error = std::abs(moment(g, 0.0) - m0_exact) / m0_exact;
    const double cells = static_cast<double>(g.size());
    out.metrics.push_back({cells, "l1_relative_error", l1});
    out.metrics.push_back({cells, "m0_relative_error", m0_error});
    out.metrics.push_back({cells, "mass_drift", sim.run.moments.rows.back().mass_drift});
    out.passed = l1 <= oracle.tolerance && m0_error <= oracle.m0_tolerance;
    out.summary = fmt::format("L1 error {:.3e} (tol {:.1e}), M0 error {:.3e} (tol {:.1e}) at t={}", l1, oracle.tolerance,
                              m0_error, oracle.m0_tolerance, t);
    return out;
}

OracleOutcome evaluate_self_convergence(const OracleCase& oracle)
{
    OracleOutcome out{oracle.name, oracle.reference, {}, false, {}};
    const ConvergenceStudy study = truncation_convergence_study(oracle.setup, oracle.n_values);
    for (const auto& row : study.rows)
        out.metrics.push_back({row.n, "l1_distance", row.l1_distance});
    out.passed = study.strictly_decreasing;
    out.summary = fmt::format("reference n={}, overlap (zmin, {}), strictly decreasing: {}", study.reference_n,
                              study.overlap_upper, study.strictly_decreasing ? "yes" : "no");
    return out;
}

double relative_discrepancy(const std::vector<double>& fast, const std::vector<double>& slow)
{
    double scale = 0.0;
    double diff = 0.0;
    for (std::size_t k = 0; k < slow.size(); ++k) {
        scale = std::max(scale, std::abs(slow[k]));
        diff = std::max(diff, std::abs(fast[k] - slow[k]));
    }
    return scale > 0.0 ? diff / scale : diff;
}

OracleOutcome evaluate_brute_force(const OracleCase& oracle)
{
    OracleOutcome out{oracle.name, oracle.reference, {}, false, {}};
    std::mt19937_64 rng(oracle.seed);
    std::uniform_int_distribution<std::size_t> cell_count(2, kBruteForceMaxCells);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double worst = 0.0;
    for (std::size_t r = 0; r < oracle.random_states; ++r) {
        const std::size_t cells = cell_count(rng);
        const double n = oracle.setup.grid.n;
        const double zmin = n * std::pow(10.0, -1.0 - 2.0 * unit(rng));
        const Spacing spacing = unit(rng) < 0.5 ? Spacing::Geometric : Spacing::Uniform;
        const GridPtr grid = std::make_shared<const VolumeGrid>(VolumeGrid::build(zmin, n, cells, spacing));
        NumberDensity g(grid);
        for (auto& v : g.values)
            v = unit(rng) < 0.15 ? 0.0 : unit(rng) * 10.0;
        const OperatorWorkspace ws(grid, oracle.setup.model);
        const BruteForceTerms slow = brute_force_terms(g, oracle.setup.model);
        // operator by operator: each is a sum of nonnegative terms, unlike the rhs
        worst = std::max(worst, relative_discrepancy(ws.coagulation_gain(g), slow.coagulation_gain));
        worst = std::max(worst, relative_discrepancy(ws.collision_loss(g), slow.collision_loss));
        worst = std::max(worst, relative_discrepancy(ws.breakage_gain(g), slow.breakage_gain));
    }
    out.metrics.push_back({static_cast<double>(kBruteForceMaxCells), "max_relative_discrepancy", worst});
    out.passed = worst <= oracle.tolerance;
    out.summary = fmt::format("{} random states, max per-operator relative discrepancy {:.3e} (tol {:.1e})", oracle.random_states,
                              worst, oracle.tolerance);
    return out;
}

} // namespace

OracleOutcome evaluate_oracle(const OracleCase& oracle)
{
    switch (oracle.reference) {
    case ReferenceKind::AnalyticClosedForm:
        return evaluate_analytic(oracle);
    case ReferenceKind::RefinedSelfConvergence:
        return evaluate_self_convergence(oracle);
    case ReferenceKind::BruteForceSmallGrid:
        return evaluate_brute_force(oracle);
    }
    throw ContractViolation("unknown oracle reference kind");
}

void write_oracle_csv(std::ostream& out, const std::vector<OracleOutcome>& outcomes)
{
    fmt::print(out, "# collide-pbe v1\n");
    fmt::print(out, "case,size,metric,value\n");
    for (const auto& o : outcomes)
        for (const auto& m : o.metrics)
            fmt::print(out, "{},{:g},{},{:.17g}\n", o.name, m.size, m.metric, m.value);
}

} // namespace collide
