#pragma once

#include "collide/grid.hpp"
#include "collide/kernels.hpp"
#include "collide/simulation.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace collide {

/// Exact solution of pure coagulation with unit constant kernel from
/// g0 = exp(-z): (2/(2+t))^2 exp(-2z/(2+t)).
double smoluchowski_constant_analytic(double z, double t);

/// Cell average of the closed form above over [a, b].
double smoluchowski_constant_cell_average(double a, double b, double t);

/// sum |g_k - avg_k| w_k / sum avg_k w_k against the closed form at time t.
double smoluchowski_constant_l1_error(const NumberDensity& g, double t);

inline constexpr std::size_t kBruteForceMaxCells = 5;

/**
 * Direct evaluation of C1 - B3 + B1 by nested sums over child and parent
 * cells, with the kernel, probability and fragment redistribution evaluated
 * inside the loops. Shares no tables with OperatorWorkspace. Refuses grids
 * with more than kBruteForceMaxCells cells.
 */
std::vector<double> brute_force_rhs(const NumberDensity& g, const Model& model);

struct BruteForceTerms {
    std::vector<double> coagulation_gain;
    std::vector<double> collision_loss;
    std::vector<double> breakage_gain;
};

/// The three operators of brute_force_rhs, kept apart.
BruteForceTerms brute_force_terms(const NumberDensity& g, const Model& model);

struct ConvergenceRow {
    double n = 0.0;
    std::size_t cells = 0;
    double l1_distance = 0.0;
};

struct ConvergenceStudy {
    std::vector<ConvergenceRow> rows;
    double reference_n = 0.0;
    double overlap_upper = 0.0;
    /// distances nonincreasing in n
    bool monotone = true;
    bool strictly_decreasing = true;
};

/**
 * Runs base at every truncation n and measures the L1 distance of the final
 * state on (zmin, n) to the run with the largest n.
 *
 * Grids share zmin and edge ratio: geometric grids use a ratio of
 * 2^(1/m), with m chosen closest to the base grid, so truncations that
 * differ by powers of two have identical cells on their overlap. Every run
 * takes fixed steps of base.time.dt_init so the time discretisation is the
 * same for all n.
 */
ConvergenceStudy truncation_convergence_study(const SimulationSetup& base, std::vector<double> n_values);

enum class ReferenceKind { AnalyticClosedForm, RefinedSelfConvergence, BruteForceSmallGrid };

std::string to_string(ReferenceKind kind);

struct OracleCase {
    std::string name;
    SimulationSetup setup;
    ReferenceKind reference = ReferenceKind::AnalyticClosedForm;
    /// Bound on the primary metric: relative L1 error, max relative
    /// discrepancy, or (for self-convergence) the finest distance.
    double tolerance = 2e-2;
    /// AnalyticClosedForm: bound on |M0 - 2/(2+t)| / (2/(2+t)).
    double m0_tolerance = 1e-2;
    std::vector<double> n_values{10.0, 20.0, 40.0, 80.0};
    std::size_t random_states = 100;
    std::uint64_t seed = 7;
};

struct OracleMetric {
    /// n for truncation studies, cell count otherwise
    double size = 0.0;
    std::string metric;
    double value = 0.0;
};

struct OracleOutcome {
    std::string name;
    ReferenceKind reference = ReferenceKind::AnalyticClosedForm;
    std::vector<OracleMetric> metrics;
    bool passed = false;
    std::string summary;
};

OracleOutcome evaluate_oracle(const OracleCase& oracle);

/// CSV rows (case, n or cells, metric, value)
void write_oracle_csv(std::ostream& out, const std::vector<OracleOutcome>& outcomes);

} // namespace collide
