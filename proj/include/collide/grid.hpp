#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace collide {

enum class Spacing { Geometric, Uniform };

std::string to_string(Spacing spacing);

struct Cell {
    double lower = 0.0;
    double upper = 0.0;
    double pivot = 0.0;

    double width() const noexcept { return upper - lower; }
};

/**
 * Discretisation of the truncated volume domain (zmin, n).
 *
 * Edges are strictly increasing and the last upper edge equals n exactly.
 * Pivots are geometric means (Geometric) or midpoints (Uniform). The range
 * (0, zmin) has no cell of its own; mass that falls there is carried by the
 * first cell.
 */
class VolumeGrid {
public:
    static VolumeGrid build(double zmin, double n, std::size_t cell_count, Spacing spacing);

    std::size_t size() const noexcept { return cells_.size(); }
    std::span<const Cell> cells() const noexcept { return cells_; }
    const Cell& operator[](std::size_t i) const noexcept { return cells_[i]; }

    std::span<const double> pivots() const noexcept { return pivots_; }
    std::span<const double> widths() const noexcept { return widths_; }
    std::vector<double> edges() const;

    double zmin() const noexcept { return cells_.front().lower; }
    double domain_max() const noexcept { return cells_.back().upper; }
    Spacing spacing() const noexcept { return spacing_; }
    /// Edge ratio for geometric grids, 1 otherwise.
    double ratio() const noexcept { return ratio_; }

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
    /// Cell with lower <= z < upper, or npos outside [zmin, n).
    std::size_t locate(double z) const noexcept;

    bool operator==(const VolumeGrid& other) const noexcept;

private:
    VolumeGrid() = default;

    std::vector<Cell> cells_;
    std::vector<double> pivots_;
    std::vector<double> widths_;
    Spacing spacing_ = Spacing::Geometric;
    double ratio_ = 1.0;
};

using GridPtr = std::shared_ptr<const VolumeGrid>;

/// Cell values of g(z, t): density at the pivot (units 1/volume), zero
/// outside the grid.
struct NumberDensity {
    GridPtr grid;
    std::vector<double> values;
    double time = 0.0;

    NumberDensity() = default;
    explicit NumberDensity(GridPtr g, double t = 0.0);
    NumberDensity(GridPtr g, std::vector<double> v, double t = 0.0);

    std::size_t size() const noexcept { return values.size(); }
};

/// sum_i pivot_i^r values_i width_i
double moment(const NumberDensity& g, double r);

/// integral of (1 + z) g dz on the grid
double weighted_norm(const NumberDensity& g);

/// Exact integral of |a - b| over [max(zmin_a, zmin_b), min(upper, n_a, n_b)],
/// treating both densities as piecewise constant on their own cells.
double l1_distance(const NumberDensity& a, const NumberDensity& b, double upper);

// ---------------------------------------------------------------------------
// Initial conditions
// ---------------------------------------------------------------------------

/// amplitude * exp(-z / scale)
struct ExponentialInitial {
    double scale = 1.0;
    double amplitude = 1.0;
};

/// amplitude on [a, b]
struct UniformInitial {
    double a = 0.0;
    double b = 1.0;
    double amplitude = 1.0;
};

/// amplitude particles of volume z0 (a spike inside one cell)
struct MonodisperseInitial {
    double z0 = 1.0;
    double amplitude = 1.0;
};

/// (pivot, density) rows, e.g. a snapshot written by the CLI
struct TabulatedInitial {
    std::vector<double> pivots;
    std::vector<double> densities;
};

/// Arbitrary integrable density, projected by adaptive quadrature.
struct FunctionInitial {
    std::function<double(double)> density;
};

using InitialCondition =
    std::variant<ExponentialInitial, UniformInitial, MonodisperseInitial, TabulatedInitial, FunctionInitial>;

struct Projection {
    NumberDensity density;
    /// integral of z g0 over (0, zmin), folded into the first cell
    double unresolved_mass = 0.0;
    /// integral of z g0 over (0, n) that the projection represents
    double represented_mass = 0.0;
};

/**
 * Projects g0 restricted to (0, n) onto the grid.
 *
 * Each cell receives the value whose pivot-rule mass equals the exact mass
 * of g0 in that cell, so the first moment of the projection matches the
 * integral of z g0 over (0, n) to quadrature accuracy. The first cell also
 * absorbs (0, zmin). Throws DomainError when g0 has a nonfinite zeroth or
 * first moment on (0, n).
 */
Projection project_initial(const InitialCondition& g0, const GridPtr& grid);

} // namespace collide
