#include "collide/grid.hpp"

#include "collide/detail/overloaded.hpp"
#include "collide/error.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace collide {

using detail::overloaded;

std::string to_string(Spacing spacing)
{
    return spacing == Spacing::Geometric ? "geometric" : "uniform";
}

VolumeGrid VolumeGrid::build(double zmin, double n, std::size_t cell_count, Spacing spacing)
{
    std::vector<std::string> problems;
    if (!(zmin > 0.0) || !std::isfinite(zmin))
        problems.push_back(fmt::format("grid.zmin must be positive and finite (got {})", zmin));
    if (!(n > zmin) || !std::isfinite(n))
        problems.push_back(fmt::format("grid.n must be finite and exceed grid.zmin (got zmin={}, n={})", zmin, n));
    if (cell_count < 2)
        problems.push_back(fmt::format("grid.cells must be at least 2 (got {})", cell_count));
    if (!problems.empty())
        throw ConfigError(std::move(problems));

    std::vector<double> edges(cell_count + 1);
    VolumeGrid grid;
    grid.spacing_ = spacing;
    if (spacing == Spacing::Geometric) {
        const double log_ratio = std::log(n / zmin) / static_cast<double>(cell_count);
        grid.ratio_ = std::exp(log_ratio);
        for (std::size_t i = 0; i <= cell_count; ++i)
            edges[i] = zmin * std::exp(log_ratio * static_cast<double>(i));
    } else {
        const double h = (n - zmin) / static_cast<double>(cell_count);
        for (std::size_t i = 0; i <= cell_count; ++i)
            edges[i] = zmin + h * static_cast<double>(i);
    }
    edges.front() = zmin;
    edges.back() = n;

    grid.cells_.reserve(cell_count);
    for (std::size_t i = 0; i < cell_count; ++i) {
        const double lo = edges[i];
        const double hi = edges[i + 1];
        if (!(hi > lo))
            throw ConfigError(fmt::format("grid edges are not strictly increasing at cell {} (too many cells?)", i));
        const double pivot = spacing == Spacing::Geometric ? std::sqrt(lo * hi) : 0.5 * (lo + hi);
        grid.cells_.push_back(Cell{lo, hi, pivot});
        grid.pivots_.push_back(pivot);
        grid.widths_.push_back(hi - lo);
    }
    return grid;
}

std::vector<double> VolumeGrid::edges() const
{
    std::vector<double> out;
    out.reserve(cells_.size() + 1);
    for (const auto& c : cells_)
        out.push_back(c.lower);
    out.push_back(cells_.back().upper);
    return out;
}

std::size_t VolumeGrid::locate(double z) const noexcept
{
    if (!(z >= zmin()) || !(z < domain_max()))
        return npos;
    const auto it = std::upper_bound(cells_.begin(), cells_.end(), z,
                                     [](double value, const Cell& c) { return value < c.lower; });
    return static_cast<std::size_t>(it - cells_.begin()) - 1;
}

bool VolumeGrid::operator==(const VolumeGrid& other) const noexcept
{
    if (cells_.size() != other.cells_.size() || spacing_ != other.spacing_)
        return false;
    for (std::size_t i = 0; i < cells_.size(); ++i)
        if (cells_[i].lower != other.cells_[i].lower || cells_[i].upper != other.cells_[i].upper)
            return false;
    return true;
}

// ---------------------------------------------------------------------------

NumberDensity::NumberDensity(GridPtr g, double t) : grid(std::move(g)), values(grid->size(), 0.0), time(t) {}

NumberDensity::NumberDensity(GridPtr g, std::vector<double> v, double t)
    : grid(std::move(g)), values(std::move(v)), time(t)
{
    if (values.size() != grid->size())
        throw ContractViolation(
            fmt::format("density has {} values but the grid has {} cells", values.size(), grid->size()));
}

double moment(const NumberDensity& g, double r)
{
    if (!(r >= 0.0))
        throw DomainError(fmt::format("moment order must be nonnegative (got {})", r));
    const auto pivots = g.grid->pivots();
    const auto widths = g.grid->widths();
    double sum = 0.0;
    for (std::size_t i = 0; i < g.values.size(); ++i) {
        const double weight = (r == 0.0) ? 1.0 : (r == 1.0 ? pivots[i] : std::pow(pivots[i], r));
        sum += weight * g.values[i] * widths[i];
    }
    return sum;
}

double weighted_norm(const NumberDensity& g)
{
    const auto pivots = g.grid->pivots();
    const auto widths = g.grid->widths();
    double sum = 0.0;
    for (std::size_t i = 0; i < g.values.size(); ++i)
        sum += (1.0 + pivots[i]) * std::abs(g.values[i]) * widths[i];
    return sum;
}

double l1_distance(const NumberDensity& a, const NumberDensity& b, double upper)
{
    const VolumeGrid& ga = *a.grid;
    const VolumeGrid& gb = *b.grid;
    const double lo = std::max(ga.zmin(), gb.zmin());
    const double hi = std::min({upper, ga.domain_max(), gb.domain_max()});
    if (!(hi > lo))
        return 0.0;

    std::vector<double> breaks;
    for (double e : ga.edges())
        if (e > lo && e < hi)
            breaks.push_back(e);
    for (double e : gb.edges())
        if (e > lo && e < hi)
            breaks.push_back(e);
    breaks.push_back(lo);
    breaks.push_back(hi);
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

    double total = 0.0;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        const double mid = 0.5 * (breaks[i] + breaks[i + 1]);
        const std::size_t ia = ga.locate(mid);
        const std::size_t ib = gb.locate(mid);
        const double va = ia == VolumeGrid::npos ? 0.0 : a.values[ia];
        const double vb = ib == VolumeGrid::npos ? 0.0 : b.values[ib];
        total += std::abs(va - vb) * (breaks[i + 1] - breaks[i]);
    }
    return total;
}

// ---------------------------------------------------------------------------

namespace {

// Per-cell mass of g0 (first cell integrated from 0).
struct CellMasses {
    std::vector<double> mass;
    double unresolved = 0.0;
};

CellMasses exponential_masses(const ExponentialInitial& ic, const VolumeGrid& grid)
{
    if (!(ic.scale > 0.0) || !std::isfinite(ic.scale) || !(ic.amplitude >= 0.0) || !std::isfinite(ic.amplitude))
        throw DomainError(fmt::format("exponential initial condition needs scale > 0 and amplitude >= 0 (got {}, {})",
                                      ic.scale, ic.amplitude));
    const double lambda = ic.scale;
    // antiderivative of z A exp(-z/lambda), shifted so that F(0) = 0
    auto F = [&](double z) { return ic.amplitude * lambda * (lambda - std::exp(-z / lambda) * (z + lambda)); };
    CellMasses out;
    out.mass.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double a = (i == 0) ? 0.0 : grid[i].lower;
        out.mass[i] = F(grid[i].upper) - F(a);
    }
    out.unresolved = F(grid.zmin());
    return out;
}

CellMasses uniform_masses(const UniformInitial& ic, const VolumeGrid& grid)
{
    if (!(ic.b > ic.a) || !(ic.a >= 0.0) || !(ic.amplitude >= 0.0) || !std::isfinite(ic.b) || !std::isfinite(ic.amplitude))
        throw DomainError(fmt::format("uniform initial condition needs 0 <= a < b and amplitude >= 0 (got a={}, b={}, amplitude={})",
                                      ic.a, ic.b, ic.amplitude));
    auto mass_between = [&](double lo, double hi) {
        lo = std::max(lo, ic.a);
        hi = std::min(hi, ic.b);
        return hi > lo ? ic.amplitude * (hi * hi - lo * lo) / 2.0 : 0.0;
    };
    CellMasses out;
    out.mass.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
        out.mass[i] = mass_between(i == 0 ? 0.0 : grid[i].lower, grid[i].upper);
    out.unresolved = mass_between(0.0, grid.zmin());
    return out;
}

CellMasses monodisperse_masses(const MonodisperseInitial& ic, const VolumeGrid& grid)
{
    if (!(ic.z0 > 0.0) || !std::isfinite(ic.z0) || !(ic.amplitude >= 0.0) || !std::isfinite(ic.amplitude))
        throw DomainError(fmt::format("monodisperse initial condition needs z0 > 0 and amplitude >= 0 (got {}, {})",
                                      ic.z0, ic.amplitude));
    CellMasses out;
    out.mass.assign(grid.size(), 0.0);
    if (ic.z0 >= grid.domain_max())
        return out;
    std::size_t cell = grid.locate(ic.z0);
    if (cell == VolumeGrid::npos) {
        cell = 0;
        out.unresolved = ic.amplitude * ic.z0;
    }
    out.mass[cell] = ic.amplitude * ic.z0;
    return out;
}

CellMasses function_masses(const FunctionInitial& ic, const VolumeGrid& grid)
{
    if (!ic.density)
        throw DomainError("function initial condition has no density");
    using boost::math::quadrature::gauss_kronrod;
    using boost::math::quadrature::tanh_sinh;

    auto checked = [&](double value, double error, double l1, double a, double b, const char* what) {
        if (!std::isfinite(value) || !std::isfinite(error) || error > 1e-6 * std::max(l1, 1e-300) + 1e-300)
            throw DomainError(fmt::format("initial condition has a nonfinite {} on ({}, {})", what, a, b));
        return value;
    };
    auto mass_density = [&](double z) {
        const double v = ic.density(z);
        if (v < 0.0)
            throw DomainError(fmt::format("initial condition is negative at z={}", z));
        return z * v;
    };

    CellMasses out;
    out.mass.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double a = (i == 0) ? 0.0 : grid[i].lower;
        const double b = grid[i].upper;
        double error = 0.0;
        double l1 = 0.0;
        double number = 0.0;
        double mass = 0.0;
        try {
            if (i == 0) {
                // Endpoint singularities at 0 are handled by the double-exponential rule.
                tanh_sinh<double> rule;
                const double zmin = grid.zmin();
                number = rule.integrate(ic.density, 0.0, zmin, 1e-10, &error, &l1);
                checked(number, error, l1, 0.0, zmin, "zeroth moment");
                out.unresolved = rule.integrate(mass_density, 0.0, zmin, 1e-10, &error, &l1);
                checked(out.unresolved, error, l1, 0.0, zmin, "first moment");
                const double n_cell = gauss_kronrod<double, 31>::integrate(ic.density, zmin, b, 15, 1e-12, &error, &l1);
                number += checked(n_cell, error, l1, zmin, b, "zeroth moment");
                const double m_cell = gauss_kronrod<double, 31>::integrate(mass_density, zmin, b, 15, 1e-12, &error, &l1);
                mass = out.unresolved + checked(m_cell, error, l1, zmin, b, "first moment");
            } else {
                number = gauss_kronrod<double, 31>::integrate(ic.density, a, b, 15, 1e-12, &error, &l1);
                checked(number, error, l1, a, b, "zeroth moment");
                mass = gauss_kronrod<double, 31>::integrate(mass_density, a, b, 15, 1e-12, &error, &l1);
                checked(mass, error, l1, a, b, "first moment");
            }
        } catch (const DomainError&) {
            throw;
        } catch (const std::exception& e) {
            throw DomainError(fmt::format("initial condition quadrature failed on ({}, {}): {}", a, b, e.what()));
        }
        out.mass[i] = mass;
    }
    return out;
}

Projection project_tabulated(const TabulatedInitial& ic, const GridPtr& grid)
{
    if (ic.pivots.size() != ic.densities.size())
        throw DomainError("tabulated initial condition has mismatched columns");
    std::vector<double> sum(grid->size(), 0.0);
    std::vector<int> hits(grid->size(), 0);
    for (std::size_t r = 0; r < ic.pivots.size(); ++r) {
        const double z = ic.pivots[r];
        const double v = ic.densities[r];
        if (!std::isfinite(z) || !std::isfinite(v) || v < 0.0)
            throw DomainError(fmt::format("tabulated initial condition row {} is invalid ({}, {})", r, z, v));
        const std::size_t cell = grid->locate(z);
        if (cell == VolumeGrid::npos)
            continue; // outside (zmin, n): dropped by truncation
        sum[cell] += v;
        hits[cell] += 1;
    }
    Projection out{NumberDensity(grid), 0.0, 0.0};
    for (std::size_t i = 0; i < grid->size(); ++i)
        if (hits[i] > 0)
            out.density.values[i] = sum[i] / hits[i];
    out.represented_mass = moment(out.density, 1.0);
    return out;
}

} // namespace

Projection project_initial(const InitialCondition& g0, const GridPtr& grid)
{
    if (const auto* table = std::get_if<TabulatedInitial>(&g0))
        return project_tabulated(*table, grid);

    const CellMasses masses = std::visit(
        overloaded{
            [&](const ExponentialInitial& ic) { return exponential_masses(ic, *grid); },
            [&](const UniformInitial& ic) { return uniform_masses(ic, *grid); },
            [&](const MonodisperseInitial& ic) { return monodisperse_masses(ic, *grid); },
            [&](const FunctionInitial& ic) { return function_masses(ic, *grid); },
            [](const TabulatedInitial&) -> CellMasses { throw std::logic_error("unreachable"); },
        },
        g0);

    Projection out{NumberDensity(grid), masses.unresolved, 0.0};
    const auto pivots = grid->pivots();
    const auto widths = grid->widths();
    for (std::size_t i = 0; i < grid->size(); ++i) {
        out.density.values[i] = masses.mass[i] / (pivots[i] * widths[i]);
        out.represented_mass += masses.mass[i];
    }
    return out;
}

} // namespace collide
