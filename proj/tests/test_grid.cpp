#include "collide/error.hpp"
#include "collide/grid.hpp"

#include <doctest.h>

#include <cmath>
#include <memory>

using namespace collide;

namespace {

GridPtr make_grid(double zmin, double n, std::size_t cells, Spacing spacing = Spacing::Geometric)
{
    return std::make_shared<const VolumeGrid>(VolumeGrid::build(zmin, n, cells, spacing));
}

} // namespace

TEST_CASE("geometric and uniform edges")
{
    const auto geo = VolumeGrid::build(1e-3, 1.0, 3, Spacing::Geometric);
    const auto edges = geo.edges();
    REQUIRE(edges.size() == 4);
    CHECK(edges[0] == doctest::Approx(1e-3).epsilon(1e-14));
    CHECK(edges[1] == doctest::Approx(1e-2).epsilon(1e-14));
    CHECK(edges[2] == doctest::Approx(1e-1).epsilon(1e-14));
    CHECK(edges[3] == 1.0);
    CHECK(geo.ratio() == doctest::Approx(10.0).epsilon(1e-14));
    CHECK(geo[1].pivot == doctest::Approx(std::sqrt(1e-2 * 1e-1)).epsilon(1e-14));

    const auto uni = VolumeGrid::build(0.25, 1.0, 3, Spacing::Uniform);
    const auto ue = uni.edges();
    CHECK(ue[0] == 0.25);
    CHECK(ue[1] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(ue[2] == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(ue[3] == 1.0);
    CHECK(uni[0].pivot == doctest::Approx(0.375).epsilon(1e-15));
    CHECK(uni.ratio() == 1.0);
}

TEST_CASE("invalid grids are rejected")
{
    CHECK_THROWS_AS(VolumeGrid::build(1.0, 0.5, 4, Spacing::Geometric), ConfigError);
    CHECK_THROWS_AS(VolumeGrid::build(0.0, 1.0, 4, Spacing::Geometric), ConfigError);
    CHECK_THROWS_AS(VolumeGrid::build(0.1, 1.0, 0, Spacing::Uniform), ConfigError);
    try {
        VolumeGrid::build(-1.0, -2.0, 0, Spacing::Uniform);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.problems().size() >= 2);
    }
}

TEST_CASE("locate finds the containing cell")
{
    const auto g = VolumeGrid::build(1e-3, 1.0, 3, Spacing::Geometric);
    CHECK(g.locate(5e-4) == VolumeGrid::npos);
    CHECK(g.locate(1e-3) == 0);
    CHECK(g.locate(0.05) == 1);
    CHECK(g.locate(0.999) == 2);
    CHECK(g.locate(1.0) == VolumeGrid::npos);
}

TEST_CASE("projection of exp(-z) keeps the truncated mass")
{
    const auto grid = make_grid(2e-3, 20.0, 128);
    const auto p = project_initial(ExponentialInitial{}, grid);
    const double exact = 1.0 - 21.0 * std::exp(-20.0);
    CHECK(std::abs(moment(p.density, 1.0) - exact) / exact <= 1e-8);
    CHECK(std::abs(p.represented_mass - exact) / exact <= 1e-8);
    const double below = 1.0 - std::exp(-2e-3) * (1.0 + 2e-3);
    CHECK(p.unresolved_mass == doctest::Approx(below).epsilon(1e-8));
    for (double v : p.density.values)
        CHECK(v >= 0.0);
}

TEST_CASE("zero and spike initial conditions")
{
    const auto grid = make_grid(1e-3, 1.0, 3);
    const auto zero = project_initial(UniformInitial{0.0, 1.0, 0.0}, grid);
    for (double v : zero.density.values)
        CHECK(v == 0.0);
    CHECK(moment(zero.density, 0.0) == 0.0);
    CHECK(moment(zero.density, 2.5) == 0.0);

    const auto spike = project_initial(UniformInitial{0.0300, 0.0301, 1e4}, grid);
    CHECK(spike.density.values[0] == 0.0);
    CHECK(spike.density.values[1] > 0.0);
    CHECK(spike.density.values[2] == 0.0);
    const double mass = 1e4 * 0.5 * (0.0301 * 0.0301 - 0.03 * 0.03);
    CHECK(moment(spike.density, 1.0) == doctest::Approx(mass).epsilon(1e-12));

    const auto mono = project_initial(MonodisperseInitial{0.5, 2.0}, grid);
    CHECK(mono.density.values[2] > 0.0);
    CHECK(moment(mono.density, 1.0) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("moments of the projected exponential")
{
    const auto grid = make_grid(2e-3, 20.0, 256);
    const auto p = project_initial(ExponentialInitial{}, grid);
    CHECK(std::abs(moment(p.density, 1.0) - 1.0) <= 1e-3);
    CHECK(std::abs(moment(p.density, 0.0) - 1.0) <= 1e-2);
    CHECK_THROWS_AS(moment(p.density, -1.0), DomainError);
    CHECK(weighted_norm(p.density) == doctest::Approx(moment(p.density, 0.0) + moment(p.density, 1.0)));
}

TEST_CASE("moment error decreases at least linearly under refinement")
{
    const double zmin = 2e-3;
    const FunctionInitial g0{[zmin](double z) { return z < zmin ? 0.0 : std::exp(-z); }};
    const double exact_m0 = std::exp(-zmin) - std::exp(-20.0);
    const double exact_m2 = std::exp(-zmin) * (zmin * zmin + 2.0 * zmin + 2.0) - std::exp(-20.0) * 442.0;
    double prev_m0 = 0.0, prev_m2 = 0.0;
    for (std::size_t cells = 32; cells <= 512; cells *= 2) {
        const auto p = project_initial(g0, make_grid(zmin, 20.0, cells));
        const double e0 = std::abs(moment(p.density, 0.0) - exact_m0);
        const double e2 = std::abs(moment(p.density, 2.0) - exact_m2);
        if (cells > 32) {
            CHECK(std::log2(prev_m0 / e0) >= 1.0);
            CHECK(std::log2(prev_m2 / e2) >= 1.0);
        }
        prev_m0 = e0;
        prev_m2 = e2;
    }
}

TEST_CASE("function and tabulated initial conditions")
{
    const auto grid = make_grid(1e-2, 10.0, 40);
    const auto a = project_initial(ExponentialInitial{2.0, 3.0}, grid);
    const auto b = project_initial(FunctionInitial{[](double z) { return 3.0 * std::exp(-z / 2.0); }}, grid);
    for (std::size_t i = 0; i < grid->size(); ++i)
        CHECK(b.density.values[i] == doctest::Approx(a.density.values[i]).epsilon(1e-10));

    std::vector<double> pivots(grid->pivots().begin(), grid->pivots().end());
    const auto c = project_initial(TabulatedInitial{pivots, a.density.values}, grid);
    CHECK(c.density.values == a.density.values);
    CHECK_THROWS_AS(project_initial(TabulatedInitial{{1.0}, {-1.0}}, grid), DomainError);
    CHECK_THROWS_AS(project_initial(FunctionInitial{[](double) { return 1.0 / 0.0; }}, grid), DomainError);
}

TEST_CASE("l1 distance of piecewise constant densities")
{
    const auto coarse = make_grid(1.0, 3.0, 2, Spacing::Uniform);
    const auto fine = make_grid(1.0, 3.0, 4, Spacing::Uniform);
    const NumberDensity a(coarse, {1.0, 2.0});
    const NumberDensity b(fine, {1.0, 1.0, 2.0, 3.0});
    CHECK(l1_distance(a, b, 3.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(l1_distance(b, a, 2.75) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(l1_distance(a, b, 2.5) == 0.0);
    CHECK(l1_distance(a, a, 3.0) == 0.0);
}
