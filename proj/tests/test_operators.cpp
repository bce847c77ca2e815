#include "collide/operators.hpp"

#include <doctest.h>

#include <cmath>
#include <memory>
#include <numeric>
#include <random>

using namespace collide;

namespace {

GridPtr make_grid(double zmin, double n, std::size_t cells, Spacing spacing = Spacing::Geometric)
{
    return std::make_shared<const VolumeGrid>(VolumeGrid::build(zmin, n, cells, spacing));
}

Model make_model(CollisionKernel kernel, CoalescenceProbability e, double nu, double n)
{
    Model m;
    m.kernel = kernel.with_truncation(n);
    m.probability = e;
    m.breakup = BreakupDistribution::power_law(nu);
    return m;
}

double weighted_sum(const std::vector<double>& rate, const VolumeGrid& grid, double r)
{
    double s = 0.0;
    for (std::size_t k = 0; k < rate.size(); ++k)
        s += std::pow(grid.pivots()[k], r) * rate[k] * grid.widths()[k];
    return s;
}

double abs_weighted_sum(const std::vector<double>& a, const std::vector<double>& b, const std::vector<double>& c,
                        const VolumeGrid& grid)
{
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k)
        s += grid.pivots()[k] * (std::abs(a[k]) + std::abs(b[k]) + std::abs(c[k])) * grid.widths()[k];
    return s;
}

NumberDensity random_state(const GridPtr& grid, std::mt19937_64& rng, std::size_t first_cell = 0)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    NumberDensity g(grid);
    for (std::size_t k = first_cell; k < grid->size(); ++k)
        g.values[k] = u(rng) < 0.2 ? 0.0 : u(rng) * std::exp(-grid->pivots()[k]);
    return g;
}

} // namespace

TEST_CASE("empty state gives zero rates")
{
    const auto grid = make_grid(1e-3, 10.0, 24);
    const OperatorWorkspace ws(grid, make_model(CollisionKernel::product_sum(1.0, 0.3, 0.7),
                                                CoalescenceProbability::constant(0.4), -0.5, 10.0));
    const NumberDensity g(grid);
    for (const auto& out : {ws.coagulation_gain(g), ws.collision_loss(g), ws.breakage_gain(g), ws.rhs(g)})
        for (double v : out)
            CHECK(v == 0.0);
}

TEST_CASE("coagulation gain vanishes without coalescence")
{
    const auto grid = make_grid(1e-3, 10.0, 24);
    const OperatorWorkspace ws(grid, make_model(CollisionKernel::constant(1.0), CoalescenceProbability::zero(), 0.0,
                                                10.0));
    std::mt19937_64 rng(1);
    const auto g = random_state(grid, rng);
    for (double v : ws.coagulation_gain(g))
        CHECK(v == 0.0);
}

TEST_CASE("two-cell coagulation toy")
{
    // pivots 0.1 and 0.4; the merged volume 0.2 lies between them
    const auto grid = make_grid(0.05, 0.8, 2);
    REQUIRE(grid->pivots()[0] == doctest::Approx(0.1));
    REQUIRE(grid->pivots()[1] == doctest::Approx(0.4));
    const OperatorWorkspace ws(grid, make_model(CollisionKernel::constant(1.0), CoalescenceProbability::one(), 0.0,
                                                0.8));
    const double g0 = 3.0;
    const NumberDensity g(grid, {g0, 0.0});
    const auto gain = ws.coagulation_gain(g);
    const double x0 = 0.1, x1 = 0.4, w0 = grid->widths()[0], w1 = grid->widths()[1];
    const double events = 0.5 * g0 * g0 * w0 * w0;
    // child volume 2 x0 split between x0 and x1 conserving number and mass
    const double to_high = (2.0 * x0 - x0) / (x1 - x0);
    CHECK(gain[0] == doctest::Approx(events * (1.0 - to_high) / w0).epsilon(1e-14));
    CHECK(gain[1] == doctest::Approx(events * to_high / w1).epsilon(1e-14));
    CHECK(weighted_sum(gain, *grid, 1.0) == doctest::Approx(events * 2.0 * x0).epsilon(1e-14));
    CHECK(weighted_sum(gain, *grid, 0.0) == doctest::Approx(events).epsilon(1e-14));
}

TEST_CASE("collision loss")
{
    const auto grid = make_grid(0.4, 4.4, 4, Spacing::Uniform);
    const OperatorWorkspace ws(grid, make_model(CollisionKernel::constant(1.0), CoalescenceProbability::one(), 0.0,
                                                4.4));

    SUBCASE("single occupied cell")
    {
        NumberDensity g(grid);
        g.values[1] = 2.5;
        const auto loss = ws.collision_loss(g);
        CHECK(loss[1] == doctest::Approx(2.5 * 2.5 * 1.0).epsilon(1e-15));
        CHECK(loss[0] == 0.0);
        CHECK(loss[2] == 0.0);
    }

    SUBCASE("uniform state only sees partners below the truncation")
    {
        // pivots 0.9, 1.9, 2.9, 3.9 with unit widths and n = 4.4
        const double v = 0.7;
        const NumberDensity g(grid, {v, v, v, v});
        const auto loss = ws.collision_loss(g);
        CHECK(loss[0] == doctest::Approx(v * 3.0 * v).epsilon(1e-15));
        CHECK(loss[1] == doctest::Approx(v * 2.0 * v).epsilon(1e-15));
        CHECK(loss[2] == doctest::Approx(v * 1.0 * v).epsilon(1e-15));
        CHECK(loss[3] == 0.0);
    }
}

TEST_CASE("breakage gain")
{
    const auto grid = make_grid(1e-3, 10.0, 32);
    std::mt19937_64 rng(2);
    const auto g = random_state(grid, rng);

    SUBCASE("certain coalescence switches breakage off")
    {
        const OperatorWorkspace ws(grid, make_model(CollisionKernel::product_sum(1.0, 0.3, 0.7),
                                                    CoalescenceProbability::one(), -0.5, 10.0));
        for (double v : ws.breakage_gain(g))
            CHECK(v == 0.0);
    }

    SUBCASE("binary breakage of one self pair yields two fragments per event")
    {
        const double e = 0.3;
        const OperatorWorkspace ws(grid, make_model(CollisionKernel::product_sum(1.0, 0.3, 0.7),
                                                    CoalescenceProbability::constant(e), 0.0, 10.0));
        const std::size_t i = 20;
        NumberDensity single(grid);
        single.values[i] = 1.7;
        const double x = grid->pivots()[i], w = grid->widths()[i];
        const double k = 2.0 * std::pow(x, 0.3) * std::pow(x, 0.7);
        const auto gain = ws.breakage_gain(single);
        const double events = 0.5 * (1.0 - e) * k * 1.7 * 1.7 * w * w;
        CHECK(weighted_sum(gain, *grid, 0.0) == doctest::Approx(2.0 * events).epsilon(1e-12));
        CHECK(weighted_sum(gain, *grid, 1.0) == doctest::Approx(events * 2.0 * x).epsilon(1e-12));
    }

    SUBCASE("breakage gain is linear in 1 - E")
    {
        const auto kernel = CollisionKernel::product_sum(1.0, 0.3, 0.7);
        const OperatorWorkspace a(grid, make_model(kernel, CoalescenceProbability::constant(0.0), -0.25, 10.0));
        const OperatorWorkspace b(grid, make_model(kernel, CoalescenceProbability::constant(0.6), -0.25, 10.0));
        const auto ga = a.breakage_gain(g);
        const auto gb = b.breakage_gain(g);
        for (std::size_t k = 0; k < ga.size(); ++k)
            CHECK(gb[k] == doctest::Approx(0.4 * ga[k]).epsilon(1e-12));
    }
}

TEST_CASE("fragment table rows conserve parent mass")
{
    const auto grid = make_grid(1e-3, 50.0, 64);
    for (double nu : {0.0, -0.25, -0.5, -0.75}) {
        const auto breakup = BreakupDistribution::power_law(nu);
        const OperatorWorkspace ws(grid, make_model(CollisionKernel::product_sum(1.0, 0.3, 0.7),
                                                    CoalescenceProbability::constant(0.5), nu, 50.0));
        const auto table = ws.fragment_weights();
        const auto pivots = grid->pivots();
        for (const auto& pair : ws.pairs()) {
            const double s = pivots[pair.i] + pivots[pair.j];
            double mass = 0.0, count = 0.0;
            for (std::size_t k = 0; k < pair.fragment_length; ++k) {
                const double r = table[pair.fragment_offset + k];
                REQUIRE(r >= 0.0);
                mass += r * pivots[k];
                count += r;
            }
            REQUIRE(std::abs(mass - s) <= 1e-10 * s);
            const double n_frag = breakup.fragment_count();
            if (s / n_frag >= pivots.front())
                REQUIRE(std::abs(count - n_frag) <= 1e-10 * n_frag);
        }
    }
}

TEST_CASE("fragment weights for a standalone parent volume")
{
    const auto grid = VolumeGrid::build(1e-2, 10.0, 30, Spacing::Geometric);
    const auto w = fragment_weights(BreakupDistribution::power_law(0.0), grid, 3.0);
    double count = 0.0, mass = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) {
        count += w[k];
        mass += w[k] * grid.pivots()[k];
    }
    CHECK(count == doctest::Approx(2.0).epsilon(1e-13));
    CHECK(mass == doctest::Approx(3.0).epsilon(1e-13));
    CHECK(w.size() <= grid.size());

    // s / N below the first pivot: mass is kept, all fragments sit on pivot 0
    const auto tiny = fragment_weights(BreakupDistribution::power_law(0.0), grid, 1.5e-2);
    double tiny_mass = 0.0;
    for (std::size_t k = 0; k < tiny.size(); ++k)
        tiny_mass += tiny[k] * grid.pivots()[k];
    CHECK(tiny_mass == doctest::Approx(1.5e-2).epsilon(1e-13));
}

TEST_CASE("discrete mass conservation for all model families")
{
    std::mt19937_64 rng(9);
    const std::vector<CollisionKernel> kernels{CollisionKernel::product_sum(1.0, 0.3, 0.7),
                                               CollisionKernel::product_sum(2.0, 0.5, 0.5),
                                               CollisionKernel::constant(1.0)};
    const std::vector<CoalescenceProbability> probabilities{
        CoalescenceProbability::one(), CoalescenceProbability::zero(), CoalescenceProbability::constant(0.5),
        CoalescenceProbability(VolumeRatioProbability{0.1, 0.9, 1.0})};
    const std::vector<BreakupDistribution> breakups{
        BreakupDistribution::power_law(0.0), BreakupDistribution::power_law(-0.5),
        BreakupDistribution::power_law(-0.75),
        BreakupDistribution(TabulatedBreakup({0.0, 0.5, 1.0}, {0.5, 2.0, 0.5}))};
    for (Spacing spacing : {Spacing::Geometric, Spacing::Uniform}) {
        const auto grid = make_grid(spacing == Spacing::Geometric ? 1e-3 : 0.05, 20.0, 40, spacing);
        for (const auto& kernel : kernels)
            for (const auto& e : probabilities)
                for (const auto& p : breakups) {
                    Model m;
                    m.kernel = kernel.with_truncation(20.0);
                    m.probability = e;
                    m.breakup = p;
                    const OperatorWorkspace ws(grid, m);
                    const auto g = random_state(grid, rng);
                    const auto c1 = ws.coagulation_gain(g);
                    const auto b3 = ws.collision_loss(g);
                    const auto b1 = ws.breakage_gain(g);
                    const double scale = abs_weighted_sum(c1, b3, b1, *grid);
                    CHECK(std::abs(weighted_sum(ws.rhs(g), *grid, 1.0)) <= 1e-10 * scale);
                }
    }
}

TEST_CASE("number balance per collision")
{
    const double n = 20.0;
    const auto grid = make_grid(1e-3, n, 48);
    const auto kernel = CollisionKernel::product_sum(1.0, 0.3, 0.7).with_truncation(n);
    std::mt19937_64 rng(4);
    for (double nu : {0.0, -0.5}) {
        for (double e0 : {0.0, 0.3, 1.0}) {
            const auto e = CoalescenceProbability::constant(e0);
            const OperatorWorkspace ws(grid, make_model(kernel, e, nu, n));
            const double big_n = (nu + 2.0) / (nu + 1.0);
            // keep every parent sum s within [N x0, x_last] so both merged and
            // fragment counts are representable on the pivots
            std::size_t first = 0;
            while (grid->pivots()[first] < big_n * grid->pivots()[0])
                ++first;
            auto g = random_state(grid, rng, first);
            for (std::size_t k = 0; k < g.size(); ++k)
                if (2.0 * grid->pivots()[k] > grid->pivots().back())
                    g.values[k] = 0.0;
            const auto pivots = grid->pivots();
            const auto widths = grid->widths();
            double expected = 0.0, scale = 0.0;
            for (std::size_t i = 0; i < grid->size(); ++i)
                for (std::size_t j = 0; j < grid->size(); ++j) {
                    const double rate = kernel.evaluate_truncated(pivots[i], pivots[j]);
                    const double pair = rate * g.values[i] * g.values[j] * widths[i] * widths[j];
                    expected += pair * (-e0 * 0.5 + (1.0 - e0) * (big_n / 2.0 - 1.0));
                    scale += pair;
                }
            const double m0 = weighted_sum(ws.rhs(g), *grid, 0.0);
            CHECK(std::abs(m0 - expected) <= 1e-12 * scale);
            if (e0 == 0.0 && nu == 0.0)
                CHECK(std::abs(m0) <= 1e-12 * scale);
        }
    }
}

TEST_CASE("breakage never lowers the particle count")
{
    const auto grid = make_grid(1e-3, 10.0, 32);
    const OperatorWorkspace ws(grid, make_model(CollisionKernel::product_sum(1.0, 0.3, 0.7),
                                                CoalescenceProbability::zero(), 0.0, 10.0));
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 50; ++trial) {
        const auto g = random_state(grid, rng);
        const auto rate = ws.rhs(g);
        double scale = 0.0;
        for (std::size_t k = 0; k < rate.size(); ++k)
            scale += std::abs(rate[k]) * grid->widths()[k];
        CHECK(weighted_sum(rate, *grid, 0.0) >= -1e-12 * scale);
    }
}

TEST_CASE("positivity structure")
{
    const auto grid = make_grid(1e-3, 10.0, 32);
    const OperatorWorkspace ws(grid, make_model(CollisionKernel::product_sum(1.0, 0.3, 0.7),
                                                CoalescenceProbability::constant(0.5), -0.5, 10.0));
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        const auto g = random_state(grid, rng);
        const auto c1 = ws.coagulation_gain(g);
        const auto b3 = ws.collision_loss(g);
        const auto b1 = ws.breakage_gain(g);
        const auto rate = ws.rhs(g);
        for (std::size_t k = 0; k < g.size(); ++k) {
            CHECK(c1[k] >= 0.0);
            CHECK(b1[k] >= 0.0);
            CHECK(b3[k] >= 0.0);
            if (g.values[k] == 0.0) {
                CHECK(b3[k] == 0.0);
                CHECK(rate[k] >= 0.0);
            }
        }
    }
}

TEST_CASE("pair tables are symmetric")
{
    const auto grid = make_grid(1e-3, 10.0, 32);
    const OperatorWorkspace ws(grid, make_model(CollisionKernel::product_sum(1.0, 0.2, 0.9),
                                                CoalescenceProbability(VolumeRatioProbability{0.1, 0.8, 0.5}), -0.5,
                                                10.0));
    for (std::size_t i = 0; i < grid->size(); ++i)
        for (std::size_t j = 0; j < grid->size(); ++j) {
            CHECK(ws.rate(i, j) == ws.rate(j, i));
            CHECK(ws.coalescence(i, j) == ws.coalescence(j, i));
            if (grid->pivots()[i] + grid->pivots()[j] >= 10.0)
                CHECK(ws.rate(i, j) == 0.0);
        }
}

TEST_CASE("pure coagulation carries no breakage contribution")
{
    const auto grid = make_grid(1e-3, 10.0, 32);
    const OperatorWorkspace ws(grid, make_model(CollisionKernel::product_sum(1.0, 0.3, 0.7),
                                                CoalescenceProbability::one(), 0.0, 10.0));
    CHECK_FALSE(ws.has_breakage());
    std::mt19937_64 rng(10);
    const auto g = random_state(grid, rng);
    const auto c1 = ws.coagulation_gain(g);
    const auto b3 = ws.collision_loss(g);
    const auto full = ws.rhs(g);
    for (std::size_t k = 0; k < g.size(); ++k)
        CHECK(full[k] == c1[k] - b3[k]);
}

TEST_CASE("threaded evaluation is reproducible")
{
    const auto grid = make_grid(1e-3, 10.0, 64);
    const Model m = make_model(CollisionKernel::product_sum(1.0, 0.3, 0.7), CoalescenceProbability::constant(0.5),
                               -0.5, 10.0);
    const OperatorWorkspace serial(grid, m, 1);
    const OperatorWorkspace threaded(grid, m, 3);
    std::mt19937_64 rng(12);
    const auto g = random_state(grid, rng);
    const auto a = serial.rhs(g);
    const auto b = threaded.rhs(g);
    const auto c = threaded.rhs(g);
    CHECK(b == c);
    for (std::size_t k = 0; k < a.size(); ++k)
        CHECK(b[k] == doctest::Approx(a[k]).epsilon(1e-12).scale(1e-300));

    std::vector<double> into(g.size());
    threaded.rhs_into(g.values, into);
    CHECK(into == b);
}
