#include "collide/config.hpp"
#include "collide/error.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>

using namespace collide;

namespace {

const char* kMinimal = R"(
kernel.form = product_sum
kernel.alpha = 0.3
kernel.beta = 0.7
grid.n = 50
initial.form = exponential
time.t_end = 1
)";

std::vector<std::string> problems_of(const std::string& text, Command command = Command::Simulate)
{
    try {
        parse_config_text(text, command);
    } catch (const ConfigError& e) {
        return e.problems();
    }
    return {};
}

bool mentions(const std::vector<std::string>& problems, const std::string& needle)
{
    for (const auto& p : problems)
        if (p.find(needle) != std::string::npos)
            return true;
    return false;
}

} // namespace

TEST_CASE("minimal simulate config gets documented defaults")
{
    const RunConfig c = parse_config_text(kMinimal, Command::Simulate);
    CHECK(c.command == Command::Simulate);
    CHECK(c.setup.grid.cells == 128);
    CHECK(c.setup.grid.spacing == Spacing::Geometric);
    CHECK(c.setup.grid.n == 50.0);
    CHECK(c.setup.grid.zmin == doctest::Approx(5e-3).epsilon(1e-15));
    CHECK(c.setup.time.method == Method::RK4);
    CHECK(c.setup.time.rel_tol == 1e-6);
    CHECK(c.setup.time.abs_tol == 1e-12);
    CHECK(c.setup.model.kernel.truncation_n() == 50.0);
    CHECK(c.setup.model.probability.always_coalesces());
    CHECK(c.setup.model.breakup.fragment_count() == doctest::Approx(2.0));
    CHECK_FALSE(c.allow_noncompliant);
    CHECK(c.output_dir == std::filesystem::path("out"));
}

TEST_CASE("explicit values override the defaults")
{
    const RunConfig c = parse_config_text(std::string(kMinimal) + R"(
grid.cells = 64   # trailing comment
grid.spacing = uniform
grid.zmin = 0.5
time.method = heun
time.rel_tol = 1e-8
time.snapshots = 0.25, 0.5
time.adaptive = false
probability.form = volume_ratio
probability.e_min = 0.2
breakup.nu = -0.5
output.dir = /tmp/collide-out
)",
                                          Command::Simulate);
    CHECK(c.setup.grid.cells == 64);
    CHECK(c.setup.grid.spacing == Spacing::Uniform);
    CHECK(c.setup.time.method == Method::Heun);
    CHECK(c.setup.time.rel_tol == 1e-8);
    CHECK(c.setup.time.snapshot_times == std::vector<double>{0.25, 0.5});
    CHECK_FALSE(c.setup.time.adaptive);
    CHECK(c.setup.model.probability.evaluate(1.0, 1.0) == doctest::Approx(1.0));
    CHECK(c.setup.model.probability.evaluate(1.0, 1e9) == doctest::Approx(0.2).epsilon(1e-6));
    CHECK(c.setup.model.breakup.fragment_count() == doctest::Approx(3.0));
    CHECK(c.output_dir == std::filesystem::path("/tmp/collide-out"));
}

TEST_CASE("infeasible fragment counts are an unsupported regime")
{
    const auto p = problems_of(std::string(kMinimal) + "breakup.nu = -1.5\n");
    CHECK(mentions(p, "unsupported-regime"));
    CHECK(mentions(problems_of(std::string(kMinimal) + "breakup.nu = -1\n"), "unsupported-regime"));
}

TEST_CASE("reversed kernel exponents are rejected")
{
    const std::string text = R"(
kernel.form = product_sum
kernel.alpha = 0.9
kernel.beta = 0.3
grid.n = 50
initial.form = exponential
time.t_end = 1
)";
    CHECK(mentions(problems_of(text), "alpha <= beta"));
    CHECK(problems_of(text + "model.allow_noncompliant = true\n").empty());
}

TEST_CASE("constant kernel needs the override outside the audit")
{
    const std::string text = R"(
kernel.form = constant
kernel.c = 2
grid.n = 10
initial.form = exponential
time.t_end = 1
)";
    CHECK(mentions(problems_of(text), "allow_noncompliant"));
    CHECK(problems_of(text, Command::Audit).empty());
    const RunConfig c = parse_config_text(text + "model.allow_noncompliant = yes\n", Command::Simulate);
    CHECK(c.allow_noncompliant);
    CHECK(c.setup.model.kernel.evaluate(1.0, 3.0) == 2.0);
}

TEST_CASE("every problem is reported at once")
{
    const auto p = problems_of(R"(
kernel.form = product_sum
kernel.alpha = abc
kernel.beta = 0.7
grid.n = 10
grid.cells = -4
grid.bogus = 1
time.method = leapfrog
time.t_end = 1
this line has no assignment
)");
    CHECK(p.size() >= 6);
    CHECK(mentions(p, "kernel.alpha"));
    CHECK(mentions(p, "grid.cells"));
    CHECK(mentions(p, "unknown key grid.bogus"));
    CHECK(mentions(p, "time.method"));
    CHECK(mentions(p, "initial.form"));
    CHECK(mentions(p, "line 10"));
}

TEST_CASE("missing blocks for the chosen command")
{
    CHECK(mentions(problems_of("kernel.form = product_sum\nkernel.alpha = 0.3\nkernel.beta = 0.7\n"), "grid.n"));
    CHECK(mentions(problems_of("grid.n = 10\n"), "kernel.form"));
    const std::string audit_only = "kernel.form = product_sum\nkernel.alpha = 0.3\nkernel.beta = 0.7\n";
    CHECK(problems_of(audit_only, Command::Audit).empty());
    CHECK(mentions(problems_of(std::string(kMinimal), Command::Converge), "converge.n_values"));
    CHECK(problems_of(std::string(kMinimal) + "converge.n_values = 10, 20\n", Command::Converge).empty());
    CHECK(mentions(problems_of(std::string(kMinimal) + "kernel.truncation_n = 20\n"), "must equal grid.n"));
    CHECK(mentions(problems_of(std::string(kMinimal) + "grid.zmin = 60\n"), "zmin"));
    CHECK(mentions(problems_of(std::string(kMinimal) + "grid.n = 20\n"), "duplicate key grid.n"));
    CHECK(mentions(problems_of(std::string(kMinimal) + "oracle.cases = analytic, magic\n", Command::Oracle),
                   "magic"));
}

TEST_CASE("tables and relative paths")
{
    const auto dir = std::filesystem::temp_directory_path() / "collide_config_test";
    std::filesystem::create_directories(dir);
    {
        std::ofstream t(dir / "initial.csv");
        t << "# collide-pbe v1\npivot,density\n0.5,1.0\n1.5,2.0\n";
        std::ofstream b(dir / "breakup.csv");
        b << "u q\n0 1\n0.5 3\n1 1\n";
        std::ofstream c(dir / "run.cfg");
        c << "kernel.form = product_sum\nkernel.alpha = 0.3\nkernel.beta = 0.7\n"
             "grid.n = 2\ngrid.zmin = 0.1\ngrid.cells = 4\n"
             "initial.form = tabulated\ninitial.path = initial.csv\n"
             "breakup.form = tabulated\nbreakup.table = breakup.csv\n"
             "time.t_end = 0.5\noutput.dir = results\n";
    }
    const RunConfig c = parse_config(dir / "run.cfg", Command::Simulate);
    const auto* table = std::get_if<TabulatedInitial>(&c.setup.initial);
    REQUIRE(table != nullptr);
    CHECK(table->pivots == std::vector<double>{0.5, 1.5});
    CHECK(table->densities == std::vector<double>{1.0, 2.0});
    CHECK(c.setup.model.breakup.mass_on(0.0, 1.0, 1.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(c.output_dir == dir / "results");

    CHECK_THROWS_AS(parse_config(dir / "missing.cfg", Command::Simulate), ConfigError);
    CHECK_THROWS_AS(read_two_column_csv(dir / "missing.csv"), ConfigError);
    std::filesystem::remove_all(dir);
}
