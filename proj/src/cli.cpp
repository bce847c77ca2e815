#include "collide/cli.hpp"

#include "collide/audit.hpp"
#include "collide/config.hpp"
#include "collide/error.hpp"
#include "collide/oracles.hpp"
#include "collide/simulation.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

namespace collide {

namespace {

namespace fs = std::filesystem;

struct Options {
    std::string command;
    std::string config;
    std::string out;
    unsigned threads = 0;
};

unsigned resolve_threads(unsigned requested)
{
    if (requested > 0)
        return requested;
    if (const char* env = std::getenv("COLLIDE_PBE_THREADS")) {
        try {
            const long v = std::stol(env);
            if (v > 0)
                return static_cast<unsigned>(v);
        } catch (const std::exception&) {
        }
        throw ConfigError(fmt::format("COLLIDE_PBE_THREADS must be a positive integer (got '{}')", env));
    }
    return 1;
}

std::ofstream open_output(const fs::path& path)
{
    std::ofstream out(path);
    if (!out)
        throw ConfigError(fmt::format("cannot write {}", path.string()));
    return out;
}

void prepare_dir(const fs::path& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir))
        throw ConfigError(fmt::format("output directory {} is not writable", dir.string()));
}

void write_snapshot(const fs::path& dir, const NumberDensity& g)
{
    auto out = open_output(dir / fmt::format("t{:g}.csv", g.time));
    fmt::print(out, "# collide-pbe v1\n# t = {:.17g}\n", g.time);
    fmt::print(out, "pivot,density\n");
    const auto pivots = g.grid->pivots();
    for (std::size_t i = 0; i < g.size(); ++i)
        fmt::print(out, "{:.17g},{:.17g}\n", pivots[i], g.values[i]);
}

void write_run_outputs(const fs::path& dir, const NumberDensity& initial, const RunResult& run)
{
    {
        auto out = open_output(dir / "moments.csv");
        run.moments.write_csv(out);
    }
    const fs::path snaps = dir / "snapshots";
    prepare_dir(snaps);
    std::vector<const NumberDensity*> states{&initial};
    for (const auto& s : run.snapshots)
        states.push_back(&s);
    states.push_back(&run.final_state);
    std::vector<double> written;
    for (const NumberDensity* s : states) {
        if (std::find(written.begin(), written.end(), s->time) != written.end())
            continue;
        written.push_back(s->time);
        write_snapshot(snaps, *s);
    }
}

void write_config_echo(std::ostream& out, const RunConfig& config)
{
    fmt::print(out, "command: {}\n", to_string(config.command));
    for (const auto& [key, value] : config.entries)
        fmt::print(out, "config.{}: {}\n", key, value);
}

void write_run_summary(std::ostream& out, const SimulationSetup& setup, const Projection& projection,
                       const RunResult& run)
{
    const auto& model = setup.model;
    fmt::print(out, "kernel: {}\n", model.kernel.describe());
    fmt::print(out, "kernel_gamma2_compliant: {}\n", model.kernel.gamma2_compliant());
    fmt::print(out, "probability: {}\n", model.probability.describe());
    fmt::print(out, "breakup: {}\n", model.breakup.describe());
    fmt::print(out, "grid: {} cells, {} spacing, zmin {:.6g}, n {:.6g}\n", setup.grid.cells,
               to_string(setup.grid.spacing), setup.grid.zmin, setup.grid.n);
    fmt::print(out, "method: {}\n", to_string(setup.time.method));
    fmt::print(out, "threads: {}\n", setup.threads);
    fmt::print(out, "represented_mass: {:.17g}\n", projection.represented_mass);
    fmt::print(out, "unresolved_mass: {:.17g}\n", projection.unresolved_mass);

    std::size_t rejected = 0, clips = 0;
    double clipped = 0.0;
    for (const auto& s : run.steps) {
        rejected += s.rejected_steps;
        clips += s.negativity_clips;
        clipped += s.clipped_mass;
    }
    fmt::print(out, "accepted_steps: {}\n", run.steps.size());
    fmt::print(out, "rejected_steps: {}\n", rejected);
    fmt::print(out, "negativity_clips: {}\n", clips);
    fmt::print(out, "clipped_mass: {:.6e}\n", clipped);
    if (!run.moments.rows.empty()) {
        const auto& last = run.moments.rows.back();
        double worst = 0.0;
        for (const auto& r : run.moments.rows)
            worst = std::max(worst, std::abs(r.mass_drift));
        fmt::print(out, "final_time: {:.17g}\n", last.t);
        fmt::print(out, "final_M0: {:.17g}\n", last.m0);
        fmt::print(out, "final_M1: {:.17g}\n", last.m1);
        fmt::print(out, "final_M2: {:.17g}\n", last.m2);
        fmt::print(out, "final_mass_drift: {:.6e}\n", last.mass_drift);
        fmt::print(out, "max_abs_mass_drift: {:.6e}\n", worst);
    }
    for (const auto& w : run.warnings)
        fmt::print(out, "warning: {}\n", w);
}

int do_simulate(const RunConfig& config, const fs::path& dir, std::ostream& out, std::ostream& err)
{
    const SimulationSetup& setup = config.setup;
    const GridPtr grid = setup.grid.build();
    const Projection projection = project_initial(setup.initial, grid);
    SimulationOutcome outcome;
    try {
        outcome = simulate(setup);
    } catch (const RunAborted& aborted) {
        write_run_outputs(dir, projection.density, aborted.partial());
        {
            auto state = open_output(dir / "abort_state.csv");
            fmt::print(state, "# collide-pbe v1\n# t = {:.17g}\npivot,density\n", aborted.partial().final_state.time);
            const auto pivots = grid->pivots();
            for (std::size_t i = 0; i < aborted.partial().final_state.size(); ++i)
                fmt::print(state, "{:.17g},{:.17g}\n", pivots[i], aborted.partial().final_state.values[i]);
        }
        auto report = open_output(dir / "report.txt");
        write_config_echo(report, config);
        fmt::print(report, "status: aborted\nreason: {}\n", aborted.what());
        write_run_summary(report, setup, projection, aborted.partial());
        fmt::print(err, "integration aborted: {}\n", aborted.what());
        return kExitAborted;
    }
    write_run_outputs(dir, outcome.projection.density, outcome.run);
    auto report = open_output(dir / "report.txt");
    write_config_echo(report, config);
    fmt::print(report, "status: ok\n");
    write_run_summary(report, setup, outcome.projection, outcome.run);
    for (const auto& w : outcome.run.warnings)
        fmt::print(err, "warning: {}\n", w);
    const auto& last = outcome.run.moments.rows.back();
    fmt::print(out, "t={:.6g} M0={:.10g} M1={:.10g} mass_drift={:.3e}\n", last.t, last.m0, last.m1, last.mass_drift);
    return kExitOk;
}

int do_audit(const RunConfig& config, const fs::path& dir, std::ostream& out)
{
    const AssumptionReport report = audit_assumptions(config.setup.model, config.audit);
    write_report(out, report);
    auto file = open_output(dir / "report.txt");
    write_config_echo(file, config);
    write_report(file, report);
    return kExitOk;
}

void write_study(std::ostream& out, const ConvergenceStudy& study)
{
    fmt::print(out, "# collide-pbe v1\n");
    fmt::print(out, "n,cells,l1_distance\n");
    for (const auto& row : study.rows)
        fmt::print(out, "{:.17g},{},{:.17g}\n", row.n, row.cells, row.l1_distance);
}

int do_converge(const RunConfig& config, const fs::path& dir, std::ostream& out)
{
    const ConvergenceStudy study = truncation_convergence_study(config.setup, config.converge_n_values);
    {
        auto csv = open_output(dir / "study.csv");
        write_study(csv, study);
    }
    auto summary = open_output(dir / "summary.txt");
    write_config_echo(summary, config);
    fmt::print(summary, "reference_n: {:.17g}\n", study.reference_n);
    fmt::print(summary, "overlap_upper: {:.17g}\n", study.overlap_upper);
    fmt::print(summary, "monotone: {}\n", study.monotone);
    fmt::print(summary, "strictly_decreasing: {}\n", study.strictly_decreasing);
    for (const auto& row : study.rows)
        fmt::print(out, "n={:g} cells={} l1_distance={:.6e}\n", row.n, row.cells, row.l1_distance);
    fmt::print(out, "strictly decreasing: {}\n", study.strictly_decreasing ? "yes" : "no");
    return kExitOk;
}

bool smoluchowski_model(const Model& model)
{
    return std::holds_alternative<ConstantKernel>(model.kernel.form()) && model.probability.always_coalesces();
}

int do_oracle(const RunConfig& config, const fs::path& dir, std::ostream& out)
{
    std::vector<std::string> cases = config.oracle.cases;
    if (cases.empty()) {
        if (smoluchowski_model(config.setup.model))
            cases.push_back("analytic");
        cases.push_back("brute_force");
        if (config.converge_n_values.size() >= 2)
            cases.push_back("truncation");
    }

    std::vector<OracleOutcome> outcomes;
    for (const auto& name : cases) {
        OracleCase c;
        c.name = name;
        c.setup = config.setup;
        c.seed = config.oracle.seed;
        c.random_states = config.oracle.random_states;
        if (name == "analytic") {
            c.reference = ReferenceKind::AnalyticClosedForm;
            c.tolerance = config.oracle.l1_tolerance;
            c.m0_tolerance = config.oracle.m0_tolerance;
        } else if (name == "brute_force") {
            c.reference = ReferenceKind::BruteForceSmallGrid;
            c.tolerance = config.oracle.brute_force_tolerance;
        } else {
            c.reference = ReferenceKind::RefinedSelfConvergence;
            if (config.converge_n_values.size() < 2)
                throw ConfigError("oracle case truncation needs converge.n_values");
            c.n_values = config.converge_n_values;
        }
        outcomes.push_back(evaluate_oracle(c));
    }
    {
        auto csv = open_output(dir / "oracle.csv");
        write_oracle_csv(csv, outcomes);
    }
    auto summary = open_output(dir / "summary.txt");
    write_config_echo(summary, config);
    bool all = true;
    for (const auto& o : outcomes) {
        all = all && o.passed;
        const std::string line = fmt::format("{} [{}]: {} ({})", o.name, to_string(o.reference),
                                             o.passed ? "PASS" : "FAIL", o.summary);
        fmt::print(summary, "{}\n", line);
        fmt::print(out, "{}\n", line);
    }
    fmt::print(summary, "all_passed: {}\n", all);
    return kExitOk;
}

Command parse_command(const std::string& name)
{
    if (name == "simulate")
        return Command::Simulate;
    if (name == "audit")
        return Command::Audit;
    if (name == "converge")
        return Command::Converge;
    return Command::Oracle;
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Coagulation with collisional breakage on a truncated volume domain", "collide_pbe"};
    app.require_subcommand(1);
    Options options;
    for (const char* name : {"simulate", "audit", "converge", "oracle"}) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", options.config, "key = value configuration file")->required();
        sub->add_option("--out", options.out, "output directory (overrides output.dir)");
        sub->add_option("--threads", options.threads, "worker threads (default: $COLLIDE_PBE_THREADS or 1)")
            ->check(CLI::PositiveNumber);
        sub->callback([&options, name] { options.command = name; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        fmt::print(out, "{}", app.help());
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        fmt::print(out, "{}", app.help("", CLI::AppFormatMode::All));
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        fmt::print(err, "usage error: {}\n{}", e.what(), app.help());
        return kExitConfig;
    }

    try {
        const Command command = parse_command(options.command);
        RunConfig config = parse_config(options.config, command);
        config.setup.threads = resolve_threads(options.threads);
        const fs::path dir = options.out.empty() ? config.output_dir : fs::path(options.out);
        prepare_dir(dir);
        switch (command) {
        case Command::Simulate:
            return do_simulate(config, dir, out, err);
        case Command::Audit:
            return do_audit(config, dir, out);
        case Command::Converge:
            return do_converge(config, dir, out);
        case Command::Oracle:
            return do_oracle(config, dir, out);
        }
    } catch (const ConfigError& e) {
        fmt::print(err, "configuration error:\n");
        for (const auto& p : e.problems())
            fmt::print(err, "  {}\n", p);
        return kExitConfig;
    } catch (const RunAborted& e) {
        fmt::print(err, "integration aborted: {}\n", e.what());
        return kExitAborted;
    } catch (const Error& e) {
        fmt::print(err, "error: {}\n", e.what());
        return kExitConfig;
    }
    return kExitConfig;
}

} // namespace collide
