#include "collide/config.hpp"

#include "collide/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>

namespace collide {

std::string to_string(Command command)
{
    switch (command) {
    case Command::Simulate:
        return "simulate";
    case Command::Audit:
        return "audit";
    case Command::Converge:
        return "converge";
    case Command::Oracle:
        return "oracle";
    }
    return "unknown";
}

namespace {

std::string_view trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos)
        return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::optional<double> parse_number(std::string_view text)
{
    text = trim(text);
    if (text == "inf" || text == "infinite" || text == "infinity")
        return kInfinite;
    if (!text.empty() && text.front() == '+')
        text.remove_prefix(1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
        return std::nullopt;
    return value;
}

std::vector<std::string_view> split_list(std::string_view text)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto comma = text.find(',', start);
        const auto piece = trim(text.substr(start, comma == std::string_view::npos ? text.npos : comma - start));
        if (!piece.empty())
            out.push_back(piece);
        if (comma == std::string_view::npos)
            break;
        start = comma + 1;
    }
    return out;
}

// Typed access to the key/value map. Every lookup marks the key as known;
// problems accumulate instead of throwing.
class Reader {
public:
    explicit Reader(std::map<std::string, std::string> entries) : entries_(std::move(entries)) {}

    bool has(const std::string& key)
    {
        known_.insert(key);
        return entries_.count(key) != 0;
    }

    std::optional<std::string> text(const std::string& key)
    {
        if (!has(key))
            return std::nullopt;
        return entries_.at(key);
    }

    std::string text_or(const std::string& key, const std::string& fallback)
    {
        return text(key).value_or(fallback);
    }

    std::optional<double> number(const std::string& key)
    {
        const auto raw = text(key);
        if (!raw)
            return std::nullopt;
        const auto v = parse_number(*raw);
        if (!v)
            problem(fmt::format("{}: '{}' is not a number", key, *raw));
        return v;
    }

    double number_or(const std::string& key, double fallback) { return number(key).value_or(fallback); }

    double required_number(const std::string& key, const std::string& context)
    {
        const auto v = number(key);
        if (!v && !entries_.count(key))
            problem(fmt::format("missing key {} ({})", key, context));
        return v.value_or(std::nan(""));
    }

    std::optional<std::size_t> count(const std::string& key)
    {
        const auto v = number(key);
        if (!v)
            return std::nullopt;
        if (!(*v >= 0.0) || std::floor(*v) != *v || *v > 1e9) {
            problem(fmt::format("{}: expected a nonnegative integer (got {})", key, entries_.at(key)));
            return std::nullopt;
        }
        return static_cast<std::size_t>(*v);
    }

    bool flag_or(const std::string& key, bool fallback)
    {
        const auto raw = text(key);
        if (!raw)
            return fallback;
        if (*raw == "true" || *raw == "yes" || *raw == "1")
            return true;
        if (*raw == "false" || *raw == "no" || *raw == "0")
            return false;
        problem(fmt::format("{}: expected true or false (got '{}')", key, *raw));
        return fallback;
    }

    std::vector<double> numbers(const std::string& key)
    {
        std::vector<double> out;
        const auto raw = text(key);
        if (!raw)
            return out;
        for (auto piece : split_list(*raw)) {
            if (const auto v = parse_number(piece))
                out.push_back(*v);
            else
                problem(fmt::format("{}: '{}' is not a number", key, piece));
        }
        return out;
    }

    void problem(std::string message) { problems_.push_back(std::move(message)); }

    void report_unknown_keys()
    {
        for (const auto& [key, value] : entries_)
            if (!known_.count(key))
                problems_.push_back(fmt::format("unknown key {}", key));
    }

    std::vector<std::string>& problems() { return problems_; }

private:
    std::map<std::string, std::string> entries_;
    std::set<std::string> known_;
    std::vector<std::string> problems_;
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p)
{
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

// Runs a constructor that may throw library errors, recording the message.
template <class Fn>
auto guarded(Reader& reader, Fn&& fn) -> std::optional<decltype(fn())>
{
    try {
        return fn();
    } catch (const ConfigError& e) {
        for (const auto& p : e.problems())
            reader.problem(p);
    } catch (const Error& e) {
        reader.problem(e.what());
    }
    return std::nullopt;
}

std::optional<CollisionKernel> read_kernel(Reader& r, double domain_n)
{
    const auto form = r.text("kernel.form");
    if (!form) {
        r.problem("missing key kernel.form (product_sum or constant)");
        return std::nullopt;
    }
    const double truncation = r.number_or("kernel.truncation_n", domain_n);
    if (*form == "product_sum") {
        const double k1 = r.number_or("kernel.k1", 1.0);
        const double alpha = r.required_number("kernel.alpha", "product_sum kernel");
        const double beta = r.required_number("kernel.beta", "product_sum kernel");
        if (std::isnan(alpha) || std::isnan(beta))
            return std::nullopt;
        return guarded(r, [&] { return CollisionKernel::product_sum(k1, alpha, beta, truncation); });
    }
    if (*form == "constant") {
        const double c = r.number_or("kernel.c", 1.0);
        return guarded(r, [&] { return CollisionKernel::constant(c, truncation); });
    }
    r.problem(fmt::format("kernel.form: unknown form '{}' (expected product_sum or constant)", *form));
    return std::nullopt;
}

std::optional<CoalescenceProbability> read_probability(Reader& r)
{
    const std::string form = r.text_or("probability.form", "one");
    if (form == "one")
        return CoalescenceProbability::one();
    if (form == "zero")
        return CoalescenceProbability::zero();
    if (form == "constant") {
        const double e0 = r.required_number("probability.e0", "constant probability");
        if (std::isnan(e0))
            return std::nullopt;
        return guarded(r, [&] { return CoalescenceProbability::constant(e0); });
    }
    if (form == "volume_ratio") {
        VolumeRatioProbability p;
        p.e_min = r.number_or("probability.e_min", p.e_min);
        p.e_max = r.number_or("probability.e_max", p.e_max);
        p.exponent = r.number_or("probability.exponent", p.exponent);
        return guarded(r, [&] { return CoalescenceProbability(p); });
    }
    r.problem(fmt::format("probability.form: unknown form '{}' (expected one, zero, constant or volume_ratio)", form));
    return std::nullopt;
}

std::optional<BreakupDistribution> read_breakup(Reader& r, const std::filesystem::path& base_dir)
{
    const std::string form = r.text_or("breakup.form", "power_law");
    if (form == "power_law") {
        const double nu = r.number_or("breakup.nu", 0.0);
        if (!(nu > -1.0 && nu <= 0.0)) {
            r.problem(fmt::format("breakup.nu: unsupported-regime, nu={} gives an infinite or infeasible fragment "
                                  "count (need -1 < nu <= 0)",
                                  nu));
            return std::nullopt;
        }
        return BreakupDistribution::power_law(nu);
    }
    if (form == "tabulated") {
        const auto path = r.text("breakup.table");
        if (!path) {
            r.problem("missing key breakup.table (tabulated breakup)");
            return std::nullopt;
        }
        return guarded(r, [&] {
            auto [u, q] = read_two_column_csv(resolve(base_dir, *path));
            return BreakupDistribution(TabulatedBreakup(std::move(u), std::move(q)));
        });
    }
    r.problem(fmt::format("breakup.form: unknown form '{}' (expected power_law or tabulated)", form));
    return std::nullopt;
}

std::optional<InitialCondition> read_initial(Reader& r, const std::filesystem::path& base_dir)
{
    const auto form = r.text("initial.form");
    if (!form) {
        r.problem("missing key initial.form (exponential, uniform, monodisperse or tabulated)");
        return std::nullopt;
    }
    if (*form == "exponential")
        return ExponentialInitial{r.number_or("initial.scale", 1.0), r.number_or("initial.amplitude", 1.0)};
    if (*form == "uniform") {
        const double a = r.required_number("initial.a", "uniform initial condition");
        const double b = r.required_number("initial.b", "uniform initial condition");
        return UniformInitial{a, b, r.number_or("initial.amplitude", 1.0)};
    }
    if (*form == "monodisperse") {
        const double z0 = r.required_number("initial.z0", "monodisperse initial condition");
        return MonodisperseInitial{z0, r.number_or("initial.amplitude", 1.0)};
    }
    if (*form == "tabulated") {
        const auto path = r.text("initial.path");
        if (!path) {
            r.problem("missing key initial.path (tabulated initial condition)");
            return std::nullopt;
        }
        return guarded(r, [&]() -> InitialCondition {
            auto [z, g] = read_two_column_csv(resolve(base_dir, *path));
            return TabulatedInitial{std::move(z), std::move(g)};
        });
    }
    r.problem(fmt::format("initial.form: unknown form '{}'", *form));
    return std::nullopt;
}

void read_time(Reader& r, TimeStepperConfig& time, bool required)
{
    const std::string method = r.text_or("time.method", "rk4");
    if (method == "rk4" || method == "RK4")
        time.method = Method::RK4;
    else if (method == "heun" || method == "Heun")
        time.method = Method::Heun;
    else if (method == "euler" || method == "Euler")
        time.method = Method::Euler;
    else
        r.problem(fmt::format("time.method: unknown method '{}' (expected rk4, heun or euler)", method));

    time.dt_init = r.number_or("time.dt_init", time.dt_init);
    time.dt_min = r.number_or("time.dt_min", std::min(time.dt_min, time.dt_init));
    time.dt_max = r.number_or("time.dt_max", std::max(time.dt_max, time.dt_init));
    time.rel_tol = r.number_or("time.rel_tol", time.rel_tol);
    time.abs_tol = r.number_or("time.abs_tol", time.abs_tol);
    time.adaptive = r.flag_or("time.adaptive", time.adaptive);
    time.clip_budget = r.number_or("time.clip_budget", time.clip_budget);
    time.snapshot_times = r.numbers("time.snapshots");
    if (required)
        time.t_end = r.required_number("time.t_end", "integration end time");
    else
        time.t_end = r.number_or("time.t_end", time.t_end);
    if (required && !std::isnan(time.t_end)) {
        try {
            time.validate();
        } catch (const ConfigError& e) {
            for (const auto& p : e.problems())
                r.problem(p);
        }
    }
}

} // namespace

std::pair<std::vector<double>, std::vector<double>> read_two_column_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError(fmt::format("cannot open table {}", path.string()));
    std::vector<double> first, second;
    std::string line;
    std::size_t line_no = 0;
    bool seen_data = false;
    while (std::getline(in, line)) {
        ++line_no;
        const auto t = trim(line);
        if (t.empty() || t.front() == '#')
            continue;
        std::string cleaned(t);
        std::replace(cleaned.begin(), cleaned.end(), ',', ' ');
        std::istringstream fields(cleaned);
        std::string a, b;
        fields >> a >> b;
        const auto va = parse_number(a);
        const auto vb = parse_number(b);
        if (!va || !vb) {
            if (!seen_data)
                continue; // header row
            throw ConfigError(fmt::format("{}:{}: expected two numeric columns", path.string(), line_no));
        }
        seen_data = true;
        first.push_back(*va);
        second.push_back(*vb);
    }
    if (first.empty())
        throw ConfigError(fmt::format("table {} has no numeric rows", path.string()));
    return {std::move(first), std::move(second)};
}

RunConfig parse_config_text(std::string_view text, Command command, const std::filesystem::path& base_dir)
{
    std::map<std::string, std::string> entries;
    std::vector<std::string> syntax;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto end = text.find('\n', start);
        std::string_view line = text.substr(start, end == text.npos ? text.npos : end - start);
        ++line_no;
        start = (end == text.npos) ? text.size() + 1 : end + 1;

        if (const auto hash = line.find('#'); hash != line.npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == line.npos) {
            syntax.push_back(fmt::format("line {}: expected key = value", line_no));
            continue;
        }
        const std::string key(trim(line.substr(0, eq)));
        const std::string value(trim(line.substr(eq + 1)));
        if (key.empty() || value.empty()) {
            syntax.push_back(fmt::format("line {}: empty key or value", line_no));
            continue;
        }
        if (entries.count(key))
            syntax.push_back(fmt::format("line {}: duplicate key {}", line_no, key));
        entries[key] = value;
    }

    RunConfig config;
    config.command = command;
    config.entries = entries;
    Reader r(std::move(entries));
    for (auto& s : syntax)
        r.problem(std::move(s));

    const bool needs_run = command != Command::Audit;

    // Domain: grid.n and kernel.truncation_n describe the same n.
    std::optional<double> n = r.number("grid.n");
    const std::optional<double> truncation = r.number("kernel.truncation_n");
    if (n && truncation && *n != *truncation)
        r.problem(fmt::format("kernel.truncation_n ({}) must equal grid.n ({})", *truncation, *n));
    if (!n && truncation && std::isfinite(*truncation))
        n = truncation;
    if (needs_run && !n)
        r.problem("missing key grid.n (or a finite kernel.truncation_n)");
    const double domain_n = n.value_or(kInfinite);

    const auto kernel = read_kernel(r, domain_n);
    const auto probability = read_probability(r);
    const auto breakup = read_breakup(r, base_dir);
    config.allow_noncompliant = r.flag_or("model.allow_noncompliant", false);
    if (kernel && !kernel->gamma2_compliant() && !config.allow_noncompliant && command != Command::Audit)
        r.problem(fmt::format("kernel {} violates 0 < alpha <= beta < 1; set model.allow_noncompliant = true to run it",
                              kernel->describe()));
    if (kernel)
        config.setup.model.kernel = *kernel;
    if (probability)
        config.setup.model.probability = *probability;
    if (breakup)
        config.setup.model.breakup = *breakup;

    GridSpec& grid = config.setup.grid;
    grid.n = domain_n;
    grid.zmin = r.number_or("grid.zmin", 1e-4 * domain_n);
    if (const auto cells = r.count("grid.cells"))
        grid.cells = *cells;
    const std::string spacing = r.text_or("grid.spacing", "geometric");
    if (spacing == "geometric")
        grid.spacing = Spacing::Geometric;
    else if (spacing == "uniform")
        grid.spacing = Spacing::Uniform;
    else
        r.problem(fmt::format("grid.spacing: unknown spacing '{}' (expected geometric or uniform)", spacing));
    if (needs_run && n) {
        if (!(grid.zmin > 0.0) || !(grid.zmin < grid.n))
            r.problem(fmt::format("grid.zmin must satisfy 0 < zmin < n (got zmin={}, n={})", grid.zmin, grid.n));
        if (grid.cells < 2)
            r.problem(fmt::format("grid.cells must be at least 2 (got {})", grid.cells));
    }

    if (needs_run) {
        if (const auto initial = read_initial(r, base_dir))
            config.setup.initial = *initial;
    } else {
        r.has("initial.form");
    }
    read_time(r, config.setup.time, needs_run);

    if (const auto dir = r.text("output.dir"))
        config.output_dir = resolve(base_dir, *dir);

    AuditConfig& audit = config.audit;
    if (const auto seed = r.count("audit.seed"))
        audit.seed = *seed;
    if (r.has("audit.w_values"))
        audit.w_values = r.numbers("audit.w_values");
    if (r.has("audit.deltas"))
        audit.deltas = r.numbers("audit.deltas");
    if (const auto trials = r.count("audit.trials"))
        audit.trials_per_delta = static_cast<int>(*trials);
    if (const auto sub = r.count("audit.subintervals"))
        audit.subintervals = static_cast<int>(*sub);
    audit.fallback_alpha = r.number_or("audit.fallback_alpha", audit.fallback_alpha);
    for (double w : audit.w_values)
        if (!(w > 0.0))
            r.problem(fmt::format("audit.w_values entries must be positive (got {})", w));
    for (double d : audit.deltas)
        if (!(d > 0.0 && d < 1.0))
            r.problem(fmt::format("audit.deltas entries must lie in (0, 1) (got {})", d));

    config.converge_n_values = r.numbers("converge.n_values");
    if (command == Command::Converge && config.converge_n_values.size() < 2)
        r.problem("converge.n_values needs at least two truncations");
    for (double v : config.converge_n_values)
        if (!(v > grid.zmin) || !std::isfinite(v))
            r.problem(fmt::format("converge.n_values entries must be finite and exceed grid.zmin (got {})", v));

    OracleSettings& oracle = config.oracle;
    for (auto piece : split_list(r.text_or("oracle.cases", "")))
        oracle.cases.emplace_back(piece);
    for (const auto& c : oracle.cases)
        if (c != "analytic" && c != "brute_force" && c != "truncation")
            r.problem(fmt::format("oracle.cases: unknown case '{}' (expected analytic, brute_force or truncation)", c));
    oracle.l1_tolerance = r.number_or("oracle.l1_tolerance", oracle.l1_tolerance);
    oracle.m0_tolerance = r.number_or("oracle.m0_tolerance", oracle.m0_tolerance);
    oracle.brute_force_tolerance = r.number_or("oracle.brute_force_tolerance", oracle.brute_force_tolerance);
    if (const auto states = r.count("oracle.states"))
        oracle.random_states = *states;
    if (const auto seed = r.count("oracle.seed"))
        oracle.seed = *seed;

    r.report_unknown_keys();
    if (!r.problems().empty())
        throw ConfigError(std::move(r.problems()));
    return config;
}

RunConfig parse_config(const std::filesystem::path& path, Command command)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError(fmt::format("cannot open config file {}", path.string()));
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config_text(buffer.str(), command, path.parent_path().empty() ? "." : path.parent_path());
}

} // namespace collide
