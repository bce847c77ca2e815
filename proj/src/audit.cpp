#include "collide/audit.hpp"

#include "collide/error.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>

namespace collide {

namespace {

std::vector<double> log_space(double lo, double hi, int count)
{
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(count));
    const double a = std::log(lo);
    const double b = std::log(hi);
    for (int i = 0; i < count; ++i)
        out.push_back(std::exp(a + (b - a) * i / std::max(1, count - 1)));
    return out;
}

double fitted_alpha(const CollisionKernel& kernel, double fallback)
{
    if (const auto* k = std::get_if<ProductSumKernel>(&kernel.form()); k && k->alpha > 0.0)
        return k->alpha;
    return fallback;
}

void audit_kernel(const Model& model, AssumptionReport& report)
{
    report.gamma1_ok = true;
    for (double z : log_space(1e-6, 1e3, 25)) {
        for (double z1 : log_space(1e-6, 1e3, 25)) {
            const double phi = model.kernel.evaluate(z, z1);
            if (!std::isfinite(phi) || phi < 0.0)
                report.gamma1_ok = false;
        }
    }
    if (!report.gamma1_ok)
        report.notes.push_back("gamma1: kernel produced a negative or nonfinite sample");

    if (const auto* k = std::get_if<ProductSumKernel>(&model.kernel.form())) {
        report.k1 = k->k1;
        report.alpha = k->alpha;
        report.beta = k->beta;
    } else if (const auto* c = std::get_if<ConstantKernel>(&model.kernel.form())) {
        // A constant c is k1 (z^0 z1^0 + z1^0 z^0) with k1 = c / 2.
        report.k1 = c->c / 2.0;
        report.alpha = 0.0;
        report.beta = 0.0;
    }
    report.gamma2_ok = model.kernel.gamma2_compliant();
    if (!report.gamma2_ok)
        report.notes.push_back("gamma2: kernel is outside the product-sum class with 0 < alpha <= beta < 1");
}

void audit_probability(const Model& model, const AuditConfig& config, AssumptionReport& report)
{
    report.probability_bounds_ok = true;
    for (double z : log_space(1e-6, 1e3, 25)) {
        for (double z1 : log_space(1e-6, 1e3, 25)) {
            const double e = model.probability.evaluate(z, z1);
            if (!(e >= 0.0 && e <= 1.0) || e != model.probability.evaluate(z1, z))
                report.probability_bounds_ok = false;
        }
    }

    try {
        report.fragment_count = model.breakup.fragment_count();
        report.fragment_count_finite = std::isfinite(report.fragment_count);
    } catch (const UnsupportedRegime& e) {
        report.fragment_count_finite = false;
        report.notes.push_back(fmt::format("gamma3: {}", e.what()));
    }
    if (!report.fragment_count_finite) {
        report.gamma3_ok = false;
        report.gamma3_lower_bound = kInfinite;
        return;
    }
    const double n = report.fragment_count;
    report.gamma3_lower_bound = (n == 1.0) ? -kInfinite : (n - 2.0) / (n - 1.0);

    // Linear and log-spaced points; the condition only applies inside (0,1)^2.
    std::vector<double> axis;
    const int m = std::max(2, config.square_samples);
    for (int i = 0; i < m; ++i)
        axis.push_back((i + 0.5) / m);
    for (double z : log_space(1e-8, 1.0 - 1e-8, m))
        axis.push_back(z);

    double min_e = kInfinite;
    for (double z : axis)
        for (double z1 : axis)
            min_e = std::min(min_e, model.probability.evaluate(z, z1));
    report.min_sampled_probability = min_e;
    report.gamma3_ok = min_e >= report.gamma3_lower_bound - config.tolerance;
    if (!report.gamma3_ok)
        report.notes.push_back(
            fmt::format("gamma3: min E on (0,1)^2 is {} < (N-2)/(N-1) = {}", min_e, report.gamma3_lower_bound));
}

// Fragments of a parent of total volume z1 that land in U, where U is a
// stratified union of equal subintervals of (0,1) with total measure delta.
void audit_small_sets(const Model& model, const AuditConfig& config, AssumptionReport& report)
{
    report.omega1_samples.clear();
    if (!report.fragment_count_finite) {
        report.gamma4_ok = false;
        report.notes.push_back("gamma4: fragment count is not finite, small-set bound cannot hold");
        return;
    }
    const double alpha = fitted_alpha(model.kernel, config.fallback_alpha);
    std::mt19937_64 rng(config.seed);
    const int strata = std::max(1, config.subintervals);

    for (double delta : config.deltas) {
        const double piece = delta / strata;
        std::uniform_real_distribution<double> offset(0.0, 1.0 / strata - piece);
        double omega = 0.0;
        for (int trial = 0; trial < config.trials_per_delta; ++trial) {
            std::vector<std::pair<double, double>> pieces;
            pieces.reserve(static_cast<std::size_t>(strata));
            for (int j = 0; j < strata; ++j) {
                const double lo = static_cast<double>(j) / strata + offset(rng);
                pieces.emplace_back(lo, lo + piece);
            }
            for (double w : config.w_values) {
                for (double z1 : log_space(1e-2 * w, w * (1.0 - 1e-12), config.z1_samples)) {
                    double inside = 0.0;
                    for (const auto& [lo, hi] : pieces) {
                        if (lo >= z1)
                            break;
                        inside += model.breakup.count_on(lo, std::min(hi, z1), z1);
                    }
                    omega = std::max(omega, inside * std::pow(z1, alpha));
                }
            }
        }
        report.omega1_samples.emplace_back(delta, omega);
    }

    bool decreasing = !report.omega1_samples.empty();
    for (std::size_t i = 1; i < report.omega1_samples.size(); ++i)
        if (!(report.omega1_samples[i].second < report.omega1_samples[i - 1].second))
            decreasing = false;
    const bool small_enough = decreasing && report.omega1_samples.back().second <
                                                1e-2 * report.omega1_samples.front().second;
    report.gamma4_ok = decreasing && small_enough;
    if (!report.gamma4_ok)
        report.notes.push_back("gamma4: fitted omega1 is not monotone decreasing to below 1e-2 of its largest sample");
}

// P(z | s) envelope over parent sums s > W, fitted as k(W) z^-tau2.
void audit_envelope(const Model& model, const AuditConfig& config, AssumptionReport& report)
{
    report.k_of_w.clear();
    report.gamma5_ok = true;
    report.tau2 = 0.0;
    const double parent_factors[] = {1.0 + 1e-9, 1.25, 1.5, 2.0, 4.0, 8.0, 16.0, 64.0};
    for (double w : config.w_values) {
        const auto zs = log_space(1e-6 * w, w * (1.0 - 1e-9), 40);
        std::vector<double> envelope;
        envelope.reserve(zs.size());
        for (double z : zs) {
            double env = 0.0;
            for (double f : parent_factors)
                env = std::max(env, model.breakup.evaluate(z, 0.5 * f * w, 0.5 * f * w));
            envelope.push_back(env);
        }

        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        int count = 0;
        for (std::size_t i = 0; i < zs.size(); ++i) {
            if (!(envelope[i] > 0.0) || !std::isfinite(envelope[i]))
                continue;
            const double x = std::log(zs[i]);
            const double y = std::log(envelope[i]);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            ++count;
        }
        double tau = 0.0;
        if (count >= 2) {
            const double slope = (count * sxy - sx * sy) / (count * sxx - sx * sx);
            tau = -slope;
        }
        if (std::abs(tau) < 1e-9)
            tau = 0.0;
        tau = std::max(tau, 0.0);

        double k = 0.0;
        bool finite = true;
        for (std::size_t i = 0; i < zs.size(); ++i) {
            if (!std::isfinite(envelope[i]))
                finite = false;
            k = std::max(k, envelope[i] * std::pow(zs[i], tau));
        }
        report.k_of_w[w] = k;
        report.tau2 = std::max(report.tau2, tau);
        if (!finite || !(tau < 1.0) || !(k > 0.0))
            report.gamma5_ok = false;
    }
    if (!report.gamma5_ok)
        report.notes.push_back(fmt::format("gamma5: fragment envelope needs tau2={} outside [0,1)", report.tau2));
}

} // namespace

AssumptionReport audit_assumptions(const Model& model, const AuditConfig& config)
{
    AssumptionReport report;
    audit_kernel(model, report);
    audit_probability(model, config, report);
    audit_small_sets(model, config, report);
    audit_envelope(model, config, report);
    return report;
}

void write_report(std::ostream& out, const AssumptionReport& report)
{
    auto flag = [](bool b) { return b ? "pass" : "fail"; };
    fmt::print(out, "gamma1: {}\n", flag(report.gamma1_ok));
    fmt::print(out, "gamma2: {}\n", flag(report.gamma2_ok));
    fmt::print(out, "gamma3: {}\n", flag(report.gamma3_ok));
    fmt::print(out, "gamma4: {}\n", flag(report.gamma4_ok));
    fmt::print(out, "gamma5: {}\n", flag(report.gamma5_ok));
    fmt::print(out, "probability_bounds: {}\n", flag(report.probability_bounds_ok));
    fmt::print(out, "k1: {:.17g}\n", report.k1);
    fmt::print(out, "alpha: {:.17g}\n", report.alpha);
    fmt::print(out, "beta: {:.17g}\n", report.beta);
    fmt::print(out, "tau2: {:.17g}\n", report.tau2);
    for (const auto& [w, k] : report.k_of_w)
        fmt::print(out, "k_of_W[{:g}]: {:.17g}\n", w, k);
    for (const auto& [delta, omega] : report.omega1_samples)
        fmt::print(out, "omega1[{:g}]: {:.17g}\n", delta, omega);
    if (report.fragment_count_finite)
        fmt::print(out, "fragment_count: {:.17g}\n", report.fragment_count);
    else
        fmt::print(out, "fragment_count: unsupported\n");
    fmt::print(out, "gamma3_lower_bound: {:.17g}\n", report.gamma3_lower_bound);
    fmt::print(out, "min_sampled_probability: {:.17g}\n", report.min_sampled_probability);
    for (const auto& note : report.notes)
        fmt::print(out, "note: {}\n", note);
}

} // namespace collide
