#pragma once

#include "collide/kernels.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace collide {

/// Sampling settings for the assumption audit. Everything is seeded, so a
/// given config always yields the same report.
struct AuditConfig {
    std::uint64_t seed = 20190101;
    /// W values for the fragment-envelope fit and z1 ranges of the
    /// small-set check.
    std::vector<double> w_values{1.0, 10.0};
    /// Measures |U| of the random small subsets of (0, 1), largest first.
    std::vector<double> deltas{1e-1, 1e-2, 1e-3, 1e-4};
    int trials_per_delta = 32;
    int subintervals = 64;
    int z1_samples = 16;
    /// Points per axis of the (0,1)^2 sample for the coalescence lower bound.
    int square_samples = 64;
    double tolerance = 1e-12;
    /// Exponent used for the small-set check when the kernel has no alpha.
    double fallback_alpha = 0.5;
};

/**
 * Sampled check of the structural assumptions on the kernel, the
 * coalescence probability and the breakup distribution.
 *
 * gamma1: kernel finite and nonnegative on a log-spaced sample.
 * gamma2: kernel is product-sum with 0 < alpha <= beta < 1.
 * gamma3: E >= (N-2)/(N-1) on a sample of (0,1)^2.
 * gamma4: fragments landing in small random subsets U of (0,1), scaled by
 *         z1^alpha, vanish as |U| shrinks (fitted modulus omega1).
 * gamma5: P(z|z1;z2) <= k(W) z^-tau2 on (0,W) for z1+z2 > W, with tau2 in [0,1).
 */
struct AssumptionReport {
    bool gamma1_ok = false;
    bool gamma2_ok = false;
    bool gamma3_ok = false;
    bool gamma4_ok = false;
    bool gamma5_ok = false;
    bool probability_bounds_ok = false;

    double k1 = 0.0;
    double alpha = 0.0;
    double beta = 0.0;
    double tau2 = 0.0;
    std::map<double, double> k_of_w;
    std::vector<std::pair<double, double>> omega1_samples;

    double fragment_count = 0.0;
    bool fragment_count_finite = false;
    double gamma3_lower_bound = 0.0;
    double min_sampled_probability = 0.0;

    std::vector<std::string> notes;

    bool all_ok() const noexcept { return gamma1_ok && gamma2_ok && gamma3_ok && gamma4_ok && gamma5_ok; }
};

AssumptionReport audit_assumptions(const Model& model, const AuditConfig& config = {});

/// key: value lines
void write_report(std::ostream& out, const AssumptionReport& report);

} // namespace collide
