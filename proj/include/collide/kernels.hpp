#pragma once

#include <limits>
#include <string>
#include <variant>
#include <vector>

namespace collide {

inline constexpr double kInfinite = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Collision kernel
// ---------------------------------------------------------------------------

/// k1 (z^alpha z1^beta + z1^alpha z^beta)
struct ProductSumKernel {
    double k1 = 1.0;
    double alpha = 0.0;
    double beta = 0.0;
};

struct ConstantKernel {
    double c = 1.0;
};

/**
 * Collision rate between particles of volumes z and z1.
 *
 * The truncated rate is the plain rate multiplied by the indicator of
 * z + z1 < truncation_n; with an infinite truncation both coincide.
 * Evaluation is symmetric and nonnegative for any nonnegative exponents,
 * including parameter sets that fall outside the product-sum class
 * required for the existence theory (see gamma2_compliant()).
 */
class CollisionKernel {
public:
    using Form = std::variant<ProductSumKernel, ConstantKernel>;

    explicit CollisionKernel(Form form, double truncation_n = kInfinite);

    static CollisionKernel product_sum(double k1, double alpha, double beta,
                                       double truncation_n = kInfinite);
    static CollisionKernel constant(double c, double truncation_n = kInfinite);

    double evaluate(double z, double z1) const;
    double evaluate_truncated(double z, double z1) const;

    /// 0 < alpha <= beta < 1 and k1 >= 0 on the product-sum form.
    bool gamma2_compliant() const noexcept;

    const Form& form() const noexcept { return form_; }
    double truncation_n() const noexcept { return truncation_n_; }
    CollisionKernel with_truncation(double n) const { return CollisionKernel(form_, n); }

    std::string describe() const;

private:
    Form form_;
    double truncation_n_;
};

// ---------------------------------------------------------------------------
// Coalescence probability
// ---------------------------------------------------------------------------

struct ConstantProbability {
    double e0 = 1.0;
};

/// e_min + (e_max - e_min) * (min(z,z1)/max(z,z1))^exponent
struct VolumeRatioProbability {
    double e_min = 0.0;
    double e_max = 1.0;
    double exponent = 1.0;
};

struct AlwaysCoalesce {};
struct NeverCoalesce {};

class CoalescenceProbability {
public:
    using Form = std::variant<ConstantProbability, VolumeRatioProbability, AlwaysCoalesce, NeverCoalesce>;

    explicit CoalescenceProbability(Form form);

    static CoalescenceProbability one() { return CoalescenceProbability(AlwaysCoalesce{}); }
    static CoalescenceProbability zero() { return CoalescenceProbability(NeverCoalesce{}); }
    static CoalescenceProbability constant(double e0) { return CoalescenceProbability(ConstantProbability{e0}); }

    double evaluate(double z, double z1) const;

    /// True when E is the constant 1 everywhere, so breakage never happens.
    bool always_coalesces() const noexcept;

    const Form& form() const noexcept { return form_; }
    std::string describe() const;

private:
    Form form_;
};

// ---------------------------------------------------------------------------
// Breakup distribution
// ---------------------------------------------------------------------------

/// (nu + 2) z^nu / (z1 + z2)^(nu + 1) on z < z1 + z2.
struct PowerLawBreakup {
    double nu = 0.0;
};

/**
 * Fragment density tabulated on the normalised volume u = z / (z1 + z2).
 *
 * q is piecewise linear between the nodes, which must start at 0 and end
 * at 1. Construction rescales q so that the integral of u q(u) is exactly 1
 * (mass identity); the fragment count is then whatever the integral of q is.
 */
class TabulatedBreakup {
public:
    TabulatedBreakup(std::vector<double> u, std::vector<double> q);

    double density(double u) const;
    /// integral of q over [u0, u1], clipped to [0, 1]
    double count_between(double u0, double u1) const;
    /// integral of u q over [u0, u1], clipped to [0, 1]
    double mass_between(double u0, double u1) const;
    double total_count() const noexcept { return total_count_; }

    const std::vector<double>& nodes() const noexcept { return u_; }
    const std::vector<double>& values() const noexcept { return q_; }

private:
    std::vector<double> u_;
    std::vector<double> q_;
    double total_count_ = 0.0;
};

/**
 * P(z | z1; z2): expected number density of fragments of volume z produced
 * when a colliding pair (z1, z2) breaks. Both supported families depend on
 * the parents only through their sum s = z1 + z2, which makes the density
 * symmetric in the parents by construction.
 */
class BreakupDistribution {
public:
    using Form = std::variant<PowerLawBreakup, TabulatedBreakup>;

    explicit BreakupDistribution(Form form);

    static BreakupDistribution power_law(double nu) { return BreakupDistribution(PowerLawBreakup{nu}); }

    double evaluate(double z, double z1, double z2) const;

    /// Expected fragment count N. Throws UnsupportedRegime for nu <= -1.
    double fragment_count() const;

    /// Number of fragments with volume in [a, b] from a parent pair of total
    /// volume s. Intervals are clipped to [0, s]; a = 0 is allowed and exact
    /// (cell-wise antiderivatives, no point sampling of the z^nu singularity).
    double count_on(double a, double b, double s) const;
    /// Fragment volume carried by fragments with volume in [a, b].
    double mass_on(double a, double b, double s) const;

    const Form& form() const noexcept { return form_; }
    std::string describe() const;

private:
    Form form_;
};

/// Everything the collision operators need.
struct Model {
    CollisionKernel kernel = CollisionKernel::constant(1.0);
    CoalescenceProbability probability = CoalescenceProbability::one();
    BreakupDistribution breakup = BreakupDistribution::power_law(0.0);
};

} // namespace collide
