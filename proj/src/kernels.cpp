#include "collide/kernels.hpp"

#include "collide/detail/overloaded.hpp"
#include "collide/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace collide {

namespace {

using detail::overloaded;

void require_positive_volume(double z, const char* what)
{
    if (!(z > 0.0) || !std::isfinite(z))
        throw DomainError(fmt::format("{} must be a positive finite volume (got {})", what, z));
}

} // namespace

// ---------------------------------------------------------------------------

CollisionKernel::CollisionKernel(Form form, double truncation_n)
    : form_(form), truncation_n_(truncation_n)
{
    if (!(truncation_n > 0.0))
        throw DomainError(fmt::format("kernel truncation must be positive (got {})", truncation_n));
    std::visit(overloaded{
                   [](const ProductSumKernel& k) {
                       if (!(k.k1 >= 0.0) || !std::isfinite(k.k1))
                           throw DomainError(fmt::format("kernel k1 must be nonnegative (got {})", k.k1));
                       if (!(k.alpha >= 0.0) || !(k.beta >= 0.0) || !std::isfinite(k.alpha) || !std::isfinite(k.beta))
                           throw DomainError(fmt::format("kernel exponents must be nonnegative (got alpha={}, beta={})",
                                                         k.alpha, k.beta));
                   },
                   [](const ConstantKernel& k) {
                       if (!(k.c >= 0.0) || !std::isfinite(k.c))
                           throw DomainError(fmt::format("constant kernel rate must be nonnegative (got {})", k.c));
                   },
               },
               form_);
}

CollisionKernel CollisionKernel::product_sum(double k1, double alpha, double beta, double truncation_n)
{
    return CollisionKernel(ProductSumKernel{k1, alpha, beta}, truncation_n);
}

CollisionKernel CollisionKernel::constant(double c, double truncation_n)
{
    return CollisionKernel(ConstantKernel{c}, truncation_n);
}

double CollisionKernel::evaluate(double z, double z1) const
{
    require_positive_volume(z, "z");
    require_positive_volume(z1, "z1");
    return std::visit(overloaded{
                          [&](const ProductSumKernel& k) {
                              // IEEE addition commutes, so swapping (z, z1) only swaps the two terms.
                              const double a = std::pow(z, k.alpha) * std::pow(z1, k.beta);
                              const double b = std::pow(z1, k.alpha) * std::pow(z, k.beta);
                              return k.k1 * (a + b);
                          },
                          [](const ConstantKernel& k) { return k.c; },
                      },
                      form_);
}

double CollisionKernel::evaluate_truncated(double z, double z1) const
{
    const double rate = evaluate(z, z1);
    return (z + z1 < truncation_n_) ? rate : 0.0;
}

bool CollisionKernel::gamma2_compliant() const noexcept
{
    const auto* k = std::get_if<ProductSumKernel>(&form_);
    return k != nullptr && k->k1 >= 0.0 && k->alpha > 0.0 && k->alpha <= k->beta && k->beta < 1.0;
}

std::string CollisionKernel::describe() const
{
    std::string base = std::visit(
        overloaded{
            [](const ProductSumKernel& k) { return fmt::format("product_sum(k1={}, alpha={}, beta={})", k.k1, k.alpha, k.beta); },
            [](const ConstantKernel& k) { return fmt::format("constant(c={})", k.c); },
        },
        form_);
    return fmt::format("{} truncated at n={}", base, truncation_n_);
}

// ---------------------------------------------------------------------------

CoalescenceProbability::CoalescenceProbability(Form form) : form_(form)
{
    auto in_unit = [](double e) { return e >= 0.0 && e <= 1.0; };
    std::visit(overloaded{
                   [&](const ConstantProbability& p) {
                       if (!in_unit(p.e0))
                           throw DomainError(fmt::format("coalescence probability e0 must lie in [0,1] (got {})", p.e0));
                   },
                   [&](const VolumeRatioProbability& p) {
                       if (!in_unit(p.e_min) || !in_unit(p.e_max))
                           throw DomainError(fmt::format("volume-ratio probability bounds must lie in [0,1] (got {}, {})",
                                                         p.e_min, p.e_max));
                       if (!(p.exponent >= 0.0) || !std::isfinite(p.exponent))
                           throw DomainError(fmt::format("volume-ratio exponent must be nonnegative (got {})", p.exponent));
                   },
                   [](const AlwaysCoalesce&) {},
                   [](const NeverCoalesce&) {},
               },
               form_);
}

double CoalescenceProbability::evaluate(double z, double z1) const
{
    require_positive_volume(z, "z");
    require_positive_volume(z1, "z1");
    return std::visit(overloaded{
                          [](const ConstantProbability& p) { return p.e0; },
                          [&](const VolumeRatioProbability& p) {
                              const double ratio = std::min(z, z1) / std::max(z, z1);
                              const double e = p.e_min + (p.e_max - p.e_min) * std::pow(ratio, p.exponent);
                              return std::clamp(e, 0.0, 1.0);
                          },
                          [](const AlwaysCoalesce&) { return 1.0; },
                          [](const NeverCoalesce&) { return 0.0; },
                      },
                      form_);
}

bool CoalescenceProbability::always_coalesces() const noexcept
{
    if (std::holds_alternative<AlwaysCoalesce>(form_))
        return true;
    if (const auto* p = std::get_if<ConstantProbability>(&form_))
        return p->e0 == 1.0;
    if (const auto* p = std::get_if<VolumeRatioProbability>(&form_))
        return p->e_min == 1.0 && p->e_max == 1.0;
    return false;
}

std::string CoalescenceProbability::describe() const
{
    return std::visit(overloaded{
                          [](const ConstantProbability& p) { return fmt::format("constant(e0={})", p.e0); },
                          [](const VolumeRatioProbability& p) {
                              return fmt::format("volume_ratio(e_min={}, e_max={}, exponent={})", p.e_min, p.e_max,
                                                 p.exponent);
                          },
                          [](const AlwaysCoalesce&) { return std::string("one"); },
                          [](const NeverCoalesce&) { return std::string("zero"); },
                      },
                      form_);
}

// ---------------------------------------------------------------------------

TabulatedBreakup::TabulatedBreakup(std::vector<double> u, std::vector<double> q)
    : u_(std::move(u)), q_(std::move(q))
{
    if (u_.size() < 2 || u_.size() != q_.size())
        throw DomainError("tabulated breakup needs at least two (u, q) nodes of matching length");
    if (u_.front() != 0.0 || u_.back() != 1.0)
        throw DomainError("tabulated breakup nodes must span exactly [0, 1]");
    for (std::size_t i = 0; i < u_.size(); ++i) {
        if (i > 0 && !(u_[i] > u_[i - 1]))
            throw DomainError("tabulated breakup nodes must be strictly increasing");
        if (!(q_[i] >= 0.0) || !std::isfinite(q_[i]))
            throw DomainError(fmt::format("tabulated breakup density must be finite and nonnegative (node {})", i));
    }
    const double mass = mass_between(0.0, 1.0);
    if (!(mass > 0.0))
        throw DomainError("tabulated breakup density carries no mass");
    for (auto& v : q_)
        v /= mass;
    total_count_ = count_between(0.0, 1.0);
}

double TabulatedBreakup::density(double u) const
{
    if (u < 0.0 || u > 1.0)
        return 0.0;
    const auto it = std::upper_bound(u_.begin(), u_.end(), u);
    const std::size_t hi = std::min<std::size_t>(static_cast<std::size_t>(it - u_.begin()), u_.size() - 1);
    const std::size_t lo = hi - 1;
    const double t = (u - u_[lo]) / (u_[hi] - u_[lo]);
    return q_[lo] + t * (q_[hi] - q_[lo]);
}

namespace {

// Integrals of (c0 + c1 u) and u (c0 + c1 u) over [x0, x1] for each linear
// segment of the table that intersects [u0, u1].
template <class SegmentIntegral>
double integrate_segments(const std::vector<double>& u, const std::vector<double>& q, double u0, double u1,
                          SegmentIntegral segment)
{
    u0 = std::clamp(u0, 0.0, 1.0);
    u1 = std::clamp(u1, 0.0, 1.0);
    if (!(u1 > u0))
        return 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < u.size(); ++i) {
        const double x0 = std::max(u0, u[i]);
        const double x1 = std::min(u1, u[i + 1]);
        if (!(x1 > x0))
            continue;
        const double c1 = (q[i + 1] - q[i]) / (u[i + 1] - u[i]);
        const double c0 = q[i] - c1 * u[i];
        total += segment(c0, c1, x0, x1);
    }
    return total;
}

} // namespace

double TabulatedBreakup::count_between(double u0, double u1) const
{
    return integrate_segments(u_, q_, u0, u1, [](double c0, double c1, double x0, double x1) {
        return c0 * (x1 - x0) + c1 * (x1 * x1 - x0 * x0) / 2.0;
    });
}

double TabulatedBreakup::mass_between(double u0, double u1) const
{
    return integrate_segments(u_, q_, u0, u1, [](double c0, double c1, double x0, double x1) {
        return c0 * (x1 * x1 - x0 * x0) / 2.0 + c1 * (x1 * x1 * x1 - x0 * x0 * x0) / 3.0;
    });
}

// ---------------------------------------------------------------------------

BreakupDistribution::BreakupDistribution(Form form) : form_(std::move(form))
{
    if (const auto* p = std::get_if<PowerLawBreakup>(&form_)) {
        if (!(p->nu > -2.0 && p->nu <= 0.0))
            throw UnsupportedRegime(fmt::format("unsupported-regime: power-law exponent nu must lie in (-2, 0] (got {})", p->nu));
    }
}

double BreakupDistribution::evaluate(double z, double z1, double z2) const
{
    require_positive_volume(z, "z");
    require_positive_volume(z1, "z1");
    require_positive_volume(z2, "z2");
    const double s = z1 + z2;
    if (z > s)
        return 0.0;
    return std::visit(overloaded{
                          [&](const PowerLawBreakup& p) { return (p.nu + 2.0) * std::pow(z, p.nu) / std::pow(s, p.nu + 1.0); },
                          [&](const TabulatedBreakup& t) { return t.density(z / s) / s; },
                      },
                      form_);
}

double BreakupDistribution::fragment_count() const
{
    return std::visit(overloaded{
                          [](const PowerLawBreakup& p) {
                              if (p.nu <= -1.0)
                                  throw UnsupportedRegime(fmt::format(
                                      "unsupported-regime: nu={} yields an infinite or infeasible fragment count", p.nu));
                              return (p.nu + 2.0) / (p.nu + 1.0);
                          },
                          [](const TabulatedBreakup& t) { return t.total_count(); },
                      },
                      form_);
}

double BreakupDistribution::count_on(double a, double b, double s) const
{
    require_positive_volume(s, "parent volume");
    const double u0 = std::clamp(a / s, 0.0, 1.0);
    const double u1 = std::clamp(b / s, 0.0, 1.0);
    if (!(u1 > u0))
        return 0.0;
    return std::visit(overloaded{
                          [&](const PowerLawBreakup& p) {
                              const double count = fragment_count();
                              return count * (std::pow(u1, p.nu + 1.0) - std::pow(u0, p.nu + 1.0));
                          },
                          [&](const TabulatedBreakup& t) { return t.count_between(u0, u1); },
                      },
                      form_);
}

double BreakupDistribution::mass_on(double a, double b, double s) const
{
    require_positive_volume(s, "parent volume");
    const double u0 = std::clamp(a / s, 0.0, 1.0);
    const double u1 = std::clamp(b / s, 0.0, 1.0);
    if (!(u1 > u0))
        return 0.0;
    return std::visit(overloaded{
                          [&](const PowerLawBreakup& p) {
                              fragment_count(); // regime check
                              return s * (std::pow(u1, p.nu + 2.0) - std::pow(u0, p.nu + 2.0));
                          },
                          [&](const TabulatedBreakup& t) { return s * t.mass_between(u0, u1); },
                      },
                      form_);
}

std::string BreakupDistribution::describe() const
{
    return std::visit(overloaded{
                          [](const PowerLawBreakup& p) { return fmt::format("power_law(nu={})", p.nu); },
                          [](const TabulatedBreakup& t) {
                              return fmt::format("tabulated({} nodes, N={})", t.nodes().size(), t.total_count());
                          },
                      },
                      form_);
}

} // namespace collide
