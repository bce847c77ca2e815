#include "collide/operators.hpp"

#include "collide/detail/parallel.hpp"
#include "collide/error.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <cmath>
#include <ostream>

namespace collide {

std::vector<double> fragment_weights(const BreakupDistribution& breakup, const VolumeGrid& grid, double s)
{
    const std::size_t cells = grid.size();
    const auto x = grid.pivots();
    const std::size_t last = cells - 1;
    std::vector<double> w(cells, 0.0);

    double mass_excess = 0.0;  // from fragments lumped up onto the first pivot
    double count_excess = 0.0; // from fragments lumped down onto the last pivot
    std::size_t top = 0;
    for (std::size_t k = 0; k < cells; ++k) {
        const double a = (k == 0) ? 0.0 : grid[k].lower;
        if (a >= s)
            break;
        const double b = std::min(grid[k].upper, s);
        const double count = breakup.count_on(a, b, s);
        const double mass = breakup.mass_on(a, b, s);
        if (!(count > 0.0))
            continue;
        const double mean = mass / count;
        if (mean < x[0]) {
            w[0] += count;
            mass_excess += count * x[0] - mass;
        } else if (mean >= x[last]) {
            w[last] += mass / x[last];
            count_excess += mass / x[last] - count;
            top = last;
        } else {
            const auto it = std::upper_bound(x.begin(), x.end(), mean);
            const std::size_t hi = static_cast<std::size_t>(it - x.begin());
            const std::size_t lo = hi - 1;
            const double span = x[hi] - x[lo];
            w[lo] += count * (x[hi] - mean) / span;
            w[hi] += count * (mean - x[lo]) / span;
            top = std::max(top, hi);
        }
    }

    if (mass_excess > 0.0) {
        // Pull the nearest fragments down onto the first pivot until the
        // surplus mass is gone; count is unchanged by each move.
        for (std::size_t j = 1; j <= top && mass_excess > 0.0; ++j) {
            if (!(w[j] > 0.0))
                continue;
            const double gap = x[j] - x[0];
            const double need = mass_excess / gap;
            if (need <= w[j]) {
                w[j] -= need;
                w[0] += need;
                mass_excess = 0.0;
            } else {
                w[0] += w[j];
                mass_excess -= w[j] * gap;
                w[j] = 0.0;
            }
        }
        if (mass_excess > 1e-13 * s) {
            // s / N < x_first: count cannot be represented, keep mass.
            std::fill(w.begin(), w.end(), 0.0);
            w[0] = s / x[0];
            top = 0;
            count_excess = 0.0;
        }
    }

    if (count_excess > 0.0) {
        // Merge weight from the pivots below into the last pivot at equal
        // mass, which lowers the count.
        for (std::size_t j = last; j-- > 0 && count_excess > 0.0;) {
            if (!(w[j] > 0.0))
                continue;
            const double factor = 1.0 - x[j] / x[last];
            const double need = count_excess / factor;
            const double moved = std::min(need, w[j]);
            w[j] -= moved;
            w[last] += moved * x[j] / x[last];
            count_excess = (moved == need) ? 0.0 : count_excess - moved * factor;
        }
    }

    w.resize(top + 1);
    return w;
}

// ---------------------------------------------------------------------------

OperatorWorkspace::OperatorWorkspace(GridPtr grid, Model model, unsigned threads)
    : grid_(std::move(grid)), model_(std::move(model)), threads_(std::max(1u, threads)), cells_(grid_->size())
{
    const auto x = grid_->pivots();
    const double n = grid_->domain_max();
    const std::size_t last = cells_ - 1;
    const CollisionKernel kernel = model_.kernel.with_truncation(std::min(model_.kernel.truncation_n(), n));
    has_breakage_ = !model_.probability.always_coalesces();

    rates_.assign(cells_ * cells_, 0.0);
    coalescence_.assign(cells_ * cells_, 0.0);
    for (std::size_t i = 0; i < cells_; ++i) {
        for (std::size_t j = i; j < cells_; ++j) {
            const double e = model_.probability.evaluate(x[i], x[j]);
            coalescence_[i * cells_ + j] = coalescence_[j * cells_ + i] = e;
            const double v = x[i] + x[j];
            if (v >= n)
                continue;
            const double rate = kernel.evaluate_truncated(x[i], x[j]);
            rates_[i * cells_ + j] = rates_[j * cells_ + i] = rate;
            if (rate == 0.0)
                continue;

            PairTerm term;
            term.i = i;
            term.j = j;
            term.rate = rate;
            term.coalescence = e;
            if (v >= x[last]) {
                term.merge_low = term.merge_high = last;
                term.merge_low_weight = v / x[last];
            } else {
                const auto it = std::upper_bound(x.begin(), x.end(), v);
                const std::size_t hi = static_cast<std::size_t>(it - x.begin());
                const std::size_t lo = hi - 1;
                term.merge_low = lo;
                term.merge_high = hi;
                term.merge_low_weight = (x[hi] - v) / (x[hi] - x[lo]);
                term.merge_high_weight = (v - x[lo]) / (x[hi] - x[lo]);
            }
            if (has_breakage_ && e < 1.0) {
                const auto weights = collide::fragment_weights(model_.breakup, *grid_, v);
                term.fragment_offset = fragments_.size();
                term.fragment_length = weights.size();
                fragments_.insert(fragments_.end(), weights.begin(), weights.end());
            }
            pairs_.push_back(term);
        }
    }
}

void OperatorWorkspace::check_grid(const NumberDensity& g) const
{
    if (g.grid != grid_ && !(g.grid && *g.grid == *grid_))
        throw ContractViolation("number density lives on a different grid than the operator workspace");
    if (g.values.size() != cells_)
        throw ContractViolation(fmt::format("number density has {} values, workspace expects {}", g.values.size(), cells_));
}

void OperatorWorkspace::gains_into(std::span<const double> values, std::span<double> coag,
                                   std::span<double> breakage) const
{
    const auto widths = grid_->widths();
    std::vector<double> number(cells_);
    for (std::size_t k = 0; k < cells_; ++k)
        number[k] = values[k] * widths[k];

    const std::size_t chunks = std::max<std::size_t>(1, std::min<std::size_t>(threads_, pairs_.size()));
    std::vector<std::vector<double>> partial(chunks, std::vector<double>(2 * cells_, 0.0));

    detail::parallel_chunks(threads_, pairs_.size(), [&](std::size_t chunk, std::size_t begin, std::size_t end) {
        double* coag_acc = partial[chunk].data();
        double* break_acc = coag_acc + cells_;
        for (std::size_t p = begin; p < end; ++p) {
            const PairTerm& t = pairs_[p];
            // Unordered pair: off-diagonal terms appear twice in the double sum.
            const double collisions = (t.i == t.j ? 0.5 : 1.0) * t.rate * number[t.i] * number[t.j];
            const double merging = t.coalescence * collisions;
            coag_acc[t.merge_low] += merging * t.merge_low_weight;
            coag_acc[t.merge_high] += merging * t.merge_high_weight;
            if (t.fragment_length == 0)
                continue;
            const double breaking = (1.0 - t.coalescence) * collisions;
            const double* weights = fragments_.data() + t.fragment_offset;
            for (std::size_t k = 0; k < t.fragment_length; ++k)
                break_acc[k] += breaking * weights[k];
        }
    });

    for (std::size_t k = 0; k < cells_; ++k) {
        double c = 0.0;
        double b = 0.0;
        for (const auto& part : partial) {
            c += part[k];
            b += part[cells_ + k];
        }
        coag[k] = c / widths[k];
        breakage[k] = b / widths[k];
    }
}

void OperatorWorkspace::loss_into(std::span<const double> values, std::span<double> loss) const
{
    const auto widths = grid_->widths();
    detail::parallel_chunks(threads_, cells_, [&](std::size_t, std::size_t begin, std::size_t end) {
        for (std::size_t k = begin; k < end; ++k) {
            if (values[k] == 0.0) {
                loss[k] = 0.0;
                continue;
            }
            const double* row = rates_.data() + k * cells_;
            double sum = 0.0;
            for (std::size_t j = 0; j < cells_; ++j)
                sum += row[j] * values[j] * widths[j];
            loss[k] = values[k] * sum;
        }
    });
}

std::vector<double> OperatorWorkspace::coagulation_gain(const NumberDensity& g) const
{
    check_grid(g);
    std::vector<double> coag(cells_), breakage(cells_);
    gains_into(g.values, coag, breakage);
    return coag;
}

std::vector<double> OperatorWorkspace::collision_loss(const NumberDensity& g) const
{
    check_grid(g);
    std::vector<double> loss(cells_);
    loss_into(g.values, loss);
    return loss;
}

std::vector<double> OperatorWorkspace::breakage_gain(const NumberDensity& g) const
{
    check_grid(g);
    std::vector<double> coag(cells_), breakage(cells_);
    gains_into(g.values, coag, breakage);
    return breakage;
}

std::vector<double> OperatorWorkspace::rhs(const NumberDensity& g) const
{
    check_grid(g);
    std::vector<double> out(cells_);
    rhs_into(g.values, out);
    return out;
}

void OperatorWorkspace::rhs_into(std::span<const double> values, std::span<double> out) const
{
    if (values.size() != cells_ || out.size() != cells_)
        throw ContractViolation("rhs_into: span sizes do not match the workspace grid");
    std::vector<double> coag(cells_), breakage(cells_), loss(cells_);
    gains_into(values, coag, breakage);
    loss_into(values, loss);
    for (std::size_t k = 0; k < cells_; ++k)
        out[k] = (coag[k] - loss[k]) + breakage[k];
}

void OperatorWorkspace::write_tables(std::ostream& out) const
{
    const auto x = grid_->pivots();
    fmt::print(out, "# collide-pbe v1\n");
    fmt::print(out, "i,j,rate,coalescence,merge_low,merge_low_weight,merge_high,merge_high_weight,fragment_count,fragment_mass\n");
    for (const auto& t : pairs_) {
        double count = 0.0;
        double mass = 0.0;
        for (std::size_t k = 0; k < t.fragment_length; ++k) {
            count += fragments_[t.fragment_offset + k];
            mass += fragments_[t.fragment_offset + k] * x[k];
        }
        fmt::print(out, "{},{},{:.17g},{:.17g},{},{:.17g},{},{:.17g},{:.17g},{:.17g}\n", t.i, t.j, t.rate, t.coalescence,
                   t.merge_low, t.merge_low_weight, t.merge_high, t.merge_high_weight, count, mass);
    }
}

} // namespace collide
