#pragma once

#include "collide/grid.hpp"
#include "collide/kernels.hpp"

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace collide {

/// Parent pair (i <= j) of grid cells whose pivot sum stays inside (0, n).
/// Pairs at or beyond the truncation are not stored at all.
struct PairTerm {
    std::size_t i = 0;
    std::size_t j = 0;
    /// Truncated kernel at the pivots.
    double rate = 0.0;
    double coalescence = 0.0;
    /// Fixed-pivot split of the merged volume x_i + x_j: number weights for
    /// the two bracketing cells. Above the last pivot the whole product goes
    /// to the last cell with weight (x_i + x_j) / x_last.
    std::size_t merge_low = 0;
    double merge_low_weight = 0.0;
    std::size_t merge_high = 0;
    double merge_high_weight = 0.0;
    /// Fragment table slice: fragment_weights()[offset, offset + length)
    /// holds expected fragment counts at pivots 0 .. length-1.
    std::size_t fragment_offset = 0;
    std::size_t fragment_length = 0;
};

/**
 * Fragment counts at each pivot for a parent pair of total volume s.
 *
 * Exact cell-wise fragment counts and masses of P are redistributed to the
 * pivots bracketing each cell's mean fragment volume, which preserves both
 * count and mass of every cell. Fragments whose mean falls below the first
 * pivot (or above the last) are compensated by shifting weight between
 * pivots so that the total mass equals s exactly and the total count equals
 * N whenever that is representable (s / N within [x_first, x_last]). When it
 * is not, mass wins and all fragments are lumped onto the first pivot.
 */
std::vector<double> fragment_weights(const BreakupDistribution& breakup, const VolumeGrid& grid, double s);

/**
 * Precomputed tables for the discrete collision operators on a fixed grid:
 * truncated kernel and coalescence probability on pivot pairs, fixed-pivot
 * targets for merged particles and breakage redistribution weights.
 *
 * Immutable after construction, so one workspace can be shared by several
 * integrators. With threads > 1 the pair loops are split into contiguous
 * chunks whose partial sums are merged in chunk order, which keeps results
 * bitwise reproducible for a fixed thread count.
 */
class OperatorWorkspace {
public:
    OperatorWorkspace(GridPtr grid, Model model, unsigned threads = 1);

    const GridPtr& grid() const noexcept { return grid_; }
    const Model& model() const noexcept { return model_; }
    unsigned threads() const noexcept { return threads_; }

    std::span<const PairTerm> pairs() const noexcept { return pairs_; }
    std::span<const double> fragment_weights() const noexcept { return fragments_; }
    /// Truncated kernel at pivots (i, j); zero for pairs with x_i + x_j >= n.
    double rate(std::size_t i, std::size_t j) const noexcept { return rates_[i * cells_ + j]; }
    double coalescence(std::size_t i, std::size_t j) const noexcept { return coalescence_[i * cells_ + j]; }
    bool has_breakage() const noexcept { return has_breakage_; }

    /// C1: coagulation gain, density rate per cell.
    std::vector<double> coagulation_gain(const NumberDensity& g) const;
    /// B3: total collision loss (coalescence and breakage partners alike).
    std::vector<double> collision_loss(const NumberDensity& g) const;
    /// B1: fragments born from colliding pairs that do not coalesce.
    std::vector<double> breakage_gain(const NumberDensity& g) const;
    /// C1 - B3 + B1
    std::vector<double> rhs(const NumberDensity& g) const;

    /// Allocation-free form of rhs() for the integrator.
    void rhs_into(std::span<const double> values, std::span<double> out) const;

    /// CSV dump of the pair tables (i, j, rate, coalescence, merge targets, fragment count, fragment mass).
    void write_tables(std::ostream& out) const;

private:
    void check_grid(const NumberDensity& g) const;
    void gains_into(std::span<const double> values, std::span<double> coag, std::span<double> breakage) const;
    void loss_into(std::span<const double> values, std::span<double> loss) const;

    GridPtr grid_;
    Model model_;
    unsigned threads_;
    std::size_t cells_;
    std::vector<double> rates_;
    std::vector<double> coalescence_;
    std::vector<PairTerm> pairs_;
    std::vector<double> fragments_;
    bool has_breakage_ = false;
};

} // namespace collide
