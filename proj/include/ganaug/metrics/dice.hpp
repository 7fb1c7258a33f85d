#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace ganaug::metrics {

/// Overlap counts for one binary mask pair; sums of these give pooled (micro) Dice.
struct DiceCounts {
    std::uint64_t intersection = 0;
    std::uint64_t pred = 0;
    std::uint64_t truth = 0;

    DiceCounts& operator+=(const DiceCounts& o) {
        intersection += o.intersection;
        pred += o.pred;
        truth += o.truth;
        return *this;
    }
    /// 2|A∩B| / (|A|+|B|), and 1.0 when both masks are empty.
    double score() const;
    bool both_empty() const { return pred == 0 && truth == 0; }
};

/// Masks are flattened grids; any non-zero byte counts as foreground.
DiceCounts dice_counts(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> truth);
double dice(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> truth);

/// Per-class counts from label grids with values in {0..C}; entry k is class k+1.
std::vector<DiceCounts> class_dice_counts(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> truth,
                                          int classes);

/// Per-class and mean Dice for one evaluation, plus across-repeat statistics when filled in.
struct DscReport {
    std::vector<double> per_class;
    /// Classes absent from both prediction and truth (scored 1.0 by convention).
    std::vector<bool> absent;
    double mean = 0.0;
    int n_repeats = 0;
    double across_repeat_mean = 0.0;
    double across_repeat_std = 0.0;
};

DscReport make_report(const std::vector<DiceCounts>& counts);

}  // namespace ganaug::metrics
