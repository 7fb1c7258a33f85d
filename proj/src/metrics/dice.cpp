#include "ganaug/metrics/dice.hpp"

#include "ganaug/util/error.hpp"

namespace ganaug::metrics {

double DiceCounts::score() const {
    if (both_empty()) return 1.0;
    return 2.0 * static_cast<double>(intersection) / static_cast<double>(pred + truth);
}

DiceCounts dice_counts(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> truth) {
    if (pred.size() != truth.size()) {
        throw ValidationError("dice: mask sizes differ (" + std::to_string(pred.size()) + " vs " +
                              std::to_string(truth.size()) + ")");
    }
    DiceCounts c;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const bool p = pred[i] != 0;
        const bool t = truth[i] != 0;
        c.pred += p;
        c.truth += t;
        c.intersection += p && t;
    }
    return c;
}

double dice(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> truth) {
    return dice_counts(pred, truth).score();
}

std::vector<DiceCounts> class_dice_counts(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> truth,
                                          int classes) {
    if (pred.size() != truth.size()) throw ValidationError("class_dice_counts: grid sizes differ");
    std::vector<DiceCounts> out(static_cast<std::size_t>(classes));
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const int p = pred[i];
        const int t = truth[i];
        if (p > classes || t > classes) throw ValidationError("class_dice_counts: label exceeds class count");
        if (p > 0) ++out[p - 1].pred;
        if (t > 0) ++out[t - 1].truth;
        if (p > 0 && p == t) ++out[p - 1].intersection;
    }
    return out;
}

DscReport make_report(const std::vector<DiceCounts>& counts) {
    DscReport r;
    double sum = 0.0;
    for (const auto& c : counts) {
        r.per_class.push_back(c.score());
        r.absent.push_back(c.both_empty());
        sum += r.per_class.back();
    }
    r.mean = counts.empty() ? 0.0 : sum / static_cast<double>(counts.size());
    return r;
}

}  // namespace ganaug::metrics
