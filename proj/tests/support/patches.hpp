#pragma once

#include <cmath>
#include <cstdint>

#include "ganaug/data/types.hpp"
#include "ganaug/util/rng.hpp"

namespace testsupport {

inline ganaug::data::Patch random_patch(int n, int classes, ganaug::Rng& rng, bool synthetic) {
    ganaug::data::Patch p;
    p.size = n;
    p.image.resize(p.pixels());
    p.labels.resize(p.pixels());
    for (auto& v : p.image) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    for (auto& l : p.labels) l = static_cast<std::uint8_t>(rng.index(static_cast<std::size_t>(classes) + 1));
    if (synthetic) {
        p.is_synthetic = true;
    } else {
        p.origin = ganaug::data::PatchOrigin{"vol", 0, 0, 0};
    }
    return p;
}

/// Exhaustive nearest neighbour in double precision over the joint or
/// image-only representation; strict < keeps the lowest index on ties.
struct OracleHit {
    std::size_t index = 0;
    double distance = 0;
};

inline OracleHit oracle_nn(const ganaug::data::Patch& q, const ganaug::data::PatchSet& real, bool joint,
                           std::size_t exclude = static_cast<std::size_t>(-1)) {
    OracleHit best{0, 1e300};
    bool first = true;
    for (std::size_t j = 0; j < real.size(); ++j) {
        if (j == exclude) continue;
        const auto& r = real[j];
        double s = 0;
        for (std::size_t k = 0; k < q.pixels(); ++k) {
            const double d = static_cast<double>(q.image[k]) - r.image[k];
            s += d * d;
            if (joint && q.labels[k] != r.labels[k]) s += (q.labels[k] && r.labels[k]) ? 2.0 : 1.0;
        }
        if (first || s < best.distance) {
            best = {j, s};
            first = false;
        }
    }
    best.distance = std::sqrt(best.distance);
    return best;
}

}  // namespace testsupport
