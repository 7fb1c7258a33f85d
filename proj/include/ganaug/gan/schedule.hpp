#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace ganaug::gan {

struct GrowthSchedule {
    std::vector<int> resolutions;        // 4, 8, ..., target
    std::int64_t images_per_phase = 0;   // training examples shown per resolution
    double fade_fraction = 0.5;          // share of a phase spent blending the new level in

    int target() const { return resolutions.back(); }
    std::size_t phases() const { return resolutions.size(); }
    std::size_t phase_of(int resolution) const;  // throws when absent
    void validate() const;
    bool operator==(const GrowthSchedule&) const = default;
};

/// Doubling chain from 4 up to `target_resolution` (a power of two >= 8).
GrowthSchedule build_growth_schedule(int target_resolution, std::int64_t images_per_phase, double fade_fraction = 0.5);

/// Blend weight of the newest level. Linear in images shown over the fade
/// window, then 1; the first phase has nothing to fade and is always 1.
double fade_alpha(std::size_t phase, std::int64_t images_seen, const GrowthSchedule& schedule);

}  // namespace ganaug::gan
