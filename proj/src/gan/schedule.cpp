#include "ganaug/gan/schedule.hpp"

#include <algorithm>
#include <string>

#include "ganaug/util/error.hpp"

namespace ganaug::gan {

std::size_t GrowthSchedule::phase_of(int resolution) const {
    auto it = std::find(resolutions.begin(), resolutions.end(), resolution);
    if (it == resolutions.end()) throw ValidationError("resolution " + std::to_string(resolution) + " is not in the schedule");
    return static_cast<std::size_t>(it - resolutions.begin());
}

void GrowthSchedule::validate() const {
    if (resolutions.empty() || resolutions.front() != 4) throw ValidationError("growth schedule must start at 4");
    for (std::size_t i = 1; i < resolutions.size(); ++i) {
        if (resolutions[i] != 2 * resolutions[i - 1]) throw ValidationError("growth schedule must double at every level");
    }
    if (images_per_phase <= 0) throw ValidationError("images_per_phase must be positive");
    if (!(fade_fraction > 0.0 && fade_fraction <= 1.0)) throw ValidationError("fade_fraction must be in (0, 1]");
}

GrowthSchedule build_growth_schedule(int target_resolution, std::int64_t images_per_phase, double fade_fraction) {
    if (target_resolution < 8 || (target_resolution & (target_resolution - 1)) != 0) {
        throw ValidationError("target resolution must be a power of two >= 8, got " + std::to_string(target_resolution));
    }
    GrowthSchedule s;
    for (int r = 4; r <= target_resolution; r *= 2) s.resolutions.push_back(r);
    s.images_per_phase = images_per_phase;
    s.fade_fraction = fade_fraction;
    s.validate();
    return s;
}

double fade_alpha(std::size_t phase, std::int64_t images_seen, const GrowthSchedule& schedule) {
    if (phase == 0) return 1.0;
    const double window = schedule.fade_fraction * static_cast<double>(schedule.images_per_phase);
    const double a = static_cast<double>(std::max<std::int64_t>(images_seen, 0)) / window;
    return std::clamp(a, 0.0, 1.0);
}

}  // namespace ganaug::gan
