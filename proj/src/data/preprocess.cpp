#include "ganaug/data/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ganaug/util/error.hpp"
#include "ganaug/util/rng.hpp"

namespace ganaug::data {

double percentile(std::vector<float> values, double q) {
    if (values.empty()) throw ValidationError("percentile of empty set");
    const double pos = q / 100.0 * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    std::nth_element(values.begin(), values.begin() + lo, values.end());
    const double vlo = values[lo];
    const double vhi = hi == lo ? vlo : *std::min_element(values.begin() + lo + 1, values.end());
    return vlo + (pos - static_cast<double>(lo)) * (vhi - vlo);
}

Volume normalize_intensities(Volume volume) {
    for (float v : volume.image) {
        if (!std::isfinite(v)) throw ValidationError("volume '" + volume.id + "': non-finite intensity");
    }
    const double p1 = percentile(volume.image, 1.0);
    const double p99 = percentile(volume.image, 99.0);
    if (!(p99 > p1)) {
        throw ValidationError("volume '" + volume.id + "': constant intensity (p1 == p99), cannot normalize");
    }
    const double scale = 2.0 / (p99 - p1);
    for (float& v : volume.image) {
        const double y = (v - p1) * scale - 1.0;
        v = static_cast<float>(std::clamp(y, -1.0, 1.0));
    }
    return volume;
}

std::size_t reduced_count(std::size_t total, double fraction) {
    // The epsilon absorbs representation error, e.g. 0.29 * 100.
    return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(total) + 1e-9));
}

std::vector<Volume> reduce_available_data(const std::vector<Volume>& volumes, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction <= 1.0)) throw ValidationError("reduce_available_data: fraction must be in (0, 1]");
    if (volumes.empty()) throw ValidationError("reduce_available_data: no volumes");
    const std::size_t keep = reduced_count(volumes.size(), fraction);
    if (keep == 0) {
        throw ValidationError("reduce_available_data: fraction " + std::to_string(fraction) + " of " +
                              std::to_string(volumes.size()) + " volumes selects nothing; use a larger fraction");
    }
    std::vector<std::size_t> order(volumes.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(seed, "reduce"));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
    std::vector<Volume> out;
    out.reserve(keep);
    for (std::size_t i = 0; i < keep; ++i) out.push_back(volumes[order[i]]);
    return out;
}

std::pair<int, int> clamp_window(int row, int col, int patch_size, int height, int width) {
    const int top = std::clamp(row - patch_size / 2, 0, height - patch_size);
    const int left = std::clamp(col - patch_size / 2, 0, width - patch_size);
    return {top, left};
}

Patch extract_patch(const Volume& volume, int slice, int top, int left, int patch_size) {
    Patch p;
    p.size = patch_size;
    p.image.resize(p.pixels());
    p.labels.resize(p.pixels());
    const auto img = volume.image_slice(slice);
    const auto lab = volume.label_slice(slice);
    for (int r = 0; r < patch_size; ++r) {
        const std::size_t src = static_cast<std::size_t>(top + r) * volume.width + left;
        std::copy_n(img.begin() + src, patch_size, p.image.begin() + r * patch_size);
        std::copy_n(lab.begin() + src, patch_size, p.labels.begin() + r * patch_size);
    }
    p.origin = PatchOrigin{volume.id, slice, top, left};
    return p;
}

PatchSet sample_patches(const std::vector<Volume>& volumes, const ChannelSpec& spec, std::size_t count,
                        int patch_size, std::uint64_t seed) {
    PatchSet out(spec, patch_size);
    if (count == 0) return out;
    if (volumes.empty()) throw ValidationError("sample_patches: no volumes to sample from");
    for (const auto& v : volumes) {
        if (v.height < patch_size || v.width < patch_size) {
            throw ValidationError("sample_patches: patch size " + std::to_string(patch_size) +
                                  " exceeds slice size of volume '" + v.id + "'");
        }
    }

    struct SliceRef {
        std::uint32_t volume;
        std::uint32_t slice;
    };
    struct Pixel {
        std::uint32_t slice_ref;
        std::uint32_t offset;
    };
    std::vector<SliceRef> slices;
    std::vector<Pixel> foreground;
    for (std::size_t vi = 0; vi < volumes.size(); ++vi) {
        const auto& v = volumes[vi];
        for (int s = 0; s < v.slices; ++s) {
            const auto lab = v.label_slice(s);
            for (std::size_t i = 0; i < lab.size(); ++i)
                if (lab[i] != 0) foreground.push_back({static_cast<std::uint32_t>(slices.size()), static_cast<std::uint32_t>(i)});
            slices.push_back({static_cast<std::uint32_t>(vi), static_cast<std::uint32_t>(s)});
        }
    }

    Rng rng(derive_seed(seed, "patches"));
    for (std::size_t k = 0; k < count; ++k) {
        std::size_t ref;
        int row, col;
        if (k % 2 == 0 && !foreground.empty()) {
            const Pixel px = foreground[rng.index(foreground.size())];
            ref = px.slice_ref;
            const auto& v = volumes[slices[ref].volume];
            row = static_cast<int>(px.offset / v.width);
            col = static_cast<int>(px.offset % v.width);
        } else {
            ref = rng.index(slices.size());
            const auto& v = volumes[slices[ref].volume];
            row = static_cast<int>(rng.index(v.height));
            col = static_cast<int>(rng.index(v.width));
        }
        const auto& v = volumes[slices[ref].volume];
        const auto [top, left] = clamp_window(row, col, patch_size, v.height, v.width);
        out.add(extract_patch(v, static_cast<int>(slices[ref].slice), top, left, patch_size));
    }
    return out;
}

}  // namespace ganaug::data
