#pragma once

#include <cstdint>
#include <vector>

#include "ganaug/data/types.hpp"

namespace ganaug::data {

/// Linear rescale sending the volume's 1st percentile to -1 and 99th to +1,
/// clamped to [-1, 1]. Percentiles use linear interpolation between order
/// statistics.
Volume normalize_intensities(Volume volume);

double percentile(std::vector<float> values, double q);

/// Shuffles once per seed and keeps the first floor(fraction * N) volumes, so
/// a smaller fraction always selects a subset of a larger one.
std::vector<Volume> reduce_available_data(const std::vector<Volume>& volumes, double fraction, std::uint64_t seed);

/// Number of volumes reduce_available_data keeps.
std::size_t reduced_count(std::size_t total, double fraction);

/// Draws `count` patches: even draws are centred on a uniformly chosen
/// foreground pixel (pooled over all slices), odd draws on a uniform pixel of
/// a uniformly chosen slice. Centres are clamped so windows stay in bounds.
PatchSet sample_patches(const std::vector<Volume>& volumes, const ChannelSpec& spec, std::size_t count,
                        int patch_size, std::uint64_t seed);

/// Top-left corner for a patch centred at (row, col), clamped into the slice.
std::pair<int, int> clamp_window(int row, int col, int patch_size, int height, int width);

Patch extract_patch(const Volume& volume, int slice, int top, int left, int patch_size);

}  // namespace ganaug::data
