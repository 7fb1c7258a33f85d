#pragma once

#include <filesystem>
#include <string_view>
#include <vector>

#include "ganaug/data/types.hpp"

namespace ganaug::data {

enum class VolumeFormat { nifti, raw_grid };

VolumeFormat parse_volume_format(std::string_view text);

/// Loads `<root>/<volume-id>/image.<ext>` + `label.<ext>` pairs in sorted id
/// order. nifti accepts .nii and .nii.gz; raw_grid uses .raw.
std::vector<Volume> load_volumes(const std::filesystem::path& root, VolumeFormat format, const ChannelSpec& spec);

/// Writes one volume in the same layout (creates `<root>/<id>/`).
void save_volume(const std::filesystem::path& root, const Volume& volume, VolumeFormat format, bool gzip = false);

// Raw-grid container: "GAPH", u32 slices, u32 height, u32 width, then
// little-endian float32 (image) or uint8 (label) samples.
void write_raw_image(const std::filesystem::path& path, const Volume& v);
void write_raw_labels(const std::filesystem::path& path, const Volume& v);
/// Reads a raw-grid file into `v` (image when float, labels when byte) and sets the shape.
void read_raw_grid(const std::filesystem::path& path, Volume& v, bool labels);

// Single-file NIfTI-1 (.nii or gzip-compressed .nii.gz), x = column, y = row, z = slice.
void write_nifti_image(const std::filesystem::path& path, const Volume& v);
void write_nifti_labels(const std::filesystem::path& path, const Volume& v);
void read_nifti(const std::filesystem::path& path, Volume& v, bool labels);

}  // namespace ganaug::data
