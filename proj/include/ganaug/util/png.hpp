#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace ganaug {

struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> rgb;  // row-major, 3 bytes per pixel

    RgbImage() = default;
    RgbImage(int w, int h, std::uint8_t fill = 0) : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3, fill) {}
    void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b);
};

/// 8-bit RGB PNG. Throws IoError when the file cannot be written.
void write_png(const std::filesystem::path& path, const RgbImage& image);
RgbImage read_png(const std::filesystem::path& path);

}  // namespace ganaug
