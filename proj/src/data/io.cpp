#include "ganaug/data/io.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <spdlog/spdlog.h>

#include "ganaug/util/error.hpp"

namespace fs = std::filesystem;

namespace ganaug::data {

VolumeFormat parse_volume_format(std::string_view text) {
    if (text == "nifti" || text == "nii") return VolumeFormat::nifti;
    if (text == "raw-grid" || text == "raw") return VolumeFormat::raw_grid;
    throw ConfigError("unknown volume format '" + std::string(text) + "' (expected nifti|raw-grid)");
}

namespace {

// Reads through zlib so that plain and gzip-compressed files share one path.
std::vector<unsigned char> read_all(const fs::path& path) {
    gzFile f = gzopen(path.c_str(), "rb");
    if (!f) throw IoError("cannot open " + path.string());
    std::vector<unsigned char> out;
    unsigned char buf[1 << 16];
    int n;
    while ((n = gzread(f, buf, sizeof buf)) > 0) out.insert(out.end(), buf, buf + n);
    const bool failed = n < 0;
    gzclose(f);
    if (failed) throw IoError("read error in " + path.string());
    return out;
}

void write_all(const fs::path& path, const std::vector<unsigned char>& bytes) {
    const bool gz = path.extension() == ".gz";
    if (gz) {
        gzFile f = gzopen(path.c_str(), "wb");
        if (!f) throw IoError("cannot write " + path.string());
        const int n = gzwrite(f, bytes.data(), static_cast<unsigned>(bytes.size()));
        gzclose(f);
        if (n != static_cast<int>(bytes.size())) throw IoError("short write to " + path.string());
        return;
    }
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot write " + path.string());
    os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw IoError("short write to " + path.string());
}

template <class T>
void put(std::vector<unsigned char>& out, std::size_t offset, T value) {
    std::memcpy(out.data() + offset, &value, sizeof value);
}

template <class T>
T get(const std::vector<unsigned char>& in, std::size_t offset) {
    T value;
    std::memcpy(&value, in.data() + offset, sizeof value);
    return value;
}

std::vector<unsigned char> raw_header(const Volume& v) {
    std::vector<unsigned char> out(16);
    std::memcpy(out.data(), "GAPH", 4);
    put<std::uint32_t>(out, 4, static_cast<std::uint32_t>(v.slices));
    put<std::uint32_t>(out, 8, static_cast<std::uint32_t>(v.height));
    put<std::uint32_t>(out, 12, static_cast<std::uint32_t>(v.width));
    return out;
}

void set_shape(Volume& v, int slices, int height, int width, const fs::path& path) {
    if (slices <= 0 || height <= 0 || width <= 0) throw IoError(path.string() + ": empty grid");
    if (v.slices != 0 && (v.slices != slices || v.height != height || v.width != width)) {
        throw ValidationError("volume '" + v.id + "': image and label shapes differ (" + path.string() + ")");
    }
    v.slices = slices;
    v.height = height;
    v.width = width;
}

constexpr std::size_t kNiftiHeader = 348;
constexpr std::size_t kNiftiOffset = 352;

std::vector<unsigned char> nifti_header(const Volume& v, std::int16_t datatype, std::int16_t bitpix) {
    std::vector<unsigned char> h(kNiftiOffset, 0);
    put<std::int32_t>(h, 0, static_cast<std::int32_t>(kNiftiHeader));
    const std::int16_t dims[8] = {3, static_cast<std::int16_t>(v.width), static_cast<std::int16_t>(v.height),
                                  static_cast<std::int16_t>(v.slices), 1, 1, 1, 1};
    for (int i = 0; i < 8; ++i) put<std::int16_t>(h, 40 + 2 * i, dims[i]);
    put<std::int16_t>(h, 70, datatype);
    put<std::int16_t>(h, 72, bitpix);
    for (int i = 0; i < 8; ++i) put<float>(h, 76 + 4 * i, 1.0f);
    put<float>(h, 108, static_cast<float>(kNiftiOffset));
    put<float>(h, 112, 0.0f);  // scl_slope 0 = no scaling
    std::memcpy(h.data() + 344, "n+1\0", 4);
    return h;
}

}  // namespace

void write_raw_image(const fs::path& path, const Volume& v) {
    auto out = raw_header(v);
    const auto* bytes = reinterpret_cast<const unsigned char*>(v.image.data());
    out.insert(out.end(), bytes, bytes + v.image.size() * sizeof(float));
    write_all(path, out);
}

void write_raw_labels(const fs::path& path, const Volume& v) {
    auto out = raw_header(v);
    out.insert(out.end(), v.labels.begin(), v.labels.end());
    write_all(path, out);
}

void read_raw_grid(const fs::path& path, Volume& v, bool labels) {
    const auto bytes = read_all(path);
    if (bytes.size() < 16 || std::memcmp(bytes.data(), "GAPH", 4) != 0) {
        throw IoError(path.string() + " is not a raw-grid file");
    }
    const int slices = static_cast<int>(get<std::uint32_t>(bytes, 4));
    const int height = static_cast<int>(get<std::uint32_t>(bytes, 8));
    const int width = static_cast<int>(get<std::uint32_t>(bytes, 12));
    set_shape(v, slices, height, width, path);
    const std::size_t n = static_cast<std::size_t>(slices) * height * width;
    const std::size_t expected = 16 + n * (labels ? 1 : sizeof(float));
    if (bytes.size() != expected) throw IoError(path.string() + ": payload size does not match header");
    if (labels) {
        v.labels.assign(bytes.begin() + 16, bytes.end());
    } else {
        v.image.resize(n);
        std::memcpy(v.image.data(), bytes.data() + 16, n * sizeof(float));
    }
}

void write_nifti_image(const fs::path& path, const Volume& v) {
    auto out = nifti_header(v, 16, 32);
    const auto* bytes = reinterpret_cast<const unsigned char*>(v.image.data());
    out.insert(out.end(), bytes, bytes + v.image.size() * sizeof(float));
    write_all(path, out);
}

void write_nifti_labels(const fs::path& path, const Volume& v) {
    auto out = nifti_header(v, 2, 8);
    out.insert(out.end(), v.labels.begin(), v.labels.end());
    write_all(path, out);
}

void read_nifti(const fs::path& path, Volume& v, bool labels) {
    const auto bytes = read_all(path);
    if (bytes.size() < kNiftiHeader || get<std::int32_t>(bytes, 0) != static_cast<std::int32_t>(kNiftiHeader)) {
        throw IoError(path.string() + " is not a little-endian NIfTI-1 file");
    }
    const auto ndim = get<std::int16_t>(bytes, 40);
    if (ndim < 2 || ndim > 4) throw IoError(path.string() + ": unsupported dimensionality " + std::to_string(ndim));
    const int width = get<std::int16_t>(bytes, 42);
    const int height = get<std::int16_t>(bytes, 44);
    const int slices = ndim >= 3 ? get<std::int16_t>(bytes, 46) : 1;
    if (ndim == 4 && get<std::int16_t>(bytes, 48) > 1) throw IoError(path.string() + ": 4D series are not supported");
    set_shape(v, slices, height, width, path);
    const auto datatype = get<std::int16_t>(bytes, 70);
    const auto offset = static_cast<std::size_t>(get<float>(bytes, 108));
    float slope = get<float>(bytes, 112);
    const float inter = get<float>(bytes, 116);
    if (slope == 0.0f || !std::isfinite(slope)) slope = 1.0f;
    const std::size_t n = static_cast<std::size_t>(slices) * height * width;

    std::size_t elem = 0;
    switch (datatype) {
        case 2: case 256: elem = 1; break;
        case 4: case 512: elem = 2; break;
        case 8: case 16: elem = 4; break;
        case 64: elem = 8; break;
        default: throw IoError(path.string() + ": unsupported NIfTI datatype " + std::to_string(datatype));
    }
    if (bytes.size() < offset + n * elem) throw IoError(path.string() + ": truncated voxel data");
    auto sample = [&](std::size_t i) -> double {
        const std::size_t at = offset + i * elem;
        switch (datatype) {
            case 2: return bytes[at];
            case 256: return static_cast<std::int8_t>(bytes[at]);
            case 4: return get<std::int16_t>(bytes, at);
            case 512: return get<std::uint16_t>(bytes, at);
            case 8: return get<std::int32_t>(bytes, at);
            case 16: return get<float>(bytes, at);
            default: return get<double>(bytes, at);
        }
    };
    if (labels) {
        v.labels.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double value = std::round(sample(i));
            if (value < 0 || value > 255) throw ValidationError(path.string() + ": label value out of byte range");
            v.labels[i] = static_cast<std::uint8_t>(value);
        }
    } else {
        v.image.resize(n);
        for (std::size_t i = 0; i < n; ++i) v.image[i] = static_cast<float>(sample(i) * slope + inter);
    }
}

namespace {

std::optional<fs::path> find_member(const fs::path& dir, const std::string& stem, VolumeFormat format) {
    const std::vector<std::string> exts =
        format == VolumeFormat::nifti ? std::vector<std::string>{".nii", ".nii.gz"} : std::vector<std::string>{".raw"};
    for (const auto& ext : exts) {
        fs::path p = dir / (stem + ext);
        if (fs::exists(p)) return p;
    }
    return std::nullopt;
}

}  // namespace

std::vector<Volume> load_volumes(const fs::path& root, VolumeFormat format, const ChannelSpec& spec) {
    spec.validate();
    if (!fs::is_directory(root)) throw IoError("dataset root " + root.string() + " is not a directory");
    std::vector<fs::path> dirs;
    for (const auto& entry : fs::directory_iterator(root))
        if (entry.is_directory()) dirs.push_back(entry.path());
    std::sort(dirs.begin(), dirs.end());

    std::vector<Volume> out;
    for (const auto& dir : dirs) {
        const auto image = find_member(dir, "image", format);
        if (!image) continue;
        const auto label = find_member(dir, "label", format);
        Volume v;
        v.id = dir.filename().string();
        if (!label) throw ValidationError("volume '" + v.id + "': missing label file next to " + image->string());
        if (format == VolumeFormat::nifti) {
            read_nifti(*image, v, false);
            read_nifti(*label, v, true);
        } else {
            read_raw_grid(*image, v, false);
            read_raw_grid(*label, v, true);
        }
        v.validate(spec.label_classes);
        out.push_back(std::move(v));
    }
    if (out.empty()) spdlog::warn("no volumes found under {}", root.string());
    return out;
}

void save_volume(const fs::path& root, const Volume& volume, VolumeFormat format, bool gzip) {
    const fs::path dir = root / volume.id;
    fs::create_directories(dir);
    if (format == VolumeFormat::nifti) {
        const std::string ext = gzip ? ".nii.gz" : ".nii";
        write_nifti_image(dir / ("image" + ext), volume);
        write_nifti_labels(dir / ("label" + ext), volume);
    } else {
        write_raw_image(dir / "image.raw", volume);
        write_raw_labels(dir / "label.raw", volume);
    }
}

}  // namespace ganaug::data
