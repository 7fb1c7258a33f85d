#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ganaug::data {

struct ChannelSpec {
    int image_channels = 1;
    int label_classes = 1;
    std::vector<std::string> class_names;

    void validate() const;
    bool operator==(const ChannelSpec&) const = default;

    /// Three CSF classes, ordered ventricular, cortical, brain stem.
    static ChannelSpec csf3();
    /// Single white-matter-hyperintensity class.
    static ChannelSpec wmh1();
};

/// A stack of 2D slices. Image intensities are float; labels hold class
/// indices in {0..C} with 0 for background. Both are slice-major, row-major.
struct Volume {
    std::string id;
    int slices = 0;
    int height = 0;
    int width = 0;
    std::vector<float> image;
    std::vector<std::uint8_t> labels;

    std::size_t slice_size() const { return static_cast<std::size_t>(height) * width; }
    std::span<const float> image_slice(int s) const { return {image.data() + s * slice_size(), slice_size()}; }
    std::span<const std::uint8_t> label_slice(int s) const { return {labels.data() + s * slice_size(), slice_size()}; }
    std::span<float> image_slice(int s) { return {image.data() + s * slice_size(), slice_size()}; }

    /// Throws ValidationError when shapes disagree or a label exceeds `classes`.
    void validate(int classes) const;
};

struct PatchOrigin {
    std::string volume_id;
    int slice = 0;
    int row = 0;  // top-left corner inside the slice
    int col = 0;
    bool operator==(const PatchOrigin&) const = default;
};

/// Square image+label patch. Labels are stored as a class-index grid, which
/// is the one-hot channel stack with at most one active channel per pixel;
/// label_channels() expands it.
struct Patch {
    int size = 0;
    std::vector<float> image;          // size*size, in [-1, 1]
    std::vector<std::uint8_t> labels;  // size*size, values in {0..C}
    std::optional<PatchOrigin> origin; // present iff real
    bool is_synthetic = false;

    std::size_t pixels() const { return static_cast<std::size_t>(size) * size; }
    std::vector<std::uint8_t> label_channels(int classes) const;
    bool operator==(const Patch&) const = default;
};

class PatchSet {
public:
    PatchSet() = default;
    PatchSet(ChannelSpec spec, int patch_size);

    const ChannelSpec& spec() const { return spec_; }
    int patch_size() const { return patch_size_; }
    std::size_t size() const { return patches_.size(); }
    bool empty() const { return patches_.empty(); }
    std::size_t real_count() const { return patches_.size() - synthetic_; }
    std::size_t synthetic_count() const { return synthetic_; }

    /// Validates shape, label range and the origin/synthetic pairing.
    void add(Patch patch);
    const Patch& operator[](std::size_t i) const { return patches_[i]; }
    const std::vector<Patch>& patches() const { return patches_; }

    /// Content hash over every patch's image bytes, labels and origin, in order.
    std::uint64_t content_hash() const;

private:
    ChannelSpec spec_;
    int patch_size_ = 0;
    std::vector<Patch> patches_;
    std::size_t synthetic_ = 0;
};

/// Channel k is 1 exactly where grid == k+1. Output is channel-major (C x N).
std::vector<std::uint8_t> labels_to_channels(std::span<const std::uint8_t> grid, int classes);
/// Inverse of labels_to_channels; rejects pixels with more than one active channel.
std::vector<std::uint8_t> channels_to_labels(std::span<const std::uint8_t> channels, int classes);

}  // namespace ganaug::data
