#include "ganaug/data/types.hpp"

#include "ganaug/util/error.hpp"
#include "ganaug/util/rng.hpp"

namespace ganaug::data {

void ChannelSpec::validate() const {
    if (image_channels < 1) throw ValidationError("ChannelSpec: image_channels must be >= 1");
    if (label_classes < 1) throw ValidationError("ChannelSpec: label_classes must be >= 1");
    if (class_names.size() != static_cast<std::size_t>(label_classes)) {
        throw ValidationError("ChannelSpec: expected " + std::to_string(label_classes) + " class names, got " +
                              std::to_string(class_names.size()));
    }
}

ChannelSpec ChannelSpec::csf3() { return {1, 3, {"ventricular", "cortical", "brain-stem"}}; }

ChannelSpec ChannelSpec::wmh1() { return {1, 1, {"wmh"}}; }

void Volume::validate(int classes) const {
    if (slices <= 0 || height <= 0 || width <= 0) throw ValidationError("volume '" + id + "': empty shape");
    const std::size_t n = static_cast<std::size_t>(slices) * slice_size();
    if (image.size() != n || labels.size() != n) {
        throw ValidationError("volume '" + id + "': image and label grids do not match the declared shape");
    }
    for (std::uint8_t v : labels) {
        if (v > classes) {
            throw ValidationError("volume '" + id + "': label value " + std::to_string(v) + " exceeds class count " +
                                  std::to_string(classes));
        }
    }
}

std::vector<std::uint8_t> Patch::label_channels(int classes) const { return labels_to_channels(labels, classes); }

PatchSet::PatchSet(ChannelSpec spec, int patch_size) : spec_(std::move(spec)), patch_size_(patch_size) {
    spec_.validate();
    if (patch_size <= 0) throw ValidationError("PatchSet: patch size must be positive");
}

void PatchSet::add(Patch patch) {
    if (patch.size != patch_size_ || patch.image.size() != patch.pixels() || patch.labels.size() != patch.pixels()) {
        throw ValidationError("PatchSet::add: patch shape does not match set size " + std::to_string(patch_size_));
    }
    for (std::uint8_t v : patch.labels) {
        if (v > spec_.label_classes) throw ValidationError("PatchSet::add: label value out of range");
    }
    if (patch.is_synthetic == patch.origin.has_value()) {
        throw ValidationError("PatchSet::add: real patches need an origin and synthetic ones must not have one");
    }
    if (patch.is_synthetic) ++synthetic_;
    patches_.push_back(std::move(patch));
}

std::uint64_t PatchSet::content_hash() const {
    std::uint64_t h = fnv1a(std::to_string(patch_size_) + "/" + std::to_string(spec_.label_classes));
    for (const auto& p : patches_) {
        h = fnv1a_bytes(p.image.data(), p.image.size() * sizeof(float), h);
        h = fnv1a_bytes(p.labels.data(), p.labels.size(), h);
        if (p.origin) {
            h = fnv1a(p.origin->volume_id + ":" + std::to_string(p.origin->slice) + ":" + std::to_string(p.origin->row) +
                          ":" + std::to_string(p.origin->col),
                      h);
        } else {
            h = fnv1a("synthetic", h);
        }
    }
    return h;
}

std::vector<std::uint8_t> labels_to_channels(std::span<const std::uint8_t> grid, int classes) {
    if (classes < 1) throw ValidationError("labels_to_channels: classes must be >= 1");
    const std::size_t n = grid.size();
    std::vector<std::uint8_t> out(static_cast<std::size_t>(classes) * n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const int v = grid[i];
        if (v > classes) throw ValidationError("labels_to_channels: value " + std::to_string(v) + " out of range");
        if (v > 0) out[(v - 1) * n + i] = 1;
    }
    return out;
}

std::vector<std::uint8_t> channels_to_labels(std::span<const std::uint8_t> channels, int classes) {
    if (classes < 1 || channels.size() % classes != 0) throw ValidationError("channels_to_labels: bad channel stack");
    const std::size_t n = channels.size() / classes;
    std::vector<std::uint8_t> out(n, 0);
    for (int k = 0; k < classes; ++k)
        for (std::size_t i = 0; i < n; ++i) {
            if (!channels[k * n + i]) continue;
            if (out[i] != 0) throw ValidationError("channels_to_labels: pixel with more than one active class");
            out[i] = static_cast<std::uint8_t>(k + 1);
        }
    return out;
}

}  // namespace ganaug::data
