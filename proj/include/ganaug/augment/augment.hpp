#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "ganaug/data/types.hpp"
#include "ganaug/util/rng.hpp"

namespace ganaug::augment {

enum class Preset { none, gan, rotation, rotation_gan };

Preset parse_preset(std::string_view text);
std::string to_string(Preset preset);
bool uses_gan(Preset preset);
bool uses_rotation(Preset preset);

struct ReflectionSettings {
    bool enabled = true;
    double probability = 0.5;
};

struct RotationSettings {
    bool enabled = false;
    double max_degrees = 180.0;
};

struct AugmentationPolicy {
    ReflectionSettings reflect;
    RotationSettings rotation;
    double gan_mix_percent = 0.0;

    void validate() const;
    /// Reflection is on in every preset; rotation follows the preset name.
    static AugmentationPolicy from_preset(Preset preset, double gan_mix_percent = 0.0, double max_degrees = 180.0);
};

/// Left-right mirror of the image and labels together.
data::Patch mirror(const data::Patch& patch);
/// Mirrors with the given probability, otherwise returns the patch unchanged.
data::Patch apply_reflection(const data::Patch& patch, double probability, Rng& rng);

/// Rotation about the patch centre by `degrees` (counter-clockwise on screen).
/// Image: bilinear, labels: nearest neighbour; pixels whose source falls
/// outside the patch become intensity -1 / background.
data::Patch apply_rotation(const data::Patch& patch, double degrees);

/// On-the-fly geometric augmentation for one training draw.
data::Patch augment_patch(const data::Patch& patch, const AugmentationPolicy& policy, Rng& rng);

/// round-half-up(add_percent / 100 * real_count)
std::size_t synthetic_count_for(std::size_t real_count, double add_percent);

/// All real patches plus synthetic_count_for(...) patches drawn without
/// replacement from the pool, shuffled. Real patches are never dropped.
data::PatchSet mix_datasets(const data::PatchSet& real, const data::PatchSet& synth_pool, double add_percent,
                            std::uint64_t seed);

}  // namespace ganaug::augment
