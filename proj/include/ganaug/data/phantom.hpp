#pragma once

#include <cstdint>
#include <vector>

#include "ganaug/data/types.hpp"

namespace ganaug::data {

/// Procedural stand-in for head CT (3 CSF classes) or FLAIR-like (1 lesion
/// class) slices. Intensities are raw (unnormalized) units.
struct PhantomParams {
    int n_volumes = 20;
    int slices = 1;
    int height = 96;
    int width = 96;
    int classes = 3;
    /// Ventricle lobes per slice (classes = 3) or maximum lesions (classes = 1).
    int structures_per_class = 2;
    double lesion_radius_min = 1.5;
    double lesion_radius_max = 4.0;
    double noise_std = 3.0;
};

std::vector<Volume> generate_phantom_volumes(const PhantomParams& params, std::uint64_t seed);

ChannelSpec phantom_spec(int classes);

}  // namespace ganaug::data
