#include "ganaug/augment/augment.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

#include "ganaug/util/error.hpp"

namespace ganaug::augment {

Preset parse_preset(std::string_view text) {
    if (text == "none") return Preset::none;
    if (text == "gan") return Preset::gan;
    if (text == "rotation") return Preset::rotation;
    if (text == "rotation+gan" || text == "gan+rotation") return Preset::rotation_gan;
    throw ConfigError("unknown augmentation preset '" + std::string(text) +
                      "' (expected none|gan|rotation|rotation+gan)");
}

std::string to_string(Preset preset) {
    switch (preset) {
        case Preset::none: return "none";
        case Preset::gan: return "gan";
        case Preset::rotation: return "rotation";
        case Preset::rotation_gan: return "rotation+gan";
    }
    return "none";
}

bool uses_gan(Preset preset) { return preset == Preset::gan || preset == Preset::rotation_gan; }
bool uses_rotation(Preset preset) { return preset == Preset::rotation || preset == Preset::rotation_gan; }

void AugmentationPolicy::validate() const {
    if (reflect.probability < 0.0 || reflect.probability > 1.0) {
        throw ValidationError("augmentation: reflection probability must be in [0, 1]");
    }
    if (!(rotation.max_degrees > 0.0 && rotation.max_degrees <= 180.0)) {
        throw ValidationError("augmentation: max rotation must be in (0, 180]");
    }
    if (gan_mix_percent < 0.0) throw ValidationError("augmentation: GAN mix percent must be >= 0");
}

AugmentationPolicy AugmentationPolicy::from_preset(Preset preset, double gan_mix_percent, double max_degrees) {
    AugmentationPolicy p;
    p.reflect = {true, 0.5};
    p.rotation = {uses_rotation(preset), max_degrees};
    p.gan_mix_percent = uses_gan(preset) ? gan_mix_percent : 0.0;
    p.validate();
    return p;
}

data::Patch mirror(const data::Patch& patch) {
    data::Patch out = patch;
    const int n = patch.size;
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            out.image[r * n + c] = patch.image[r * n + (n - 1 - c)];
            out.labels[r * n + c] = patch.labels[r * n + (n - 1 - c)];
        }
    return out;
}

data::Patch apply_reflection(const data::Patch& patch, double probability, Rng& rng) {
    if (probability <= 0.0) return patch;
    return rng.bernoulli(probability) ? mirror(patch) : patch;
}

namespace {

// Removes floating residue so right-angle rotations land exactly on the grid.
double snap(double v) {
    const double r = std::round(v);
    return std::abs(v - r) < 1e-9 ? r : v;
}

}  // namespace

data::Patch apply_rotation(const data::Patch& patch, double degrees) {
    if (degrees == 0.0) return patch;
    const int n = patch.size;
    const double theta = degrees * std::numbers::pi / 180.0;
    const double cs = std::cos(theta);
    const double sn = std::sin(theta);
    const double centre = (n - 1) / 2.0;
    data::Patch out = patch;
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            const double dx = x - centre;
            const double dy = y - centre;
            const double sx = snap(centre + cs * dx + sn * dy);
            const double sy = snap(centre - sn * dx + cs * dy);
            const std::size_t o = static_cast<std::size_t>(y) * n + x;

            const bool inside = sx >= 0.0 && sy >= 0.0 && sx <= n - 1 && sy <= n - 1;
            if (!inside) {
                out.image[o] = -1.0f;
                out.labels[o] = 0;
                continue;
            }
            const int x0 = static_cast<int>(std::floor(sx));
            const int y0 = static_cast<int>(std::floor(sy));
            const int x1 = std::min(x0 + 1, n - 1);
            const int y1 = std::min(y0 + 1, n - 1);
            const double fx = sx - x0;
            const double fy = sy - y0;
            auto px = [&](int yy, int xx) { return static_cast<double>(patch.image[yy * n + xx]); };
            out.image[o] = static_cast<float>((1 - fy) * ((1 - fx) * px(y0, x0) + fx * px(y0, x1)) +
                                              fy * ((1 - fx) * px(y1, x0) + fx * px(y1, x1)));
            const int nx = static_cast<int>(std::lround(sx));
            const int ny = static_cast<int>(std::lround(sy));
            out.labels[o] = patch.labels[ny * n + nx];
        }
    return out;
}

data::Patch augment_patch(const data::Patch& patch, const AugmentationPolicy& policy, Rng& rng) {
    data::Patch out = policy.reflect.enabled ? apply_reflection(patch, policy.reflect.probability, rng) : patch;
    if (policy.rotation.enabled) {
        const double angle = rng.uniform(-policy.rotation.max_degrees, policy.rotation.max_degrees);
        out = apply_rotation(out, angle);
    }
    return out;
}

std::size_t synthetic_count_for(std::size_t real_count, double add_percent) {
    if (add_percent < 0.0) throw ValidationError("mix_datasets: add_percent must be >= 0");
    return static_cast<std::size_t>(std::floor(add_percent * static_cast<double>(real_count) / 100.0 + 0.5));
}

data::PatchSet mix_datasets(const data::PatchSet& real, const data::PatchSet& synth_pool, double add_percent,
                            std::uint64_t seed) {
    if (real.empty()) throw ValidationError("mix_datasets: real set is empty");
    const std::size_t needed = synthetic_count_for(real.size(), add_percent);
    if (needed > synth_pool.size()) {
        throw ValidationError("mix_datasets: synthetic pool too small (need " + std::to_string(needed) + ", have " +
                              std::to_string(synth_pool.size()) + ")");
    }
    if (needed > 0 && (synth_pool.patch_size() != real.patch_size() || !(synth_pool.spec() == real.spec()))) {
        throw ValidationError("mix_datasets: synthetic pool shape or channel spec differs from the real set");
    }
    Rng rng(derive_seed(seed, "mix"));
    std::vector<std::size_t> pool(synth_pool.size());
    std::iota(pool.begin(), pool.end(), 0);
    // Partial Fisher-Yates: the first `needed` entries are a uniform draw without replacement.
    for (std::size_t i = 0; i < needed; ++i) std::swap(pool[i], pool[i + rng.index(pool.size() - i)]);

    // Entry >= 0 indexes the real set, negative entries the chosen synthetic patches.
    std::vector<std::ptrdiff_t> order;
    order.reserve(real.size() + needed);
    for (std::size_t i = 0; i < real.size(); ++i) order.push_back(static_cast<std::ptrdiff_t>(i));
    for (std::size_t i = 0; i < needed; ++i) order.push_back(-1 - static_cast<std::ptrdiff_t>(pool[i]));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);

    data::PatchSet out(real.spec(), real.patch_size());
    for (auto e : order) out.add(e >= 0 ? real[static_cast<std::size_t>(e)] : synth_pool[static_cast<std::size_t>(-1 - e)]);
    return out;
}

}  // namespace ganaug::augment
