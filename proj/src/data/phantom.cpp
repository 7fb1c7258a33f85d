#include "ganaug/data/phantom.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "ganaug/util/error.hpp"
#include "ganaug/util/rng.hpp"

namespace ganaug::data {
namespace {

constexpr float kAir = 0.0f;
constexpr float kBone = 100.0f;
constexpr float kBrain = 58.0f;
constexpr float kCsf = 22.0f;
constexpr float kLesion = 92.0f;

struct Head {
    double cy, cx;    // centre (pixels)
    double a, b;      // semi-axes: a along the head's long axis, b lateral
    double cos_t, sin_t;

    // Head-local coordinates: u points inferior, v lateral, both in pixels.
    void local(double y, double x, double& u, double& v) const {
        const double dy = y - cy;
        const double dx = x - cx;
        u = cos_t * dy + sin_t * dx;
        v = -sin_t * dy + cos_t * dx;
    }
    double radius(double u, double v) const { return std::sqrt((u / a) * (u / a) + (v / b) * (v / b)); }
};

struct Texture {
    std::array<double, 4> fy, fx, phase, amp;
    double at(double y, double x) const {
        double s = 0.0;
        for (int i = 0; i < 4; ++i) s += amp[i] * std::sin(fy[i] * y + fx[i] * x + phase[i]);
        return s;
    }
};

Texture make_texture(Rng& rng, double amplitude) {
    Texture t;
    for (int i = 0; i < 4; ++i) {
        t.fy[i] = rng.uniform(0.05, 0.25);
        t.fx[i] = rng.uniform(0.05, 0.25);
        t.phase[i] = rng.uniform(0.0, 2.0 * std::numbers::pi);
        t.amp[i] = amplitude * rng.uniform(0.4, 1.0);
    }
    return t;
}

Head make_head(const PhantomParams& p, Rng& rng, bool random_orientation) {
    Head h;
    h.cy = p.height / 2.0 + rng.uniform(-0.05, 0.05) * p.height;
    h.cx = p.width / 2.0 + rng.uniform(-0.05, 0.05) * p.width;
    const double s = std::min(p.height, p.width);
    h.a = 0.40 * s * rng.uniform(0.9, 1.05);
    h.b = 0.33 * s * rng.uniform(0.9, 1.05);
    const double theta = random_orientation ? rng.uniform(-std::numbers::pi, std::numbers::pi) : rng.uniform(-0.1, 0.1);
    h.cos_t = std::cos(theta);
    h.sin_t = std::sin(theta);
    return h;
}

void csf_slice(const PhantomParams& p, const Head& head, double ventricle_scale, int lobes, double rim_phase,
               const Texture& tex, Rng& rng, float* img, std::uint8_t* lab) {
    const double stem_u = 0.60 * head.a;
    const double stem_ra = 0.20 * head.a;
    const double stem_rb = 0.22 * head.b;
    for (int y = 0; y < p.height; ++y)
        for (int x = 0; x < p.width; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * p.width + x;
            double u, v;
            head.local(y + 0.5, x + 0.5, u, v);
            const double rho = head.radius(u, v);
            float value = kAir;
            std::uint8_t label = 0;
            if (rho < 1.0) {
                value = kBrain + static_cast<float>(tex.at(y, x));
                // Cortical CSF ribbon with gyral modulation of its inner edge.
                const double phi = std::atan2(v / head.b, u / head.a);
                const double inner = 0.90 + 0.025 * std::sin(7.0 * phi + rim_phase);
                if (rho > inner) label = 2;
                // Ventricles: symmetric lobes either side of the midline.
                for (int k = 0; k < lobes; ++k) {
                    const double side = (k % 2 == 0) ? 1.0 : -1.0;
                    const double vu = (-0.10 - 0.08 * (k / 2)) * head.a;
                    const double vv = side * 0.12 * head.b;
                    const double ru = 0.25 * head.a * ventricle_scale;
                    const double rv = 0.09 * head.b * ventricle_scale;
                    const double du = (u - vu) / ru;
                    const double dv = (v - vv) / rv;
                    if (du * du + dv * dv < 1.0) label = 1;
                }
                // Brain-stem CSF: ring around the inferior stem.
                const double su = (u - stem_u) / stem_ra;
                const double sv = v / stem_rb;
                const double sr = std::sqrt(su * su + sv * sv);
                if (sr < 1.0 && sr > 0.45) label = 3;
                if (label != 0) value = kCsf + static_cast<float>(0.3 * tex.at(x, y));
            } else if (rho < 1.08) {
                value = kBone;
            }
            img[i] = value + static_cast<float>(p.noise_std) * rng.normal();
            lab[i] = label;
        }
}

void lesion_slice(const PhantomParams& p, const Head& head, const Texture& tex, Rng& rng, float* img,
                  std::uint8_t* lab) {
    struct Blob {
        double u, v, r;
    };
    std::vector<Blob> blobs;
    const int n = 1 + static_cast<int>(rng.index(static_cast<std::size_t>(p.structures_per_class)));
    for (int k = 0; k < n; ++k) {
        // Rejection-sample a centre well inside the brain.
        for (int attempt = 0; attempt < 100; ++attempt) {
            const double u = rng.uniform(-0.8, 0.8) * head.a;
            const double v = rng.uniform(-0.8, 0.8) * head.b;
            if (head.radius(u, v) < 0.75) {
                blobs.push_back({u, v, rng.uniform(p.lesion_radius_min, p.lesion_radius_max)});
                break;
            }
        }
    }
    for (int y = 0; y < p.height; ++y)
        for (int x = 0; x < p.width; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * p.width + x;
            double u, v;
            head.local(y + 0.5, x + 0.5, u, v);
            float value = kAir;
            std::uint8_t label = 0;
            if (head.radius(u, v) < 1.0) {
                value = 0.8f * kBrain + static_cast<float>(tex.at(y, x));
                for (const auto& bl : blobs) {
                    const double du = u - bl.u;
                    const double dv = v - bl.v;
                    if (du * du + dv * dv < bl.r * bl.r) {
                        label = 1;
                        value = kLesion;
                    }
                }
            }
            img[i] = value + static_cast<float>(p.noise_std) * rng.normal();
            lab[i] = label;
        }
}

}  // namespace

ChannelSpec phantom_spec(int classes) { return classes == 3 ? ChannelSpec::csf3() : ChannelSpec::wmh1(); }

std::vector<Volume> generate_phantom_volumes(const PhantomParams& params, std::uint64_t seed) {
    if (params.n_volumes <= 0 || params.slices <= 0 || params.height <= 0 || params.width <= 0) {
        throw ValidationError("phantom: counts and sizes must be positive");
    }
    if (params.classes != 1 && params.classes != 3) throw ValidationError("phantom: classes must be 1 or 3");
    if (params.structures_per_class <= 0) throw ValidationError("phantom: structures_per_class must be positive");
    const int min_side = std::min(params.height, params.width);
    if (min_side < 24) throw ValidationError("phantom: structures do not fit in slices smaller than 24x24");
    if (params.classes == 1 &&
        (params.lesion_radius_min <= 0 || params.lesion_radius_max < params.lesion_radius_min ||
         2.0 * params.lesion_radius_max > 0.3 * min_side)) {
        throw ValidationError("phantom: lesion size range does not fit in a " + std::to_string(params.height) + "x" +
                              std::to_string(params.width) + " slice");
    }
    if (params.classes == 3 && params.structures_per_class > 4) {
        throw ValidationError("phantom: at most 4 ventricle lobes fit inside the head");
    }

    std::vector<Volume> out;
    out.reserve(params.n_volumes);
    for (int n = 0; n < params.n_volumes; ++n) {
        Rng rng(derive_seed(seed, "phantom/" + std::to_string(n)));
        Volume v;
        char id[32];
        std::snprintf(id, sizeof id, "phantom_%03d", n);
        v.id = id;
        v.slices = params.slices;
        v.height = params.height;
        v.width = params.width;
        v.image.resize(static_cast<std::size_t>(v.slices) * v.slice_size());
        v.labels.resize(v.image.size());
        const Head head = make_head(params, rng, params.classes == 3);
        const double ventricle_scale = rng.uniform(0.85, 1.35);
        const double rim_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const Texture tex = make_texture(rng, 4.0);
        for (int s = 0; s < v.slices; ++s) {
            float* img = v.image.data() + s * v.slice_size();
            std::uint8_t* lab = v.labels.data() + s * v.slice_size();
            // Neighbouring slices vary slightly around the volume's anatomy.
            const double z = v.slices == 1 ? 0.0 : (2.0 * s / (v.slices - 1) - 1.0);
            if (params.classes == 3) {
                csf_slice(params, head, ventricle_scale * (1.0 - 0.15 * z * z), params.structures_per_class,
                          rim_phase + 0.5 * z, tex, rng, img, lab);
            } else {
                lesion_slice(params, head, tex, rng, img, lab);
            }
        }
        out.push_back(std::move(v));
    }
    return out;
}

}  // namespace ganaug::data
