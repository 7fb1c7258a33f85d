#pragma once
// Two-layer toy segmenter (3x3 conv + ReLU + 1x1 conv, softmax cross-entropy)
// and an independent double-precision re-implementation of its loss, used as
// the finite-difference oracle for gradient checks.

#include <cmath>
#include <cstdint>
#include <vector>

#include "ganaug/ag/ops.hpp"
#include "ganaug/nn/layers.hpp"
#include "ganaug/util/rng.hpp"

namespace toy {

struct ToySeg {
    int size = 8;
    int hidden = 4;
    int classes = 3;  // including background
    ganaug::nn::Conv2d conv1;
    ganaug::nn::Conv2d conv2;
    std::vector<float> image;
    std::vector<std::uint8_t> target;

    explicit ToySeg(std::uint64_t seed) {
        ganaug::Rng rng(seed);
        conv1 = ganaug::nn::Conv2d(1, hidden, 3, false, rng);
        conv2 = ganaug::nn::Conv2d(hidden, classes, 1, false, rng, 1.0f);
        // Non-zero biases so ReLU kinks are not clustered at the origin.
        for (auto& [name, t] : params())
            if (name.find("bias") != std::string::npos)
                for (auto& v : t.mutable_data()) v = static_cast<float>(rng.uniform(-0.3, 0.3));
        image.resize(static_cast<std::size_t>(size) * size);
        target.resize(image.size());
        for (auto& v : image) v = static_cast<float>(rng.uniform(-1.0, 1.0));
        for (auto& t : target) t = static_cast<std::uint8_t>(rng.index(classes));
    }

    ganaug::nn::ParamList params() const {
        ganaug::nn::ParamList out;
        ganaug::nn::append_params(out, "conv1.", conv1.params(""));
        ganaug::nn::append_params(out, "conv2.", conv2.params(""));
        return out;
    }

    ganaug::ag::Tensor loss() const {
        auto x = ganaug::ag::Tensor::from({1, 1, size, size}, image);
        auto h = ganaug::ag::relu(conv1.forward(x));
        return ganaug::ag::softmax_cross_entropy(conv2.forward(h), target);
    }

    /// Same loss computed from scratch in double precision with direct loops.
    /// `values` holds every parameter in params() order, flattened.
    double oracle_loss(const std::vector<double>& values) const {
        const int K = 3;
        std::size_t o = 0;
        const double* w1 = values.data() + o;
        o += static_cast<std::size_t>(hidden) * K * K;
        const double* b1 = values.data() + o;
        o += hidden;
        const double* w2 = values.data() + o;
        o += static_cast<std::size_t>(classes) * hidden;
        const double* b2 = values.data() + o;
        double total = 0;
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x) {
                std::vector<double> h(hidden);
                for (int c = 0; c < hidden; ++c) {
                    double s = b1[c];
                    for (int ky = 0; ky < K; ++ky)
                        for (int kx = 0; kx < K; ++kx) {
                            const int iy = y + ky - 1, ix = x + kx - 1;
                            if (iy < 0 || ix < 0 || iy >= size || ix >= size) continue;
                            s += w1[(c * K + ky) * K + kx] * image[iy * size + ix];
                        }
                    h[c] = s > 0 ? s : 0;
                }
                std::vector<double> z(classes);
                double zmax = -1e300;
                for (int k = 0; k < classes; ++k) {
                    z[k] = b2[k];
                    for (int c = 0; c < hidden; ++c) z[k] += w2[k * hidden + c] * h[c];
                    zmax = std::max(zmax, z[k]);
                }
                double lse = 0;
                for (int k = 0; k < classes; ++k) lse += std::exp(z[k] - zmax);
                total += zmax + std::log(lse) - z[target[y * size + x]];
            }
        return total / (size * size);
    }

    std::vector<double> flat_values() const {
        std::vector<double> v;
        for (const auto& [name, t] : params())
            for (float f : t.data()) v.push_back(f);
        return v;
    }
};

struct GradCheckResult {
    int coordinates = 0;
    double worst_relative_error = 0;
};

/// Compares autograd gradients with central differences of the double oracle
/// on `count` random coordinates.
inline GradCheckResult gradient_check(std::uint64_t seed, int count) {
    ToySeg net(seed);
    std::vector<ganaug::ag::Tensor> tensors;
    for (const auto& [name, t] : net.params()) tensors.push_back(t);
    const auto grads = ganaug::ag::grad(net.loss(), tensors);
    std::vector<double> analytic;
    for (const auto& g : grads)
        for (float f : g.data()) analytic.push_back(f);
    const std::vector<double> base = net.flat_values();

    ganaug::Rng rng(seed ^ 0x5eedULL);
    GradCheckResult r;
    const double h = 1e-6;
    for (int i = 0; i < count; ++i) {
        const std::size_t k = rng.index(base.size());
        auto plus = base, minus = base;
        plus[k] += h;
        minus[k] -= h;
        const double numeric = (net.oracle_loss(plus) - net.oracle_loss(minus)) / (2 * h);
        const double denom = std::max({std::abs(numeric), std::abs(analytic[k]), 1e-3});
        r.worst_relative_error = std::max(r.worst_relative_error, std::abs(numeric - analytic[k]) / denom);
        ++r.coordinates;
    }
    return r;
}

}  // namespace toy
