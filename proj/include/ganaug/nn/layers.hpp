#pragma once

#include <string>
#include <utility>
#include <vector>

#include "ganaug/ag/ops.hpp"
#include "ganaug/util/rng.hpp"

namespace ganaug::nn {

/// Ordered, named parameter list. Tensors share storage with the owning layer.
using ParamList = std::vector<std::pair<std::string, ag::Tensor>>;

void append_params(ParamList& out, const std::string& prefix, const ParamList& params);
std::size_t param_count(const ParamList& params);

/// Square-kernel "same" convolution with bias. With equalized learning rate
/// the stored weights are unit-variance and scaled by gain/sqrt(fan_in) on
/// every forward pass; otherwise that scale is folded into the initial values.
class Conv2d {
public:
    Conv2d() = default;
    Conv2d(int in_channels, int out_channels, int kernel, bool equalized, Rng& rng, float gain = 1.41421356f);

    ag::Tensor forward(const ag::Tensor& x) const;
    ParamList params(const std::string& prefix) const;

    int in_channels() const { return in_; }
    int out_channels() const { return out_; }

private:
    int in_ = 0;
    int out_ = 0;
    int kernel_ = 1;
    float runtime_scale_ = 1.0f;
    ag::Tensor weight_;
    ag::Tensor bias_;
};

/// Fully connected layer over [N, F, 1, 1] tensors.
class Dense {
public:
    Dense() = default;
    Dense(int in_features, int out_features, bool equalized, Rng& rng, float gain = 1.41421356f);

    ag::Tensor forward(const ag::Tensor& x) const;
    ParamList params(const std::string& prefix) const { return conv_.params(prefix); }

private:
    Conv2d conv_;
};

/// x / sqrt(mean_c(x^2) + eps) at every pixel.
ag::Tensor pixel_norm(const ag::Tensor& x, float eps = 1e-8f);

/// Appends one channel holding the mean (over features and pixels) of the
/// across-batch standard deviation.
ag::Tensor minibatch_stddev(const ag::Tensor& x, float eps = 1e-8f);

}  // namespace ganaug::nn
