#include "ganaug/nn/layers.hpp"

#include <cmath>
#include <stdexcept>

namespace ganaug::nn {

using ag::Shape;
using ag::Tensor;

void append_params(ParamList& out, const std::string& prefix, const ParamList& params) {
    for (const auto& [name, t] : params) out.emplace_back(prefix + name, t);
}

std::size_t param_count(const ParamList& params) {
    std::size_t n = 0;
    for (const auto& p : params) n += p.second.numel();
    return n;
}

Conv2d::Conv2d(int in_channels, int out_channels, int kernel, bool equalized, Rng& rng, float gain)
    : in_(in_channels), out_(out_channels), kernel_(kernel) {
    if (in_channels <= 0 || out_channels <= 0 || kernel <= 0 || kernel % 2 == 0) {
        throw std::invalid_argument("Conv2d: bad geometry");
    }
    const float he = gain / std::sqrt(static_cast<float>(in_channels * kernel * kernel));
    runtime_scale_ = equalized ? he : 1.0f;
    const float init_std = equalized ? 1.0f : he;
    const Shape ws{out_channels, in_channels, kernel, kernel};
    std::vector<float> w(ws.numel());
    for (auto& v : w) v = rng.normal() * init_std;
    weight_ = Tensor::from(ws, std::move(w), true);
    bias_ = Tensor::zeros(Shape{1, out_channels, 1, 1}, true);
}

Tensor Conv2d::forward(const Tensor& x) const {
    const Tensor w = runtime_scale_ == 1.0f ? weight_ : ag::scale(weight_, runtime_scale_);
    Tensor y = ag::conv2d(x, w, kernel_ / 2);
    return ag::add(y, ag::broadcast_to(bias_, y.shape()));
}

ParamList Conv2d::params(const std::string& prefix) const {
    return {{prefix + "weight", weight_}, {prefix + "bias", bias_}};
}

Dense::Dense(int in_features, int out_features, bool equalized, Rng& rng, float gain)
    : conv_(in_features, out_features, 1, equalized, rng, gain) {}

Tensor Dense::forward(const Tensor& x) const {
    if (x.shape().h != 1 || x.shape().w != 1) throw std::invalid_argument("Dense expects [N,F,1,1], got " + x.shape().str());
    return conv_.forward(x);
}

Tensor pixel_norm(const Tensor& x, float eps) {
    const Shape s = x.shape();
    Tensor ms = ag::scale(ag::sum_to(ag::mul(x, x), Shape{s.n, 1, s.h, s.w}), 1.0f / static_cast<float>(s.c));
    Tensor inv = ag::pow_scalar(ag::add_scalar(ms, eps), -0.5f);
    return ag::mul(x, ag::broadcast_to(inv, s));
}

Tensor minibatch_stddev(const Tensor& x, float eps) {
    const Shape s = x.shape();
    const Shape per_feature{1, s.c, s.h, s.w};
    Tensor mean = ag::scale(ag::sum_to(x, per_feature), 1.0f / static_cast<float>(s.n));
    Tensor centered = ag::sub(x, ag::broadcast_to(mean, s));
    Tensor var = ag::scale(ag::sum_to(ag::mul(centered, centered), per_feature), 1.0f / static_cast<float>(s.n));
    Tensor stddev = ag::pow_scalar(ag::add_scalar(var, eps), 0.5f);
    Tensor avg = ag::mean_all(stddev);
    return ag::concat_channels(x, ag::broadcast_to(avg, Shape{s.n, 1, s.h, s.w}));
}

}  // namespace ganaug::nn
