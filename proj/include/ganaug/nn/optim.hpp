#pragma once

#include <cstdint>
#include <vector>

#include "ganaug/nn/layers.hpp"

namespace ganaug::nn {

struct AdamOptions {
    float learning_rate = 1e-3f;
    float beta1 = 0.9f;
    float beta2 = 0.999f;
    float eps = 1e-8f;
};

class Adam {
public:
    Adam() = default;
    Adam(ParamList params, AdamOptions options);

    /// Applies one update; `grads` are aligned with the parameter list.
    void step(const std::vector<ag::Tensor>& grads);

    const ParamList& params() const { return params_; }
    std::vector<ag::Tensor> param_tensors() const;
    std::int64_t steps() const { return t_; }

    /// Moment buffers as named tensors ("m/<param>", "v/<param>"), for checkpoints.
    ParamList state() const;
    void load_state(const ParamList& state, std::int64_t steps);

private:
    ParamList params_;
    AdamOptions opt_;
    std::vector<std::vector<float>> m_;
    std::vector<std::vector<float>> v_;
    std::int64_t t_ = 0;
};

}  // namespace ganaug::nn
