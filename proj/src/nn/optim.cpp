#include "ganaug/nn/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace ganaug::nn {

Adam::Adam(ParamList params, AdamOptions options) : params_(std::move(params)), opt_(options) {
    for (const auto& p : params_) {
        m_.emplace_back(p.second.numel(), 0.0f);
        v_.emplace_back(p.second.numel(), 0.0f);
    }
}

std::vector<ag::Tensor> Adam::param_tensors() const {
    std::vector<ag::Tensor> out;
    out.reserve(params_.size());
    for (const auto& p : params_) out.push_back(p.second);
    return out;
}

void Adam::step(const std::vector<ag::Tensor>& grads) {
    if (grads.size() != params_.size()) throw std::invalid_argument("Adam::step: gradient count mismatch");
    ++t_;
    const double bc1 = 1.0 - std::pow(static_cast<double>(opt_.beta1), static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(static_cast<double>(opt_.beta2), static_cast<double>(t_));
    const float step_size = static_cast<float>(opt_.learning_rate * std::sqrt(bc2) / bc1);
    for (std::size_t k = 0; k < params_.size(); ++k) {
        auto data = params_[k].second.mutable_data();
        const auto g = grads[k].data();
        auto& m = m_[k];
        auto& v = v_[k];
        for (std::size_t i = 0; i < data.size(); ++i) {
            m[i] = opt_.beta1 * m[i] + (1.0f - opt_.beta1) * g[i];
            v[i] = opt_.beta2 * v[i] + (1.0f - opt_.beta2) * g[i] * g[i];
            data[i] -= step_size * m[i] / (std::sqrt(v[i]) + opt_.eps);
        }
    }
}

ParamList Adam::state() const {
    ParamList out;
    for (std::size_t k = 0; k < params_.size(); ++k) {
        const auto& shape = params_[k].second.shape();
        out.emplace_back("m/" + params_[k].first, ag::Tensor::from(shape, m_[k]));
        out.emplace_back("v/" + params_[k].first, ag::Tensor::from(shape, v_[k]));
    }
    return out;
}

void Adam::load_state(const ParamList& state, std::int64_t steps) {
    if (state.size() != 2 * params_.size()) throw std::invalid_argument("Adam::load_state: size mismatch");
    for (std::size_t k = 0; k < params_.size(); ++k) {
        const auto& m = state[2 * k].second;
        const auto& v = state[2 * k + 1].second;
        if (m.numel() != m_[k].size() || v.numel() != v_[k].size()) {
            throw std::invalid_argument("Adam::load_state: buffer size mismatch for " + params_[k].first);
        }
        m_[k].assign(m.data().begin(), m.data().end());
        v_[k].assign(v.data().begin(), v.data().end());
    }
    t_ = steps;
}

}  // namespace ganaug::nn
