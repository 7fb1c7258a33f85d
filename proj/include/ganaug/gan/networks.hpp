#pragma once

#include <map>
#include <optional>

#include "ganaug/gan/schedule.hpp"
#include "ganaug/nn/layers.hpp"

namespace ganaug::gan {

struct GanConfig {
    int latent_dim = 64;
    int output_channels = 4;                   // image + C label channels
    std::optional<int> noise_inject_resolution;  // concatenated N(0,1) channel
    double gradient_penalty_weight = 10.0;
    double learning_rate = 1e-3;
    double adam_beta1 = 0.0;
    double adam_beta2 = 0.99;
    double epsilon_drift = 1e-3;
    std::map<int, int> batch_size;  // per resolution
    std::map<int, int> widths;      // feature maps per resolution

    /// Reduced widths for CPU-scale runs (target 64, five levels).
    static GanConfig desk(int label_classes);
    /// Full-size configuration (target 128, six levels, noise at 32).
    static GanConfig paper(int label_classes);

    int label_classes() const { return output_channels - 1; }
    void validate(const GrowthSchedule& schedule) const;
    bool operator==(const GanConfig&) const = default;
};

/// Progressive generator. Stage s produces resolution schedule.resolutions[s].
class Generator {
public:
    Generator(const GanConfig& config, const GrowthSchedule& schedule, Rng& init_rng);

    /// z: [N, latent, 1, 1]. Image channel leaves through tanh, label
    /// channels through a sigmoid. `noise_rng` feeds the injected noise channel.
    ag::Tensor forward(const ag::Tensor& z, std::size_t stage, float alpha, Rng& noise_rng) const;
    nn::ParamList params() const;
    int latent_dim() const { return config_.latent_dim; }

private:
    struct Block {
        nn::Conv2d conv1;
        nn::Conv2d conv2;
        nn::Conv2d to_rgb;
        bool noise = false;
    };
    ag::Tensor to_output(const Block& block, const ag::Tensor& h) const;

    GanConfig config_;
    GrowthSchedule schedule_;
    nn::Dense input_;
    std::vector<Block> blocks_;
};

/// Mirror-image critic with a minibatch standard deviation feature at 4x4.
class Discriminator {
public:
    Discriminator(const GanConfig& config, const GrowthSchedule& schedule, Rng& init_rng);

    /// x: [N, output_channels, R, R] at the stage's resolution; returns [N, 1, 1, 1].
    ag::Tensor forward(const ag::Tensor& x, std::size_t stage, float alpha) const;
    nn::ParamList params() const;

private:
    struct Block {
        nn::Conv2d from_rgb;
        nn::Conv2d conv1;
        nn::Conv2d conv2;
    };
    GanConfig config_;
    GrowthSchedule schedule_;
    std::vector<Block> blocks_;
    nn::Dense dense1_;
    nn::Dense dense2_;
};

}  // namespace ganaug::gan
