#include "ganaug/gan/networks.hpp"

#include <cmath>
#include <string>

#include "ganaug/util/error.hpp"

namespace ganaug::gan {

using ag::Shape;
using ag::Tensor;

namespace {

constexpr float kSlope = 0.2f;

Tensor lrelu(const Tensor& x) { return ag::leaky_relu(x, kSlope); }

Tensor gaussian(Shape shape, Rng& rng) {
    std::vector<float> v(shape.numel());
    for (auto& x : v) x = rng.normal();
    return Tensor::from(shape, std::move(v));
}

}  // namespace

GanConfig GanConfig::desk(int label_classes) {
    GanConfig c;
    c.latent_dim = 64;
    c.output_channels = 1 + label_classes;
    c.noise_inject_resolution = 32;
    c.batch_size = {{4, 16}, {8, 16}, {16, 16}, {32, 16}, {64, 16}};
    c.widths = {{4, 64}, {8, 64}, {16, 32}, {32, 16}, {64, 8}};
    return c;
}

GanConfig GanConfig::paper(int label_classes) {
    GanConfig c;
    c.latent_dim = 512;
    c.output_channels = 1 + label_classes;
    c.noise_inject_resolution = 32;
    c.batch_size = {{4, 16}, {8, 16}, {16, 16}, {32, 16}, {64, 16}, {128, 16}};
    c.widths = {{4, 512}, {8, 512}, {16, 512}, {32, 512}, {64, 256}, {128, 128}};
    return c;
}

void GanConfig::validate(const GrowthSchedule& schedule) const {
    schedule.validate();
    if (output_channels < 2) throw ValidationError("GAN output_channels must be >= 2 (image + labels)");
    if (latent_dim < 1) throw ValidationError("GAN latent_dim must be >= 1");
    if (noise_inject_resolution) {
        const int r = *noise_inject_resolution;
        schedule.phase_of(r);
        if (r == 4) throw ValidationError("noise injection needs an upsampling level (resolution > 4)");
    }
    for (int r : schedule.resolutions) {
        if (!widths.count(r) || widths.at(r) < 1) throw ValidationError("GAN widths missing resolution " + std::to_string(r));
        if (!batch_size.count(r) || batch_size.at(r) < 2) {
            throw ValidationError("GAN batch size for resolution " + std::to_string(r) + " must be >= 2");
        }
    }
    if (gradient_penalty_weight < 0 || epsilon_drift < 0 || learning_rate <= 0) {
        throw ValidationError("GAN loss weights must be >= 0 and learning rate > 0");
    }
}

Generator::Generator(const GanConfig& config, const GrowthSchedule& schedule, Rng& init_rng)
    : config_(config), schedule_(schedule) {
    config_.validate(schedule_);
    const int w0 = config_.widths.at(4);
    input_ = nn::Dense(config_.latent_dim, w0 * 16, true, init_rng);
    for (std::size_t s = 0; s < schedule_.phases(); ++s) {
        const int r = schedule_.resolutions[s];
        const int w = config_.widths.at(r);
        Block b;
        b.noise = config_.noise_inject_resolution && *config_.noise_inject_resolution == r;
        const int in = s == 0 ? w0 : config_.widths.at(schedule_.resolutions[s - 1]) + (b.noise ? 1 : 0);
        if (s > 0) b.conv1 = nn::Conv2d(in, w, 3, true, init_rng);
        b.conv2 = nn::Conv2d(s == 0 ? w0 : w, w, 3, true, init_rng);
        b.to_rgb = nn::Conv2d(w, config_.output_channels, 1, true, init_rng, 1.0f);
        blocks_.push_back(std::move(b));
    }
}

Tensor Generator::to_output(const Block& block, const Tensor& h) const { return block.to_rgb.forward(h); }

Tensor Generator::forward(const Tensor& z, std::size_t stage, float alpha, Rng& noise_rng) const {
    if (stage >= blocks_.size()) throw ValidationError("generator stage out of range");
    if (z.shape().c != config_.latent_dim || z.shape().h != 1 || z.shape().w != 1) {
        throw ValidationError("generator latent must be [N," + std::to_string(config_.latent_dim) + ",1,1], got " +
                              z.shape().str());
    }
    const int n = z.shape().n;
    const int w0 = config_.widths.at(4);
    Tensor h = input_.forward(nn::pixel_norm(z));
    h = nn::pixel_norm(lrelu(ag::reshape(h, Shape{n, w0, 4, 4})));
    h = nn::pixel_norm(lrelu(blocks_[0].conv2.forward(h)));

    Tensor prev;
    for (std::size_t s = 1; s <= stage; ++s) {
        const Block& b = blocks_[s];
        prev = h;
        h = ag::upsample(h, 2);
        if (b.noise) h = ag::concat_channels(h, gaussian(Shape{n, 1, h.shape().h, h.shape().w}, noise_rng));
        h = nn::pixel_norm(lrelu(b.conv1.forward(h)));
        h = nn::pixel_norm(lrelu(b.conv2.forward(h)));
    }
    Tensor out = to_output(blocks_[stage], h);
    if (stage > 0 && alpha < 1.0f) {
        Tensor low = ag::upsample(to_output(blocks_[stage - 1], prev), 2);
        out = ag::lerp(low, out, alpha);
    }
    const int labels = config_.output_channels - 1;
    Tensor image = ag::tanh(ag::slice_channels(out, 0, 1));
    Tensor label = ag::sigmoid(ag::slice_channels(out, 1, labels));
    return ag::concat_channels(image, label);
}

nn::ParamList Generator::params() const {
    nn::ParamList out;
    nn::append_params(out, "input.", input_.params(""));
    for (std::size_t s = 0; s < blocks_.size(); ++s) {
        const std::string p = "block" + std::to_string(schedule_.resolutions[s]) + ".";
        if (s > 0) nn::append_params(out, p + "conv1.", blocks_[s].conv1.params(""));
        nn::append_params(out, p + "conv2.", blocks_[s].conv2.params(""));
        nn::append_params(out, p + "to_rgb.", blocks_[s].to_rgb.params(""));
    }
    return out;
}

Discriminator::Discriminator(const GanConfig& config, const GrowthSchedule& schedule, Rng& init_rng)
    : config_(config), schedule_(schedule) {
    config_.validate(schedule_);
    const int w0 = config_.widths.at(4);
    for (std::size_t s = 0; s < schedule_.phases(); ++s) {
        const int r = schedule_.resolutions[s];
        const int w = config_.widths.at(r);
        Block b;
        b.from_rgb = nn::Conv2d(config_.output_channels, w, 1, true, init_rng);
        if (s == 0) {
            b.conv1 = nn::Conv2d(w0 + 1, w0, 3, true, init_rng);
        } else {
            b.conv1 = nn::Conv2d(w, w, 3, true, init_rng);
            b.conv2 = nn::Conv2d(w, config_.widths.at(schedule_.resolutions[s - 1]), 3, true, init_rng);
        }
        blocks_.push_back(std::move(b));
    }
    dense1_ = nn::Dense(w0 * 16, w0, true, init_rng);
    dense2_ = nn::Dense(w0, 1, true, init_rng, 1.0f);
}

Tensor Discriminator::forward(const Tensor& x, std::size_t stage, float alpha) const {
    if (stage >= blocks_.size()) throw ValidationError("discriminator stage out of range");
    const int r = schedule_.resolutions[stage];
    const Shape s = x.shape();
    if (s.c != config_.output_channels || s.h != r || s.w != r) {
        throw ValidationError("discriminator at resolution " + std::to_string(r) + " expects [N," +
                              std::to_string(config_.output_channels) + "," + std::to_string(r) + "," +
                              std::to_string(r) + "], got " + s.str());
    }
    Tensor h = lrelu(blocks_[stage].from_rgb.forward(x));
    for (std::size_t i = stage; i >= 1; --i) {
        const Block& b = blocks_[i];
        h = lrelu(b.conv1.forward(h));
        h = ag::avg_pool(lrelu(b.conv2.forward(h)), 2);
        if (i == stage && alpha < 1.0f) {
            Tensor low = lrelu(blocks_[stage - 1].from_rgb.forward(ag::avg_pool(x, 2)));
            h = ag::lerp(low, h, alpha);
        }
    }
    const int w0 = config_.widths.at(4);
    h = nn::minibatch_stddev(h);
    h = lrelu(blocks_[0].conv1.forward(h));
    h = ag::reshape(h, Shape{s.n, w0 * 16, 1, 1});
    h = lrelu(dense1_.forward(h));
    return dense2_.forward(h);
}

nn::ParamList Discriminator::params() const {
    nn::ParamList out;
    for (std::size_t s = 0; s < blocks_.size(); ++s) {
        const std::string p = "block" + std::to_string(schedule_.resolutions[s]) + ".";
        nn::append_params(out, p + "from_rgb.", blocks_[s].from_rgb.params(""));
        nn::append_params(out, p + "conv1.", blocks_[s].conv1.params(""));
        if (s > 0) nn::append_params(out, p + "conv2.", blocks_[s].conv2.params(""));
    }
    nn::append_params(out, "dense1.", dense1_.params(""));
    nn::append_params(out, "dense2.", dense2_.params(""));
    return out;
}

}  // namespace ganaug::gan
