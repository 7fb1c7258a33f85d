#include "ganaug/seg/model.hpp"

#include "ganaug/util/error.hpp"

namespace ganaug::seg {

using ag::Tensor;

Architecture parse_architecture(std::string_view text) {
    if (text == "unet") return Architecture::unet;
    if (text == "uresnet") return Architecture::uresnet;
    if (text == "multiscale" || text == "deepmedic") return Architecture::multiscale;
    throw ConfigError("unknown architecture '" + std::string(text) + "' (expected unet|uresnet|multiscale)");
}

std::string to_string(Architecture a) {
    switch (a) {
        case Architecture::unet: return "unet";
        case Architecture::uresnet: return "uresnet";
        case Architecture::multiscale: return "multiscale";
    }
    return "unet";
}

LossKind parse_loss(std::string_view text) {
    if (text == "cross_entropy") return LossKind::cross_entropy;
    if (text == "soft_dice") return LossKind::soft_dice;
    throw ConfigError("unknown loss '" + std::string(text) + "' (expected cross_entropy|soft_dice)");
}

std::string to_string(LossKind l) { return l == LossKind::soft_dice ? "soft_dice" : "cross_entropy"; }

SegConfig SegConfig::desk(Architecture a) {
    SegConfig c;
    c.architecture = a;
    c.depth = 3;
    c.base_width = 8;
    c.context_factor = 4;
    c.epochs = 1;
    c.batch_size = 16;
    c.val_interval = 50;
    return c;
}

void SegConfig::validate() const {
    if (depth < 1 || base_width < 1 || epochs < 1 || batch_size < 1 || val_interval < 1) {
        throw ValidationError("segmentation config: depth, width, epochs, batch size and val_interval must be positive");
    }
    if (context_factor < 2) throw ValidationError("segmentation config: context_factor must be >= 2");
    if (!(learning_rate > 0)) throw ValidationError("segmentation config: learning rate must be positive");
    if (max_steps < 0) throw ValidationError("segmentation config: max_steps must be >= 0");
}

nlohmann::json to_json(const SegConfig& c) {
    return {{"architecture", to_string(c.architecture)},
            {"depth", c.depth},
            {"base_width", c.base_width},
            {"context_factor", c.context_factor},
            {"epochs", c.epochs},
            {"batch_size", c.batch_size},
            {"learning_rate", c.learning_rate},
            {"loss", to_string(c.loss)},
            {"val_interval", c.val_interval},
            {"max_steps", c.max_steps},
            {"deterministic_mode", c.deterministic_mode}};
}

SegConfig seg_config_from_json(const nlohmann::json& j, const SegConfig& defaults) {
    SegConfig c = defaults;
    if (j.contains("architecture")) c.architecture = parse_architecture(j["architecture"].get<std::string>());
    c.depth = j.value("depth", c.depth);
    c.base_width = j.value("base_width", c.base_width);
    c.context_factor = j.value("context_factor", c.context_factor);
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    if (j.contains("loss")) c.loss = parse_loss(j["loss"].get<std::string>());
    c.val_interval = j.value("val_interval", c.val_interval);
    c.max_steps = j.value("max_steps", c.max_steps);
    c.deterministic_mode = j.value("deterministic_mode", c.deterministic_mode);
    c.validate();
    return c;
}

namespace {

constexpr float kHe = 1.41421356f;

// Two 3x3 convolutions, optionally with an identity (or 1x1-projected) shortcut.
class ConvBlock {
public:
    ConvBlock() = default;
    ConvBlock(int in, int out, bool residual, Rng& rng)
        : residual_(residual), conv1_(in, out, 3, false, rng, kHe), conv2_(out, out, 3, false, rng, kHe) {
        if (residual && in != out) {
            project_ = true;
            shortcut_ = nn::Conv2d(in, out, 1, false, rng, 1.0f);
        }
    }

    Tensor forward(const Tensor& x) const {
        Tensor h = ag::relu(conv1_.forward(x));
        h = conv2_.forward(h);
        if (residual_) h = ag::add(h, project_ ? shortcut_.forward(x) : x);
        return ag::relu(h);
    }

    void collect(nn::ParamList& out, const std::string& prefix) const {
        nn::append_params(out, prefix + "conv1.", conv1_.params(""));
        nn::append_params(out, prefix + "conv2.", conv2_.params(""));
        if (project_) nn::append_params(out, prefix + "shortcut.", shortcut_.params(""));
    }

private:
    bool residual_ = false;
    bool project_ = false;
    nn::Conv2d conv1_;
    nn::Conv2d conv2_;
    nn::Conv2d shortcut_;
};

class EncoderDecoder final : public Segmenter {
public:
    EncoderDecoder(const SegConfig& c, int classes, int patch_size, bool residual, Rng& rng)
        : Segmenter(classes, patch_size), depth_(c.depth) {
        int in = 1;
        for (int l = 0; l < depth_; ++l) {
            const int w = c.base_width << l;
            encoders_.emplace_back(in, w, residual, rng);
            in = w;
        }
        bottleneck_ = ConvBlock(in, c.base_width << depth_, residual, rng);
        for (int l = depth_ - 1; l >= 0; --l) {
            const int w = c.base_width << l;
            decoders_.emplace_back((w << 1) + w, w, residual, rng);
        }
        head_ = nn::Conv2d(c.base_width, classes + 1, 1, false, rng, 1.0f);
    }

    Tensor forward(const Tensor& x) const override {
        std::vector<Tensor> skips;
        Tensor h = x;
        for (const auto& e : encoders_) {
            h = e.forward(h);
            skips.push_back(h);
            h = ag::max_pool2(h);
        }
        h = bottleneck_.forward(h);
        for (int i = 0; i < depth_; ++i) {
            h = ag::concat_channels(ag::upsample(h, 2), skips[depth_ - 1 - i]);
            h = decoders_[i].forward(h);
        }
        return head_.forward(h);
    }

    nn::ParamList params() const override {
        nn::ParamList out;
        for (int l = 0; l < depth_; ++l) encoders_[l].collect(out, "enc" + std::to_string(l) + ".");
        bottleneck_.collect(out, "bottleneck.");
        for (int i = 0; i < depth_; ++i) decoders_[i].collect(out, "dec" + std::to_string(depth_ - 1 - i) + ".");
        nn::append_params(out, "head.", head_.params(""));
        return out;
    }

private:
    int depth_;
    std::vector<ConvBlock> encoders_;
    ConvBlock bottleneck_;
    std::vector<ConvBlock> decoders_;
    nn::Conv2d head_;
};

// Dual pathway: fine detail at full resolution, context at 1/factor resolution.
class MultiScale final : public Segmenter {
public:
    MultiScale(const SegConfig& c, int classes, int patch_size, Rng& rng)
        : Segmenter(classes, patch_size), factor_(c.context_factor) {
        const int w = c.base_width;
        const int widths[4] = {w, w, 2 * w, 2 * w};
        int in = 1;
        for (int wd : widths) {
            fine_.emplace_back(in, wd, 3, false, rng, kHe);
            in = wd;
        }
        in = 1;
        for (int wd : widths) {
            context_.emplace_back(in, wd, 3, false, rng, kHe);
            in = wd;
        }
        fuse_ = nn::Conv2d(4 * w, 4 * w, 1, false, rng, kHe);
        head_ = nn::Conv2d(4 * w, classes + 1, 1, false, rng, 1.0f);
    }

    Tensor forward(const Tensor& x) const override {
        Tensor f = x;
        for (const auto& c : fine_) f = ag::relu(c.forward(f));
        Tensor g = ag::avg_pool(x, factor_);
        for (const auto& c : context_) g = ag::relu(c.forward(g));
        Tensor h = ag::concat_channels(f, ag::upsample(g, factor_));
        return head_.forward(ag::relu(fuse_.forward(h)));
    }

    nn::ParamList params() const override {
        nn::ParamList out;
        for (std::size_t i = 0; i < fine_.size(); ++i) nn::append_params(out, "fine" + std::to_string(i) + ".", fine_[i].params(""));
        for (std::size_t i = 0; i < context_.size(); ++i)
            nn::append_params(out, "context" + std::to_string(i) + ".", context_[i].params(""));
        nn::append_params(out, "fuse.", fuse_.params(""));
        nn::append_params(out, "head.", head_.params(""));
        return out;
    }

private:
    int factor_;
    std::vector<nn::Conv2d> fine_;
    std::vector<nn::Conv2d> context_;
    nn::Conv2d fuse_;
    nn::Conv2d head_;
};

}  // namespace

std::unique_ptr<Segmenter> build_segmenter(const SegConfig& config, const data::ChannelSpec& spec, int patch_size,
                                           Rng& init_rng) {
    config.validate();
    spec.validate();
    if (patch_size < 1) throw ValidationError("segmenter: patch size must be positive");
    if (config.architecture == Architecture::multiscale) {
        if (patch_size % config.context_factor != 0) {
            throw ValidationError("multiscale segmenter: patch size " + std::to_string(patch_size) +
                                  " is not divisible by the context factor " + std::to_string(config.context_factor));
        }
        return std::make_unique<MultiScale>(config, spec.label_classes, patch_size, init_rng);
    }
    const int div = 1 << config.depth;
    if (patch_size % div != 0) {
        throw ValidationError(to_string(config.architecture) + ": patch size " + std::to_string(patch_size) +
                              " is not divisible by 2^depth = " + std::to_string(div));
    }
    return std::make_unique<EncoderDecoder>(config, spec.label_classes, patch_size,
                                            config.architecture == Architecture::uresnet, init_rng);
}

}  // namespace ganaug::seg
