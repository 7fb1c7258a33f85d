#pragma once

#include <memory>
#include <string>
#include <string_view>

#include <json.hpp>

#include "ganaug/data/types.hpp"
#include "ganaug/nn/layers.hpp"

namespace ganaug::seg {

enum class Architecture { unet, uresnet, multiscale };
enum class LossKind { cross_entropy, soft_dice };

Architecture parse_architecture(std::string_view text);
std::string to_string(Architecture a);
LossKind parse_loss(std::string_view text);
std::string to_string(LossKind l);

struct SegConfig {
    Architecture architecture = Architecture::unet;
    int depth = 4;            // poolings for unet / uresnet
    int base_width = 32;
    int context_factor = 4;   // multiscale: downsampling of the context pathway
    int epochs = 1;
    int batch_size = 16;
    double learning_rate = 1e-3;
    LossKind loss = LossKind::cross_entropy;
    int val_interval = 50;    // steps between validation passes
    std::int64_t max_steps = 0;  // > 0 caps the epoch budget
    bool deterministic_mode = true;

    /// Reduced widths for CPU-scale runs.
    static SegConfig desk(Architecture a);
    void validate() const;
    bool operator==(const SegConfig&) const = default;
};

nlohmann::json to_json(const SegConfig& c);
SegConfig seg_config_from_json(const nlohmann::json& j, const SegConfig& defaults);

/// Maps [N, 1, S, S] images to [N, C+1, S, S] class logits (channel 0 is background).
class Segmenter {
public:
    virtual ~Segmenter() = default;
    virtual ag::Tensor forward(const ag::Tensor& x) const = 0;
    virtual nn::ParamList params() const = 0;
    int classes() const { return classes_; }
    int patch_size() const { return patch_size_; }

protected:
    Segmenter(int classes, int patch_size) : classes_(classes), patch_size_(patch_size) {}

private:
    int classes_;
    int patch_size_;
};

/// unet: encoder/decoder with skip connections; uresnet: the same with
/// residual blocks; multiscale: full-resolution and downsampled context
/// pathways fused by 1x1 convolutions.
std::unique_ptr<Segmenter> build_segmenter(const SegConfig& config, const data::ChannelSpec& spec, int patch_size,
                                           Rng& init_rng);

}  // namespace ganaug::seg
