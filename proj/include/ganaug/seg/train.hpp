#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <vector>

#include "ganaug/augment/augment.hpp"
#include "ganaug/metrics/dice.hpp"
#include "ganaug/seg/model.hpp"

namespace ganaug::seg {

inline constexpr int kSegCheckpointVersion = 1;

struct HistoryRow {
    std::int64_t step = 0;
    double train_loss = 0;           // mean loss since the previous row
    std::vector<double> val_per_class;
    double val_mean = 0;
    bool operator==(const HistoryRow&) const = default;
};

struct SegCheckpoint {
    int format_version = kSegCheckpointVersion;
    SegConfig config;
    data::ChannelSpec spec;
    int patch_size = 0;
    nn::ParamList params;           // parameters of the best validation row
    double best_val_mean_dsc = 0;
    std::int64_t best_step = 0;
    std::vector<HistoryRow> history;
    std::uint64_t seed = 0;
};

struct SegTrainOptions {
    augment::AugmentationPolicy policy = augment::AugmentationPolicy::from_preset(augment::Preset::none);
    std::filesystem::path out_dir;  // empty: nothing written
    bool log_progress = false;
};

/// Optimizes the configured loss with Adam on on-the-fly augmented batches and
/// keeps the parameters that scored best on the validation volumes.
SegCheckpoint train_segmenter(const data::PatchSet& train, const std::vector<data::Volume>& val,
                              const SegConfig& config, std::uint64_t seed, const SegTrainOptions& options = {});

/// Loss on one batch: x [N,1,S,S], targets N*S*S class indices.
ag::Tensor segmentation_loss(const ag::Tensor& logits, std::span<const std::uint8_t> targets, LossKind kind);

std::unique_ptr<Segmenter> restore_segmenter(const SegCheckpoint& checkpoint);

/// Sliding-window (stride patch/2) prediction of one slice; softmax scores are
/// averaged over overlapping windows before the argmax.
std::vector<std::uint8_t> predict(const Segmenter& model, std::span<const float> image, int height, int width);

struct Evaluation {
    metrics::DscReport micro;           // pooled pixels over all volumes (headline)
    std::vector<double> macro_per_class;  // mean of per-volume scores
    double macro_mean = 0;
};

Evaluation evaluate(const Segmenter& model, const std::vector<data::Volume>& volumes);

void save_seg_checkpoint(const SegCheckpoint& checkpoint, const std::filesystem::path& dir);
SegCheckpoint load_seg_checkpoint(const std::filesystem::path& dir);
void write_history_csv(const SegCheckpoint& checkpoint, const std::filesystem::path& path);

}  // namespace ganaug::seg
