#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ganaug/data/types.hpp"
#include "ganaug/gan/networks.hpp"

namespace ganaug::gan {

inline constexpr int kGanCheckpointVersion = 1;

struct GanLossRow {
    std::size_t phase = 0;
    std::int64_t step = 0;
    double critic_loss = 0;
    double gen_loss = 0;
    double alpha = 0;
    double gradient_penalty = 0;
    bool operator==(const GanLossRow&) const = default;
};

struct GanCheckpoint {
    int format_version = kGanCheckpointVersion;
    GanConfig config;
    GrowthSchedule schedule;
    data::ChannelSpec spec;
    nn::ParamList generator;
    nn::ParamList discriminator;
    nn::ParamList generator_optim;
    nn::ParamList discriminator_optim;
    std::int64_t optim_steps = 0;
    std::size_t phase = 0;            // phase currently being trained
    std::int64_t images_seen = 0;     // within that phase
    std::int64_t step = 0;            // global step counter
    bool completed = false;
    std::string rng_state;
    std::uint64_t seed = 0;
    std::uint64_t dataset_hash = 0;
    double wall_clock_seconds = 0;
    std::vector<GanLossRow> losses;

    /// Resolution the generator is currently producing.
    int resolution() const { return schedule.resolutions[std::min(phase, schedule.phases() - 1)]; }
};

struct GanTrainOptions {
    std::filesystem::path out_dir;               // empty: keep everything in memory
    std::int64_t checkpoint_interval_steps = 0;  // > 0: refresh <out>/resume every N steps
    std::int64_t stop_after_steps = -1;          // >= 0: return after this global step
    std::optional<GanCheckpoint> resume;
    int log_interval_steps = 0;                  // > 0: info log every N steps
};

/// WGAN-GP training through every growth phase. Real patches are mean-pooled
/// down to the active resolution and, while a level fades in, blended with
/// their own 2x-upsampled coarse version. Writes <out>/phase-<i> at the end of
/// each phase and <out>/final at completion.
GanCheckpoint train_gan(const data::PatchSet& patches, const GanConfig& config, const GrowthSchedule& schedule,
                        std::uint64_t seed, const GanTrainOptions& options = {});

/// Gradient penalty lambda * mean((|grad_x D(x)| - 1)^2), kept differentiable
/// in the critic's parameters.
ag::Tensor gradient_penalty(const Discriminator& critic, const ag::Tensor& interpolated, std::size_t stage,
                            float alpha, double weight);

/// Joint [N, 1+C, S, S] tensor of the given patches (labels as {0,1} floats).
ag::Tensor joint_batch(const data::PatchSet& patches, const std::vector<std::size_t>& indices);

/// Loads the generator stored in a checkpoint.
Generator restore_generator(const GanCheckpoint& checkpoint);

/// Draws `count` synthetic patches from a finished checkpoint. Label channels
/// are discretized: per-pixel argmax, kept only where the winner is >= 0.5.
data::PatchSet sample_synthetic(const GanCheckpoint& checkpoint, std::size_t count, std::uint64_t seed);

/// Splits one generator output (single sample, 1+C channels) into a patch.
data::Patch discretize(std::span<const float> sample, int size, int label_classes);

void save_gan_checkpoint(const GanCheckpoint& checkpoint, const std::filesystem::path& dir);
GanCheckpoint load_gan_checkpoint(const std::filesystem::path& dir);
void write_loss_csv(const std::vector<GanLossRow>& rows, const std::filesystem::path& path);

nlohmann::json to_json(const GanConfig& config);
GanConfig gan_config_from_json(const nlohmann::json& j, const GanConfig& defaults);
nlohmann::json to_json(const GrowthSchedule& schedule);
GrowthSchedule schedule_from_json(const nlohmann::json& j);

}  // namespace ganaug::gan
