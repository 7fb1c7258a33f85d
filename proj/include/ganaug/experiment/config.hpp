#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "ganaug/augment/augment.hpp"
#include "ganaug/data/io.hpp"
#include "ganaug/data/phantom.hpp"
#include "ganaug/gan/networks.hpp"
#include "ganaug/gan/schedule.hpp"
#include "ganaug/seg/model.hpp"

namespace ganaug::experiment {

enum class DatasetSource { phantom, directory };

struct DatasetConfig {
    std::string id;
    DatasetSource source = DatasetSource::phantom;
    std::filesystem::path path;  // directory source: <path>/{train,val,test}/<volume-id>/
    data::VolumeFormat format = data::VolumeFormat::nifti;
    int classes = 3;
    std::vector<std::string> class_names;
    data::PhantomParams phantom;  // n_volumes is ignored; the split counts below apply
    int train_volumes = 30;
    int val_volumes = 10;
    int test_volumes = 10;
    std::uint64_t phantom_seed = 1;
    int patch_size = 64;
    std::size_t patch_budget = 8000;
    std::optional<int> repeats;

    data::ChannelSpec channel_spec() const;
    nlohmann::json to_json() const;
};

struct AugmentationSettings {
    double reflection_probability = 0.5;
    double max_rotation_degrees = 180;
    augment::AugmentationPolicy policy(augment::Preset preset) const;
};

struct GridRow {
    std::string name;
    std::vector<std::string> datasets;
    std::vector<double> real_fractions;
    std::vector<double> synth_percents;
    std::vector<seg::Architecture> architectures;
    std::vector<augment::Preset> augmentations;

    /// Product of the axis lengths.
    std::size_t cardinality() const;
};

struct Seeds {
    std::uint64_t base = 1000;  // repeat i uses base + i
    std::uint64_t gan = 7;
    std::uint64_t data = 42;
};

struct ExperimentConfig {
    std::vector<DatasetConfig> datasets;
    nlohmann::json gan = nlohmann::json::object();           // {"preset": desk|paper, "images_per_phase", overrides}
    nlohmann::json segmentation = nlohmann::json::object();  // {"preset": desk|paper, overrides}
    AugmentationSettings augmentation;
    std::vector<GridRow> grid;
    int repeats = 5;
    Seeds seeds;
    std::filesystem::path output_root;
    int max_concurrent = 1;

    const DatasetConfig& dataset(const std::string& id) const;
    int repeats_for(const std::string& dataset_id) const;
    gan::GanConfig gan_config(const DatasetConfig& d) const;
    gan::GrowthSchedule gan_schedule(const DatasetConfig& d) const;
    seg::SegConfig seg_config(seg::Architecture a) const;
    /// Throws ConfigError on any inconsistency.
    void validate() const;
};

/// Relative paths resolve against `base_dir`. Errors surface as ConfigError.
ExperimentConfig parse_experiment_config(const nlohmann::json& j, const std::filesystem::path& base_dir);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

}  // namespace ganaug::experiment
