#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "ganaug/experiment/config.hpp"

namespace ganaug::experiment {

/// One grid cell: a data condition, a network and an augmentation preset.
struct ExperimentSpec {
    std::string dataset;
    double real_fraction = 1.0;
    double synth_percent = 0.0;
    seg::Architecture architecture = seg::Architecture::unet;
    augment::Preset augmentation = augment::Preset::none;
    int repeats = 1;
    std::uint64_t base_seed = 0;
    /// A non-GAN preset was listed against synth_percent > 0; the cell runs with 0.
    bool synth_collapsed = false;

    void validate() const;
    bool needs_gan() const { return augment::uses_gan(augmentation) && synth_percent > 0.0; }
    /// Identity fields only (no bookkeeping).
    nlohmann::json to_json() const;
    std::string label() const;
};

ExperimentSpec spec_from_json(const nlohmann::json& j);

/// Hex digest over the cell identity and every config block its runs depend on.
std::string spec_hash(const ExperimentSpec& spec, const ExperimentConfig& config);

/// Cartesian product of one row's axes, in declaration order (dataset outermost,
/// then real_fraction, synth_percent, architecture, augmentation).
std::vector<ExperimentSpec> expand_row(const GridRow& row, const ExperimentConfig& config);
std::vector<ExperimentSpec> expand_grid(const ExperimentConfig& config);

/// Canonical text for numeric axis values ("0.1", "50", "12.5").
std::string format_number(double v);

}  // namespace ganaug::experiment
