#include "ganaug/experiment/grid.hpp"

#include <cstdio>

#include "ganaug/util/error.hpp"
#include "ganaug/util/rng.hpp"

namespace ganaug::experiment {

using nlohmann::json;

std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

void ExperimentSpec::validate() const {
    if (dataset.empty()) throw ConfigError("experiment spec without dataset");
    if (!(real_fraction > 0.0 && real_fraction <= 1.0)) {
        throw ConfigError("real_fraction must lie in (0, 1], got " + format_number(real_fraction));
    }
    if (!(synth_percent >= 0.0)) throw ConfigError("synth_percent must be >= 0");
    if (!augment::uses_gan(augmentation) && synth_percent != 0.0) {
        throw ConfigError("augmentation '" + augment::to_string(augmentation) + "' excludes GAN data but synth_percent is " +
                          format_number(synth_percent));
    }
    if (repeats < 1) throw ConfigError("repeats must be >= 1");
}

json ExperimentSpec::to_json() const {
    return {{"dataset", dataset},
            {"real_fraction", real_fraction},
            {"synth_percent", synth_percent},
            {"architecture", seg::to_string(architecture)},
            {"augmentation", augment::to_string(augmentation)},
            {"repeats", repeats},
            {"base_seed", base_seed}};
}

std::string ExperimentSpec::label() const {
    return dataset + " real=" + format_number(real_fraction * 100) + "% synth=+" + format_number(synth_percent) + "% " +
           seg::to_string(architecture) + " " + augment::to_string(augmentation);
}

ExperimentSpec spec_from_json(const json& j) {
    ExperimentSpec s;
    s.dataset = j.at("dataset").get<std::string>();
    s.real_fraction = j.at("real_fraction").get<double>();
    s.synth_percent = j.at("synth_percent").get<double>();
    s.architecture = seg::parse_architecture(j.at("architecture").get<std::string>());
    s.augmentation = augment::parse_preset(j.at("augmentation").get<std::string>());
    s.repeats = j.value("repeats", 1);
    s.base_seed = j.value("base_seed", std::uint64_t{0});
    return s;
}

std::string spec_hash(const ExperimentSpec& spec, const ExperimentConfig& config) {
    json key = spec.to_json();
    key.erase("repeats");  // extending a cell with more repeats keeps earlier records
    key["dataset_config"] = config.dataset(spec.dataset).to_json();
    key["segmentation"] = seg::to_json(config.seg_config(spec.architecture));
    key["augmentation_settings"] = {{"reflection_probability", config.augmentation.reflection_probability},
                                    {"max_rotation_degrees", config.augmentation.max_rotation_degrees}};
    key["data_seed"] = config.seeds.data;
    if (spec.needs_gan()) {
        key["gan"] = config.gan;
        key["gan_seed"] = config.seeds.gan;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(key.dump())));
    return buf;
}

std::vector<ExperimentSpec> expand_row(const GridRow& row, const ExperimentConfig& config) {
    std::vector<ExperimentSpec> out;
    out.reserve(row.cardinality());
    for (const auto& d : row.datasets)
        for (double f : row.real_fractions)
            for (double p : row.synth_percents)
                for (auto a : row.architectures)
                    for (auto g : row.augmentations) {
                        ExperimentSpec s;
                        s.dataset = d;
                        s.real_fraction = f;
                        s.synth_percent = p;
                        s.architecture = a;
                        s.augmentation = g;
                        s.repeats = config.repeats_for(d);
                        s.base_seed = config.seeds.base;
                        if (!augment::uses_gan(g) && p != 0.0) {
                            s.synth_percent = 0.0;
                            s.synth_collapsed = true;
                        }
                        s.validate();
                        out.push_back(s);
                    }
    return out;
}

std::vector<ExperimentSpec> expand_grid(const ExperimentConfig& config) {
    std::vector<ExperimentSpec> out;
    for (const auto& row : config.grid) {
        if (row.real_fractions.empty() || row.synth_percents.empty() || row.architectures.empty() ||
            row.augmentations.empty() || row.datasets.empty()) {
            throw ConfigError("grid row '" + row.name + "' has an empty axis");
        }
        auto cells = expand_row(row, config);
        out.insert(out.end(), cells.begin(), cells.end());
    }
    return out;
}

}  // namespace ganaug::experiment
