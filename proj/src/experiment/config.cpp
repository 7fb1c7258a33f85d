#include "ganaug/experiment/config.hpp"

#include <fstream>
#include <set>

#include "ganaug/gan/train.hpp"
#include "ganaug/util/error.hpp"

namespace ganaug::experiment {

namespace fs = std::filesystem;
using nlohmann::json;

data::ChannelSpec DatasetConfig::channel_spec() const {
    if (source == DatasetSource::phantom && class_names.empty()) return data::phantom_spec(classes);
    data::ChannelSpec s;
    s.label_classes = classes;
    s.class_names = class_names;
    if (s.class_names.empty()) {
        for (int c = 1; c <= classes; ++c) s.class_names.push_back("class" + std::to_string(c));
    }
    return s;
}

json DatasetConfig::to_json() const {
    json j{{"id", id},
           {"source", source == DatasetSource::phantom ? "phantom" : "directory"},
           {"classes", classes},
           {"patch_size", patch_size},
           {"patch_budget", patch_budget},
           {"split", {train_volumes, val_volumes, test_volumes}}};
    if (source == DatasetSource::phantom) {
        j["phantom"] = {{"slices", phantom.slices},
                        {"height", phantom.height},
                        {"width", phantom.width},
                        {"structures_per_class", phantom.structures_per_class},
                        {"lesion_radius_min", phantom.lesion_radius_min},
                        {"lesion_radius_max", phantom.lesion_radius_max},
                        {"noise_std", phantom.noise_std},
                        {"seed", phantom_seed}};
    } else {
        j["path"] = path.string();
        j["format"] = format == data::VolumeFormat::nifti ? "nifti" : "raw";
    }
    return j;
}

augment::AugmentationPolicy AugmentationSettings::policy(augment::Preset preset) const {
    auto p = augment::AugmentationPolicy::from_preset(preset, 0.0, max_rotation_degrees);
    p.reflect.probability = reflection_probability;
    p.validate();
    return p;
}

std::size_t GridRow::cardinality() const {
    return datasets.size() * real_fractions.size() * synth_percents.size() * architectures.size() *
           augmentations.size();
}

const DatasetConfig& ExperimentConfig::dataset(const std::string& id) const {
    for (const auto& d : datasets)
        if (d.id == id) return d;
    throw ConfigError("unknown dataset '" + id + "'");
}

int ExperimentConfig::repeats_for(const std::string& dataset_id) const {
    const auto& d = dataset(dataset_id);
    return d.repeats.value_or(repeats);
}

gan::GanConfig ExperimentConfig::gan_config(const DatasetConfig& d) const {
    const std::string preset = gan.value("preset", "desk");
    gan::GanConfig base;
    if (preset == "desk") {
        base = gan::GanConfig::desk(d.classes);
    } else if (preset == "paper") {
        base = gan::GanConfig::paper(d.classes);
    } else {
        throw ConfigError("gan.preset must be desk or paper, got '" + preset + "'");
    }
    return gan::gan_config_from_json(gan, base);
}

gan::GrowthSchedule ExperimentConfig::gan_schedule(const DatasetConfig& d) const {
    return gan::build_growth_schedule(d.patch_size, gan.value("images_per_phase", std::int64_t{8000}),
                                      gan.value("fade_fraction", 0.5));
}

seg::SegConfig ExperimentConfig::seg_config(seg::Architecture a) const {
    const std::string preset = segmentation.value("preset", "desk");
    seg::SegConfig base;
    if (preset == "desk") {
        base = seg::SegConfig::desk(a);
    } else if (preset == "paper") {
        base.architecture = a;
    } else {
        throw ConfigError("segmentation.preset must be desk or paper, got '" + preset + "'");
    }
    auto overrides = segmentation;
    overrides.erase("preset");
    overrides.erase("architecture");
    auto c = seg::seg_config_from_json(overrides, base);
    c.architecture = a;
    return c;
}

void ExperimentConfig::validate() const {
    if (datasets.empty()) throw ConfigError("config declares no dataset");
    std::set<std::string> ids;
    for (const auto& d : datasets) {
        if (d.id.empty()) throw ConfigError("dataset without id");
        if (!ids.insert(d.id).second) throw ConfigError("duplicate dataset id '" + d.id + "'");
        if (d.classes < 1) throw ConfigError("dataset " + d.id + ": classes must be >= 1");
        if (d.patch_size < 8) throw ConfigError("dataset " + d.id + ": patch_size must be >= 8");
        if (d.patch_budget == 0) throw ConfigError("dataset " + d.id + ": patch_budget must be positive");
        if (d.train_volumes < 1 || d.val_volumes < 1 || d.test_volumes < 1) {
            throw ConfigError("dataset " + d.id + ": every split needs at least one volume");
        }
        if (d.repeats && *d.repeats < 1) throw ConfigError("dataset " + d.id + ": repeats must be >= 1");
        try {
            gan_config(d).validate(gan_schedule(d));
        } catch (const ValidationError& e) {
            throw ConfigError("gan block invalid for dataset " + d.id + ": " + e.what());
        }
    }
    if (repeats < 1) throw ConfigError("repeats must be >= 1");
    if (max_concurrent < 1) throw ConfigError("max_concurrent must be >= 1");
    if (output_root.empty()) throw ConfigError("output_root is required");
    try {
        augmentation.policy(augment::Preset::rotation);
    } catch (const ValidationError& e) {
        throw ConfigError(std::string("augmentation block invalid: ") + e.what());
    }
    for (const auto& row : grid) {
        auto where = "grid row '" + row.name + "': ";
        if (row.datasets.empty() || row.real_fractions.empty() || row.synth_percents.empty() ||
            row.architectures.empty() || row.augmentations.empty()) {
            throw ConfigError(where + "every axis needs at least one value");
        }
        for (const auto& id : row.datasets) dataset(id);
        for (double f : row.real_fractions) {
            if (!(f > 0.0 && f <= 1.0)) throw ConfigError(where + "real_fraction must lie in (0, 1], got " + std::to_string(f));
        }
        for (double p : row.synth_percents) {
            if (!(p >= 0.0)) throw ConfigError(where + "synth_percent must be >= 0");
        }
        for (auto a : row.architectures) {
            try {
                seg_config(a);
            } catch (const ValidationError& e) {
                throw ConfigError(where + "segmentation block invalid: " + e.what());
            }
        }
    }
}

namespace {

template <class T>
std::vector<T> list_of(const json& j, const char* key) {
    if (!j.contains(key)) return {};
    const auto& v = j.at(key);
    if (v.is_array()) return v.get<std::vector<T>>();
    return {v.get<T>()};
}

DatasetConfig parse_dataset(const json& j, const fs::path& base_dir) {
    DatasetConfig d;
    d.id = j.at("id").get<std::string>();
    const std::string source = j.value("source", "phantom");
    if (source == "phantom") {
        d.source = DatasetSource::phantom;
    } else if (source == "directory") {
        d.source = DatasetSource::directory;
        fs::path p = j.at("path").get<std::string>();
        d.path = p.is_absolute() ? p : base_dir / p;
        d.format = data::parse_volume_format(j.value("format", "nifti"));
    } else {
        throw ConfigError("dataset " + d.id + ": source must be phantom or directory");
    }
    d.classes = j.value("classes", d.classes);
    d.class_names = j.value("class_names", d.class_names);
    d.patch_size = j.value("patch_size", d.patch_size);
    d.patch_budget = j.value("patch_budget", d.patch_budget);
    if (j.contains("split")) {
        const auto& s = j["split"];
        d.train_volumes = s.value("train", d.train_volumes);
        d.val_volumes = s.value("val", d.val_volumes);
        d.test_volumes = s.value("test", d.test_volumes);
    }
    if (j.contains("repeats")) d.repeats = j["repeats"].get<int>();
    d.phantom.classes = d.classes;
    if (j.contains("phantom")) {
        const auto& p = j["phantom"];
        d.phantom.slices = p.value("slices", d.phantom.slices);
        d.phantom.height = p.value("height", d.phantom.height);
        d.phantom.width = p.value("width", d.phantom.width);
        d.phantom.structures_per_class = p.value("structures_per_class", d.phantom.structures_per_class);
        d.phantom.lesion_radius_min = p.value("lesion_radius_min", d.phantom.lesion_radius_min);
        d.phantom.lesion_radius_max = p.value("lesion_radius_max", d.phantom.lesion_radius_max);
        d.phantom.noise_std = p.value("noise_std", d.phantom.noise_std);
        d.phantom_seed = p.value("seed", d.phantom_seed);
    }
    return d;
}

GridRow parse_row(const json& j, std::size_t index, const std::vector<DatasetConfig>& datasets) {
    GridRow r;
    r.name = j.value("name", "row" + std::to_string(index + 1));
    r.datasets = list_of<std::string>(j, "dataset");
    if (r.datasets.empty() && datasets.size() == 1) r.datasets.push_back(datasets.front().id);
    r.real_fractions = list_of<double>(j, "real_fraction");
    r.synth_percents = list_of<double>(j, "synth_percent");
    for (const auto& a : list_of<std::string>(j, "architecture")) r.architectures.push_back(seg::parse_architecture(a));
    for (const auto& a : list_of<std::string>(j, "augmentation")) r.augmentations.push_back(augment::parse_preset(a));
    return r;
}

}  // namespace

ExperimentConfig parse_experiment_config(const json& j, const fs::path& base_dir) {
    ExperimentConfig c;
    try {
        if (!j.is_object()) throw ConfigError("config root must be an object");
        const auto& ds = j.at("dataset");
        if (ds.is_array()) {
            for (const auto& d : ds) c.datasets.push_back(parse_dataset(d, base_dir));
        } else {
            c.datasets.push_back(parse_dataset(ds, base_dir));
        }
        if (j.contains("gan")) c.gan = j["gan"];
        if (j.contains("segmentation")) c.segmentation = j["segmentation"];
        if (j.contains("augmentation")) {
            const auto& a = j["augmentation"];
            c.augmentation.reflection_probability = a.value("reflection_probability", c.augmentation.reflection_probability);
            c.augmentation.max_rotation_degrees = a.value("max_rotation_degrees", c.augmentation.max_rotation_degrees);
        }
        if (j.contains("grid")) {
            const auto& g = j["grid"];
            const auto& rows = g.is_object() && g.contains("rows") ? g["rows"] : g;
            if (!rows.is_array()) throw ConfigError("grid must be a list of rows");
            for (std::size_t i = 0; i < rows.size(); ++i) c.grid.push_back(parse_row(rows[i], i, c.datasets));
        }
        c.repeats = j.value("repeats", c.repeats);
        if (j.contains("seeds")) {
            const auto& s = j["seeds"];
            c.seeds.base = s.value("base", c.seeds.base);
            c.seeds.gan = s.value("gan", c.seeds.gan);
            c.seeds.data = s.value("data", c.seeds.data);
        }
        fs::path out = j.at("output_root").get<std::string>();
        c.output_root = out.is_absolute() ? out : base_dir / out;
        c.max_concurrent = j.value("max_concurrent", c.max_concurrent);
        c.validate();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    } catch (const ValidationError& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return c;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    json j;
    try {
        j = json::parse(in, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    return parse_experiment_config(j, fs::absolute(path).parent_path());
}

}  // namespace ganaug::experiment
