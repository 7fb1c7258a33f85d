#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ganaug/data/types.hpp"

namespace ganaug::audit {

enum class Metric { l2_image, l2_joint };

Metric parse_metric(std::string_view text);
std::string to_string(Metric m);

struct NnPair {
    std::size_t synthetic_index = 0;
    std::size_t real_index = 0;
    double distance = 0;
    bool memorized = false;
    bool novel = false;
    double label_dice = 0;  // mean per-class Dice between the two label grids
};

/// Flattened feature vectors: the image, or the image followed by the one-hot label channels.
std::vector<float> features(const data::Patch& patch, int label_classes, Metric metric);

/// Exact minimum-distance real patch (Euclidean); the lowest index wins ties.
NnPair nearest_neighbor(const data::Patch& synth, const data::PatchSet& real, Metric metric = Metric::l2_image);

struct HistogramBin {
    double lo = 0;
    double hi = 0;
    std::size_t count = 0;
};

struct AuditReport {
    Metric metric = Metric::l2_image;
    std::vector<NnPair> pairs;
    std::vector<double> real_nn_distances;  // each real patch to its nearest other real patch
    double mean_real_nn = 0;
    double memorized_eps = 0;       // 1e-3 x mean real-to-real NN distance
    double novelty_threshold = 0;   // 95th percentile of real-to-real NN distances
    std::size_t memorized = 0;
    std::size_t novel = 0;
    std::vector<HistogramBin> histogram;
    std::vector<std::string> warnings;
};

AuditReport audit_report(const data::PatchSet& synth, const data::PatchSet& real, Metric metric = Metric::l2_image,
                         int histogram_bins = 20);

nlohmann::json to_json(const AuditReport& report);
void write_histogram_csv(const AuditReport& report, const std::filesystem::path& path);

/// One column per pair: the synthetic patch above its neighbour, label
/// contours overlaid, the distance printed underneath.
void build_montage(const std::vector<NnPair>& pairs, const data::PatchSet& synth, const data::PatchSet& real,
                   const std::filesystem::path& out, int scale = 2);

/// Pixel size of a montage with `columns` pairs of `patch_size` tiles.
std::pair<int, int> montage_size(std::size_t columns, int patch_size, int scale = 2);

}  // namespace ganaug::audit
