#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ganaug/experiment/store.hpp"
#include "ganaug/metrics/stats.hpp"

namespace ganaug::experiment {

enum class Axis { dataset = 0, real_fraction, synth_percent, architecture, augmentation };
inline constexpr std::array<Axis, 5> kAxes = {Axis::dataset, Axis::real_fraction, Axis::synth_percent,
                                              Axis::architecture, Axis::augmentation};

Axis parse_axis(std::string_view text);
std::string to_string(Axis a);

/// Canonical value text for an axis ("0.5", "50", "unet", "rotation+gan").
std::string canonical_value(Axis axis, std::string_view raw);
/// Human-facing value text ("50%", "+50%", "UNet").
std::string display_value(Axis axis, const std::string& canonical);

using Coords = std::array<std::string, 5>;  // canonical values indexed by Axis
using Selector = std::map<Axis, std::string>;

Coords coords_of(const nlohmann::json& spec);
/// "axis=value" items.
Selector parse_selector(const std::vector<std::string>& items);
bool matches(const Coords& c, const Selector& s);
Coords with(Coords c, const Selector& overrides);

/// Completed repeats of one cell, in repeat order.
struct CellResults {
    Coords coords;
    std::vector<int> repeats;
    std::vector<double> mean;                   // per repeat
    std::vector<std::vector<double>> per_class;  // [repeat][class]
};

class ResultSet {
public:
    explicit ResultSet(const std::vector<RunRecord>& records);

    const CellResults* find(const Coords& c) const;
    std::vector<const CellResults*> matching(const Selector& s) const;
    /// Distinct values of `axis` among matching cells, in first-appearance order.
    std::vector<std::string> values(Axis axis, const Selector& s) const;
    /// The single cell matching `s`; nullptr when none; ConfigError when ambiguous.
    const CellResults* unique(const Selector& s) const;
    const std::vector<CellResults>& cells() const { return cells_; }

private:
    std::vector<CellResults> cells_;
};

/// The significance test used by tables and plots alike. nullopt when either
/// side has fewer than two repeats.
std::optional<metrics::StatResult> compare_to_baseline(const CellResults& cell, const CellResults& baseline);

struct TableSpec {
    std::vector<Axis> rows;
    std::vector<Axis> cols;
    Selector baseline;  // overrides applied to a cell to locate its baseline
    Selector filter;
    std::string title;
};

struct TableCell {
    std::size_t row = 0;
    std::size_t col = 0;
    bool present = false;
    Coords coords{};
    metrics::RepeatSummary summary;  // DSC in percentage points
    bool is_baseline = false;
    std::optional<metrics::StatResult> vs_baseline;
    bool significant = false;
};

struct Table {
    std::string title;
    std::vector<std::string> row_labels;
    std::vector<std::string> col_labels;
    std::vector<TableCell> cells;  // row-major
    std::vector<std::string> warnings;

    const TableCell& at(std::size_t r, std::size_t c) const { return cells[r * col_labels.size() + c]; }
    std::string markdown() const;
    std::string csv() const;
};

Table build_table(const ResultSet& results, const TableSpec& spec);
/// Writes <prefix>.md and <prefix>.csv; missing cells render as an em dash with a warning.
Table emit_table(const std::vector<RunRecord>& records, const TableSpec& spec, const std::filesystem::path& prefix);

struct CurveSpec {
    Axis sweep = Axis::real_fraction;
    Selector baseline{{Axis::synth_percent, "0"}};
    Selector augmented{{Axis::synth_percent, "50"}};
    Selector filter;
    Axis scatter_x = Axis::synth_percent;
    Axis scatter_group = Axis::real_fraction;
    std::vector<std::string> class_names;
    std::string title;
};

struct CurvePoint {
    std::string sweep_value;
    double x = 0;
    int series = -1;  // class index, or -1 for the class mean
    double baseline = 0;
    double augmented = 0;
    double difference = 0;
    std::optional<metrics::StatResult> stat;  // augmented vs baseline, on per-repeat values of this series
};

struct ScatterPoint {
    std::string group;
    double x = 0;
    Coords coords{};
    std::vector<double> repeat_values;
    double mean = 0;
    bool is_baseline = false;
    bool significant = false;
};

struct Curves {
    bool has_curves = false;  // false for a single-point sweep
    std::vector<CurvePoint> points;
    std::vector<ScatterPoint> scatter;
    std::vector<std::string> warnings;
    std::string curves_svg;
    std::string scatter_svg;
    std::string csv() const;
};

Curves build_curves(const ResultSet& results, const CurveSpec& spec);
/// Writes <prefix>-curves.svg (when the sweep has two or more points),
/// <prefix>-scatter.svg and <prefix>.csv.
Curves emit_curves(const std::vector<RunRecord>& records, const CurveSpec& spec, const std::filesystem::path& prefix);

}  // namespace ganaug::experiment
