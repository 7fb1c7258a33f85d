#include "ganaug/experiment/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "ganaug/augment/augment.hpp"
#include "ganaug/experiment/grid.hpp"
#include "ganaug/seg/model.hpp"
#include "ganaug/util/error.hpp"

namespace ganaug::experiment {

namespace fs = std::filesystem;

Axis parse_axis(std::string_view text) {
    if (text == "dataset") return Axis::dataset;
    if (text == "real_fraction") return Axis::real_fraction;
    if (text == "synth_percent") return Axis::synth_percent;
    if (text == "architecture") return Axis::architecture;
    if (text == "augmentation") return Axis::augmentation;
    throw ConfigError("unknown axis '" + std::string(text) +
                      "' (expected dataset|real_fraction|synth_percent|architecture|augmentation)");
}

std::string to_string(Axis a) {
    switch (a) {
        case Axis::dataset: return "dataset";
        case Axis::real_fraction: return "real_fraction";
        case Axis::synth_percent: return "synth_percent";
        case Axis::architecture: return "architecture";
        case Axis::augmentation: return "augmentation";
    }
    return "dataset";
}

std::string canonical_value(Axis axis, std::string_view raw) {
    switch (axis) {
        case Axis::real_fraction:
        case Axis::synth_percent: {
            const std::string s(raw);
            char* end = nullptr;
            const double v = std::strtod(s.c_str(), &end);
            if (end == s.c_str() || *end != '\0') throw ConfigError("axis " + to_string(axis) + " expects a number, got '" + s + "'");
            return format_number(v);
        }
        case Axis::architecture: return seg::to_string(seg::parse_architecture(raw));
        case Axis::augmentation: return augment::to_string(augment::parse_preset(raw));
        case Axis::dataset: return std::string(raw);
    }
    return std::string(raw);
}

std::string display_value(Axis axis, const std::string& v) {
    switch (axis) {
        case Axis::real_fraction: return format_number(std::stod(v) * 100) + "%";
        case Axis::synth_percent: return "+" + v + "%";
        case Axis::architecture:
            if (v == "unet") return "UNet";
            if (v == "uresnet") return "UResNet";
            if (v == "multiscale") return "Multiscale";
            return v;
        case Axis::augmentation:
            if (v == "none") return "No augmentation";
            if (v == "gan") return "GAN";
            if (v == "rotation") return "Rotation";
            if (v == "rotation+gan") return "GAN + Rotation";
            return v;
        case Axis::dataset: return v;
    }
    return v;
}

Coords coords_of(const nlohmann::json& spec) {
    Coords c;
    c[static_cast<int>(Axis::dataset)] = spec.at("dataset").get<std::string>();
    c[static_cast<int>(Axis::real_fraction)] = format_number(spec.at("real_fraction").get<double>());
    c[static_cast<int>(Axis::synth_percent)] = format_number(spec.at("synth_percent").get<double>());
    c[static_cast<int>(Axis::architecture)] = spec.at("architecture").get<std::string>();
    c[static_cast<int>(Axis::augmentation)] = spec.at("augmentation").get<std::string>();
    return c;
}

Selector parse_selector(const std::vector<std::string>& items) {
    Selector s;
    for (const auto& item : items) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw ConfigError("selector '" + item + "' must look like axis=value");
        const Axis a = parse_axis(item.substr(0, eq));
        s[a] = canonical_value(a, item.substr(eq + 1));
    }
    return s;
}

bool matches(const Coords& c, const Selector& s) {
    for (const auto& [axis, value] : s)
        if (c[static_cast<int>(axis)] != value) return false;
    return true;
}

Coords with(Coords c, const Selector& overrides) {
    for (const auto& [axis, value] : overrides) c[static_cast<int>(axis)] = value;
    return c;
}

ResultSet::ResultSet(const std::vector<RunRecord>& records) {
    for (const auto& r : records) {
        if (r.status != RunStatus::completed) continue;
        const Coords c = coords_of(r.spec);
        auto it = std::find_if(cells_.begin(), cells_.end(), [&](const CellResults& x) { return x.coords == c; });
        if (it == cells_.end()) {
            cells_.push_back({c, {}, {}, {}});
            it = cells_.end() - 1;
        }
        it->repeats.push_back(r.repeat);
        it->mean.push_back(r.mean);
        it->per_class.push_back(r.per_class);
    }
    for (auto& cell : cells_) {
        std::vector<std::size_t> order(cell.repeats.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](auto a, auto b) { return cell.repeats[a] < cell.repeats[b]; });
        CellResults sorted{cell.coords, {}, {}, {}};
        for (auto i : order) {
            sorted.repeats.push_back(cell.repeats[i]);
            sorted.mean.push_back(cell.mean[i]);
            sorted.per_class.push_back(cell.per_class[i]);
        }
        cell = std::move(sorted);
    }
}

const CellResults* ResultSet::find(const Coords& c) const {
    for (const auto& cell : cells_)
        if (cell.coords == c) return &cell;
    return nullptr;
}

std::vector<const CellResults*> ResultSet::matching(const Selector& s) const {
    std::vector<const CellResults*> out;
    for (const auto& cell : cells_)
        if (matches(cell.coords, s)) out.push_back(&cell);
    return out;
}

std::vector<std::string> ResultSet::values(Axis axis, const Selector& s) const {
    std::vector<std::string> out;
    for (const auto* cell : matching(s)) {
        const auto& v = cell->coords[static_cast<int>(axis)];
        if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
    }
    return out;
}

const CellResults* ResultSet::unique(const Selector& s) const {
    const auto m = matching(s);
    if (m.empty()) return nullptr;
    if (m.size() > 1) {
        std::string free;
        for (Axis a : kAxes) {
            if (s.count(a)) continue;
            std::set<std::string> vals;
            for (const auto* c : m) vals.insert(c->coords[static_cast<int>(a)]);
            if (vals.size() > 1) free += (free.empty() ? "" : ", ") + to_string(a);
        }
        throw ConfigError("selection matches " + std::to_string(m.size()) + " cells; fix the axes: " + free);
    }
    return m.front();
}

std::optional<metrics::StatResult> compare_to_baseline(const CellResults& cell, const CellResults& baseline) {
    if (cell.mean.size() < 2 || baseline.mean.size() < 2) return std::nullopt;
    return metrics::t_test_two_tailed(cell.mean, baseline.mean);
}

namespace {

std::vector<double> percent(const std::vector<double>& v) {
    std::vector<double> out;
    for (double x : v) out.push_back(100.0 * x);
    return out;
}

// Value combinations of `axes` among cells matching `filter`, in first-appearance order.
std::vector<Selector> combos(const ResultSet& rs, const std::vector<Axis>& axes, const Selector& filter) {
    std::vector<Selector> out;
    for (const auto* cell : rs.matching(filter)) {
        Selector s;
        for (Axis a : axes) s[a] = cell->coords[static_cast<int>(a)];
        if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
    }
    return out;
}

std::string combo_label(const std::vector<Axis>& axes, const Selector& s) {
    std::string out;
    for (Axis a : axes) out += (out.empty() ? "" : " ") + display_value(a, s.at(a));
    return out.empty() ? "DSC" : out;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
}

}  // namespace

Table build_table(const ResultSet& rs, const TableSpec& spec) {
    Table t;
    t.title = spec.title;
    const auto row_sel = combos(rs, spec.rows, spec.filter);
    const auto col_sel = combos(rs, spec.cols, spec.filter);
    for (const auto& s : row_sel) t.row_labels.push_back(combo_label(spec.rows, s));
    for (const auto& s : col_sel) t.col_labels.push_back(combo_label(spec.cols, s));
    for (std::size_t r = 0; r < row_sel.size(); ++r) {
        for (std::size_t c = 0; c < col_sel.size(); ++c) {
            TableCell cell;
            cell.row = r;
            cell.col = c;
            Selector s = spec.filter;
            s.insert(row_sel[r].begin(), row_sel[r].end());
            s.insert(col_sel[c].begin(), col_sel[c].end());
            const CellResults* found = rs.unique(s);
            const std::string where = t.row_labels[r] + " / " + t.col_labels[c];
            if (!found || found->mean.size() < 2) {
                t.warnings.push_back("cell " + where + (found ? " has fewer than 2 completed repeats" : " has no results"));
                t.cells.push_back(cell);
                continue;
            }
            cell.present = true;
            cell.coords = found->coords;
            cell.summary = metrics::aggregate_repeats(percent(found->mean));
            const Coords base_coords = with(found->coords, spec.baseline);
            cell.is_baseline = base_coords == found->coords;
            if (!cell.is_baseline) {
                const CellResults* base = rs.find(base_coords);
                if (base) cell.vs_baseline = compare_to_baseline(*found, *base);
                if (!cell.vs_baseline) t.warnings.push_back("cell " + where + " has no usable baseline");
                cell.significant = cell.vs_baseline && cell.vs_baseline->significant;
            }
            t.cells.push_back(cell);
        }
    }
    return t;
}

std::string Table::markdown() const {
    std::ostringstream o;
    if (!title.empty()) o << "**" << title << "**\n\n";
    o << "| |";
    for (const auto& c : col_labels) o << ' ' << c << " |";
    o << "\n|---|";
    for (std::size_t i = 0; i < col_labels.size(); ++i) o << "---|";
    o << '\n';
    for (std::size_t r = 0; r < row_labels.size(); ++r) {
        o << "| " << row_labels[r] << " |";
        for (std::size_t c = 0; c < col_labels.size(); ++c) {
            const auto& cell = at(r, c);
            if (!cell.present) {
                o << " — |";
                continue;
            }
            const std::string text = metrics::format_mean_std(cell.summary);
            if (cell.significant) {
                const auto sp = text.find(' ');
                o << " **" << text.substr(0, sp) << "**" << text.substr(sp) << " |";
            } else {
                o << ' ' << text << " |";
            }
        }
        o << '\n';
    }
    o << "\nMean DSC over repeats (sample std in brackets); bold: two-tailed Welch t-test against the baseline, p < 0.05.\n";
    return o.str();
}

std::string Table::csv() const {
    std::ostringstream o;
    o.precision(10);
    o << "row,column,mean_dsc,std_dsc,repeats,p_value,significant,baseline\n";
    for (const auto& cell : cells) {
        o << csv_field(row_labels[cell.row]) << ',' << csv_field(col_labels[cell.col]) << ',';
        if (!cell.present) {
            o << ",,0,,,\n";
            continue;
        }
        o << cell.summary.mean << ',' << cell.summary.std << ',' << cell.summary.n << ',';
        if (cell.vs_baseline) o << cell.vs_baseline->p_value;
        o << ',' << (cell.significant ? "true" : "false") << ',' << (cell.is_baseline ? "true" : "false") << '\n';
    }
    return o.str();
}

Table emit_table(const std::vector<RunRecord>& records, const TableSpec& spec, const fs::path& prefix) {
    const ResultSet rs(records);
    Table t = build_table(rs, spec);
    for (const auto& w : t.warnings) spdlog::warn("table: {}", w);
    write_text(fs::path(prefix.string() + ".md"), t.markdown());
    write_text(fs::path(prefix.string() + ".csv"), t.csv());
    return t;
}

// Curves

namespace {

const char* kPalette[] = {"#d62728", "#2ca02c", "#1f77b4", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string series_colour(int series) { return series < 0 ? "#000000" : kPalette[series % 8]; }

double axis_number(Axis a, const std::string& v) {
    const double x = std::stod(v);
    return a == Axis::real_fraction ? 100.0 * x : x;
}

struct Frame {
    double x0, x1, y0, y1;      // data ranges
    double left, top, w, h;     // pixels
    double px(double x) const { return left + (x1 == x0 ? 0.5 : (x - x0) / (x1 - x0)) * w; }
    double py(double y) const { return top + h - (y1 == y0 ? 0.5 : (y - y0) / (y1 - y0)) * h; }
};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

void axes(std::ostringstream& o, const Frame& f, const std::string& xlabel, const std::string& ylabel,
          const std::vector<double>& xticks) {
    o << "<rect x='" << f.left << "' y='" << f.top << "' width='" << f.w << "' height='" << f.h
      << "' fill='none' stroke='#444'/>\n";
    for (double x : xticks) {
        o << "<text x='" << fmt(f.px(x)) << "' y='" << f.top + f.h + 16 << "' font-size='11' text-anchor='middle'>"
          << format_number(x) << "</text>\n";
    }
    for (int k = 0; k <= 4; ++k) {
        const double y = f.y0 + (f.y1 - f.y0) * k / 4.0;
        o << "<text x='" << f.left - 6 << "' y='" << fmt(f.py(y) + 4) << "' font-size='11' text-anchor='end'>" << fmt(y)
          << "</text>\n";
    }
    o << "<text x='" << f.left + f.w / 2 << "' y='" << f.top + f.h + 34 << "' font-size='12' text-anchor='middle'>"
      << xlabel << "</text>\n";
    o << "<text x='14' y='" << f.top + f.h / 2 << "' font-size='12' text-anchor='middle' transform='rotate(-90 14 "
      << f.top + f.h / 2 << ")'>" << ylabel << "</text>\n";
}

std::string polyline(const std::vector<std::pair<double, double>>& pts, const std::string& colour,
                     const std::string& dash) {
    std::ostringstream o;
    o << "<polyline fill='none' stroke='" << colour << "' stroke-width='1.8'";
    if (!dash.empty()) o << " stroke-dasharray='" << dash << "'";
    o << " points='";
    for (const auto& [x, y] : pts) o << fmt(x) << ',' << fmt(y) << ' ';
    o << "'/>\n";
    return o.str();
}

std::pair<double, double> padded(double lo, double hi) {
    if (hi - lo < 1e-9) {
        lo -= 1;
        hi += 1;
    }
    const double pad = 0.08 * (hi - lo);
    return {lo - pad, hi + pad};
}

std::string render_curves(const Curves& c, const CurveSpec& spec, const std::vector<std::string>& series_names) {
    std::vector<double> xs;
    double lo = 1e300, hi = -1e300, dmax = 0;
    for (const auto& p : c.points) {
        if (std::find(xs.begin(), xs.end(), p.x) == xs.end()) xs.push_back(p.x);
        lo = std::min({lo, p.baseline, p.augmented});
        hi = std::max({hi, p.baseline, p.augmented});
        dmax = std::max(dmax, std::abs(p.difference));
    }
    std::sort(xs.begin(), xs.end());
    const auto [y0, y1] = padded(lo, hi);
    const Frame f{xs.front(), xs.back(), y0, y1, 70, 40, 560, 340};
    const double dlim = dmax > 0 ? dmax * 1.2 : 1.0;
    const Frame fd{xs.front(), xs.back(), -dlim, dlim, 70, 40, 560, 340};

    std::ostringstream o;
    o << "<svg xmlns='http://www.w3.org/2000/svg' width='820' height='440' font-family='sans-serif'>\n";
    o << "<rect width='100%' height='100%' fill='white'/>\n";
    if (!spec.title.empty()) o << "<text x='350' y='22' font-size='14' text-anchor='middle'>" << spec.title << "</text>\n";
    axes(o, f, spec.sweep == Axis::real_fraction ? "real data used (%)" : to_string(spec.sweep), "DSC (%)", xs);
    // difference axis on the right
    for (int k = 0; k <= 4; ++k) {
        const double y = -dlim + 2 * dlim * k / 4.0;
        o << "<text x='" << fd.left + fd.w + 6 << "' y='" << fmt(fd.py(y) + 4) << "' font-size='11'>" << fmt(y) << "</text>\n";
    }
    o << "<line x1='" << fd.left << "' x2='" << fd.left + fd.w << "' y1='" << fmt(fd.py(0)) << "' y2='" << fmt(fd.py(0))
      << "' stroke='#bbb' stroke-width='0.8'/>\n";
    const int n_series = static_cast<int>(series_names.size());
    for (int s = -1; s < n_series - 1; ++s) {
        std::vector<std::pair<double, double>> base, aug, diff;
        for (double x : xs) {
            for (const auto& p : c.points) {
                if (p.series != s || p.x != x) continue;
                base.push_back({f.px(x), f.py(p.baseline)});
                aug.push_back({f.px(x), f.py(p.augmented)});
                diff.push_back({fd.px(x), fd.py(p.difference)});
            }
        }
        const auto colour = series_colour(s);
        o << polyline(base, colour, "") << polyline(aug, colour, "7,4") << polyline(diff, colour, "9,3,2,3");
    }
    // legend
    double ly = 50;
    for (int s = -1; s < n_series - 1; ++s) {
        o << "<line x1='680' x2='700' y1='" << ly << "' y2='" << ly << "' stroke='" << series_colour(s)
          << "' stroke-width='2'/><text x='706' y='" << ly + 4 << "' font-size='11'>" << series_names[s + 1] << "</text>\n";
        ly += 16;
    }
    ly += 8;
    const std::pair<const char*, const char*> styles[] = {
        {"", "baseline"}, {"7,4", "augmented"}, {"9,3,2,3", "difference (right axis)"}};
    for (const auto& [dash, name] : styles) {
        o << "<line x1='680' x2='700' y1='" << ly << "' y2='" << ly << "' stroke='#000' stroke-width='1.5'"
          << (std::string(dash).empty() ? "" : std::string(" stroke-dasharray='") + dash + "'") << "/><text x='706' y='"
          << ly + 4 << "' font-size='11'>" << name << "</text>\n";
        ly += 16;
    }
    o << "</svg>\n";
    return o.str();
}

std::string render_scatter(const Curves& c, const CurveSpec& spec) {
    std::vector<std::string> groups;
    std::vector<double> xs;
    double lo = 1e300, hi = -1e300;
    for (const auto& p : c.scatter) {
        if (std::find(groups.begin(), groups.end(), p.group) == groups.end()) groups.push_back(p.group);
        if (std::find(xs.begin(), xs.end(), p.x) == xs.end()) xs.push_back(p.x);
        for (double v : p.repeat_values) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    std::sort(xs.begin(), xs.end());
    std::ostringstream o;
    o << "<svg xmlns='http://www.w3.org/2000/svg' width='820' height='440' font-family='sans-serif'>\n";
    o << "<rect width='100%' height='100%' fill='white'/>\n";
    if (c.scatter.empty()) {
        o << "<text x='410' y='220' text-anchor='middle'>no completed cells</text>\n</svg>\n";
        return o.str();
    }
    const auto [y0, y1] = padded(lo, hi);
    const double span = xs.back() - xs.front();
    const double slot = (span > 0 ? span : 1.0) / std::max<std::size_t>(xs.size(), 1) * 0.5;
    const Frame f{xs.front() - slot, xs.back() + slot, y0, y1, 70, 40, 560, 340};
    if (!spec.title.empty()) o << "<text x='350' y='22' font-size='14' text-anchor='middle'>" << spec.title << "</text>\n";
    axes(o, f, spec.scatter_x == Axis::synth_percent ? "added synthetic data (%)" : to_string(spec.scatter_x), "DSC (%)", xs);
    for (const auto& p : c.scatter) {
        const auto g = static_cast<int>(std::find(groups.begin(), groups.end(), p.group) - groups.begin());
        const double offset = groups.size() > 1 ? (g - (groups.size() - 1) / 2.0) * slot * 0.5 : 0.0;
        const auto colour = kPalette[g % 8];
        for (double v : p.repeat_values) {
            o << "<circle cx='" << fmt(f.px(p.x + offset)) << "' cy='" << fmt(f.py(v)) << "' r='2.5' fill='" << colour
              << "' fill-opacity='0.7'/>\n";
        }
        o << "<circle cx='" << fmt(f.px(p.x + offset)) << "' cy='" << fmt(f.py(p.mean)) << "' r='5.5' stroke='#000' stroke-width='1.5' fill='"
          << (p.significant ? "#000" : "white") << "' fill-opacity='" << (p.significant ? "1" : "0.6") << "'/>\n";
    }
    double ly = 50;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        o << "<circle cx='690' cy='" << ly << "' r='4' fill='" << kPalette[g % 8] << "'/><text x='700' y='" << ly + 4
          << "' font-size='11'>" << display_value(spec.scatter_group, groups[g]) << "</text>\n";
        ly += 16;
    }
    o << "<circle cx='690' cy='" << ly + 8 << "' r='5' fill='#000'/><text x='700' y='" << ly + 12
      << "' font-size='11'>mean, p &lt; 0.05 vs baseline</text>\n";
    o << "<circle cx='690' cy='" << ly + 26 << "' r='5' fill='white' stroke='#000'/><text x='700' y='" << ly + 30
      << "' font-size='11'>mean, not significant</text>\n";
    o << "</svg>\n";
    return o.str();
}

double series_value(const CellResults& c, std::size_t repeat, int series) {
    return 100.0 * (series < 0 ? c.mean[repeat] : c.per_class[repeat].at(static_cast<std::size_t>(series)));
}

double series_mean(const CellResults& c, int series) {
    double s = 0;
    for (std::size_t i = 0; i < c.mean.size(); ++i) s += series_value(c, i, series);
    return s / static_cast<double>(c.mean.size());
}

}  // namespace

Curves build_curves(const ResultSet& rs, const CurveSpec& spec) {
    if (spec.scatter_x != Axis::synth_percent && spec.scatter_x != Axis::real_fraction) {
        throw ConfigError("scatter axis must be numeric (synth_percent or real_fraction)");
    }
    Curves out;

    // curves over the sweep axis
    Selector base_sel = spec.filter, aug_sel = spec.filter;
    for (const auto& [a, v] : spec.baseline) base_sel[a] = v;
    for (const auto& [a, v] : spec.augmented) aug_sel[a] = v;
    std::vector<std::string> sweep_values;
    for (const auto& v : rs.values(spec.sweep, base_sel)) {
        Selector b = base_sel, g = aug_sel;
        b[spec.sweep] = v;
        g[spec.sweep] = v;
        if (rs.unique(b) && rs.unique(g)) sweep_values.push_back(v);
    }
    std::size_t classes = 0;
    for (const auto& cell : rs.cells())
        if (!cell.per_class.empty()) classes = std::max(classes, cell.per_class.front().size());
    for (const auto& v : sweep_values) {
        Selector b = base_sel, g = aug_sel;
        b[spec.sweep] = v;
        g[spec.sweep] = v;
        const CellResults& base = *rs.unique(b);
        const CellResults& aug = *rs.unique(g);
        for (int s = -1; s < static_cast<int>(classes); ++s) {
            CurvePoint p;
            p.sweep_value = v;
            p.x = axis_number(spec.sweep, v);
            p.series = s;
            p.baseline = series_mean(base, s);
            p.augmented = series_mean(aug, s);
            p.difference = p.augmented - p.baseline;
            if (s < 0) {
                p.stat = compare_to_baseline(aug, base);
            } else if (base.mean.size() >= 2 && aug.mean.size() >= 2) {
                std::vector<double> a, b2;
                for (std::size_t i = 0; i < aug.mean.size(); ++i) a.push_back(series_value(aug, i, s));
                for (std::size_t i = 0; i < base.mean.size(); ++i) b2.push_back(series_value(base, i, s));
                p.stat = metrics::t_test_two_tailed(a, b2);
            }
            out.points.push_back(p);
        }
    }
    out.has_curves = sweep_values.size() >= 2;
    if (!out.has_curves) out.warnings.push_back("sweep has fewer than two complete points; only the scatter is drawn");

    // scatter of every filtered cell, significance from the shared comparison
    for (const auto* cell : rs.matching(spec.filter)) {
        ScatterPoint sp;
        sp.group = cell->coords[static_cast<int>(spec.scatter_group)];
        sp.x = axis_number(spec.scatter_x, cell->coords[static_cast<int>(spec.scatter_x)]);
        sp.coords = cell->coords;
        for (std::size_t i = 0; i < cell->mean.size(); ++i) sp.repeat_values.push_back(series_value(*cell, i, -1));
        sp.mean = series_mean(*cell, -1);
        const Coords base_coords = with(cell->coords, spec.baseline);
        sp.is_baseline = base_coords == cell->coords;
        if (!sp.is_baseline) {
            if (const CellResults* base = rs.find(base_coords)) {
                const auto st = compare_to_baseline(*cell, *base);
                sp.significant = st && st->significant;
            }
        }
        out.scatter.push_back(std::move(sp));
    }

    std::vector<std::string> names{"mean"};
    for (std::size_t k = 0; k < classes; ++k) {
        names.push_back(k < spec.class_names.size() ? spec.class_names[k] : "class " + std::to_string(k + 1));
    }
    if (out.has_curves) out.curves_svg = render_curves(out, spec, names);
    out.scatter_svg = render_scatter(out, spec);
    return out;
}

std::string Curves::csv() const {
    std::ostringstream o;
    o.precision(10);
    o << "kind,sweep_value,series,x,baseline_dsc,augmented_dsc,difference,p_value,significant,repeats\n";
    for (const auto& p : points) {
        o << "curve," << p.sweep_value << ',' << (p.series < 0 ? std::string("mean") : "class" + std::to_string(p.series + 1))
          << ',' << p.x << ',' << p.baseline << ',' << p.augmented << ',' << p.difference << ',';
        if (p.stat) o << p.stat->p_value;
        o << ',' << (p.stat && p.stat->significant ? "true" : "false") << ",\n";
    }
    for (const auto& s : scatter) {
        o << "scatter," << s.group << ",mean," << s.x << ",," << s.mean << ",,," << (s.significant ? "true" : "false")
          << ',' << s.repeat_values.size() << '\n';
    }
    return o.str();
}

Curves emit_curves(const std::vector<RunRecord>& records, const CurveSpec& spec, const fs::path& prefix) {
    const ResultSet rs(records);
    Curves c = build_curves(rs, spec);
    for (const auto& w : c.warnings) spdlog::warn("curves: {}", w);
    if (c.has_curves) write_text(fs::path(prefix.string() + "-curves.svg"), c.curves_svg);
    write_text(fs::path(prefix.string() + "-scatter.svg"), c.scatter_svg);
    write_text(fs::path(prefix.string() + ".csv"), c.csv());
    return c;
}

}  // namespace ganaug::experiment
