#include "ganaug/audit/audit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <thread>

#include <spdlog/spdlog.h>

#include "ganaug/data/preprocess.hpp"
#include "ganaug/metrics/dice.hpp"
#include "ganaug/simd/kernels.hpp"
#include "ganaug/util/error.hpp"
#include "ganaug/util/png.hpp"

namespace ganaug::audit {

Metric parse_metric(std::string_view text) {
    if (text == "l2_image") return Metric::l2_image;
    if (text == "l2_joint") return Metric::l2_joint;
    throw ConfigError("unknown audit metric '" + std::string(text) + "' (expected l2_image|l2_joint)");
}

std::string to_string(Metric m) { return m == Metric::l2_joint ? "l2_joint" : "l2_image"; }

std::vector<float> features(const data::Patch& patch, int label_classes, Metric metric) {
    std::vector<float> f(patch.image.begin(), patch.image.end());
    if (metric == Metric::l2_joint) {
        const std::size_t plane = patch.pixels();
        f.resize(plane * (1 + label_classes), 0.0f);
        for (std::size_t k = 0; k < plane; ++k) {
            if (patch.labels[k] > 0) f[patch.labels[k] * plane + k] = 1.0f;
        }
    }
    return f;
}

namespace {

struct FeatureBank {
    std::size_t dim = 0;
    std::vector<float> values;
    std::size_t size() const { return dim ? values.size() / dim : 0; }
    const float* row(std::size_t i) const { return values.data() + i * dim; }
};

FeatureBank bank(const data::PatchSet& set, Metric metric) {
    FeatureBank b;
    for (const auto& p : set.patches()) {
        auto f = features(p, set.spec().label_classes, metric);
        b.dim = f.size();
        b.values.insert(b.values.end(), f.begin(), f.end());
    }
    return b;
}

// Smallest squared distance from `query` to the bank, skipping `exclude`.
std::pair<std::size_t, float> scan(const float* query, const FeatureBank& b, std::size_t exclude) {
    const auto l2sq = simd::kernels().l2sq;
    std::size_t best = std::numeric_limits<std::size_t>::max();
    float best_d = std::numeric_limits<float>::infinity();
    for (std::size_t j = 0; j < b.size(); ++j) {
        if (j == exclude) continue;
        const float d = l2sq(query, b.row(j), b.dim);
        if (d < best_d) {
            best_d = d;
            best = j;
        }
    }
    return {best, best_d};
}

// Runs body(i) for i in [0, n) over the available cores, each index exactly once.
template <class Body>
void parallel_for(std::size_t n, Body body) {
    const std::size_t workers = std::min<std::size_t>(std::max(1u, std::thread::hardware_concurrency()), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < n; i += workers) body(i);
        });
    }
    for (auto& t : pool) t.join();
}

void check_compatible(const data::PatchSet& a, const data::PatchSet& b) {
    if (a.patch_size() != b.patch_size() || a.spec().label_classes != b.spec().label_classes) {
        throw ValidationError("audit: synthetic and real patch sets differ in shape or classes");
    }
}

double label_agreement(const data::Patch& a, const data::Patch& b, int classes) {
    return metrics::make_report(metrics::class_dice_counts(a.labels, b.labels, classes)).mean;
}

}  // namespace

NnPair nearest_neighbor(const data::Patch& synth, const data::PatchSet& real, Metric metric) {
    if (real.empty()) throw ValidationError("nearest_neighbor: real set is empty");
    if (static_cast<int>(synth.size) != real.patch_size()) throw ValidationError("nearest_neighbor: patch size mismatch");
    const FeatureBank b = bank(real, metric);
    const auto q = features(synth, real.spec().label_classes, metric);
    const auto [idx, d2] = scan(q.data(), b, std::numeric_limits<std::size_t>::max());
    NnPair p;
    p.real_index = idx;
    p.distance = std::sqrt(static_cast<double>(d2));
    p.label_dice = label_agreement(synth, real[idx], real.spec().label_classes);
    return p;
}

AuditReport audit_report(const data::PatchSet& synth, const data::PatchSet& real, Metric metric, int histogram_bins) {
    if (synth.empty() || real.empty()) throw ValidationError("audit_report: both patch sets must be non-empty");
    check_compatible(synth, real);
    if (histogram_bins < 1) throw ValidationError("audit_report: histogram needs at least one bin");
    AuditReport r;
    r.metric = metric;
    const int classes = real.spec().label_classes;
    const FeatureBank rb = bank(real, metric);
    const FeatureBank sb = bank(synth, metric);

    if (real.size() < 20) {
        r.warnings.push_back("only " + std::to_string(real.size()) +
                             " real patches; the novelty threshold is unreliable below 20");
        spdlog::warn("audit: {}", r.warnings.back());
    }
    r.real_nn_distances.resize(real.size(), 0.0);
    if (real.size() >= 2) {
        parallel_for(real.size(), [&](std::size_t i) {
            r.real_nn_distances[i] = std::sqrt(static_cast<double>(scan(rb.row(i), rb, i).second));
        });
        r.mean_real_nn = std::accumulate(r.real_nn_distances.begin(), r.real_nn_distances.end(), 0.0) /
                         static_cast<double>(real.size());
        std::vector<float> as_float(r.real_nn_distances.begin(), r.real_nn_distances.end());
        r.novelty_threshold = data::percentile(as_float, 95.0);
    } else {
        r.real_nn_distances.clear();
        r.novelty_threshold = std::numeric_limits<double>::infinity();
        r.warnings.push_back("a single real patch has no real neighbour; novelty is undefined");
    }
    r.memorized_eps = 1e-3 * r.mean_real_nn;

    r.pairs.resize(synth.size());
    parallel_for(synth.size(), [&](std::size_t i) {
        const auto [idx, d2] = scan(sb.row(i), rb, std::numeric_limits<std::size_t>::max());
        NnPair& p = r.pairs[i];
        p.synthetic_index = i;
        p.real_index = idx;
        p.distance = std::sqrt(static_cast<double>(d2));
        p.memorized = p.distance < r.memorized_eps || p.distance == 0.0;
        p.novel = !p.memorized && p.distance > r.novelty_threshold;
        p.label_dice = label_agreement(synth[i], real[idx], classes);
    });
    for (const auto& p : r.pairs) {
        r.memorized += p.memorized;
        r.novel += p.novel;
    }

    double hi = 0;
    for (const auto& p : r.pairs) hi = std::max(hi, p.distance);
    if (hi == 0) hi = 1.0;
    const double width = hi / histogram_bins;
    for (int b = 0; b < histogram_bins; ++b) r.histogram.push_back({b * width, (b + 1) * width, 0});
    for (const auto& p : r.pairs) {
        const int b = std::min(histogram_bins - 1, static_cast<int>(p.distance / width));
        ++r.histogram[b].count;
    }
    return r;
}

nlohmann::json to_json(const AuditReport& r) {
    nlohmann::json j;
    j["metric"] = to_string(r.metric);
    j["synthetic_count"] = r.pairs.size();
    j["real_count"] = r.real_nn_distances.size();
    j["mean_real_nn_distance"] = r.mean_real_nn;
    j["memorized_eps"] = r.memorized_eps;
    j["novelty_threshold"] = std::isfinite(r.novelty_threshold) ? nlohmann::json(r.novelty_threshold) : nlohmann::json();
    j["memorized"] = r.memorized;
    j["novel"] = r.novel;
    j["memorized_fraction"] = r.pairs.empty() ? 0.0 : static_cast<double>(r.memorized) / r.pairs.size();
    j["novel_fraction"] = r.pairs.empty() ? 0.0 : static_cast<double>(r.novel) / r.pairs.size();
    j["warnings"] = r.warnings;
    auto& pairs = j["pairs"] = nlohmann::json::array();
    for (const auto& p : r.pairs) {
        pairs.push_back({{"synthetic", p.synthetic_index},
                         {"real", p.real_index},
                         {"distance", p.distance},
                         {"label_dice", p.label_dice},
                         {"memorized", p.memorized},
                         {"novel", p.novel}});
    }
    return j;
}

void write_histogram_csv(const AuditReport& r, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "bin_lo,bin_hi,count\n";
    for (const auto& b : r.histogram) out << b.lo << ',' << b.hi << ',' << b.count << '\n';
}

// Montage drawing

namespace {

constexpr int kGap = 4;
constexpr int kTextScale = 2;
constexpr int kGlyphW = 3;
constexpr int kGlyphH = 5;

// 3x5 bitmaps, rows top to bottom, bit 2 = left column.
const std::uint8_t* glyph(char c) {
    static const std::uint8_t digits[10][5] = {
        {7, 5, 5, 5, 7}, {2, 6, 2, 2, 7}, {7, 1, 7, 4, 7}, {7, 1, 7, 1, 7}, {5, 5, 7, 1, 1},
        {7, 4, 7, 1, 7}, {7, 4, 7, 5, 7}, {7, 1, 1, 1, 1}, {7, 5, 7, 5, 7}, {7, 5, 7, 1, 7}};
    static const std::uint8_t dot[5] = {0, 0, 0, 0, 2};
    static const std::uint8_t blank[5] = {0, 0, 0, 0, 0};
    if (c >= '0' && c <= '9') return digits[c - '0'];
    if (c == '.') return dot;
    return blank;
}

int text_height() { return kGlyphH * kTextScale + 2 * kGap; }

void draw_text(RgbImage& img, int x, int y, const std::string& text) {
    for (char c : text) {
        const std::uint8_t* g = glyph(c);
        for (int r = 0; r < kGlyphH; ++r)
            for (int col = 0; col < kGlyphW; ++col) {
                if (!(g[r] & (4 >> col))) continue;
                for (int dy = 0; dy < kTextScale; ++dy)
                    for (int dx = 0; dx < kTextScale; ++dx)
                        img.set(x + col * kTextScale + dx, y + r * kTextScale + dy, 255, 255, 255);
            }
        x += (kGlyphW + 1) * kTextScale;
    }
}

void class_colour(int c, std::uint8_t& r, std::uint8_t& g, std::uint8_t& b) {
    static const std::uint8_t table[4][3] = {{230, 40, 40}, {40, 210, 40}, {60, 110, 255}, {240, 220, 30}};
    const auto* t = table[(c - 1) % 4];
    r = t[0];
    g = t[1];
    b = t[2];
}

void draw_tile(RgbImage& img, const data::Patch& p, int x0, int y0, int scale) {
    const int n = p.size;
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            const float v = std::clamp(p.image[y * n + x], -1.0f, 1.0f);
            const auto grey = static_cast<std::uint8_t>(std::lround((v + 1.0f) * 127.5f));
            std::uint8_t r = grey, g = grey, b = grey;
            const int lab = p.labels[y * n + x];
            if (lab > 0) {
                bool edge = false;
                const int dy[4] = {-1, 1, 0, 0}, dx[4] = {0, 0, -1, 1};
                for (int k = 0; k < 4 && !edge; ++k) {
                    const int yy = y + dy[k], xx = x + dx[k];
                    edge = yy < 0 || xx < 0 || yy >= n || xx >= n || p.labels[yy * n + xx] != lab;
                }
                if (edge) class_colour(lab, r, g, b);
            }
            for (int sy = 0; sy < scale; ++sy)
                for (int sx = 0; sx < scale; ++sx) img.set(x0 + x * scale + sx, y0 + y * scale + sy, r, g, b);
        }
}

}  // namespace

std::pair<int, int> montage_size(std::size_t columns, int patch_size, int scale) {
    const int tile = patch_size * scale;
    const int w = static_cast<int>(columns) * (tile + kGap) + kGap;
    const int h = 2 * tile + 3 * kGap + text_height();
    return {w, h};
}

void build_montage(const std::vector<NnPair>& pairs, const data::PatchSet& synth, const data::PatchSet& real,
                   const std::filesystem::path& out, int scale) {
    if (pairs.empty()) throw ValidationError("build_montage: no pairs");
    if (scale < 1) throw ValidationError("build_montage: scale must be >= 1");
    check_compatible(synth, real);
    const int tile = synth.patch_size() * scale;
    const auto [w, h] = montage_size(pairs.size(), synth.patch_size(), scale);
    RgbImage img(w, h, 24);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const NnPair& p = pairs[i];
        if (p.synthetic_index >= synth.size() || p.real_index >= real.size()) {
            throw ValidationError("build_montage: pair index out of range");
        }
        const int x0 = kGap + static_cast<int>(i) * (tile + kGap);
        draw_tile(img, synth[p.synthetic_index], x0, kGap, scale);
        draw_tile(img, real[p.real_index], x0, 2 * kGap + tile, scale);
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2f", p.distance);
        draw_text(img, x0, 3 * kGap + 2 * tile + kGap, buf);
    }
    write_png(out, img);
}

}  // namespace ganaug::audit
