#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <set>

#include "doctest.h"
#include "ganaug/data/io.hpp"
#include "ganaug/data/phantom.hpp"
#include "ganaug/data/preprocess.hpp"
#include "ganaug/util/error.hpp"

using namespace ganaug;
using namespace ganaug::data;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("ganaug_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

Volume tiny_volume(const std::string& id, int h, int w, std::uint8_t fill_label = 0) {
    Volume v;
    v.id = id;
    v.slices = 1;
    v.height = h;
    v.width = w;
    v.image.resize(h * w);
    for (int i = 0; i < h * w; ++i) v.image[i] = static_cast<float>(i % 17);
    v.labels.assign(h * w, fill_label);
    return v;
}

}  // namespace

TEST_CASE("channel spec validation") {
    CHECK_NOTHROW(ChannelSpec::csf3().validate());
    ChannelSpec bad{1, 2, {"only-one"}};
    CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("labels_to_channels definition and roundtrip") {
    std::vector<std::uint8_t> zeros(16, 0);
    auto ch = labels_to_channels(zeros, 3);
    CHECK(std::all_of(ch.begin(), ch.end(), [](auto v) { return v == 0; }));
    std::vector<std::uint8_t> twos(16, 2);
    ch = labels_to_channels(twos, 3);
    for (int i = 0; i < 16; ++i) {
        CHECK(ch[i] == 0);
        CHECK(ch[16 + i] == 1);
        CHECK(ch[32 + i] == 0);
    }
    std::mt19937 rng(1);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<std::uint8_t> g(64);
        for (auto& v : g) v = static_cast<std::uint8_t>(rng() % 4);
        CHECK(channels_to_labels(labels_to_channels(g, 3), 3) == g);
    }
    std::vector<std::uint8_t> bad(4, 5);
    CHECK_THROWS_AS(labels_to_channels(bad, 3), ValidationError);
    std::vector<std::uint8_t> doubled{1, 0, 1, 0};  // pixel 0 active in both channels
    CHECK_THROWS_AS(channels_to_labels(doubled, 2), ValidationError);
}

TEST_CASE("normalize_intensities") {
    Volume v = tiny_volume("v", 1, 101);
    for (int i = 0; i <= 100; ++i) v.image[i] = static_cast<float>(i);
    // p1 = 1, p99 = 99 with linear interpolation over 0..100
    Volume n = normalize_intensities(v);
    CHECK(n.image[50] == doctest::Approx(0.0));
    CHECK(n.image[1] == doctest::Approx(-1.0));
    CHECK(n.image[99] == doctest::Approx(1.0));
    CHECK(n.image[0] == -1.0f);
    CHECK(n.image[100] == 1.0f);

    Volume flat = tiny_volume("flat", 4, 4);
    std::fill(flat.image.begin(), flat.image.end(), 3.0f);
    CHECK_THROWS_AS(normalize_intensities(flat), ValidationError);

    std::mt19937 rng(2);
    std::normal_distribution<float> nd(0.0f, 100.0f);
    Volume r = tiny_volume("r", 32, 32);
    for (auto& x : r.image) x = nd(rng);
    Volume rn = normalize_intensities(r);
    CHECK(*std::min_element(rn.image.begin(), rn.image.end()) >= -1.0f);
    CHECK(*std::max_element(rn.image.begin(), rn.image.end()) <= 1.0f);
}

TEST_CASE("reduce_available_data: counts, determinism and nesting") {
    std::vector<Volume> vols;
    for (int i = 0; i < 500; ++i) vols.push_back(tiny_volume("v" + std::to_string(i), 2, 2));
    CHECK(reduce_available_data(vols, 0.10, 7).size() == 50);
    CHECK(reduce_available_data(vols, 1.0, 7).size() == 500);
    CHECK(reduced_count(100, 0.29) == 29);

    auto ids = [](const std::vector<Volume>& v) {
        std::vector<std::string> out;
        for (const auto& x : v) out.push_back(x.id);
        return out;
    };
    CHECK(ids(reduce_available_data(vols, 0.3, 11)) == ids(reduce_available_data(vols, 0.3, 11)));
    std::set<std::string> all;
    for (const auto& id : ids(reduce_available_data(vols, 1.0, 3))) all.insert(id);
    CHECK(all.size() == 500);
    for (double f1 : {0.1, 0.2, 0.5})
        for (double f2 : {0.6, 0.9}) {
            auto small = ids(reduce_available_data(vols, f1, 5));
            auto large = ids(reduce_available_data(vols, f2, 5));
            std::set<std::string> ls(large.begin(), large.end());
            CHECK(std::all_of(small.begin(), small.end(), [&](const auto& id) { return ls.count(id) == 1; }));
        }
    std::vector<Volume> few(vols.begin(), vols.begin() + 5);
    CHECK_THROWS_AS(reduce_available_data(few, 0.1, 1), ValidationError);
    CHECK_THROWS_AS(reduce_available_data({}, 0.5, 1), ValidationError);
    CHECK_THROWS_AS(reduce_available_data(few, 0.0, 1), ValidationError);
}

TEST_CASE("sample_patches: vacuous, containment, determinism, errors") {
    auto spec = ChannelSpec::csf3();
    auto vols = generate_phantom_volumes(PhantomParams{3, 2, 48, 40, 3, 2}, 9);
    CHECK(sample_patches(vols, spec, 0, 16, 1).empty());
    auto set = sample_patches(vols, spec, 300, 16, 1);
    CHECK(set.size() == 300);
    CHECK(set.real_count() == 300);
    for (const auto& p : set.patches()) {
        REQUIRE(p.origin);
        CHECK(p.origin->row >= 0);
        CHECK(p.origin->col >= 0);
        CHECK(p.origin->row + 16 <= 48);
        CHECK(p.origin->col + 16 <= 40);
    }
    auto again = sample_patches(vols, spec, 300, 16, 1);
    for (std::size_t i = 0; i < 300; ++i) CHECK(set[i].origin == again[i].origin);
    CHECK(set.content_hash() == again.content_hash());
    CHECK_THROWS_AS(sample_patches({}, spec, 5, 16, 1), ValidationError);
    CHECK_THROWS_AS(sample_patches(vols, spec, 5, 64, 1), ValidationError);
}

TEST_CASE("sample_patches: a single labelled pixel is covered by the foreground half") {
    Volume v = tiny_volume("one", 40, 40);
    v.labels[17 * 40 + 23] = 1;
    auto set = sample_patches({v}, ChannelSpec::wmh1(), 10, 8, 4);
    int hits = 0;
    for (const auto& p : set.patches()) hits += std::count(p.labels.begin(), p.labels.end(), 1);
    CHECK(hits >= 5);
}

TEST_CASE("sample_patches: foreground rate matches the mixture model (chi-square, 1%)") {
    auto vols = generate_phantom_volumes(PhantomParams{1, 1, 64, 64, 1, 3, 1.5, 3.0}, 21);
    const int P = 16;
    const auto& v = vols[0];
    // Brute-force oracle: probability that a uniformly centred, clamped window holds foreground.
    int contain = 0;
    for (int r = 0; r < v.height; ++r)
        for (int c = 0; c < v.width; ++c) {
            auto [top, left] = clamp_window(r, c, P, v.height, v.width);
            bool any = false;
            for (int y = top; y < top + P && !any; ++y)
                for (int x = left; x < left + P && !any; ++x) any = v.labels[y * v.width + x] != 0;
            contain += any;
        }
    const double p_uniform = static_cast<double>(contain) / (v.height * v.width);
    const int n = 10000;
    auto set = sample_patches(vols, ChannelSpec::wmh1(), n, P, 77);
    int observed = 0;
    for (const auto& p : set.patches()) observed += std::any_of(p.labels.begin(), p.labels.end(), [](auto x) { return x; });
    // Foreground-centred draws always contain foreground; only the uniform half is random.
    const double expected = n / 2.0 + n / 2.0 * p_uniform;
    const double var_half = n / 2.0 * p_uniform * (1 - p_uniform);
    const double chi2 = (observed - expected) * (observed - expected) / var_half;
    CHECK(chi2 < 6.635);  // chi-square(1) critical value at 1%
}

TEST_CASE("phantom: count, determinism, class ordering, errors") {
    PhantomParams p;
    p.n_volumes = 20;
    auto a = generate_phantom_volumes(p, 5);
    auto b = generate_phantom_volumes(p, 5);
    CHECK(a.size() == 20);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].image == b[i].image);
        CHECK(a[i].labels == b[i].labels);
        CHECK_NOTHROW(a[i].validate(3));
    }
    std::array<long, 4> counts{};
    for (const auto& v : a)
        for (auto l : v.labels) ++counts[l];
    MESSAGE("class pixel counts: " << counts[1] << " " << counts[2] << " " << counts[3]);
    CHECK(counts[2] > counts[1]);
    CHECK(counts[1] > counts[3]);
    PhantomParams tiny = p;
    tiny.height = 16;
    CHECK_THROWS_AS(generate_phantom_volumes(tiny, 1), ValidationError);
    PhantomParams lesions = p;
    lesions.classes = 1;
    lesions.lesion_radius_max = 20;
    CHECK_THROWS_AS(generate_phantom_volumes(lesions, 1), ValidationError);
    PhantomParams two = p;
    two.classes = 2;
    CHECK_THROWS_AS(generate_phantom_volumes(two, 1), ValidationError);
}

TEST_CASE("volume io: raw grid and nifti layouts") {
    auto vols = generate_phantom_volumes(PhantomParams{3, 2, 32, 28, 3, 2}, 3);
    for (auto fmt : {VolumeFormat::raw_grid, VolumeFormat::nifti}) {
        for (bool gz : {false, true}) {
            if (fmt == VolumeFormat::raw_grid && gz) continue;
            auto dir = scratch(std::string("io_") + (fmt == VolumeFormat::nifti ? "nii" : "raw") + (gz ? "gz" : ""));
            for (const auto& v : vols) save_volume(dir, v, fmt, gz);
            auto loaded = load_volumes(dir, fmt, ChannelSpec::csf3());
            REQUIRE(loaded.size() == 3);
            for (std::size_t i = 0; i < 3; ++i) {
                CHECK(loaded[i].id == vols[i].id);
                CHECK(loaded[i].image == vols[i].image);
                CHECK(loaded[i].labels == vols[i].labels);
            }
        }
    }
    auto empty = scratch("io_empty");
    CHECK(load_volumes(empty, VolumeFormat::raw_grid, ChannelSpec::csf3()).empty());

    auto bad = scratch("io_badlabel");
    Volume v = tiny_volume("bad", 4, 4);
    v.labels[3] = 5;  // C + 2
    save_volume(bad, v, VolumeFormat::raw_grid);
    CHECK_THROWS_WITH_AS(load_volumes(bad, VolumeFormat::raw_grid, ChannelSpec::csf3()),
                         doctest::Contains("label value 5"), ValidationError);

    auto missing = scratch("io_missing");
    save_volume(missing, tiny_volume("lonely", 4, 4), VolumeFormat::raw_grid);
    fs::remove(missing / "lonely" / "label.raw");
    CHECK_THROWS_WITH_AS(load_volumes(missing, VolumeFormat::raw_grid, ChannelSpec::csf3()),
                         doctest::Contains("lonely"), ValidationError);
}
