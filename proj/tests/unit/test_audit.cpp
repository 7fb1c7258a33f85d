#include <doctest.h>

#include <algorithm>
#include <filesystem>

#include "ganaug/audit/audit.hpp"
#include "ganaug/util/error.hpp"
#include "ganaug/util/png.hpp"
#include "patches.hpp"

using namespace ganaug;
namespace fs = std::filesystem;

namespace {

data::PatchSet random_set(std::size_t count, bool synthetic, std::uint64_t seed, int n = 16, int duplicates = 0) {
    Rng rng(seed);
    data::PatchSet set(data::ChannelSpec::csf3(), n);
    std::vector<data::Patch> made;
    for (std::size_t i = 0; i < count; ++i) made.push_back(testsupport::random_patch(n, 3, rng, synthetic));
    // copies of earlier patches appended later force exact ties
    for (int d = 0; d < duplicates; ++d) made.push_back(made[static_cast<std::size_t>(d) % count]);
    for (auto& p : made) set.add(p);
    return set;
}

fs::path scratch(const std::string& name) {
    auto dir = fs::temp_directory_path() / "ganaug_audit_tests";
    fs::create_directories(dir);
    return dir / name;
}

}  // namespace

TEST_CASE("audit: metric parsing") {
    CHECK(audit::parse_metric("l2_image") == audit::Metric::l2_image);
    CHECK(audit::parse_metric("l2_joint") == audit::Metric::l2_joint);
    CHECK_THROWS_AS(audit::parse_metric("cosine"), ConfigError);
}

TEST_CASE("audit: nearest neighbour matches exhaustive oracle") {
    const auto real = random_set(60, false, 11, 16, 10);
    auto synth = random_set(40, true, 12);
    // some queries sit exactly on a duplicated real patch
    for (int i = 0; i < 5; ++i) {
        auto p = real[static_cast<std::size_t>(i)];
        p.origin.reset();
        p.is_synthetic = true;
        synth.add(p);
    }
    for (auto metric : {audit::Metric::l2_image, audit::Metric::l2_joint}) {
        const bool joint = metric == audit::Metric::l2_joint;
        for (std::size_t i = 0; i < synth.size(); ++i) {
            const auto got = audit::nearest_neighbor(synth[i], real, metric);
            const auto want = testsupport::oracle_nn(synth[i], real, joint);
            CHECK(got.real_index == want.index);
            CHECK(got.distance == doctest::Approx(want.distance).epsilon(1e-5));
        }
    }
}

TEST_CASE("audit: ties resolve to the lowest index") {
    auto real = random_set(4, false, 3, 8);
    real.add(real[2]);
    real.add(real[2]);
    auto q = real[2];
    q.origin.reset();
    q.is_synthetic = true;
    const auto hit = audit::nearest_neighbor(q, real);
    CHECK(hit.real_index == 2);
    CHECK(hit.distance == 0.0);
    CHECK(hit.label_dice == doctest::Approx(1.0));
}

TEST_CASE("audit: report thresholds and flags") {
    const auto real = random_set(30, false, 21);
    SUBCASE("synthetic equal to the real set is fully memorized") {
        data::PatchSet synth(real.spec(), real.patch_size());
        for (const auto& p : real.patches()) {
            auto s = p;
            s.origin.reset();
            s.is_synthetic = true;
            synth.add(s);
        }
        const auto r = audit::audit_report(synth, real);
        CHECK(r.memorized == real.size());
        CHECK(r.novel == 0);
        for (std::size_t i = 0; i < r.pairs.size(); ++i) {
            CHECK(r.pairs[i].real_index == i);
            CHECK(r.pairs[i].label_dice == doctest::Approx(1.0));
        }
    }
    SUBCASE("real-to-real distances exclude self and match oracle") {
        const auto synth = random_set(10, true, 22);
        const auto r = audit::audit_report(synth, real, audit::Metric::l2_joint);
        REQUIRE(r.real_nn_distances.size() == real.size());
        double sum = 0;
        for (std::size_t i = 0; i < real.size(); ++i) {
            const auto want = testsupport::oracle_nn(real[i], real, true, i);
            CHECK(r.real_nn_distances[i] == doctest::Approx(want.distance).epsilon(1e-5));
            sum += want.distance;
        }
        CHECK(r.mean_real_nn == doctest::Approx(sum / real.size()).epsilon(1e-5));
        CHECK(r.memorized_eps == doctest::Approx(1e-3 * r.mean_real_nn));
        auto sorted = r.real_nn_distances;
        std::sort(sorted.begin(), sorted.end());
        CHECK(r.novelty_threshold >= sorted.front());
        CHECK(r.novelty_threshold <= sorted.back());
        std::size_t binned = 0;
        for (const auto& b : r.histogram) binned += b.count;
        CHECK(binned == synth.size());
        for (const auto& p : r.pairs) {
            CHECK_FALSE((p.memorized && p.novel));
            CHECK(p.novel == (p.distance > r.novelty_threshold));
        }
        const auto j = audit::to_json(r);
        CHECK(j["pairs"].size() == synth.size());
        CHECK(j["metric"] == "l2_joint");
        CHECK(r.warnings.empty());
    }
    SUBCASE("far-away synthetic patches are novel") {
        data::PatchSet synth(real.spec(), real.patch_size());
        auto p = real[0];
        p.origin.reset();
        p.is_synthetic = true;
        std::fill(p.image.begin(), p.image.end(), 40.0f);
        synth.add(p);
        const auto r = audit::audit_report(synth, real);
        CHECK(r.novel == 1);
    }
}

TEST_CASE("audit: small real set warns") {
    const auto real = random_set(5, false, 31);
    const auto synth = random_set(3, true, 32);
    const auto r = audit::audit_report(synth, real);
    CHECK_FALSE(r.warnings.empty());
}

TEST_CASE("audit: input validation") {
    const auto real = random_set(5, false, 31);
    data::PatchSet empty(real.spec(), real.patch_size());
    CHECK_THROWS_AS(audit::audit_report(empty, real), ValidationError);
    CHECK_THROWS_AS(audit::audit_report(real, empty), ValidationError);
    const auto other = random_set(3, true, 1, 8);
    CHECK_THROWS_AS(audit::audit_report(other, real), ValidationError);
}

TEST_CASE("audit: montage layout and errors") {
    const auto real = random_set(10, false, 41);
    const auto synth = random_set(5, true, 42);
    const auto r = audit::audit_report(synth, real);
    const auto out = scratch("montage.png");
    audit::build_montage(r.pairs, synth, real, out);
    const auto img = read_png(out);
    const auto [w, h] = audit::montage_size(5, 16);
    CHECK(img.width == w);
    CHECK(img.height == h);
    CHECK(w > 5 * 2 * 16);
    CHECK(h > 2 * 2 * 16);
    CHECK_THROWS_AS(audit::build_montage({}, synth, real, out), ValidationError);
    CHECK_THROWS_AS(audit::build_montage(r.pairs, synth, real, "/nonexistent-dir/x/montage.png"), IoError);
    audit::write_histogram_csv(r, scratch("hist.csv"));
    CHECK(fs::file_size(scratch("hist.csv")) > 0);
}
