#include <doctest.h>

#include <algorithm>
#include <set>

#include "ganaug/augment/augment.hpp"
#include "ganaug/util/error.hpp"

using namespace ganaug;

namespace {

data::Patch random_patch(int n, int classes, Rng& rng, bool synthetic = false) {
    data::Patch p;
    p.size = n;
    p.image.resize(p.pixels());
    p.labels.resize(p.pixels());
    for (auto& v : p.image) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    for (auto& l : p.labels) l = static_cast<std::uint8_t>(rng.index(static_cast<std::size_t>(classes) + 1));
    if (synthetic) {
        p.is_synthetic = true;
    } else {
        p.origin = data::PatchOrigin{"vol", 0, 0, 0};
    }
    return p;
}

data::PatchSet make_set(std::size_t count, bool synthetic, std::uint64_t seed, int n = 8) {
    Rng rng(seed);
    data::PatchSet set(data::ChannelSpec::csf3(), n);
    for (std::size_t i = 0; i < count; ++i) {
        auto p = random_patch(n, 3, rng, synthetic);
        p.image[0] = static_cast<float>(i) / 1000.0f;  // unique tag
        if (!synthetic) p.origin->row = static_cast<int>(i);
        set.add(std::move(p));
    }
    return set;
}

}  // namespace

TEST_CASE("presets keep reflection on and toggle rotation") {
    using augment::Preset;
    for (auto preset : {Preset::none, Preset::gan, Preset::rotation, Preset::rotation_gan}) {
        auto policy = augment::AugmentationPolicy::from_preset(preset, 50.0);
        CHECK(policy.reflect.enabled);
        CHECK(policy.reflect.probability == 0.5);
        CHECK(policy.rotation.enabled == augment::uses_rotation(preset));
        CHECK(policy.gan_mix_percent == (augment::uses_gan(preset) ? 50.0 : 0.0));
        CHECK(augment::parse_preset(augment::to_string(preset)) == preset);
    }
    CHECK_THROWS_AS(augment::parse_preset("flip"), ConfigError);
}

TEST_CASE("90 degree rotation equals transpose followed by horizontal flip") {
    Rng rng(3);
    for (int n : {5, 8, 16}) {
        auto p = random_patch(n, 3, rng);
        auto r = augment::apply_rotation(p, 90.0);
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x) {
                // transpose: t[y][x] = p[x][y]; then flip: out[y][x] = t[y][n-1-x]
                const int src = (n - 1 - x) * n + y;
                CHECK(r.image[y * n + x] == doctest::Approx(p.image[src]).epsilon(1e-6));
                CHECK(r.labels[y * n + x] == p.labels[src]);
            }
        // four quarter turns return the original exactly
        auto back = p;
        for (int k = 0; k < 4; ++k) back = augment::apply_rotation(back, 90.0);
        for (std::size_t i = 0; i < p.pixels(); ++i) CHECK(back.image[i] == doctest::Approx(p.image[i]).epsilon(1e-6));
        CHECK(back.labels == p.labels);
    }
}

TEST_CASE("rotation never introduces a label absent from the input") {
    Rng rng(11);
    for (int trial = 0; trial < 10000; ++trial) {
        auto p = random_patch(8, 3, rng);
        // restrict to a random subset of classes
        const auto keep = static_cast<std::uint8_t>(rng.index(4));
        for (auto& l : p.labels) l = l <= keep ? l : 0;
        std::set<std::uint8_t> before(p.labels.begin(), p.labels.end());
        before.insert(0);  // out-of-support fill
        auto r = augment::apply_rotation(p, rng.uniform(-180.0, 180.0));
        for (auto l : r.labels) REQUIRE(before.count(l) == 1);
        for (auto v : r.image) REQUIRE((v >= -1.0f && v <= 1.0f));
    }
}

TEST_CASE("out-of-support pixels take the fill values") {
    data::Patch p;
    p.size = 9;
    p.image.assign(81, 0.5f);
    p.labels.assign(81, 2);
    auto r = augment::apply_rotation(p, 45.0);
    // corners rotate out of the square
    CHECK(r.image[0] == -1.0f);
    CHECK(r.labels[0] == 0);
    CHECK(r.image[40] == doctest::Approx(0.5f));
    CHECK(r.labels[40] == 2);
}

TEST_CASE("mirror is an involution and reflection respects its probability") {
    Rng rng(5);
    auto p = random_patch(7, 3, rng);
    auto m = augment::mirror(p);
    CHECK(m.image[0] == p.image[6]);
    CHECK(augment::mirror(m) == p);
    CHECK(augment::apply_reflection(p, 0.0, rng) == p);
    CHECK(augment::apply_reflection(p, 1.0, rng) == m);
    int flipped = 0;
    for (int i = 0; i < 4000; ++i) flipped += augment::apply_reflection(p, 0.5, rng) == m;
    CHECK(flipped == doctest::Approx(2000).epsilon(0.06));
}

TEST_CASE("synthetic count is round-half-up of the percentage") {
    CHECK(augment::synthetic_count_for(1000, 12.5) == 125);
    CHECK(augment::synthetic_count_for(100, 37.5) == 38);
    CHECK(augment::synthetic_count_for(10, 25.0) == 3);  // 2.5 rounds up
    CHECK(augment::synthetic_count_for(10, 24.0) == 2);
    CHECK(augment::synthetic_count_for(7, 100.0) == 7);
    CHECK(augment::synthetic_count_for(7, 0.0) == 0);
}

TEST_CASE("mix_datasets keeps every real patch and draws synthetic without replacement") {
    auto real = make_set(40, false, 1);
    auto pool = make_set(60, true, 2);
    for (double pct : {0.0, 12.5, 25.0, 50.0, 100.0, 150.0}) {
        auto mixed = augment::mix_datasets(real, pool, pct, 99);
        const auto want = augment::synthetic_count_for(real.size(), pct);
        CHECK(mixed.size() == real.size() + want);
        CHECK(mixed.real_count() == real.size());
        CHECK(mixed.synthetic_count() == want);
        std::multiset<float> tags;
        for (const auto& p : mixed.patches())
            if (p.is_synthetic) tags.insert(p.image[0]);
        CHECK(std::set<float>(tags.begin(), tags.end()).size() == tags.size());
        std::set<int> rows;
        for (const auto& p : mixed.patches())
            if (!p.is_synthetic) rows.insert(p.origin->row);
        CHECK(rows.size() == real.size());
    }
    CHECK(augment::mix_datasets(real, pool, 50, 4).content_hash() ==
          augment::mix_datasets(real, pool, 50, 4).content_hash());
    CHECK(augment::mix_datasets(real, pool, 50, 4).content_hash() !=
          augment::mix_datasets(real, pool, 50, 5).content_hash());
}

TEST_CASE("mix_datasets names required and available counts when the pool is short") {
    auto real = make_set(40, false, 1);
    auto pool = make_set(10, true, 2);
    try {
        augment::mix_datasets(real, pool, 50.0, 1);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("20") != std::string::npos);
        CHECK(msg.find("10") != std::string::npos);
    }
}
