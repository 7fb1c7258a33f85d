#include <doctest.h>

#include <filesystem>

#include "ganaug/data/phantom.hpp"
#include "ganaug/data/preprocess.hpp"
#include "ganaug/seg/train.hpp"
#include "ganaug/util/error.hpp"
#include "toy_seg.hpp"

using namespace ganaug;
using namespace ganaug::seg;

namespace {

// Pointwise model: logits are fixed affine functions of the pixel intensity.
class IntensityModel final : public Segmenter {
public:
    IntensityModel(int classes, int patch, std::vector<std::pair<float, float>> coeffs)
        : Segmenter(classes, patch), coeffs_(std::move(coeffs)) {}
    ag::Tensor forward(const ag::Tensor& x) const override {
        const auto s = x.shape();
        std::vector<float> out(static_cast<std::size_t>(s.n) * coeffs_.size() * s.plane());
        for (int n = 0; n < s.n; ++n)
            for (std::size_t c = 0; c < coeffs_.size(); ++c)
                for (std::size_t k = 0; k < s.plane(); ++k)
                    out[(n * coeffs_.size() + c) * s.plane() + k] =
                        coeffs_[c].first * x.data()[n * s.plane() + k] + coeffs_[c].second;
        return ag::Tensor::from({s.n, static_cast<int>(coeffs_.size()), s.h, s.w}, std::move(out));
    }
    nn::ParamList params() const override { return {}; }

private:
    std::vector<std::pair<float, float>> coeffs_;
};

// Class k wins for intensities near centre k: logit_k = -(x - m_k)^2 expanded is not affine, so use
// logit_k = 2 m_k x - m_k^2, which orders classes by distance to m_k.
IntensityModel nearest_centre_model(int classes, int patch, const std::vector<float>& centres) {
    std::vector<std::pair<float, float>> coeffs;
    for (float m : centres) coeffs.emplace_back(2 * m, -m * m);
    return IntensityModel(classes, patch, coeffs);
}

std::vector<data::Volume> phantom(int n, int size, std::uint64_t seed, int slices = 1) {
    data::PhantomParams pp;
    pp.n_volumes = n;
    pp.slices = slices;
    pp.height = size;
    pp.width = size;
    auto vols = data::generate_phantom_volumes(pp, seed);
    for (auto& v : vols) v = data::normalize_intensities(std::move(v));
    return vols;
}

std::vector<data::Volume> patches_as_volumes(const data::PatchSet& set) {
    std::vector<data::Volume> out;
    for (std::size_t i = 0; i < set.size(); ++i) {
        data::Volume v;
        v.id = "p" + std::to_string(i);
        v.slices = 1;
        v.height = v.width = set.patch_size();
        v.image = set[i].image;
        v.labels = set[i].labels;
        out.push_back(std::move(v));
    }
    return out;
}

}  // namespace

TEST_CASE("segmenter output shapes") {
    Rng rng(1);
    auto spec3 = data::ChannelSpec::csf3();
    auto spec1 = data::ChannelSpec::wmh1();
    SegConfig unet;
    unet.base_width = 4;
    auto m = build_segmenter(unet, spec3, 128, rng);
    CHECK(m->forward(ag::Tensor::zeros({1, 1, 128, 128})).shape() == ag::Shape{1, 4, 128, 128});
    SegConfig ms;
    ms.architecture = Architecture::multiscale;
    ms.base_width = 4;
    auto d = build_segmenter(ms, spec1, 128, rng);
    CHECK(d->forward(ag::Tensor::zeros({1, 1, 128, 128})).shape() == ag::Shape{1, 2, 128, 128});
    for (auto arch : {Architecture::unet, Architecture::uresnet, Architecture::multiscale})
        for (const auto& spec : {spec1, spec3}) {
            auto c = SegConfig::desk(arch);
            auto model = build_segmenter(c, spec, 32, rng);
            CHECK(model->forward(ag::Tensor::zeros({2, 1, 32, 32})).shape() ==
                  ag::Shape{2, spec.label_classes + 1, 32, 32});
        }
    CHECK_THROWS_AS(build_segmenter(SegConfig{}, spec3, 100, rng), ValidationError);
    CHECK_THROWS_AS(build_segmenter(ms, spec3, 66, rng), ValidationError);
    CHECK(parse_architecture("uresnet") == Architecture::uresnet);
    CHECK_THROWS_AS(parse_architecture("vnet"), ConfigError);
}

TEST_CASE("toy segmentation loss gradients match a double-precision finite-difference oracle") {
    for (std::uint64_t seed : {1, 2, 3}) {
        const auto r = toy::gradient_check(seed, 50);
        CHECK(r.coordinates == 50);
        CHECK(r.worst_relative_error < 1e-4);
    }
}

TEST_CASE("soft dice loss is bounded and falls for a better prediction") {
    std::vector<std::uint8_t> target = {0, 1, 1, 0};
    auto good = ag::Tensor::from({1, 2, 2, 2}, {4, -4, -4, 4, -4, 4, 4, -4});
    auto bad = ag::Tensor::from({1, 2, 2, 2}, {-4, 4, 4, -4, 4, -4, -4, 4});
    const float lg = segmentation_loss(good, target, LossKind::soft_dice).item();
    const float lb = segmentation_loss(bad, target, LossKind::soft_dice).item();
    CHECK(lg >= 0.0f);
    CHECK(lb <= 1.0f);
    CHECK(lg < lb);
}

TEST_CASE("predict tiles the image and keeps labels in range") {
    const int P = 8;
    auto model = nearest_centre_model(2, P, {-1.0f, 0.0f, 1.0f});
    SUBCASE("patch-sized image is a single window") {
        std::vector<float> img = {-1, -0.2f, 0.3f, 0.9f, 1, 0.6f, 0.1f, -0.7f};
        img.resize(64, -1.0f);
        auto pred = predict(model, img, P, P);
        CHECK(pred[0] == 0);
        CHECK(pred[1] == 1);
        CHECK(pred[3] == 2);
        CHECK(pred[7] == 0);
    }
    SUBCASE("tiled identical patches give the replicated single-patch prediction") {
        Rng rng(2);
        std::vector<float> tile(P * P);
        for (auto& v : tile) v = static_cast<float>(rng.uniform(-1, 1));
        const auto single = predict(model, tile, P, P);
        const int H = 3 * P, W = 2 * P + 4;  // last column of windows is edge-aligned
        std::vector<float> img(H * W);
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) img[y * W + x] = tile[(y % P) * P + (x % P)];
        const auto pred = predict(model, img, H, W);
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) REQUIRE(pred[y * W + x] == single[(y % P) * P + (x % P)]);
    }
    SUBCASE("constant background scores give an all-background output") {
        IntensityModel bg(3, P, {{0, 5}, {0, 1}, {0, 1}, {0, 1}});
        std::vector<float> img(20 * 17, 0.3f);
        for (auto v : predict(bg, img, 20, 17)) REQUIRE(v == 0);
    }
    CHECK_THROWS_AS(predict(model, std::vector<float>(49), 7, 7), ValidationError);
}

TEST_CASE("evaluate pools pixels across volumes") {
    const int P = 8;
    // Labels are a function of intensity, so the nearest-centre model is perfect.
    auto perfect = nearest_centre_model(2, P, {-1.0f, 0.0f, 1.0f});
    Rng rng(5);
    std::vector<data::Volume> vols;
    for (int n = 0; n < 3; ++n) {
        data::Volume v;
        v.id = "v" + std::to_string(n);
        v.slices = 2;
        v.height = 8;
        v.width = 12;
        for (int k = 0; k < 2 * 96; ++k) {
            const int cls = static_cast<int>(rng.index(3));
            v.labels.push_back(static_cast<std::uint8_t>(cls));
            v.image.push_back(static_cast<float>(cls - 1));
        }
        vols.push_back(std::move(v));
    }
    auto e = evaluate(perfect, vols);
    CHECK(e.micro.per_class == std::vector<double>{1.0, 1.0});
    CHECK(e.micro.mean == 1.0);
    CHECK(e.macro_mean == 1.0);

    IntensityModel background(2, P, {{0, 5}, {0, 0}, {0, 0}});
    e = evaluate(background, vols);
    CHECK(e.micro.per_class == std::vector<double>{0.0, 0.0});

    // Hand-built 8x8 case: the model thresholds intensity, truth is drawn independently.
    data::Volume v;
    v.id = "hand";
    v.slices = 1;
    v.height = v.width = 8;
    for (int k = 0; k < 64; ++k) {
        v.image.push_back(static_cast<float>(static_cast<int>(rng.index(3)) - 1));
        v.labels.push_back(static_cast<std::uint8_t>(rng.index(3)));
    }
    std::uint64_t inter[2] = {0, 0}, pred_n[2] = {0, 0}, truth_n[2] = {0, 0};
    for (int k = 0; k < 64; ++k) {
        const int p = static_cast<int>(v.image[k]) + 1;
        const int t = v.labels[k];
        for (int c = 1; c <= 2; ++c) {
            inter[c - 1] += (p == c && t == c);
            pred_n[c - 1] += (p == c);
            truth_n[c - 1] += (t == c);
        }
    }
    e = evaluate(perfect, {v});
    for (int c = 0; c < 2; ++c) {
        CHECK(e.micro.per_class[c] == 2.0 * inter[c] / (pred_n[c] + truth_n[c]));
    }
}

TEST_CASE("training overfits a tiny set, keeps the best validation row and is deterministic") {
    auto vols = phantom(2, 48, 3);
    const auto spec = data::phantom_spec(3);
    const auto train = data::sample_patches(vols, spec, 10, 32, 4);
    auto cfg = SegConfig::desk(Architecture::unet);
    cfg.depth = 2;
    cfg.base_width = 8;
    cfg.epochs = 200;
    cfg.batch_size = 10;
    cfg.learning_rate = 3e-3;
    cfg.val_interval = 25;
    const auto train_vols = patches_as_volumes(train);
    const auto ck = train_segmenter(train, train_vols, cfg, 11);
    REQUIRE_FALSE(ck.history.empty());
    CHECK(ck.history.back().step == 200);
    double best = -1;
    for (const auto& r : ck.history) best = std::max(best, r.val_mean);
    CHECK(ck.best_val_mean_dsc == best);
    CHECK(ck.best_val_mean_dsc >= ck.history.back().val_mean);
    const auto model = restore_segmenter(ck);
    const auto e = evaluate(*model, train_vols);
    CHECK(e.micro.mean == doctest::Approx(ck.best_val_mean_dsc).epsilon(1e-12));
    MESSAGE("overfit training-set mean DSC " << e.micro.mean);
    CHECK(e.micro.mean > 0.95);

    cfg.epochs = 20;
    cfg.val_interval = 10;
    const auto a = train_segmenter(train, train_vols, cfg, 12);
    const auto b = train_segmenter(train, train_vols, cfg, 12);
    CHECK(a.history == b.history);

    const auto dir = std::filesystem::temp_directory_path() / "ganaug_test_seg_ck";
    std::filesystem::remove_all(dir);
    save_seg_checkpoint(a, dir);
    const auto loaded = load_seg_checkpoint(dir);
    CHECK(loaded.history == a.history);
    CHECK(loaded.best_val_mean_dsc == a.best_val_mean_dsc);
    CHECK(loaded.config == a.config);
    const auto ma = restore_segmenter(a);
    const auto mb = restore_segmenter(loaded);
    CHECK(evaluate(*ma, train_vols).micro.per_class == evaluate(*mb, train_vols).micro.per_class);
    std::filesystem::remove_all(dir);
}

TEST_CASE("train_segmenter validates its inputs") {
    auto vols = phantom(1, 32, 1);
    const auto spec = data::phantom_spec(3);
    const auto train = data::sample_patches(vols, spec, 4, 32, 1);
    CHECK_THROWS_AS(train_segmenter(data::PatchSet(spec, 32), vols, SegConfig::desk(Architecture::unet), 1),
                    ValidationError);
    CHECK_THROWS_AS(train_segmenter(train, {}, SegConfig::desk(Architecture::unet), 1), ValidationError);
}
