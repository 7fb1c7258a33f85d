#include "ganaug/seg/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <spdlog/spdlog.h>

#include "ganaug/nn/optim.hpp"
#include "ganaug/nn/serialize.hpp"
#include "ganaug/util/error.hpp"

namespace ganaug::seg {

namespace fs = std::filesystem;
using ag::Shape;
using ag::Tensor;

Tensor segmentation_loss(const Tensor& logits, std::span<const std::uint8_t> targets, LossKind kind) {
    if (kind == LossKind::cross_entropy) return ag::softmax_cross_entropy(logits, targets);
    const Shape s = logits.shape();
    const std::size_t plane = s.plane();
    if (targets.size() != static_cast<std::size_t>(s.n) * plane) throw ValidationError("soft dice: target size mismatch");
    std::vector<float> onehot(s.numel(), 0.0f);
    for (int n = 0; n < s.n; ++n)
        for (std::size_t k = 0; k < plane; ++k) {
            const int t = targets[n * plane + k];
            if (t >= s.c) throw ValidationError("soft dice: target class out of range");
            onehot[(static_cast<std::size_t>(n) * s.c + t) * plane + k] = 1.0f;
        }
    const Tensor truth = Tensor::from(s, std::move(onehot));
    const Tensor p = ag::softmax_channels(logits);
    const Shape per_class{1, s.c, 1, 1};
    const Tensor inter = ag::sum_to(ag::mul(p, truth), per_class);
    const Tensor denom = ag::add(ag::sum_to(p, per_class), ag::sum_to(truth, per_class));
    const Tensor ratio = ag::mul(ag::add_scalar(ag::scale(inter, 2.0f), 1.0f), ag::pow_scalar(ag::add_scalar(denom, 1.0f), -1.0f));
    return ag::add_scalar(ag::neg(ag::mean_all(ratio)), 1.0f);
}

namespace {

std::vector<int> window_starts(int length, int patch) {
    std::vector<int> starts;
    const int stride = std::max(1, patch / 2);
    for (int p = 0; p + patch <= length; p += stride) starts.push_back(p);
    if (starts.back() + patch < length) starts.push_back(length - patch);
    return starts;
}

double validation_score(const Segmenter& model, const std::vector<data::Volume>& val, std::vector<double>& per_class) {
    const Evaluation e = evaluate(model, val);
    per_class = e.micro.per_class;
    return e.micro.mean;
}

}  // namespace

std::vector<std::uint8_t> predict(const Segmenter& model, std::span<const float> image, int height, int width) {
    const int P = model.patch_size();
    if (height < P || width < P) {
        throw ValidationError("predict: image " + std::to_string(height) + "x" + std::to_string(width) +
                              " is smaller than the patch size " + std::to_string(P));
    }
    if (image.size() != static_cast<std::size_t>(height) * width) throw ValidationError("predict: image size mismatch");
    const int C1 = model.classes() + 1;
    const std::size_t pixels = static_cast<std::size_t>(height) * width;
    std::vector<float> scores(static_cast<std::size_t>(C1) * pixels, 0.0f);
    std::vector<float> hits(pixels, 0.0f);

    std::vector<std::pair<int, int>> windows;
    for (int r : window_starts(height, P))
        for (int c : window_starts(width, P)) windows.emplace_back(r, c);

    ag::NoGradGuard no_grad;
    constexpr std::size_t kBatch = 16;
    const std::size_t plane = static_cast<std::size_t>(P) * P;
    for (std::size_t b0 = 0; b0 < windows.size(); b0 += kBatch) {
        const std::size_t nb = std::min(kBatch, windows.size() - b0);
        std::vector<float> x(nb * plane);
        for (std::size_t i = 0; i < nb; ++i) {
            const auto [r0, c0] = windows[b0 + i];
            for (int y = 0; y < P; ++y)
                std::copy_n(image.data() + static_cast<std::size_t>(r0 + y) * width + c0, P, x.data() + i * plane + y * P);
        }
        const Tensor prob = ag::softmax_channels(model.forward(Tensor::from(Shape{static_cast<int>(nb), 1, P, P}, std::move(x))));
        for (std::size_t i = 0; i < nb; ++i) {
            const auto [r0, c0] = windows[b0 + i];
            for (int c = 0; c < C1; ++c) {
                const float* src = prob.ptr() + (i * C1 + c) * plane;
                float* dst = scores.data() + c * pixels;
                for (int y = 0; y < P; ++y)
                    for (int xx = 0; xx < P; ++xx) dst[static_cast<std::size_t>(r0 + y) * width + c0 + xx] += src[y * P + xx];
            }
            for (int y = 0; y < P; ++y)
                for (int xx = 0; xx < P; ++xx) hits[static_cast<std::size_t>(r0 + y) * width + c0 + xx] += 1.0f;
        }
    }
    std::vector<std::uint8_t> out(pixels, 0);
    for (std::size_t k = 0; k < pixels; ++k) {
        int best = 0;
        float best_v = scores[k] / hits[k];
        for (int c = 1; c < C1; ++c) {
            const float v = scores[c * pixels + k] / hits[k];
            if (v > best_v) {
                best_v = v;
                best = c;
            }
        }
        out[k] = static_cast<std::uint8_t>(best);
    }
    return out;
}

Evaluation evaluate(const Segmenter& model, const std::vector<data::Volume>& volumes) {
    if (volumes.empty()) throw ValidationError("evaluate: no volumes");
    const int C = model.classes();
    std::vector<metrics::DiceCounts> pooled(C);
    std::vector<double> macro_sum(C, 0.0);
    std::vector<int> macro_n(C, 0);
    for (const auto& v : volumes) {
        std::vector<metrics::DiceCounts> vol(C);
        for (int s = 0; s < v.slices; ++s) {
            const auto pred = predict(model, v.image_slice(s), v.height, v.width);
            const auto counts = metrics::class_dice_counts(pred, v.label_slice(s), C);
            for (int c = 0; c < C; ++c) vol[c] += counts[c];
        }
        for (int c = 0; c < C; ++c) {
            pooled[c] += vol[c];
            if (!vol[c].both_empty()) {
                macro_sum[c] += vol[c].score();
                ++macro_n[c];
            }
        }
    }
    Evaluation e;
    e.micro = metrics::make_report(pooled);
    e.macro_per_class.resize(C);
    for (int c = 0; c < C; ++c) e.macro_per_class[c] = macro_n[c] ? macro_sum[c] / macro_n[c] : 1.0;
    e.macro_mean = std::accumulate(e.macro_per_class.begin(), e.macro_per_class.end(), 0.0) / C;
    return e;
}

std::unique_ptr<Segmenter> restore_segmenter(const SegCheckpoint& checkpoint) {
    Rng init(0);
    auto model = build_segmenter(checkpoint.config, checkpoint.spec, checkpoint.patch_size, init);
    auto params = model->params();
    nn::copy_values(checkpoint.params, params);
    return model;
}

SegCheckpoint train_segmenter(const data::PatchSet& train, const std::vector<data::Volume>& val,
                              const SegConfig& config, std::uint64_t seed, const SegTrainOptions& options) {
    config.validate();
    options.policy.validate();
    if (train.empty()) throw ValidationError("train_segmenter: training set is empty");
    if (val.empty()) throw ValidationError("train_segmenter: validation set is empty");
    const int C = train.spec().label_classes;
    for (const auto& v : val) v.validate(C);

    {
        std::vector<std::uint64_t> present(C + 1, 0);
        for (const auto& p : train.patches())
            for (auto l : p.labels) ++present[l];
        for (int c = 1; c <= C; ++c) {
            if (present[c] == 0) spdlog::warn("train_segmenter: class {} never occurs in the training patches", c);
        }
    }

    Rng init(derive_seed(seed, "seg-init"));
    auto model = build_segmenter(config, train.spec(), train.patch_size(), init);
    nn::AdamOptions ao;
    ao.learning_rate = static_cast<float>(config.learning_rate);
    nn::Adam opt(model->params(), ao);
    const auto tensors = opt.param_tensors();
    Rng rng(derive_seed(seed, "seg-train"));

    SegCheckpoint ck;
    ck.config = config;
    ck.spec = train.spec();
    ck.patch_size = train.patch_size();
    ck.seed = seed;
    ck.best_val_mean_dsc = -1.0;

    const std::size_t N = train.size();
    const int B = static_cast<int>(std::min<std::size_t>(config.batch_size, N));
    const std::int64_t per_epoch = static_cast<std::int64_t>((N + B - 1) / B);
    std::int64_t total = per_epoch * config.epochs;
    if (config.max_steps > 0) total = std::min(total, config.max_steps);
    const int S = train.patch_size();
    const std::size_t plane = static_cast<std::size_t>(S) * S;

    std::vector<std::size_t> order(N);
    std::iota(order.begin(), order.end(), 0);
    std::size_t cursor = N;  // forces a shuffle on the first step
    double loss_sum = 0;
    int loss_n = 0;

    for (std::int64_t step = 1; step <= total; ++step) {
        std::vector<float> x(static_cast<std::size_t>(B) * plane);
        std::vector<std::uint8_t> y(static_cast<std::size_t>(B) * plane);
        for (int b = 0; b < B; ++b) {
            if (cursor >= N) {
                for (std::size_t i = N; i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
                cursor = 0;
            }
            const data::Patch p = augment::augment_patch(train[order[cursor++]], options.policy, rng);
            std::copy(p.image.begin(), p.image.end(), x.begin() + b * plane);
            std::copy(p.labels.begin(), p.labels.end(), y.begin() + b * plane);
        }
        const Tensor logits = model->forward(Tensor::from(Shape{B, 1, S, S}, std::move(x)));
        const Tensor loss = segmentation_loss(logits, y, config.loss);
        const double lv = loss.item();
        if (!std::isfinite(lv)) {
            throw DivergenceError("train_segmenter: non-finite loss at step " + std::to_string(step),
                                  options.out_dir.string());
        }
        opt.step(ag::grad(loss, tensors));
        loss_sum += lv;
        ++loss_n;

        if (step % config.val_interval == 0 || step == total) {
            HistoryRow row;
            row.step = step;
            row.train_loss = loss_sum / loss_n;
            row.val_mean = validation_score(*model, val, row.val_per_class);
            loss_sum = 0;
            loss_n = 0;
            if (row.val_mean > ck.best_val_mean_dsc) {
                ck.best_val_mean_dsc = row.val_mean;
                ck.best_step = step;
                ck.params = nn::snapshot(model->params());
            }
            if (options.log_progress) {
                spdlog::info("seg step {}/{} loss {:.4f} val mean DSC {:.4f}", step, total, row.train_loss, row.val_mean);
            }
            ck.history.push_back(std::move(row));
        }
    }
    if (!options.out_dir.empty()) save_seg_checkpoint(ck, options.out_dir);
    return ck;
}

void write_history_csv(const SegCheckpoint& ck, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "step,loss";
    for (int c = 0; c < ck.spec.label_classes; ++c) {
        out << ",val_dsc_" << (c < static_cast<int>(ck.spec.class_names.size()) ? ck.spec.class_names[c] : std::to_string(c + 1));
    }
    out << ",val_mean\n";
    out.precision(17);
    for (const auto& r : ck.history) {
        out << r.step << ',' << r.train_loss;
        for (double d : r.val_per_class) out << ',' << d;
        out << ',' << r.val_mean << '\n';
    }
}

void save_seg_checkpoint(const SegCheckpoint& ck, const fs::path& dir) {
    fs::create_directories(dir);
    nn::write_params(dir / "params.gapr", ck.params);
    write_history_csv(ck, dir / "history.csv");
    nlohmann::json m;
    m["format_version"] = ck.format_version;
    m["kind"] = "segmenter";
    m["config"] = to_json(ck.config);
    m["label_classes"] = ck.spec.label_classes;
    m["class_names"] = ck.spec.class_names;
    m["patch_size"] = ck.patch_size;
    m["best_val_mean_dsc"] = ck.best_val_mean_dsc;
    m["best_step"] = ck.best_step;
    m["seed"] = ck.seed;
    const fs::path tmp = dir / "manifest.json.tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw IoError("cannot write " + tmp.string());
        out << m.dump(2) << '\n';
    }
    fs::rename(tmp, dir / "manifest.json");
}

SegCheckpoint load_seg_checkpoint(const fs::path& dir) {
    std::ifstream in(dir / "manifest.json");
    if (!in) throw IoError("no segmenter checkpoint manifest in " + dir.string());
    nlohmann::json m;
    try {
        m = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw IoError("corrupt segmenter manifest in " + dir.string() + ": " + e.what());
    }
    if (m.value("kind", "") != "segmenter") throw IoError(dir.string() + " is not a segmenter checkpoint");
    SegCheckpoint ck;
    ck.format_version = m.at("format_version").get<int>();
    if (ck.format_version != kSegCheckpointVersion) {
        throw IoError("unsupported segmenter checkpoint version " + std::to_string(ck.format_version));
    }
    ck.config = seg_config_from_json(m.at("config"), SegConfig{});
    ck.spec.label_classes = m.at("label_classes").get<int>();
    ck.spec.class_names = m.at("class_names").get<std::vector<std::string>>();
    ck.patch_size = m.at("patch_size").get<int>();
    ck.best_val_mean_dsc = m.at("best_val_mean_dsc").get<double>();
    ck.best_step = m.at("best_step").get<std::int64_t>();
    ck.seed = m.at("seed").get<std::uint64_t>();
    ck.params = nn::read_params(dir / "params.gapr");

    std::ifstream h(dir / "history.csv");
    std::string line;
    std::getline(h, line);
    while (std::getline(h, line)) {
        if (line.empty()) continue;
        std::vector<double> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(std::stod(cell));
        if (cells.size() != static_cast<std::size_t>(ck.spec.label_classes) + 3) {
            throw IoError("malformed history row in " + dir.string());
        }
        HistoryRow r;
        r.step = static_cast<std::int64_t>(cells[0]);
        r.train_loss = cells[1];
        r.val_per_class.assign(cells.begin() + 2, cells.end() - 1);
        r.val_mean = cells.back();
        ck.history.push_back(std::move(r));
    }
    return ck;
}

}  // namespace ganaug::seg
