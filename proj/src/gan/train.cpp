#include "ganaug/gan/train.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include <spdlog/spdlog.h>

#include "ganaug/nn/optim.hpp"
#include "ganaug/nn/serialize.hpp"
#include "ganaug/util/error.hpp"

namespace ganaug::gan {

namespace fs = std::filesystem;
using ag::Shape;
using ag::Tensor;

namespace {

Tensor latent_batch(int n, int dim, Rng& rng) {
    std::vector<float> v(static_cast<std::size_t>(n) * dim);
    for (auto& x : v) x = rng.normal();
    return Tensor::from(Shape{n, dim, 1, 1}, std::move(v));
}

nn::AdamOptions adam_options(const GanConfig& c) {
    nn::AdamOptions o;
    o.learning_rate = static_cast<float>(c.learning_rate);
    o.beta1 = static_cast<float>(c.adam_beta1);
    o.beta2 = static_cast<float>(c.adam_beta2);
    return o;
}

/// Real batch at the active resolution, blended with its coarse version while fading.
Tensor real_at_stage(const Tensor& full, int target, int resolution, std::size_t phase, double alpha) {
    Tensor x = resolution == target ? full : ag::avg_pool(full, target / resolution);
    if (phase > 0 && alpha < 1.0) {
        x = ag::lerp(ag::upsample(ag::avg_pool(x, 2), 2), x, static_cast<float>(alpha));
    }
    return x;
}

struct Session {
    Generator gen;
    Discriminator disc;
    nn::Adam gen_opt;
    nn::Adam disc_opt;
};

Session make_session(const GanConfig& config, const GrowthSchedule& schedule, std::uint64_t seed) {
    Rng init(derive_seed(seed, "gan-init"));
    Generator g(config, schedule, init);
    Discriminator d(config, schedule, init);
    nn::Adam go(g.params(), adam_options(config));
    nn::Adam dopt(d.params(), adam_options(config));
    return Session{std::move(g), std::move(d), std::move(go), std::move(dopt)};
}

void capture(const Session& s, GanCheckpoint& ck) {
    ck.generator = nn::snapshot(s.gen.params());
    ck.discriminator = nn::snapshot(s.disc.params());
    ck.generator_optim = nn::snapshot(s.gen_opt.state());
    ck.discriminator_optim = nn::snapshot(s.disc_opt.state());
    ck.optim_steps = s.gen_opt.steps();
}

}  // namespace

Tensor joint_batch(const data::PatchSet& patches, const std::vector<std::size_t>& indices) {
    const int size = patches.patch_size();
    const int classes = patches.spec().label_classes;
    const int n = static_cast<int>(indices.size());
    const std::size_t plane = static_cast<std::size_t>(size) * size;
    std::vector<float> v(static_cast<std::size_t>(n) * (1 + classes) * plane, 0.0f);
    for (int i = 0; i < n; ++i) {
        const data::Patch& p = patches[indices[i]];
        float* base = v.data() + static_cast<std::size_t>(i) * (1 + classes) * plane;
        std::copy(p.image.begin(), p.image.end(), base);
        for (std::size_t k = 0; k < plane; ++k) {
            if (p.labels[k] > 0) base[p.labels[k] * plane + k] = 1.0f;
        }
    }
    return Tensor::from(Shape{n, 1 + classes, size, size}, std::move(v));
}

Tensor gradient_penalty(const Discriminator& critic, const Tensor& interpolated, std::size_t stage, float alpha,
                        double weight) {
    Tensor x = interpolated.clone_leaf(true);
    Tensor score = ag::sum_all(critic.forward(x, stage, alpha));
    Tensor g = ag::grad(score, {x}, true)[0];
    const Shape s = g.shape();
    Tensor sq = ag::sum_to(ag::mul(g, g), Shape{s.n, 1, 1, 1});
    Tensor norm = ag::pow_scalar(ag::add_scalar(sq, 1e-12f), 0.5f);
    Tensor dev = ag::add_scalar(norm, -1.0f);
    return ag::scale(ag::mean_all(ag::mul(dev, dev)), static_cast<float>(weight));
}

GanCheckpoint train_gan(const data::PatchSet& patches, const GanConfig& config, const GrowthSchedule& schedule,
                        std::uint64_t seed, const GanTrainOptions& options) {
    config.validate(schedule);
    if (patches.empty()) throw ValidationError("train_gan: patch set is empty");
    if (patches.patch_size() != schedule.target()) {
        throw ValidationError("train_gan: patch size " + std::to_string(patches.patch_size()) +
                              " differs from schedule target " + std::to_string(schedule.target()));
    }
    if (patches.spec().label_classes + 1 != config.output_channels) {
        throw ValidationError("train_gan: patch set has " + std::to_string(patches.spec().label_classes) +
                              " label classes but the GAN outputs " + std::to_string(config.output_channels) +
                              " channels");
    }

    Session session = make_session(config, schedule, seed);
    GanCheckpoint ck;
    ck.config = config;
    ck.schedule = schedule;
    ck.spec = patches.spec();
    ck.seed = seed;
    ck.dataset_hash = patches.content_hash();
    Rng rng(derive_seed(seed, "gan-train"));

    if (options.resume) {
        const GanCheckpoint& r = *options.resume;
        if (r.dataset_hash != ck.dataset_hash) throw ValidationError("train_gan: resume checkpoint was trained on other data");
        if (!(r.config == config) || !(r.schedule == schedule) || r.seed != seed) {
            throw ValidationError("train_gan: resume checkpoint has a different configuration or seed");
        }
        ck = r;
        auto gp = session.gen.params();
        auto dp = session.disc.params();
        nn::copy_values(r.generator, gp);
        nn::copy_values(r.discriminator, dp);
        session.gen_opt.load_state(r.generator_optim, r.optim_steps);
        session.disc_opt.load_state(r.discriminator_optim, r.optim_steps);
        rng.restore(r.rng_state);
        if (ck.completed) return ck;
    }

    const auto t0 = std::chrono::steady_clock::now();
    const double wall_before = ck.wall_clock_seconds;
    auto elapsed = [&] {
        return wall_before + std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };
    auto persist = [&](const fs::path& dir) {
        if (options.out_dir.empty()) return;
        capture(session, ck);
        ck.rng_state = rng.state();
        ck.wall_clock_seconds = elapsed();
        save_gan_checkpoint(ck, options.out_dir / dir);
    };

    std::vector<Tensor> gen_tensors = session.gen_opt.param_tensors();
    std::vector<Tensor> disc_tensors = session.disc_opt.param_tensors();
    const int target = schedule.target();
    const int latent = config.latent_dim;

    while (ck.phase < schedule.phases()) {
        if (options.stop_after_steps >= 0 && ck.step >= options.stop_after_steps) {
            capture(session, ck);
            ck.rng_state = rng.state();
            ck.wall_clock_seconds = elapsed();
            persist("resume");
            return ck;
        }
        const std::size_t stage = ck.phase;
        const int res = schedule.resolutions[stage];
        const int batch = config.batch_size.at(res);
        const double alpha = fade_alpha(stage, ck.images_seen, schedule);
        const float a = static_cast<float>(alpha);

        std::vector<std::size_t> idx(static_cast<std::size_t>(batch));
        for (auto& i : idx) i = rng.index(patches.size());
        const Tensor real = real_at_stage(joint_batch(patches, idx), target, res, stage, alpha);

        // Critic step.
        Tensor fake;
        {
            ag::NoGradGuard no_grad;
            fake = session.gen.forward(latent_batch(batch, latent, rng), stage, a, rng);
        }
        std::vector<float> mix(real.numel());
        {
            const std::size_t per = real.numel() / static_cast<std::size_t>(batch);
            for (int n = 0; n < batch; ++n) {
                const float u = static_cast<float>(rng.uniform());
                for (std::size_t k = n * per; k < (n + 1) * per; ++k) mix[k] = real.data()[k] + u * (fake.data()[k] - real.data()[k]);
            }
        }
        const Tensor d_real = session.disc.forward(real, stage, a);
        const Tensor d_fake = session.disc.forward(fake, stage, a);
        const Tensor gp = gradient_penalty(session.disc, Tensor::from(real.shape(), std::move(mix)), stage, a,
                                           config.gradient_penalty_weight);
        Tensor critic_loss = ag::sub(ag::mean_all(d_fake), ag::mean_all(d_real));
        critic_loss = ag::add(critic_loss, gp);
        critic_loss = ag::add(critic_loss,
                              ag::scale(ag::mean_all(ag::mul(d_real, d_real)), static_cast<float>(config.epsilon_drift)));
        const double critic_value = critic_loss.item();
        const double gp_value = gp.item();
        if (std::isfinite(critic_value)) session.disc_opt.step(ag::grad(critic_loss, disc_tensors));

        // Generator step.
        const Tensor gen_out = session.gen.forward(latent_batch(batch, latent, rng), stage, a, rng);
        const Tensor gen_loss = ag::neg(ag::mean_all(session.disc.forward(gen_out, stage, a)));
        const double gen_value = gen_loss.item();
        if (std::isfinite(gen_value)) session.gen_opt.step(ag::grad(gen_loss, gen_tensors));

        ck.losses.push_back(GanLossRow{stage, ck.step, critic_value, gen_value, alpha, gp_value});
        if (!std::isfinite(critic_value) || !std::isfinite(gen_value) || !std::isfinite(gp_value)) {
            fs::path dump;
            if (!options.out_dir.empty()) {
                dump = options.out_dir / "diverged";
                persist("diverged");
                write_loss_csv(ck.losses, options.out_dir / "losses.csv");
            }
            throw DivergenceError("train_gan: non-finite loss at phase " + std::to_string(stage) + " step " +
                                      std::to_string(ck.step),
                                  dump.string());
        }
        if (options.log_interval_steps > 0 && ck.step % options.log_interval_steps == 0) {
            spdlog::info("gan res {} step {} alpha {:.3f} critic {:.4f} gen {:.4f} gp {:.4f}", res, ck.step, alpha,
                         critic_value, gen_value, gp_value);
        }
        ++ck.step;
        ck.images_seen += batch;
        if (ck.images_seen >= schedule.images_per_phase) {
            ++ck.phase;
            ck.images_seen = 0;
            if (ck.phase == schedule.phases()) ck.completed = true;
            persist("phase-" + std::to_string(stage));
        } else if (options.checkpoint_interval_steps > 0 && ck.step % options.checkpoint_interval_steps == 0) {
            persist("resume");
        }
    }

    capture(session, ck);
    ck.rng_state = rng.state();
    ck.wall_clock_seconds = elapsed();
    if (!options.out_dir.empty()) {
        save_gan_checkpoint(ck, options.out_dir / "final");
        write_loss_csv(ck.losses, options.out_dir / "losses.csv");
    }
    return ck;
}

Generator restore_generator(const GanCheckpoint& checkpoint) {
    Rng init(0);
    Generator g(checkpoint.config, checkpoint.schedule, init);
    auto params = g.params();
    nn::copy_values(checkpoint.generator, params);
    return g;
}

data::Patch discretize(std::span<const float> sample, int size, int label_classes) {
    const std::size_t plane = static_cast<std::size_t>(size) * size;
    if (sample.size() != plane * (1 + label_classes)) throw ValidationError("discretize: sample size mismatch");
    data::Patch p;
    p.size = size;
    p.is_synthetic = true;
    p.image.assign(sample.begin(), sample.begin() + static_cast<std::ptrdiff_t>(plane));
    for (auto& v : p.image) v = std::clamp(v, -1.0f, 1.0f);
    p.labels.assign(plane, 0);
    for (std::size_t k = 0; k < plane; ++k) {
        int best = 0;
        float best_v = sample[plane + k];
        for (int c = 1; c < label_classes; ++c) {
            const float v = sample[(1 + c) * plane + k];
            if (v > best_v) {
                best_v = v;
                best = c;
            }
        }
        if (best_v >= 0.5f) p.labels[k] = static_cast<std::uint8_t>(best + 1);
    }
    return p;
}

data::PatchSet sample_synthetic(const GanCheckpoint& checkpoint, std::size_t count, std::uint64_t seed) {
    if (!checkpoint.completed) throw ValidationError("sample_synthetic: checkpoint has not reached the target resolution");
    const int target = checkpoint.schedule.target();
    data::PatchSet out(checkpoint.spec, target);
    if (count == 0) return out;
    const Generator g = restore_generator(checkpoint);
    Rng rng(derive_seed(seed, "gan-sample"));
    ag::NoGradGuard no_grad;
    const std::size_t last = checkpoint.schedule.phases() - 1;
    const int classes = checkpoint.config.label_classes();
    const std::size_t per = static_cast<std::size_t>(1 + classes) * target * target;
    constexpr std::size_t kChunk = 32;
    for (std::size_t done = 0; done < count; done += kChunk) {
        const int n = static_cast<int>(std::min(kChunk, count - done));
        const Tensor y = g.forward(latent_batch(n, g.latent_dim(), rng), last, 1.0f, rng);
        for (int i = 0; i < n; ++i) out.add(discretize(y.data().subspan(i * per, per), target, classes));
    }
    return out;
}

nlohmann::json to_json(const GanConfig& c) {
    nlohmann::json j;
    j["latent_dim"] = c.latent_dim;
    j["output_channels"] = c.output_channels;
    j["noise_inject_resolution"] = c.noise_inject_resolution ? nlohmann::json(*c.noise_inject_resolution) : nlohmann::json();
    j["gradient_penalty_weight"] = c.gradient_penalty_weight;
    j["learning_rate"] = c.learning_rate;
    j["adam_beta1"] = c.adam_beta1;
    j["adam_beta2"] = c.adam_beta2;
    j["epsilon_drift"] = c.epsilon_drift;
    for (auto [r, b] : c.batch_size) j["batch_size"][std::to_string(r)] = b;
    for (auto [r, w] : c.widths) j["widths"][std::to_string(r)] = w;
    return j;
}

GanConfig gan_config_from_json(const nlohmann::json& j, const GanConfig& defaults) {
    GanConfig c = defaults;
    c.latent_dim = j.value("latent_dim", c.latent_dim);
    c.output_channels = j.value("output_channels", c.output_channels);
    if (j.contains("noise_inject_resolution")) {
        const auto& n = j["noise_inject_resolution"];
        c.noise_inject_resolution = n.is_null() ? std::nullopt : std::optional<int>(n.get<int>());
    }
    c.gradient_penalty_weight = j.value("gradient_penalty_weight", c.gradient_penalty_weight);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.adam_beta1 = j.value("adam_beta1", c.adam_beta1);
    c.adam_beta2 = j.value("adam_beta2", c.adam_beta2);
    c.epsilon_drift = j.value("epsilon_drift", c.epsilon_drift);
    auto read_map = [](const nlohmann::json& m) {
        std::map<int, int> out;
        for (auto it = m.begin(); it != m.end(); ++it) out[std::stoi(it.key())] = it.value().get<int>();
        return out;
    };
    if (j.contains("batch_size")) c.batch_size = read_map(j["batch_size"]);
    if (j.contains("widths")) c.widths = read_map(j["widths"]);
    return c;
}

nlohmann::json to_json(const GrowthSchedule& s) {
    return {{"resolutions", s.resolutions}, {"images_per_phase", s.images_per_phase}, {"fade_fraction", s.fade_fraction}};
}

GrowthSchedule schedule_from_json(const nlohmann::json& j) {
    GrowthSchedule s;
    s.resolutions = j.at("resolutions").get<std::vector<int>>();
    s.images_per_phase = j.at("images_per_phase").get<std::int64_t>();
    s.fade_fraction = j.at("fade_fraction").get<double>();
    s.validate();
    return s;
}

void write_loss_csv(const std::vector<GanLossRow>& rows, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "phase,step,critic_loss,gen_loss,alpha,gradient_penalty\n";
    out.precision(17);
    for (const auto& r : rows) {
        out << r.phase << ',' << r.step << ',' << r.critic_loss << ',' << r.gen_loss << ',' << r.alpha << ','
            << r.gradient_penalty << '\n';
    }
}

namespace {

std::vector<GanLossRow> read_loss_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    std::string line;
    std::getline(in, line);
    std::vector<GanLossRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        GanLossRow r;
        char comma;
        ls >> r.phase >> comma >> r.step >> comma >> r.critic_loss >> comma >> r.gen_loss >> comma >> r.alpha >> comma >>
            r.gradient_penalty;
        if (!ls) throw IoError("malformed loss row in " + path.string());
        rows.push_back(r);
    }
    return rows;
}

}  // namespace

void save_gan_checkpoint(const GanCheckpoint& ck, const fs::path& dir) {
    fs::create_directories(dir);
    nlohmann::json m;
    m["format_version"] = ck.format_version;
    m["kind"] = "gan";
    m["config"] = to_json(ck.config);
    m["schedule"] = to_json(ck.schedule);
    m["label_classes"] = ck.spec.label_classes;
    m["class_names"] = ck.spec.class_names;
    m["phase"] = ck.phase;
    m["images_seen"] = ck.images_seen;
    m["step"] = ck.step;
    m["optim_steps"] = ck.optim_steps;
    m["completed"] = ck.completed;
    m["rng_state"] = ck.rng_state;
    m["seed"] = ck.seed;
    m["dataset_hash"] = hex64(ck.dataset_hash);
    m["wall_clock_seconds"] = ck.wall_clock_seconds;
    // Written last-but-one so a partially written bundle lacks its manifest.
    nn::write_params(dir / "generator.gapr", ck.generator);
    nn::write_params(dir / "discriminator.gapr", ck.discriminator);
    nn::write_params(dir / "generator_optim.gapr", ck.generator_optim);
    nn::write_params(dir / "discriminator_optim.gapr", ck.discriminator_optim);
    write_loss_csv(ck.losses, dir / "losses.csv");
    const fs::path tmp = dir / "manifest.json.tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw IoError("cannot write " + tmp.string());
        out << m.dump(2) << '\n';
    }
    fs::rename(tmp, dir / "manifest.json");
}

GanCheckpoint load_gan_checkpoint(const fs::path& dir) {
    std::ifstream in(dir / "manifest.json");
    if (!in) throw IoError("no GAN checkpoint manifest in " + dir.string());
    nlohmann::json m;
    try {
        m = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw IoError("corrupt GAN manifest in " + dir.string() + ": " + e.what());
    }
    if (m.value("kind", "") != "gan") throw IoError(dir.string() + " is not a GAN checkpoint");
    GanCheckpoint ck;
    ck.format_version = m.at("format_version").get<int>();
    if (ck.format_version != kGanCheckpointVersion) {
        throw IoError("unsupported GAN checkpoint version " + std::to_string(ck.format_version));
    }
    ck.schedule = schedule_from_json(m.at("schedule"));
    ck.config = gan_config_from_json(m.at("config"), GanConfig{});
    ck.spec.label_classes = m.at("label_classes").get<int>();
    ck.spec.class_names = m.at("class_names").get<std::vector<std::string>>();
    ck.phase = m.at("phase").get<std::size_t>();
    ck.images_seen = m.at("images_seen").get<std::int64_t>();
    ck.step = m.at("step").get<std::int64_t>();
    ck.optim_steps = m.at("optim_steps").get<std::int64_t>();
    ck.completed = m.at("completed").get<bool>();
    ck.rng_state = m.at("rng_state").get<std::string>();
    ck.seed = m.at("seed").get<std::uint64_t>();
    ck.dataset_hash = std::stoull(m.at("dataset_hash").get<std::string>(), nullptr, 16);
    ck.wall_clock_seconds = m.at("wall_clock_seconds").get<double>();
    if (ck.phase > ck.schedule.phases() || ck.images_seen < 0 || ck.images_seen > ck.schedule.images_per_phase) {
        throw IoError("GAN checkpoint schedule position out of bounds in " + dir.string());
    }
    ck.generator = nn::read_params(dir / "generator.gapr");
    ck.discriminator = nn::read_params(dir / "discriminator.gapr");
    ck.generator_optim = nn::read_params(dir / "generator_optim.gapr");
    ck.discriminator_optim = nn::read_params(dir / "discriminator_optim.gapr");
    ck.losses = read_loss_csv(dir / "losses.csv");
    return ck;
}

}  // namespace ganaug::gan
