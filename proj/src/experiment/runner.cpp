#include "ganaug/experiment/runner.hpp"

#include <atomic>
#include <chrono>
#include <set>
#include <thread>

#include <spdlog/spdlog.h>

#include "ganaug/augment/augment.hpp"
#include "ganaug/data/io.hpp"
#include "ganaug/data/phantom.hpp"
#include "ganaug/data/preprocess.hpp"
#include "ganaug/seg/train.hpp"
#include "ganaug/util/error.hpp"
#include "ganaug/util/rng.hpp"

namespace ganaug::experiment {

namespace fs = std::filesystem;

namespace {

std::string hex(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string condition_key(const std::string& id, double fraction) { return id + "@" + format_number(fraction); }

std::vector<data::Volume> normalized(std::vector<data::Volume> vols) {
    for (auto& v : vols) v = data::normalize_intensities(std::move(v));
    return vols;
}

}  // namespace

DataBundle load_dataset(const DatasetConfig& config) {
    DataBundle b;
    b.config = config;
    b.spec = config.channel_spec();
    if (config.source == DatasetSource::phantom) {
        auto params = config.phantom;
        params.classes = config.classes;
        params.n_volumes = config.train_volumes + config.val_volumes + config.test_volumes;
        auto all = normalized(data::generate_phantom_volumes(params, config.phantom_seed));
        auto it = all.begin();
        b.train.assign(std::make_move_iterator(it), std::make_move_iterator(it + config.train_volumes));
        it += config.train_volumes;
        b.val.assign(std::make_move_iterator(it), std::make_move_iterator(it + config.val_volumes));
        it += config.val_volumes;
        b.test.assign(std::make_move_iterator(it), std::make_move_iterator(all.end()));
    } else {
        b.train = normalized(data::load_volumes(config.path / "train", config.format, b.spec));
        b.val = normalized(data::load_volumes(config.path / "val", config.format, b.spec));
        b.test = normalized(data::load_volumes(config.path / "test", config.format, b.spec));
        if (b.train.empty() || b.val.empty() || b.test.empty()) {
            throw ValidationError("dataset " + config.id + ": train, val and test must each hold volumes");
        }
    }
    for (const auto* split : {&b.train, &b.val, &b.test}) {
        for (const auto& v : *split) {
            if (v.height < config.patch_size || v.width < config.patch_size) {
                throw ValidationError("dataset " + config.id + ": volume " + v.id + " is smaller than the patch size");
            }
        }
    }
    return b;
}

Runner::Runner(ExperimentConfig config) : config_(std::move(config)) {}

const DataBundle& Runner::dataset(const std::string& id) {
    std::lock_guard lock(mutex_);
    auto& slot = datasets_[id];
    if (!slot) slot = std::make_unique<DataBundle>(load_dataset(config_.dataset(id)));
    return *slot;
}

const data::PatchSet& Runner::real_patches(const std::string& id, double fraction) {
    const DataBundle& b = dataset(id);
    std::lock_guard lock(mutex_);
    auto& slot = real_[condition_key(id, fraction)];
    if (!slot) {
        const auto reduced = data::reduce_available_data(b.train, fraction, config_.seeds.data);
        slot = std::make_unique<data::PatchSet>(data::sample_patches(
            reduced, b.spec, b.config.patch_budget, b.config.patch_size, derive_seed(config_.seeds.data, "patches")));
    }
    return *slot;
}

fs::path Runner::gan_dir(const std::string& id, double fraction) const {
    return config_.output_root / "gans" / id / ("fraction-" + format_number(fraction)) /
           ("seed-" + std::to_string(config_.seeds.gan));
}

fs::path Runner::cell_dir(const std::string& spec_hash, int repeat) const {
    return config_.output_root / "cells" / spec_hash / ("repeat-" + std::to_string(repeat));
}

std::shared_ptr<const gan::GanCheckpoint> Runner::gan_for(const std::string& id, double fraction) {
    const auto& real = real_patches(id, fraction);
    const auto& dcfg = config_.dataset(id);
    const auto gcfg = config_.gan_config(dcfg);
    const auto schedule = config_.gan_schedule(dcfg);
    std::lock_guard lock(mutex_);
    auto& slot = gans_[condition_key(id, fraction)];
    if (slot) return slot;
    const fs::path dir = gan_dir(id, fraction);
    if (fs::exists(dir / "diverged")) {
        throw GanBlocked("GAN for " + id + " at fraction " + format_number(fraction) + " diverged (see " +
                         (dir / "diverged").string() + ")");
    }
    auto check = [&](const gan::GanCheckpoint& ck, const fs::path& where) {
        if (ck.dataset_hash != real.content_hash() || gan::to_json(ck.config) != gan::to_json(gcfg) ||
            gan::to_json(ck.schedule) != gan::to_json(schedule) || ck.seed != config_.seeds.gan) {
            throw ConfigError("cached GAN at " + where.string() +
                              " was built from different data or settings; remove it to retrain");
        }
    };
    if (fs::exists(dir / "final" / "manifest.json")) {
        auto ck = gan::load_gan_checkpoint(dir / "final");
        check(ck, dir / "final");
        slot = std::make_shared<const gan::GanCheckpoint>(std::move(ck));
        return slot;
    }
    gan::GanTrainOptions opts;
    opts.out_dir = dir;
    opts.checkpoint_interval_steps = 100;
    opts.log_interval_steps = 100;
    if (fs::exists(dir / "resume" / "manifest.json")) {
        auto ck = gan::load_gan_checkpoint(dir / "resume");
        check(ck, dir / "resume");
        spdlog::info("resuming GAN {} from step {}", dir.string(), ck.step);
        opts.resume = std::move(ck);
    }
    fs::create_directories(dir);
    spdlog::info("training GAN for {} real_fraction {} on {} patches", id, format_number(fraction), real.size());
    try {
        slot = std::make_shared<const gan::GanCheckpoint>(gan::train_gan(real, gcfg, schedule, config_.seeds.gan, opts));
    } catch (const DivergenceError& e) {
        throw GanBlocked(std::string("GAN diverged: ") + e.what());
    }
    return slot;
}

RunRecord Runner::run_repeat(const ExperimentSpec& spec, int repeat) {
    const auto start = std::chrono::steady_clock::now();
    spec.validate();
    const std::string hash = spec_hash(spec, config_);
    const DataBundle& bundle = dataset(spec.dataset);
    const data::PatchSet& real = real_patches(spec.dataset, spec.real_fraction);

    RunRecord rec;
    rec.spec_hash = hash;
    rec.spec = spec.to_json();
    rec.repeat = repeat;
    rec.seed = spec.base_seed + static_cast<std::uint64_t>(repeat);
    rec.real_patches = real.size();
    rec.dataset_hash = hex(real.content_hash());

    data::PatchSet train = real;
    if (spec.needs_gan()) {
        const auto ck = gan_for(spec.dataset, spec.real_fraction);
        const auto count = augment::synthetic_count_for(real.size(), spec.synth_percent);
        const auto pool = gan::sample_synthetic(*ck, count, derive_seed(rec.seed, "synthetic"));
        train = augment::mix_datasets(real, pool, spec.synth_percent, rec.seed);
        rec.synthetic_patches = train.synthetic_count();
        rec.gan_checkpoint = (gan_dir(spec.dataset, spec.real_fraction) / "final").string();
        rec.gan_shared_across_repeats = true;
    }

    seg::SegTrainOptions opts;
    opts.policy = config_.augmentation.policy(spec.augmentation);
    opts.out_dir = cell_dir(hash, repeat);
    fs::create_directories(opts.out_dir);
    const auto segck = seg::train_segmenter(train, bundle.val, config_.seg_config(spec.architecture), rec.seed, opts);
    rec.seg_checkpoint = opts.out_dir.string();

    const auto model = seg::restore_segmenter(segck);
    const auto ev = seg::evaluate(*model, bundle.test);
    rec.per_class = ev.micro.per_class;
    rec.mean = ev.micro.mean;
    rec.macro_per_class = ev.macro_per_class;
    rec.macro_mean = ev.macro_mean;
    rec.status = RunStatus::completed;
    rec.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rec;
}

RunRecord Runner::guarded_repeat(const ExperimentSpec& spec, const std::string& hash, int repeat) {
    try {
        auto rec = run_repeat(spec, repeat);
        spdlog::info("{} repeat {}: mean DSC {:.4f}", spec.label(), repeat, rec.mean);
        return rec;
    } catch (const std::exception& e) {
        RunRecord rec;
        rec.spec_hash = hash;
        rec.spec = spec.to_json();
        rec.repeat = repeat;
        rec.seed = spec.base_seed + static_cast<std::uint64_t>(repeat);
        rec.status = dynamic_cast<const GanBlocked*>(&e) ? RunStatus::blocked : RunStatus::failed;
        rec.error = e.what();
        spdlog::error("{} repeat {} {}: {}", spec.label(), repeat, to_string(rec.status), e.what());
        return rec;
    }
}

std::vector<RunRecord> Runner::run_cell(const ExperimentSpec& spec, ResultsStore& store, const RunOptions& options) {
    spec.validate();
    const std::string hash = spec_hash(spec, config_);
    std::vector<RunRecord> out;
    for (int i = 0; i < spec.repeats; ++i) {
        if (options.max_new_records > 0 && out.size() >= options.max_new_records) break;
        if (!options.force && store.completed(hash, i)) continue;
        auto rec = guarded_repeat(spec, hash, i);
        store.put(rec);
        out.push_back(std::move(rec));
    }
    return out;
}

GridSummary Runner::run_grid(ResultsStore& store, const RunOptions& options) {
    GridSummary summary;
    const auto specs = expand_grid(config_);
    summary.cells = specs.size();

    struct Job {
        const ExperimentSpec* spec;
        std::string hash;
        int repeat;
    };
    std::vector<Job> jobs;
    std::set<std::string> seen;
    std::set<std::pair<std::string, double>> gans_needed;
    for (const auto& s : specs) {
        auto h = spec_hash(s, config_);
        if (!seen.insert(h).second) continue;
        for (int i = 0; i < s.repeats; ++i) {
            if (!options.force && store.completed(h, i)) {
                ++summary.skipped;
                continue;
            }
            jobs.push_back({&s, h, i});
            if (s.needs_gan()) gans_needed.insert({s.dataset, s.real_fraction});
        }
    }
    summary.unique_cells = seen.size();
    spdlog::info("grid: {} cells ({} distinct), {} repeats to run, {} already complete", summary.cells,
                 summary.unique_cells, jobs.size(), summary.skipped);

    // GANs first, one at a time; a failure here surfaces as blocked records later.
    for (const auto& [id, fraction] : gans_needed) {
        try {
            gan_for(id, fraction);
        } catch (const std::exception& e) {
            spdlog::error("GAN for {} at fraction {} unavailable: {}", id, format_number(fraction), e.what());
        }
    }

    std::atomic<std::size_t> next{0}, written{0}, failed{0}, blocked{0};
    std::atomic<bool> stop{false};
    auto worker = [&] {
        while (!stop) {
            const std::size_t k = next++;
            if (k >= jobs.size()) return;
            const Job& job = jobs[k];
            if (!options.force && store.completed(job.hash, job.repeat)) continue;
            auto rec = guarded_repeat(*job.spec, job.hash, job.repeat);
            if (rec.status == RunStatus::failed) ++failed;
            if (rec.status == RunStatus::blocked) ++blocked;
            store.put(rec);
            if (options.max_new_records > 0 && ++written >= options.max_new_records) stop = true;
            else if (options.max_new_records == 0) ++written;
        }
    };
    const int threads = std::max(1, options.max_concurrent > 0 ? options.max_concurrent : config_.max_concurrent);
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    summary.written = written;
    summary.failed = failed;
    summary.blocked = blocked;
    summary.interrupted = stop && next < jobs.size();
    return summary;
}

}  // namespace ganaug::experiment
