#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <fstream>
#include <iostream>

#include "ganaug/audit/audit.hpp"
#include "ganaug/data/io.hpp"
#include "ganaug/data/phantom.hpp"
#include "ganaug/experiment/config.hpp"
#include "ganaug/experiment/grid.hpp"
#include "ganaug/experiment/report.hpp"
#include "ganaug/experiment/runner.hpp"
#include "ganaug/experiment/store.hpp"
#include "ganaug/gan/train.hpp"
#include "ganaug/simd/kernels.hpp"
#include "ganaug/util/error.hpp"

using namespace ganaug;
using namespace ganaug::experiment;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRun = 3;

// GANAUG_DEVICE: cpu (default, best SIMD level), cpu-avx2, cpu-scalar.
void select_device() {
    const char* env = std::getenv("GANAUG_DEVICE");
    const std::string dev = env ? env : "cpu";
    simd::Isa isa;
    if (dev == "cpu" || dev == "auto" || dev.empty()) {
        isa = simd::best_isa();
    } else if (dev == "cpu-avx2" || dev == "avx2") {
        isa = simd::Isa::avx2;
    } else if (dev == "cpu-scalar" || dev == "scalar") {
        isa = simd::Isa::scalar;
    } else {
        throw ConfigError("GANAUG_DEVICE='" + dev + "' is not available; this build runs on cpu, cpu-avx2 or cpu-scalar");
    }
    if (!simd::isa_supported(isa)) throw ConfigError("GANAUG_DEVICE='" + dev + "' is not supported by this CPU");
    simd::set_active_isa(isa);
    spdlog::debug("device cpu ({})", simd::to_string(isa));
}

std::vector<Axis> axes_from(const std::string& csv) {
    std::vector<Axis> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(parse_axis(item));
    return out;
}

const DatasetConfig& pick_dataset(const ExperimentConfig& cfg, const std::string& id) {
    return id.empty() ? cfg.datasets.front() : cfg.dataset(id);
}

void print_summary(const GridSummary& s) {
    std::cout << "cells " << s.cells << " (distinct " << s.unique_cells << "), written " << s.written << ", skipped "
              << s.skipped << ", failed " << s.failed << ", blocked " << s.blocked
              << (s.interrupted ? ", stopped early" : "") << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"GAN-based data augmentation for patch-based segmentation"};
    app.require_subcommand(1);
    bool verbose = false, quiet = false;
    app.add_flag("-v,--verbose", verbose, "Debug logging");
    app.add_flag("-q,--quiet", quiet, "Warnings and errors only");

    // phantom
    auto* phantom = app.add_subcommand("phantom", "Generate a synthetic phantom dataset with train/val/test splits");
    std::string ph_out, ph_format = "nifti", ph_config, ph_dataset;
    int ph_train = 30, ph_val = 10, ph_test = 10, ph_classes = 3, ph_slices = 4, ph_size = 96;
    std::uint64_t ph_seed = 1;
    bool ph_gzip = false;
    phantom->add_option("--out", ph_out, "Output directory")->required();
    phantom->add_option("--config", ph_config, "Take the phantom settings from a config dataset block");
    phantom->add_option("--dataset", ph_dataset, "Dataset id in the config");
    phantom->add_option("--train", ph_train, "Training volumes");
    phantom->add_option("--val", ph_val, "Validation volumes");
    phantom->add_option("--test", ph_test, "Test volumes");
    phantom->add_option("--classes", ph_classes, "3 (CSF-like) or 1 (lesion-like)");
    phantom->add_option("--slices", ph_slices, "Slices per volume");
    phantom->add_option("--size", ph_size, "Slice height and width");
    phantom->add_option("--seed", ph_seed, "Generator seed");
    phantom->add_option("--format", ph_format, "nifti or raw-grid");
    phantom->add_flag("--gzip", ph_gzip, "Compress NIfTI output");

    // train-gan
    auto* train_gan = app.add_subcommand("train-gan", "Train (or resume) the GAN of one data condition");
    std::string tg_config, tg_dataset;
    double tg_fraction = 1.0;
    train_gan->add_option("config", tg_config, "Experiment config")->required();
    train_gan->add_option("--dataset", tg_dataset, "Dataset id (default: first)");
    train_gan->add_option("--fraction", tg_fraction, "Fraction of real training volumes");

    // sample
    auto* sample = app.add_subcommand("sample", "Draw synthetic image+label patches from a trained GAN");
    std::string sm_checkpoint, sm_out, sm_format = "nifti";
    std::size_t sm_count = 64;
    std::uint64_t sm_seed = 1;
    sample->add_option("--checkpoint", sm_checkpoint, "GAN checkpoint directory (a completed 'final' bundle)")->required();
    sample->add_option("--count", sm_count, "Number of patches");
    sample->add_option("--seed", sm_seed, "Sampling seed");
    sample->add_option("--out", sm_out, "Output directory")->required();
    sample->add_option("--format", sm_format, "nifti or raw-grid");

    // train-seg
    auto* train_seg = app.add_subcommand("train-seg", "Train and evaluate one segmenter run");
    std::string ts_config, ts_dataset, ts_arch = "unet", ts_aug = "rotation+gan";
    double ts_fraction = 1.0, ts_percent = 0.0;
    int ts_repeat = 0;
    train_seg->add_option("config", ts_config, "Experiment config")->required();
    train_seg->add_option("--dataset", ts_dataset, "Dataset id (default: first)");
    train_seg->add_option("--fraction", ts_fraction, "Fraction of real training volumes");
    train_seg->add_option("--synth-percent", ts_percent, "Added synthetic data, percent of the real patch count");
    train_seg->add_option("--architecture", ts_arch, "unet, uresnet or multiscale");
    train_seg->add_option("--augmentation", ts_aug, "none, gan, rotation or rotation+gan");
    train_seg->add_option("--repeat", ts_repeat, "Repeat index (seed = base seed + repeat)");

    // grid
    auto* grid = app.add_subcommand("grid", "Run and report experiment grids");
    grid->require_subcommand(1);
    auto* grid_run = grid->add_subcommand("run", "Run every pending (cell, repeat) of the config's grid");
    std::string gr_config;
    bool gr_force = false;
    int gr_jobs = 0;
    std::size_t gr_max = 0;
    bool gr_dry = false;
    grid_run->add_option("config", gr_config, "Experiment config")->required();
    grid_run->add_flag("--force", gr_force, "Re-run completed repeats");
    grid_run->add_option("--jobs", gr_jobs, "Concurrent runs (default: config max_concurrent)");
    grid_run->add_option("--max-records", gr_max, "Stop after writing this many records");
    grid_run->add_flag("--dry-run", gr_dry, "Print the expanded grid and exit");

    auto* grid_table = grid->add_subcommand("table", "Emit a mean (std) table with significance marks");
    std::string gt_config, gt_rows = "synth_percent", gt_cols = "real_fraction", gt_out, gt_title;
    std::vector<std::string> gt_baseline{"synth_percent=0"}, gt_filter;
    grid_table->add_option("config", gt_config, "Experiment config")->required();
    grid_table->add_option("--rows", gt_rows, "Comma-separated row axes");
    grid_table->add_option("--cols", gt_cols, "Comma-separated column axes");
    grid_table->add_option("--baseline", gt_baseline, "axis=value overrides locating each cell's baseline");
    grid_table->add_option("--filter", gt_filter, "axis=value restrictions");
    grid_table->add_option("--title", gt_title, "Table caption");
    grid_table->add_option("--out", gt_out, "Output prefix (default: <output_root>/reports/table)");

    auto* grid_curves = grid->add_subcommand("curves", "Emit per-class curves and the repeat scatter");
    std::string gc_config, gc_sweep = "real_fraction", gc_out, gc_title, gc_sx = "synth_percent", gc_sg = "real_fraction";
    std::vector<std::string> gc_baseline{"synth_percent=0"}, gc_aug{"synth_percent=50"}, gc_filter;
    grid_curves->add_option("config", gc_config, "Experiment config")->required();
    grid_curves->add_option("--sweep", gc_sweep, "Sweep axis");
    grid_curves->add_option("--baseline", gc_baseline, "axis=value selecting the baseline series");
    grid_curves->add_option("--augmented", gc_aug, "axis=value selecting the augmented series");
    grid_curves->add_option("--filter", gc_filter, "axis=value restrictions");
    grid_curves->add_option("--scatter-x", gc_sx, "Numeric axis of the scatter");
    grid_curves->add_option("--scatter-group", gc_sg, "Grouping axis of the scatter");
    grid_curves->add_option("--title", gc_title, "Figure title");
    grid_curves->add_option("--out", gc_out, "Output prefix (default: <output_root>/reports/curves)");

    // audit
    auto* audit_cmd = app.add_subcommand("audit", "Nearest-neighbour memorization audit of GAN samples");
    std::string au_config, au_dataset, au_checkpoint, au_out, au_metric = "l2_image";
    double au_fraction = 1.0;
    std::size_t au_count = 200, au_montage = 10;
    std::uint64_t au_seed = 1;
    audit_cmd->add_option("config", au_config, "Experiment config (supplies the real training patches)")->required();
    audit_cmd->add_option("--dataset", au_dataset, "Dataset id (default: first)");
    audit_cmd->add_option("--fraction", au_fraction, "Data condition the GAN was trained on");
    audit_cmd->add_option("--checkpoint", au_checkpoint, "GAN checkpoint (default: the cached GAN of the condition)");
    audit_cmd->add_option("--count", au_count, "Synthetic patches to audit");
    audit_cmd->add_option("--seed", au_seed, "Sampling seed");
    audit_cmd->add_option("--metric", au_metric, "l2_image or l2_joint");
    audit_cmd->add_option("--montage", au_montage, "Pairs in the montage (0: none)");
    audit_cmd->add_option("--out", au_out, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }
    spdlog::set_level(verbose ? spdlog::level::debug : quiet ? spdlog::level::warn : spdlog::level::info);

    try {
        select_device();

        if (*phantom) {
            data::PhantomParams params;
            std::uint64_t seed = ph_seed;
            if (!ph_config.empty()) {
                const auto cfg = load_experiment_config(ph_config);
                const auto& d = pick_dataset(cfg, ph_dataset);
                params = d.phantom;
                ph_classes = d.classes;
                ph_train = d.train_volumes;
                ph_val = d.val_volumes;
                ph_test = d.test_volumes;
                seed = d.phantom_seed;
            } else {
                params.slices = ph_slices;
                params.height = params.width = ph_size;
            }
            if (ph_classes != 1 && ph_classes != 3) throw ConfigError("--classes must be 1 or 3");
            if (ph_train < 1 || ph_val < 1 || ph_test < 1) throw ConfigError("every split needs at least one volume");
            params.classes = ph_classes;
            params.n_volumes = ph_train + ph_val + ph_test;
            const auto format = data::parse_volume_format(ph_format);
            const auto vols = data::generate_phantom_volumes(params, seed);
            for (int i = 0; i < params.n_volumes; ++i) {
                const char* split = i < ph_train ? "train" : i < ph_train + ph_val ? "val" : "test";
                data::save_volume(fs::path(ph_out) / split, vols[static_cast<std::size_t>(i)], format, ph_gzip);
            }
            std::cout << "wrote " << params.n_volumes << " volumes to " << ph_out << '\n';
            return kExitOk;
        }

        if (*train_gan) {
            Runner runner(load_experiment_config(tg_config));
            const auto& d = pick_dataset(runner.config(), tg_dataset);
            const auto ck = runner.gan_for(d.id, tg_fraction);
            std::cout << "GAN ready at " << (runner.gan_dir(d.id, tg_fraction) / "final").string() << " ("
                      << ck->step << " steps, " << ck->wall_clock_seconds << " s)\n";
            return kExitOk;
        }

        if (*sample) {
            const auto ck = gan::load_gan_checkpoint(sm_checkpoint);
            const auto patches = gan::sample_synthetic(ck, sm_count, sm_seed);
            data::Volume v;
            v.id = "synthetic";
            v.slices = static_cast<int>(patches.size());
            v.height = v.width = patches.patch_size();
            for (const auto& p : patches.patches()) {
                v.image.insert(v.image.end(), p.image.begin(), p.image.end());
                v.labels.insert(v.labels.end(), p.labels.begin(), p.labels.end());
            }
            data::save_volume(sm_out, v, data::parse_volume_format(sm_format));
            std::cout << "wrote " << patches.size() << " synthetic patches to " << (fs::path(sm_out) / v.id).string()
                      << '\n';
            return kExitOk;
        }

        if (*train_seg) {
            Runner runner(load_experiment_config(ts_config));
            const auto& d = pick_dataset(runner.config(), ts_dataset);
            ExperimentSpec spec;
            spec.dataset = d.id;
            spec.real_fraction = ts_fraction;
            spec.synth_percent = ts_percent;
            spec.architecture = seg::parse_architecture(ts_arch);
            spec.augmentation = augment::parse_preset(ts_aug);
            spec.repeats = runner.config().repeats_for(d.id);
            spec.base_seed = runner.config().seeds.base;
            spec.validate();
            if (ts_repeat < 0) throw ConfigError("--repeat must be >= 0");
            ResultsStore store(runner.config().output_root / "results");
            RunRecord rec;
            try {
                rec = runner.run_repeat(spec, ts_repeat);
            } catch (const GanBlocked& e) {
                spdlog::error("{}", e.what());
                return kExitRun;
            }
            store.put(rec);
            std::cout << rec.to_json().dump(2) << '\n';
            return kExitOk;
        }

        if (*grid_run) {
            Runner runner(load_experiment_config(gr_config));
            if (gr_dry) {
                for (const auto& s : expand_grid(runner.config()))
                    std::cout << spec_hash(s, runner.config()) << "  " << s.label() << " x" << s.repeats << '\n';
                return kExitOk;
            }
            ResultsStore store(runner.config().output_root / "results");
            RunOptions opts;
            opts.force = gr_force;
            opts.max_concurrent = gr_jobs;
            opts.max_new_records = gr_max;
            const auto summary = runner.run_grid(store, opts);
            print_summary(summary);
            return summary.failed + summary.blocked > 0 ? kExitRun : kExitOk;
        }

        if (*grid_table) {
            const auto cfg = load_experiment_config(gt_config);
            ResultsStore store(cfg.output_root / "results");
            TableSpec spec;
            spec.rows = axes_from(gt_rows);
            spec.cols = axes_from(gt_cols);
            spec.baseline = parse_selector(gt_baseline);
            spec.filter = parse_selector(gt_filter);
            spec.title = gt_title;
            const fs::path prefix = gt_out.empty() ? cfg.output_root / "reports" / "table" : fs::path(gt_out);
            const auto t = emit_table(store.records(), spec, prefix);
            std::cout << t.markdown();
            return kExitOk;
        }

        if (*grid_curves) {
            const auto cfg = load_experiment_config(gc_config);
            ResultsStore store(cfg.output_root / "results");
            CurveSpec spec;
            spec.sweep = parse_axis(gc_sweep);
            spec.baseline = parse_selector(gc_baseline);
            spec.augmented = parse_selector(gc_aug);
            spec.filter = parse_selector(gc_filter);
            spec.scatter_x = parse_axis(gc_sx);
            spec.scatter_group = parse_axis(gc_sg);
            spec.title = gc_title;
            spec.class_names = cfg.datasets.front().channel_spec().class_names;
            const fs::path prefix = gc_out.empty() ? cfg.output_root / "reports" / "curves" : fs::path(gc_out);
            const auto c = emit_curves(store.records(), spec, prefix);
            std::cout << c.csv();
            return kExitOk;
        }

        if (*audit_cmd) {
            Runner runner(load_experiment_config(au_config));
            const auto& d = pick_dataset(runner.config(), au_dataset);
            const auto metric = audit::parse_metric(au_metric);
            const auto& real = runner.real_patches(d.id, au_fraction);
            gan::GanCheckpoint ck;
            if (!au_checkpoint.empty()) {
                ck = gan::load_gan_checkpoint(au_checkpoint);
            } else {
                ck = *runner.gan_for(d.id, au_fraction);
            }
            const auto synth = gan::sample_synthetic(ck, au_count, au_seed);
            const auto report = audit::audit_report(synth, real, metric);
            const fs::path out(au_out);
            fs::create_directories(out);
            {
                std::ofstream j(out / "audit.json");
                if (!j) throw IoError("cannot write " + (out / "audit.json").string());
                j << audit::to_json(report).dump(2) << '\n';
            }
            audit::write_histogram_csv(report, out / "histogram.csv");
            if (au_montage > 0) {
                std::vector<audit::NnPair> shown(report.pairs.begin(),
                                                 report.pairs.begin() + std::min(au_montage, report.pairs.size()));
                audit::build_montage(shown, synth, real, out / "montage.png");
            }
            std::cout << "memorized " << report.memorized << " / " << report.pairs.size() << ", novel " << report.novel
                      << " (threshold " << report.novelty_threshold << ")\n";
            return kExitOk;
        }
    } catch (const ConfigError& e) {
        spdlog::error("config error: {}", e.what());
        return kExitConfig;
    } catch (const ValidationError& e) {
        spdlog::error("invalid input: {}", e.what());
        return kExitConfig;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return kExitRun;
    }
    return kExitOk;
}
