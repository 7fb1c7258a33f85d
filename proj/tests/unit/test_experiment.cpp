#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <thread>

#include "ganaug/augment/augment.hpp"
#include "ganaug/experiment/config.hpp"
#include "ganaug/experiment/grid.hpp"
#include "ganaug/experiment/report.hpp"
#include "ganaug/experiment/runner.hpp"
#include "ganaug/experiment/store.hpp"
#include "ganaug/util/error.hpp"

using namespace ganaug;
using namespace ganaug::experiment;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path fresh_dir(const std::string& name) {
    auto dir = fs::temp_directory_path() / "ganaug_experiment_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

json table1_config(const fs::path& root) {
    return json::parse(R"({
      "dataset": [{"id": "ct", "classes": 3, "repeats": 8}, {"id": "mr", "classes": 1, "repeats": 14}],
      "grid": [
        {"dataset": "ct", "real_fraction": [1, 0.5, 0.1], "synth_percent": [0, 50, 100],
         "architecture": ["unet", "uresnet"], "augmentation": "rotation+gan"},
        {"dataset": "ct", "real_fraction": [1, 0.5, 0.1], "synth_percent": [0, 100],
         "architecture": "unet", "augmentation": ["none", "gan", "rotation", "rotation+gan"]},
        {"dataset": "ct", "real_fraction": [1, 0.5, 0.1], "synth_percent": [0, 12.5, 25, 37.5, 50, 100],
         "architecture": "unet", "augmentation": "rotation+gan"},
        {"dataset": "ct", "real_fraction": [1, 0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1], "synth_percent": [0, 50],
         "architecture": "unet", "augmentation": "rotation+gan"},
        {"dataset": "mr", "real_fraction": [1, 0.5, 0.1], "synth_percent": [0, 50, 100],
         "architecture": "deepmedic", "augmentation": "gan"}
      ],
      "output_root": ")" + root.string() + R"("
    })");
}

// Tiny end-to-end configuration: seconds per repeat.
json tiny_config(const fs::path& root) {
    return json::parse(R"({
      "dataset": {"id": "toy", "classes": 3, "patch_size": 16, "patch_budget": 48,
                  "split": {"train": 4, "val": 1, "test": 1},
                  "phantom": {"slices": 1, "height": 32, "width": 32, "seed": 5}},
      "gan": {"preset": "desk", "images_per_phase": 32, "noise_inject_resolution": 8,
              "batch_size": {"4": 8, "8": 8, "16": 8}},
      "segmentation": {"preset": "desk", "depth": 2, "base_width": 4, "max_steps": 3, "val_interval": 2,
                       "batch_size": 8},
      "grid": [{"real_fraction": [1, 0.5], "synth_percent": [0, 50], "architecture": "unet",
                "augmentation": "rotation+gan"}],
      "repeats": 2,
      "seeds": {"base": 100, "gan": 3, "data": 9},
      "output_root": ")" + root.string() + R"("
    })");
}

RunRecord fake_record(const std::string& dataset, double fraction, double pct, const std::string& arch,
                      const std::string& aug, int repeat, double mean, std::vector<double> per_class = {}) {
    RunRecord r;
    ExperimentSpec s;
    s.dataset = dataset;
    s.real_fraction = fraction;
    s.synth_percent = pct;
    s.architecture = seg::parse_architecture(arch);
    s.augmentation = augment::parse_preset(aug);
    r.spec = s.to_json();
    r.spec_hash = s.label();
    r.repeat = repeat;
    r.mean = mean;
    r.per_class = per_class.empty() ? std::vector<double>{mean, mean, mean} : per_class;
    return r;
}

}  // namespace

TEST_CASE("experiment: Table 1 grid cardinality follows the axis products") {
    const auto cfg = parse_experiment_config(table1_config("/tmp/unused"), "/");
    REQUIRE(cfg.grid.size() == 5);
    const std::size_t expected[] = {18, 24, 18, 20, 9};
    std::size_t total = 0;
    for (std::size_t i = 0; i < 5; ++i) {
        const auto cells = expand_row(cfg.grid[i], cfg);
        CHECK(cells.size() == cfg.grid[i].cardinality());
        CHECK(cells.size() == expected[i]);
        total += cells.size();
    }
    CHECK(expand_grid(cfg).size() == total);

    const auto row1 = expand_row(cfg.grid[0], cfg);
    // declaration order: fraction outer, then percent, then architecture
    CHECK(row1[0].real_fraction == 1.0);
    CHECK(row1[0].synth_percent == 0.0);
    CHECK(row1[0].architecture == seg::Architecture::unet);
    CHECK(row1[1].architecture == seg::Architecture::uresnet);
    CHECK(row1[2].synth_percent == 50.0);
    CHECK(row1.back().real_fraction == 0.1);
    CHECK(row1[0].repeats == 8);
    CHECK(expand_row(cfg.grid[4], cfg)[0].repeats == 14);
    CHECK(expand_row(cfg.grid[4], cfg)[0].architecture == seg::Architecture::multiscale);

    // non-GAN presets listed against +100% run without synthetic data
    const auto row2 = expand_row(cfg.grid[1], cfg);
    std::size_t collapsed = 0;
    for (const auto& s : row2) {
        if (!augment::uses_gan(s.augmentation)) CHECK(s.synth_percent == 0.0);
        collapsed += s.synth_collapsed;
    }
    CHECK(collapsed == 6);
}

TEST_CASE("experiment: grid validation") {
    auto j = table1_config("/tmp/unused");
    j["grid"] = json::array({json::parse(R"({"dataset": "ct", "real_fraction": 0.5, "synth_percent": 0,
                                             "architecture": "unet", "augmentation": "none"})")});
    auto cfg = parse_experiment_config(j, "/");
    CHECK(expand_grid(cfg).size() == 1);

    j["grid"][0]["real_fraction"] = json::array({1, 0});
    CHECK_THROWS_AS(parse_experiment_config(j, "/"), ConfigError);
    j["grid"][0]["real_fraction"] = json::array();
    CHECK_THROWS_AS(parse_experiment_config(j, "/"), ConfigError);
    j["grid"][0]["real_fraction"] = 0.5;
    j["grid"][0]["augmentation"] = "elastic";
    CHECK_THROWS_AS(parse_experiment_config(j, "/"), ConfigError);
    j["grid"][0]["augmentation"] = "none";
    j["grid"][0]["dataset"] = "pet";
    CHECK_THROWS_AS(parse_experiment_config(j, "/"), ConfigError);
    j["grid"][0]["dataset"] = "ct";
    j["segmentation"] = {{"depth", "deep"}};
    CHECK_THROWS_AS(parse_experiment_config(j, "/"), ConfigError);
    j.erase("segmentation");
    j.erase("output_root");
    CHECK_THROWS_AS(parse_experiment_config(j, "/"), ConfigError);

    ExperimentSpec bad;
    bad.dataset = "ct";
    bad.synth_percent = 50;
    bad.augmentation = augment::Preset::rotation;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("experiment: spec hash identity") {
    const auto cfg = parse_experiment_config(table1_config("/tmp/unused"), "/");
    const auto cells = expand_grid(cfg);
    std::set<std::string> hashes;
    for (const auto& s : cells) hashes.insert(spec_hash(s, cfg));
    // rows 1, 3 and 4 share cells; row 2's collapsed cells coincide with its 0% cells
    CHECK(hashes.size() < cells.size());
    CHECK(spec_hash(cells[0], cfg) == spec_hash(cells[0], cfg));
    auto more = cells[0];
    more.repeats = 20;
    CHECK(spec_hash(more, cfg) == spec_hash(cells[0], cfg));
    auto other = cells[0];
    other.real_fraction = 0.3;
    CHECK(spec_hash(other, cfg) != spec_hash(cells[0], cfg));
}

TEST_CASE("experiment: results store") {
    const auto dir = fresh_dir("store");
    ResultsStore store(dir);
    CHECK(store.records().empty());
    auto r = fake_record("ct", 1, 0, "unet", "rotation", 0, 0.8);
    store.put(r);
    r.repeat = 1;
    r.status = RunStatus::failed;
    r.error = "boom, \"quoted\"";
    store.put(r);
    CHECK(store.records().size() == 2);
    CHECK(store.completed(r.spec_hash, 0));
    CHECK_FALSE(store.completed(r.spec_hash, 1));
    r.status = RunStatus::completed;
    r.error.clear();
    r.mean = 0.9;
    store.put(r);  // replaces the failed record
    const auto all = store.records();
    REQUIRE(all.size() == 2);
    CHECK(all[1].mean == 0.9);
    CHECK(fs::exists(store.csv_path()));

    // a torn trailing line from a killed writer is ignored and repaired
    {
        std::ofstream out(store.records_path(), std::ios::app);
        out << "{\"format_version\": 1, \"spec_ha";
    }
    CHECK(store.records().size() == 2);
    r.repeat = 2;
    store.put(r);
    CHECK(store.records().size() == 3);

    // concurrent writers never duplicate a key
    std::vector<std::thread> threads;
    for (int t = 0; t < 4; ++t) {
        threads.emplace_back([&, t] {
            for (int i = 0; i < 10; ++i) {
                auto x = fake_record("ct", 0.5, 0, "unet", "none", i, 0.1 * t);
                store.put(x);
            }
        });
    }
    for (auto& t : threads) t.join();
    const auto final_records = store.records();
    std::set<std::pair<std::string, int>> keys;
    for (const auto& x : final_records) keys.insert({x.spec_hash, x.repeat});
    CHECK(keys.size() == final_records.size());
    CHECK(final_records.size() == 13);
}

TEST_CASE("experiment: runner end to end on a tiny phantom") {
    const auto root = fresh_dir("runner");
    const auto cfg = parse_experiment_config(tiny_config(root), "/");
    Runner runner(cfg);
    ResultsStore store(root / "results");
    const auto cells = expand_grid(cfg);
    REQUIRE(cells.size() == 4);

    const auto& baseline = cells[0];
    const auto recs = runner.run_cell(baseline, store);
    REQUIRE(recs.size() == 2);
    CHECK(recs[0].status == RunStatus::completed);
    CHECK(recs[0].seed == 100);
    CHECK(recs[1].seed == 101);
    CHECK(recs[0].real_patches == 48);
    CHECK(recs[0].synthetic_patches == 0);
    CHECK(recs[0].per_class.size() == 3);
    CHECK(fs::exists(fs::path(recs[0].seg_checkpoint) / "manifest.json"));

    SUBCASE("rerun without force is a no-op") {
        CHECK(runner.run_cell(baseline, store).empty());
        CHECK(store.records().size() == 2);
    }
    SUBCASE("forced rerun reproduces identical DSC") {
        RunOptions force;
        force.force = true;
        const auto again = runner.run_cell(baseline, store, force);
        REQUIRE(again.size() == 2);
        for (int i = 0; i < 2; ++i) {
            CHECK(again[i].mean == recs[i].mean);
            CHECK(again[i].per_class == recs[i].per_class);
        }
        CHECK(store.records().size() == 2);
    }
    SUBCASE("synthetic cell follows the count law and reuses one GAN") {
        const auto& aug = cells[1];
        REQUIRE(aug.synth_percent == 50.0);
        const auto out = runner.run_cell(aug, store);
        REQUIRE(out.size() == 2);
        for (const auto& r : out) {
            CHECK(r.status == RunStatus::completed);
            CHECK(r.synthetic_patches == augment::synthetic_count_for(48, 50));
            CHECK(r.gan_shared_across_repeats);
            CHECK(r.gan_checkpoint == out[0].gan_checkpoint);
        }
        CHECK(fs::exists(runner.gan_dir("toy", 1.0) / "final" / "manifest.json"));
    }
    SUBCASE("interrupted grid resumes without duplicates") {
        RunOptions partial;
        partial.max_new_records = 3;
        const auto first = runner.run_grid(store, partial);
        CHECK(first.interrupted);
        CHECK(first.written == 3);
        const auto second = runner.run_grid(store);
        CHECK_FALSE(second.interrupted);
        CHECK(second.skipped == 5);
        const auto all = store.records();
        CHECK(all.size() == 8);
        std::set<std::pair<std::string, int>> keys;
        for (const auto& r : all) keys.insert({r.spec_hash, r.repeat});
        CHECK(keys.size() == all.size());
        CHECK(runner.run_grid(store).written == 0);
    }
}

TEST_CASE("experiment: a diverged GAN blocks dependent cells") {
    const auto root = fresh_dir("blocked");
    const auto cfg = parse_experiment_config(tiny_config(root), "/");
    Runner runner(cfg);
    fs::create_directories(runner.gan_dir("toy", 0.5) / "diverged");
    ResultsStore store(root / "results");
    const auto cells = expand_grid(cfg);
    const auto& blocked_cell = cells[3];
    REQUIRE(blocked_cell.real_fraction == 0.5);
    REQUIRE(blocked_cell.synth_percent == 50.0);
    const auto out = runner.run_cell(blocked_cell, store);
    REQUIRE(out.size() == 2);
    for (const auto& r : out) {
        CHECK(r.status == RunStatus::blocked);
        CHECK_FALSE(r.error.empty());
    }
    // the baseline at the same fraction does not depend on the GAN
    const auto ok = runner.run_cell(cells[2], store);
    REQUIRE(ok.size() == 2);
    CHECK(ok[0].status == RunStatus::completed);
}

TEST_CASE("report: tables") {
    std::vector<RunRecord> recs;
    const double fractions[] = {1, 0.5, 0.1};
    for (const char* arch : {"unet", "uresnet"})
        for (double f : fractions)
            for (double p : {0.0, 50.0, 100.0})
                for (int i = 0; i < 4; ++i) recs.push_back(fake_record("ct", f, p, arch, "rotation+gan", i, 0.8));

    TableSpec spec;
    spec.rows = {Axis::synth_percent};
    spec.cols = {Axis::architecture, Axis::real_fraction};
    spec.baseline = {{Axis::synth_percent, "0"}};

    SUBCASE("constant values: no bold, Table 2 shape") {
        const auto t = build_table(ResultSet(recs), spec);
        CHECK(t.row_labels.size() == 3);
        CHECK(t.col_labels.size() == 6);
        CHECK(t.cells.size() == 18);
        CHECK(t.col_labels[0] == "UNet 100%");
        for (const auto& c : t.cells) {
            CHECK(c.present);
            CHECK_FALSE(c.significant);
        }
        CHECK(t.markdown().find("**80.0") == std::string::npos);
        CHECK(t.markdown().find("80.0 (0.00)") != std::string::npos);
        CHECK(t.warnings.empty());
    }
    SUBCASE("a shifted cell is bold; baselines never are") {
        for (auto& r : recs) {
            const auto c = coords_of(r.spec);
            if (c[2] == "50" && c[1] == "0.1" && c[3] == "unet") r.mean = 0.85 + 0.001 * r.repeat;
            if (c[2] == "0") r.mean = 0.8 + 0.001 * r.repeat;
        }
        const auto t = build_table(ResultSet(recs), spec);
        std::size_t bold = 0;
        for (const auto& c : t.cells) {
            bold += c.significant;
            if (c.is_baseline) CHECK_FALSE(c.significant);
        }
        CHECK(bold == 1);
        CHECK(t.markdown().find("**85.2**") != std::string::npos);
        CHECK(t.csv().find("true") != std::string::npos);

        // the scatter's filled markers agree with the bold cells
        CurveSpec cs;
        cs.filter = {{Axis::architecture, "unet"}};
        const auto curves = build_curves(ResultSet(recs), cs);
        for (const auto& sp : curves.scatter) {
            bool table_bold = false;
            for (const auto& c : t.cells)
                if (c.present && c.coords == sp.coords) table_bold = c.significant;
            CHECK(sp.significant == table_bold);
        }
    }
    SUBCASE("missing cells render as a dash with a warning") {
        std::erase_if(recs, [](const RunRecord& r) {
            const auto c = coords_of(r.spec);
            return c[2] == "100" && c[1] == "0.5" && c[3] == "uresnet";
        });
        const auto dir = fresh_dir("table");
        const auto t = emit_table(recs, spec, dir / "table2");
        CHECK(t.markdown().find("—") != std::string::npos);
        CHECK_FALSE(t.warnings.empty());
        CHECK(fs::exists(dir / "table2.md"));
        CHECK(fs::exists(dir / "table2.csv"));
    }
    SUBCASE("ambiguous layout is a config error") {
        TableSpec loose = spec;
        loose.cols = {Axis::real_fraction};
        CHECK_THROWS_AS(build_table(ResultSet(recs), loose), ConfigError);
    }
}

TEST_CASE("report: curves") {
    std::vector<RunRecord> recs;
    for (double f : {1.0, 0.9, 0.5, 0.1})
        for (double p : {0.0, 50.0})
            for (int i = 0; i < 3; ++i)
                recs.push_back(fake_record("ct", f, p, "unet", "rotation+gan", i, 0.7 + 0.1 * f + 0.01 * i,
                                           {0.6 + 0.01 * i, 0.7, 0.8 + 0.1 * f}));
    SUBCASE("identical conditions give a flat zero difference") {
        CurveSpec cs;
        cs.augmented = cs.baseline;
        const auto c = build_curves(ResultSet(recs), cs);
        CHECK(c.has_curves);
        CHECK(c.points.size() == 4 * 4);  // 4 sweep points x (mean + 3 classes)
        for (const auto& p : c.points) CHECK(p.difference == 0.0);
    }
    SUBCASE("files and styles") {
        CurveSpec cs;
        cs.class_names = {"ventricular", "cortical", "brain stem"};
        const auto dir = fresh_dir("curves");
        const auto c = emit_curves(recs, cs, dir / "fig");
        CHECK(fs::exists(dir / "fig-curves.svg"));
        CHECK(fs::exists(dir / "fig-scatter.svg"));
        CHECK(fs::exists(dir / "fig.csv"));
        CHECK(c.curves_svg.find("stroke-dasharray='7,4'") != std::string::npos);
        CHECK(c.curves_svg.find("stroke-dasharray='9,3,2,3'") != std::string::npos);
        CHECK(c.scatter.size() == 8);
    }
    SUBCASE("single-point sweep draws the scatter only") {
        CurveSpec cs;
        cs.filter = {{Axis::real_fraction, "0.5"}};
        const auto c = build_curves(ResultSet(recs), cs);
        CHECK_FALSE(c.has_curves);
        CHECK(c.curves_svg.empty());
        CHECK_FALSE(c.scatter_svg.empty());
    }
}
