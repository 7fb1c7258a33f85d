#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "ganaug/data/types.hpp"
#include "ganaug/experiment/config.hpp"
#include "ganaug/experiment/grid.hpp"
#include "ganaug/experiment/store.hpp"
#include "ganaug/gan/train.hpp"

namespace ganaug::experiment {

/// Normalized volumes of one dataset, split into train / val / test.
struct DataBundle {
    DatasetConfig config;
    data::ChannelSpec spec;
    std::vector<data::Volume> train;
    std::vector<data::Volume> val;
    std::vector<data::Volume> test;
};

/// Phantom datasets are generated as train + val + test volumes from one seed
/// and split in that order; directory datasets read <path>/{train,val,test}.
DataBundle load_dataset(const DatasetConfig& config);

/// A GAN this cell depends on diverged earlier; the cell cannot run.
class GanBlocked : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunOptions {
    bool force = false;               // re-run completed (spec, repeat) pairs
    int max_concurrent = 0;           // 0: take the config value
    std::size_t max_new_records = 0;  // > 0: stop after writing this many records
};

struct GridSummary {
    std::size_t cells = 0;         // expand_grid size
    std::size_t unique_cells = 0;  // distinct spec hashes
    std::size_t written = 0;
    std::size_t skipped = 0;       // already completed
    std::size_t failed = 0;
    std::size_t blocked = 0;
    bool interrupted = false;      // stopped by max_new_records
};

class Runner {
public:
    explicit Runner(ExperimentConfig config);

    const ExperimentConfig& config() const { return config_; }

    const DataBundle& dataset(const std::string& id);
    /// Real training patches of a data condition: reduce the training volumes to
    /// `fraction`, then draw the dataset's patch budget from what remains.
    const data::PatchSet& real_patches(const std::string& id, double fraction);

    std::filesystem::path gan_dir(const std::string& id, double fraction) const;
    std::filesystem::path cell_dir(const std::string& spec_hash, int repeat) const;
    /// Loads the cached GAN of a data condition or trains it (resuming a partial run).
    /// Throws GanBlocked when a previous attempt diverged.
    std::shared_ptr<const gan::GanCheckpoint> gan_for(const std::string& id, double fraction);

    /// One repeat end to end. Exceptions propagate.
    RunRecord run_repeat(const ExperimentSpec& spec, int repeat);

    /// Every repeat of a cell not yet completed in the store; failures and blocked
    /// repeats are recorded and the remaining repeats continue.
    std::vector<RunRecord> run_cell(const ExperimentSpec& spec, ResultsStore& store, const RunOptions& options = {});

    GridSummary run_grid(ResultsStore& store, const RunOptions& options = {});

private:
    RunRecord guarded_repeat(const ExperimentSpec& spec, const std::string& hash, int repeat);

    ExperimentConfig config_;
    std::mutex mutex_;  // guards the caches and serializes their construction
    std::map<std::string, std::unique_ptr<DataBundle>> datasets_;
    std::map<std::string, std::unique_ptr<data::PatchSet>> real_;
    std::map<std::string, std::shared_ptr<const gan::GanCheckpoint>> gans_;
};

}  // namespace ganaug::experiment
