#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace ganaug::experiment {

inline constexpr int kStoreFormatVersion = 1;

enum class RunStatus { completed, failed, blocked };

std::string to_string(RunStatus s);
RunStatus parse_run_status(const std::string& s);

struct RunRecord {
    int format_version = kStoreFormatVersion;
    std::string spec_hash;
    nlohmann::json spec;  // ExperimentSpec::to_json()
    int repeat = 0;
    std::uint64_t seed = 0;
    RunStatus status = RunStatus::completed;
    std::vector<double> per_class;  // test-set Dice per class, pooled over pixels
    double mean = 0;
    std::vector<double> macro_per_class;  // mean of per-volume scores
    double macro_mean = 0;
    double wall_clock_seconds = 0;
    std::string gan_checkpoint;
    std::string seg_checkpoint;
    bool gan_shared_across_repeats = false;
    std::size_t real_patches = 0;
    std::size_t synthetic_patches = 0;
    std::string dataset_hash;
    std::string error;

    nlohmann::json to_json() const;
    static RunRecord from_json(const nlohmann::json& j);
};

/// Newline-delimited JSON records (results.ndjson) with a CSV projection
/// (results.csv). At most one record per (spec hash, repeat); writers hold an
/// advisory lock on results.lock.
class ResultsStore {
public:
    explicit ResultsStore(std::filesystem::path dir);

    const std::filesystem::path& dir() const { return dir_; }
    std::filesystem::path records_path() const { return dir_ / "results.ndjson"; }
    std::filesystem::path csv_path() const { return dir_ / "results.csv"; }

    /// Every stored record, in write order. A torn final line is skipped with a warning.
    std::vector<RunRecord> records() const;
    std::optional<RunRecord> find(const std::string& spec_hash, int repeat) const;
    bool completed(const std::string& spec_hash, int repeat) const;

    /// Appends, or replaces the existing record with the same key.
    void put(const RunRecord& record);

private:
    std::vector<RunRecord> read_unlocked() const;
    void write_csv_unlocked(const std::vector<RunRecord>& records) const;

    std::filesystem::path dir_;
};

}  // namespace ganaug::experiment
