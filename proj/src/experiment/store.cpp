#include "ganaug/experiment/store.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <fstream>
#include <mutex>
#include <sstream>

#include <spdlog/spdlog.h>

#include "ganaug/util/error.hpp"

namespace ganaug::experiment {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(RunStatus s) {
    switch (s) {
        case RunStatus::completed: return "completed";
        case RunStatus::failed: return "failed";
        case RunStatus::blocked: return "blocked";
    }
    return "failed";
}

RunStatus parse_run_status(const std::string& s) {
    if (s == "completed") return RunStatus::completed;
    if (s == "failed") return RunStatus::failed;
    if (s == "blocked") return RunStatus::blocked;
    throw IoError("unknown run status '" + s + "'");
}

json RunRecord::to_json() const {
    return {{"format_version", format_version},
            {"spec_hash", spec_hash},
            {"spec", spec},
            {"repeat", repeat},
            {"seed", seed},
            {"status", experiment::to_string(status)},
            {"per_class_dsc", per_class},
            {"mean_dsc", mean},
            {"macro_per_class_dsc", macro_per_class},
            {"macro_mean_dsc", macro_mean},
            {"wall_clock_seconds", wall_clock_seconds},
            {"gan_checkpoint", gan_checkpoint},
            {"seg_checkpoint", seg_checkpoint},
            {"gan_shared_across_repeats", gan_shared_across_repeats},
            {"real_patches", real_patches},
            {"synthetic_patches", synthetic_patches},
            {"dataset_hash", dataset_hash},
            {"error", error}};
}

RunRecord RunRecord::from_json(const json& j) {
    RunRecord r;
    r.format_version = j.at("format_version").get<int>();
    if (r.format_version != kStoreFormatVersion) {
        throw IoError("results store record has format version " + std::to_string(r.format_version));
    }
    r.spec_hash = j.at("spec_hash").get<std::string>();
    r.spec = j.at("spec");
    r.repeat = j.at("repeat").get<int>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.status = parse_run_status(j.at("status").get<std::string>());
    r.per_class = j.at("per_class_dsc").get<std::vector<double>>();
    r.mean = j.at("mean_dsc").get<double>();
    r.macro_per_class = j.value("macro_per_class_dsc", std::vector<double>{});
    r.macro_mean = j.value("macro_mean_dsc", 0.0);
    r.wall_clock_seconds = j.value("wall_clock_seconds", 0.0);
    r.gan_checkpoint = j.value("gan_checkpoint", "");
    r.seg_checkpoint = j.value("seg_checkpoint", "");
    r.gan_shared_across_repeats = j.value("gan_shared_across_repeats", false);
    r.real_patches = j.value("real_patches", std::size_t{0});
    r.synthetic_patches = j.value("synthetic_patches", std::size_t{0});
    r.dataset_hash = j.value("dataset_hash", "");
    r.error = j.value("error", "");
    return r;
}

namespace {

std::mutex& process_mutex() {
    static std::mutex m;
    return m;
}

class FileLock {
public:
    explicit FileLock(const fs::path& path) : guard_(process_mutex()) {
        fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
        if (fd_ < 0) throw IoError("cannot open lock file " + path.string());
        if (::flock(fd_, LOCK_EX) != 0) {
            ::close(fd_);
            throw IoError("cannot lock " + path.string());
        }
    }
    ~FileLock() {
        ::flock(fd_, LOCK_UN);
        ::close(fd_);
    }
    FileLock(const FileLock&) = delete;
    FileLock& operator=(const FileLock&) = delete;

private:
    std::lock_guard<std::mutex> guard_;
    int fd_ = -1;
};

void write_all(int fd, const std::string& text, const fs::path& path) {
    const char* p = text.data();
    std::size_t left = text.size();
    while (left > 0) {
        const ssize_t n = ::write(fd, p, left);
        if (n <= 0) throw IoError("write failed on " + path.string());
        p += n;
        left -= static_cast<std::size_t>(n);
    }
}

std::string csv_list(const std::vector<double>& v) {
    std::ostringstream o;
    o.precision(17);
    for (std::size_t i = 0; i < v.size(); ++i) o << (i ? ";" : "") << v[i];
    return o.str();
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c == '\n' ? ' ' : c;
    }
    return out + "\"";
}

}  // namespace

ResultsStore::ResultsStore(fs::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw IoError("cannot create results directory " + dir_.string() + ": " + ec.message());
}

std::vector<RunRecord> ResultsStore::read_unlocked() const {
    std::vector<RunRecord> out;
    std::ifstream in(records_path());
    if (!in) return out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error&) {
            if (in.peek() == std::char_traits<char>::eof()) {
                spdlog::warn("results store: skipping torn final record at line {}", lineno);
                break;
            }
            throw IoError("results store corrupt at line " + std::to_string(lineno) + " of " + records_path().string());
        }
        out.push_back(RunRecord::from_json(j));
    }
    return out;
}

std::vector<RunRecord> ResultsStore::records() const {
    FileLock lock(dir_ / "results.lock");
    return read_unlocked();
}

std::optional<RunRecord> ResultsStore::find(const std::string& spec_hash, int repeat) const {
    for (auto& r : records())
        if (r.spec_hash == spec_hash && r.repeat == repeat) return r;
    return std::nullopt;
}

bool ResultsStore::completed(const std::string& spec_hash, int repeat) const {
    const auto r = find(spec_hash, repeat);
    return r && r->status == RunStatus::completed;
}

void ResultsStore::put(const RunRecord& record) {
    FileLock lock(dir_ / "results.lock");
    auto all = read_unlocked();
    const auto same = [&](const RunRecord& r) { return r.spec_hash == record.spec_hash && r.repeat == record.repeat; };
    const bool replace = std::any_of(all.begin(), all.end(), same);
    if (replace) {
        // rewrite without the superseded record, then swap in atomically
        std::erase_if(all, same);
        all.push_back(record);
        const fs::path tmp = records_path().string() + ".tmp";
        {
            std::ofstream out(tmp, std::ios::trunc);
            if (!out) throw IoError("cannot write " + tmp.string());
            for (const auto& r : all) out << r.to_json().dump() << '\n';
            out.flush();
            if (!out) throw IoError("write failed on " + tmp.string());
        }
        fs::rename(tmp, records_path());
    } else {
        // a torn final line from a killed writer is dropped before appending
        std::string text;
        {
            std::ifstream in(records_path(), std::ios::binary);
            if (in) text.assign(std::istreambuf_iterator<char>(in), {});
        }
        if (!text.empty() && text.back() != '\n') {
            const auto keep = text.rfind('\n');
            fs::resize_file(records_path(), keep == std::string::npos ? 0 : keep + 1);
        }
        const int fd = ::open(records_path().c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
        if (fd < 0) throw IoError("cannot open " + records_path().string());
        try {
            write_all(fd, record.to_json().dump() + "\n", records_path());
        } catch (...) {
            ::close(fd);
            throw;
        }
        ::fsync(fd);
        ::close(fd);
        all.push_back(record);
    }
    write_csv_unlocked(all);
}

void ResultsStore::write_csv_unlocked(const std::vector<RunRecord>& records) const {
    const fs::path tmp = csv_path().string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw IoError("cannot write " + tmp.string());
        out.precision(17);
        out << "spec_hash,dataset,real_fraction,synth_percent,architecture,augmentation,repeat,seed,status,"
               "mean_dsc,per_class_dsc,macro_mean_dsc,wall_clock_seconds,real_patches,synthetic_patches,"
               "gan_checkpoint,seg_checkpoint,error\n";
        for (const auto& r : records) {
            out << r.spec_hash << ',' << csv_escape(r.spec.value("dataset", "")) << ','
                << r.spec.value("real_fraction", 0.0) << ',' << r.spec.value("synth_percent", 0.0) << ','
                << r.spec.value("architecture", "") << ',' << r.spec.value("augmentation", "") << ',' << r.repeat
                << ',' << r.seed << ',' << to_string(r.status) << ',' << r.mean << ',' << csv_list(r.per_class) << ','
                << r.macro_mean << ',' << r.wall_clock_seconds << ',' << r.real_patches << ',' << r.synthetic_patches
                << ',' << csv_escape(r.gan_checkpoint) << ',' << csv_escape(r.seg_checkpoint) << ','
                << csv_escape(r.error) << '\n';
        }
    }
    fs::rename(tmp, csv_path());
}

}  // namespace ganaug::experiment
