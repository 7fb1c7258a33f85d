#include "ganaug/nn/serialize.hpp"

#include <cstring>
#include <fstream>
#include <unordered_map>

#include "ganaug/util/error.hpp"

namespace ganaug::nn {
namespace {

template <class T>
void put(std::ofstream& os, T value) {
    os.write(reinterpret_cast<const char*>(&value), sizeof value);
}

template <class T>
T get(std::ifstream& is, const std::filesystem::path& path) {
    T value{};
    is.read(reinterpret_cast<char*>(&value), sizeof value);
    if (!is) throw IoError("truncated parameter file " + path.string());
    return value;
}

}  // namespace

void write_params(const std::filesystem::path& path, const ParamList& params) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot write " + path.string());
    os.write("GAPR", 4);
    put<std::uint32_t>(os, kParamFormatVersion);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(params.size()));
    for (const auto& [name, t] : params) {
        put<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        const auto& s = t.shape();
        for (int d : {s.n, s.c, s.h, s.w}) put<std::int32_t>(os, d);
        os.write(reinterpret_cast<const char*>(t.ptr()), static_cast<std::streamsize>(t.numel() * sizeof(float)));
    }
    if (!os) throw IoError("failed writing " + path.string());
}

ParamList read_params(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path.string());
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "GAPR", 4) != 0) throw IoError(path.string() + " is not a parameter bundle");
    const auto version = get<std::uint32_t>(is, path);
    if (version != kParamFormatVersion) {
        throw IoError(path.string() + ": unsupported parameter format version " + std::to_string(version));
    }
    const auto count = get<std::uint32_t>(is, path);
    ParamList out;
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto len = get<std::uint32_t>(is, path);
        std::string name(len, '\0');
        is.read(name.data(), len);
        ag::Shape s;
        s.n = get<std::int32_t>(is, path);
        s.c = get<std::int32_t>(is, path);
        s.h = get<std::int32_t>(is, path);
        s.w = get<std::int32_t>(is, path);
        std::vector<float> data(s.numel());
        is.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(float)));
        if (!is) throw IoError("truncated parameter file " + path.string());
        out.emplace_back(std::move(name), ag::Tensor::from(s, std::move(data)));
    }
    return out;
}

void copy_values(const ParamList& from, ParamList& into) {
    std::unordered_map<std::string, const ag::Tensor*> index;
    for (const auto& [name, t] : from) index.emplace(name, &t);
    for (auto& [name, t] : into) {
        auto it = index.find(name);
        if (it == index.end()) throw IoError("parameter '" + name + "' missing from bundle");
        if (!(it->second->shape() == t.shape())) {
            throw IoError("parameter '" + name + "' has shape " + it->second->shape().str() + ", expected " +
                          t.shape().str());
        }
        auto dst = t.mutable_data();
        std::copy(it->second->data().begin(), it->second->data().end(), dst.begin());
    }
}

ParamList snapshot(const ParamList& params) {
    ParamList out;
    out.reserve(params.size());
    for (const auto& [name, t] : params) out.emplace_back(name, t.clone_leaf(false));
    return out;
}

}  // namespace ganaug::nn
