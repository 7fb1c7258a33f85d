#pragma once

#include <filesystem>

#include "ganaug/nn/layers.hpp"

namespace ganaug::nn {

/// Binary tensor bundle: "GAPR", u32 version, u32 count, then per tensor
/// {u32 name length, name bytes, 4 x i32 shape, float32 data}, little-endian.
inline constexpr std::uint32_t kParamFormatVersion = 1;

void write_params(const std::filesystem::path& path, const ParamList& params);
ParamList read_params(const std::filesystem::path& path);

/// Copies values by name into existing tensors; every destination must be present with the same shape.
void copy_values(const ParamList& from, ParamList& into);

/// Deep value snapshot of a parameter list (new leaves, no grad).
ParamList snapshot(const ParamList& params);

}  // namespace ganaug::nn
