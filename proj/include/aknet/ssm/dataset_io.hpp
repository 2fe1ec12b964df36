#pragma once

#include "aknet/ssm/model.hpp"

#include <filesystem>

namespace aknet {

// Binary dataset container, all fields little-endian:
//   "AKDS" | u32 version | u64 m | u64 n | u64 T | u64 count | u8 family | u8 split
//   then per trajectory: x0[m], states[T*m], observations[T*n], sow[T], q2[T], r2[T]
//   as real64, matrices row-major.
void save_dataset(const std::filesystem::path& path, const Dataset& dataset);
Dataset load_dataset(const std::filesystem::path& path);

// Model container: "AKMD" | u32 version | u64 m | u64 n | F | H | Q0 | R0 as real64.
void save_model(const std::filesystem::path& path, const SSModel& model);
SSModel load_model(const std::filesystem::path& path);

// Inspection export: trajectory,t,x_0..x_{m-1},y_0..y_{n-1},sow
void export_dataset_csv(const std::filesystem::path& path, const Dataset& dataset);

}  // namespace aknet
