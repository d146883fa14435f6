#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "wntf/tensor.hpp"

namespace wntf {

// WNTF binary layout (little-endian):
//   "WNTF" | u32 version (=1) | u32 N | N x u64 extents | prod(extents) x f64
// values in column-major order.
inline constexpr std::uint32_t kWntfVersion = 1;

void write_wntf(const DataTensor& t, std::ostream& out);
void write_wntf(const DataTensor& t, const std::filesystem::path& path);
// Factor matrices are stored as 2-way tensors (rows x rank).
void write_wntf(const Matrix& m, const std::filesystem::path& path);
DataTensor read_wntf(std::istream& in);
DataTensor read_wntf(const std::filesystem::path& path);

// One sample per row, each row the column-major flattening of a tensor of
// `sample_shape`. Samples are stacked along a new last mode.
DataTensor read_csv_samples(std::istream& in, const Shape& sample_shape);
DataTensor read_csv_samples(const std::filesystem::path& path, const Shape& sample_shape);
void write_csv_samples(const DataTensor& t, std::ostream& out);

// "32x32" or "32,32".
Shape parse_shape(const std::string& text);
std::string format_shape(const Shape& shape);

// One integer label per line.
std::vector<int> read_labels(const std::filesystem::path& path);
void write_labels(const std::vector<int>& labels, const std::filesystem::path& path);

}  // namespace wntf
