#include "wntf/tensor_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "wntf/error.hpp"

namespace wntf {

namespace {

static_assert(std::endian::native == std::endian::little,
              "WNTF I/O assumes a little-endian host");

template <typename T>
void put(std::ostream& out, T value) {
  std::array<char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  out.write(bytes.data(), bytes.size());
}

template <typename T>
T get(std::istream& in) {
  std::array<char, sizeof(T)> bytes;
  if (!in.read(bytes.data(), bytes.size())) throw FormatError("WNTF: truncated stream");
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode = {}) {
  std::ifstream in(path, mode);
  if (!in) throw FormatError("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = {}) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, mode);
  if (!out) throw FormatError("cannot write " + path.string());
  return out;
}

}  // namespace

void write_wntf(const DataTensor& t, std::ostream& out) {
  out.write("WNTF", 4);
  put<std::uint32_t>(out, kWntfVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(t.order()));
  for (std::size_t e : t.shape()) put<std::uint64_t>(out, e);
  for (double v : t.values()) put<double>(out, v);
  if (!out) throw FormatError("WNTF: write failed");
}

void write_wntf(const DataTensor& t, const std::filesystem::path& path) {
  auto out = open_out(path, std::ios::binary);
  write_wntf(t, out);
}

void write_wntf(const Matrix& m, const std::filesystem::path& path) {
  std::vector<double> values(m.data(), m.data() + m.size());
  write_wntf(DataTensor({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())},
                        std::move(values)),
             path);
}

DataTensor read_wntf(std::istream& in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), 4) || std::memcmp(magic.data(), "WNTF", 4) != 0)
    throw FormatError("WNTF: bad magic");
  const auto version = get<std::uint32_t>(in);
  if (version != kWntfVersion)
    throw FormatError("WNTF: unsupported version " + std::to_string(version));
  const auto order = get<std::uint32_t>(in);
  if (order < 2 || order > 64) throw FormatError("WNTF: implausible order");
  Shape shape(order);
  for (auto& e : shape) e = get<std::uint64_t>(in);
  std::vector<double> values(element_count(shape));
  for (double& v : values) v = get<double>(in);
  try {
    return DataTensor(std::move(shape), std::move(values));
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("WNTF: ") + e.what());
  }
}

DataTensor read_wntf(const std::filesystem::path& path) {
  auto in = open_in(path, std::ios::binary);
  return read_wntf(in);
}

DataTensor read_csv_samples(std::istream& in, const Shape& sample_shape) {
  if (sample_shape.empty()) throw std::invalid_argument("CSV ingest: empty sample shape");
  const std::size_t width = element_count(sample_shape);
  std::vector<double> values;
  std::size_t samples = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::stringstream row(line);
    std::string cell;
    std::size_t count = 0;
    while (std::getline(row, cell, ',')) {
      double v = 0.0;
      try {
        v = std::stod(cell);
      } catch (const std::exception&) {
        throw FormatError("CSV line " + std::to_string(line_no) + ": bad number '" + cell + "'");
      }
      if (v < 0.0) throw FormatError("CSV line " + std::to_string(line_no) + ": negative value");
      values.push_back(v);
      ++count;
    }
    if (count != width)
      throw FormatError("CSV line " + std::to_string(line_no) + ": expected " +
                        std::to_string(width) + " values, got " + std::to_string(count));
    ++samples;
  }
  if (samples == 0) throw FormatError("CSV ingest: no samples");
  Shape shape = sample_shape;
  shape.push_back(samples);
  // Row s holds sample s flattened column-major, so concatenating rows is
  // already the column-major layout of the stacked tensor.
  return DataTensor(std::move(shape), std::move(values));
}

DataTensor read_csv_samples(const std::filesystem::path& path, const Shape& sample_shape) {
  auto in = open_in(path);
  return read_csv_samples(in, sample_shape);
}

void write_csv_samples(const DataTensor& t, std::ostream& out) {
  const std::size_t samples = t.shape().back();
  const std::size_t width = t.size() / samples;
  std::ostringstream buf;
  buf.precision(17);
  for (std::size_t s = 0; s < samples; ++s) {
    for (std::size_t k = 0; k < width; ++k) {
      if (k) buf << ',';
      buf << t[s * width + k];
    }
    buf << '\n';
  }
  out << buf.str();
}

Shape parse_shape(const std::string& text) {
  Shape shape;
  std::string token;
  for (char c : text + "x") {
    if (c == 'x' || c == 'X' || c == ',') {
      if (token.empty()) throw std::invalid_argument("bad shape '" + text + "'");
      const long long v = std::stoll(token);
      if (v <= 0) throw std::invalid_argument("bad shape '" + text + "'");
      shape.push_back(static_cast<std::size_t>(v));
      token.clear();
    } else if (c != ' ') {
      token += c;
    }
  }
  return shape;
}

std::string format_shape(const Shape& shape) {
  std::string s;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += 'x';
    s += std::to_string(shape[i]);
  }
  return s;
}

std::vector<int> read_labels(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::vector<int> labels;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    try {
      labels.push_back(std::stoi(line));
    } catch (const std::exception&) {
      throw FormatError("labels: bad line '" + line + "' in " + path.string());
    }
  }
  return labels;
}

void write_labels(const std::vector<int>& labels, const std::filesystem::path& path) {
  auto out = open_out(path);
  for (int l : labels) out << l << '\n';
}

}  // namespace wntf
