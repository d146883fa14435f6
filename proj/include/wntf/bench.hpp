#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "wntf/tensor.hpp"

namespace wntf {

struct BenchOptions {
  Shape shape{32, 32, 200};
  std::size_t rank = 10;
  int repeats = 5;
  double lambda = 100.0;
  int sinkhorn_iters = 10;
  std::uint64_t seed = 0;
};

// Best-of-repeats wall time of each kernel in both flavours, and the largest
// absolute difference between their outputs.
struct BenchRow {
  std::string kernel;
  double serial_s = 0.0;
  double parallel_s = 0.0;
  double speedup = 0.0;
  double max_abs_diff = 0.0;
  int threads = 1;
};

std::vector<BenchRow> run_benchmarks(const BenchOptions& opts);

void write_bench_csv(const std::vector<BenchRow>& rows, std::ostream& out);
void print_bench_table(const std::vector<BenchRow>& rows, std::ostream& out);

}  // namespace wntf
