#include <cstdlib>
#include <iostream>
#include <string>

#include "wntf/bench.hpp"
#include "wntf/parallel.hpp"
#include "wntf/tensor_io.hpp"

// Usage: wntf_bench [shape] [rank] [repeats]
int main(int argc, char** argv) {
  try {
    wntf::configure_threads_from_env();
    wntf::BenchOptions opts;
    if (argc > 1) opts.shape = wntf::parse_shape(argv[1]);
    if (argc > 2) opts.rank = static_cast<std::size_t>(std::stoul(argv[2]));
    if (argc > 3) opts.repeats = std::stoi(argv[3]);
    std::cout << "shape " << wntf::format_shape(opts.shape) << ", rank " << opts.rank << ", "
              << wntf::thread_count() << " thread(s)\n";
    wntf::print_bench_table(wntf::run_benchmarks(opts), std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
