#include "wntf/parallel.hpp"

#include <cstdlib>
#include <stdexcept>
#include <string>

#include <omp.h>

namespace wntf {

namespace {
int g_threads = 0;  // 0: defer to the OpenMP runtime
}

int thread_count() { return g_threads > 0 ? g_threads : omp_get_max_threads(); }

void set_thread_count(int threads) {
  if (threads < 0) throw std::invalid_argument("thread count must be >= 0");
  g_threads = threads;
}

int configure_threads_from_env() {
  if (const char* env = std::getenv("WNTF_THREADS")) {
    const std::string text(env);
    std::size_t used = 0;
    int threads = 0;
    try {
      threads = std::stoi(text, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != text.size() || threads < 1)
      throw std::invalid_argument("WNTF_THREADS must be a positive integer, got '" + text + "'");
    set_thread_count(threads);
  }
  return thread_count();
}

}  // namespace wntf
