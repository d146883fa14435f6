#pragma once

namespace wntf {

// Thread count used by the OpenMP kernels. Defaults to the OpenMP runtime
// maximum; WNTF_THREADS overrides it (1 forces the deterministic serial
// schedule).
int thread_count();
// 0 restores the runtime default.
void set_thread_count(int threads);

// Reads WNTF_THREADS (a positive integer) and applies it. Returns the
// resulting thread count.
int configure_threads_from_env();

}  // namespace wntf
