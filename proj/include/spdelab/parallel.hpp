#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <cstdlib>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace spdelab {

enum class Exec { Serial, OpenMP };

struct RunContext {
  Exec exec = Exec::OpenMP;
  int threads = 0;  // 0 -> SPDE_LAB_THREADS env or hardware default
};

inline int effective_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("SPDE_LAB_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

// Runs fn(i) for i in [0, count). Work items must write only to their own
// slots; with that contract the result is independent of execution mode.
// The first worker exception is rethrown on the calling thread (exceptions
// must not unwind through an OpenMP region).
template <class Fn>
void for_each_replicate(std::int64_t count, const RunContext& ctx, Fn&& fn) {
  if (ctx.exec == Exec::Serial) {
    for (std::int64_t i = 0; i < count; ++i) fn(i);
    return;
  }
#ifdef _OPENMP
  const int nt = effective_threads(ctx.threads);
  std::exception_ptr err = nullptr;
  std::atomic<bool> failed{false};
#pragma omp parallel for schedule(dynamic) num_threads(nt)
  for (std::int64_t i = 0; i < count; ++i) {
    if (failed.load(std::memory_order_relaxed)) continue;
    try {
      fn(i);
    } catch (...) {
#pragma omp critical(spdelab_replicate_error)
      {
        if (!failed.exchange(true)) err = std::current_exception();
      }
    }
  }
  if (err) std::rethrow_exception(err);
#else
  for (std::int64_t i = 0; i < count; ++i) fn(i);
#endif
}

// Deterministic reduction: the index range is cut into fixed blocks, block
// sums are computed independently (possibly on different threads) and then
// accumulated in block order, so the result is bit-identical for any thread
// count. block_fn(begin, end) returns the serial sum of one block.
template <class BlockFn>
double blocked_sum(std::int64_t count, std::int64_t block_size,
                   const RunContext& ctx, BlockFn&& block_fn) {
  if (count <= 0) return 0.0;
  if (block_size <= 0) block_size = 8192;
  const std::int64_t n_blocks = (count + block_size - 1) / block_size;
  std::vector<double> partial(static_cast<std::size_t>(n_blocks), 0.0);
  for_each_replicate(n_blocks, ctx, [&](std::int64_t b) {
    const std::int64_t lo = b * block_size;
    const std::int64_t hi = std::min(count, lo + block_size);
    partial[static_cast<std::size_t>(b)] = block_fn(lo, hi);
  });
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

}  // namespace spdelab
