#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace conelab {

// All parallel kernels in this library follow the same discipline: work items
// are independent, every item writes only to its own preassigned slot, and
// reductions run serially over fixed-size blocks. Results are therefore
// bit-identical for any thread count, and each parallel kernel has a serial
// twin used as the reference implementation in tests and benchmarks.

inline void set_jobs(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

inline int current_jobs() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

template <class F>
void parallel_for(std::size_t n, F&& f) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    f(static_cast<std::size_t>(i));
  }
}

template <class F>
void serial_for(std::size_t n, F&& f) {
  for (std::size_t i = 0; i < n; ++i) f(i);
}

struct ArgMin {
  double value;
  std::size_t index;
};

inline constexpr std::size_t kBlockSize = 1 << 16;

// Blocked argmin with lowest-index tie-break. `value(i)` must be a pure
// function of i. The blocked reduction gives the same answer as the serial
// scan for every thread count.
template <class ValueFn>
ArgMin blocked_argmin_parallel(std::size_t n, ValueFn&& value) {
  const std::size_t nblocks = (n + kBlockSize - 1) / kBlockSize;
  std::vector<ArgMin> slots(nblocks, ArgMin{0.0, n});
  parallel_for(nblocks, [&](std::size_t b) {
    const std::size_t lo = b * kBlockSize;
    const std::size_t hi = std::min(n, lo + kBlockSize);
    ArgMin best{value(lo), lo};
    for (std::size_t i = lo + 1; i < hi; ++i) {
      const double v = value(i);
      if (v < best.value) best = ArgMin{v, i};
    }
    slots[b] = best;
  });
  ArgMin best = slots[0];
  for (std::size_t b = 1; b < nblocks; ++b) {
    if (slots[b].value < best.value) best = slots[b];
  }
  return best;
}

template <class ValueFn>
ArgMin blocked_argmin_serial(std::size_t n, ValueFn&& value) {
  ArgMin best{value(0), 0};
  for (std::size_t i = 1; i < n; ++i) {
    const double v = value(i);
    if (v < best.value) best = ArgMin{v, i};
  }
  return best;
}

// Collects indices with pred(i) true, in ascending index order regardless of
// thread count (per-block gather, blocks concatenated in order).
template <class Pred>
std::vector<std::size_t> collect_indices_parallel(std::size_t n, Pred&& pred) {
  const std::size_t nblocks = (n + kBlockSize - 1) / kBlockSize;
  std::vector<std::vector<std::size_t>> slots(nblocks);
  parallel_for(nblocks, [&](std::size_t b) {
    const std::size_t lo = b * kBlockSize;
    const std::size_t hi = std::min(n, lo + kBlockSize);
    for (std::size_t i = lo; i < hi; ++i) {
      if (pred(i)) slots[b].push_back(i);
    }
  });
  std::vector<std::size_t> out;
  for (auto& s : slots) out.insert(out.end(), s.begin(), s.end());
  return out;
}

template <class Pred>
std::vector<std::size_t> collect_indices_serial(std::size_t n, Pred&& pred) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (pred(i)) out.push_back(i);
  }
  return out;
}

}  // namespace conelab
