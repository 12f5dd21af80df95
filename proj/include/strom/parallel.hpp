#ifndef STROM_PARALLEL_HPP
#define STROM_PARALLEL_HPP

#include <complex>
#include <cstddef>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace strom {

// Execution policy for data-parallel kernels. Serial is the reference path used
// by correctness tests and the benchmark baseline.
enum class Exec { Serial, Parallel };

int thread_count();
void set_thread_count(int n);  // clamped to >= 1

// Threshold below which parallel dispatch is not worth the fork.
inline constexpr std::size_t kParallelGrain = 256;

template <class Body>
void serial_for(std::size_t n, Body&& body) {
  for (std::size_t i = 0; i < n; ++i) body(i);
}

template <class Body>
void parallel_for(std::size_t n, Body&& body, Exec exec = Exec::Parallel) {
#ifdef _OPENMP
  if (exec == Exec::Parallel && thread_count() > 1 && n >= kParallelGrain) {
    const long long nn = static_cast<long long>(n);
#pragma omp parallel for schedule(static) num_threads(thread_count())
    for (long long i = 0; i < nn; ++i) body(static_cast<std::size_t>(i));
    return;
  }
#endif
  (void)exec;
  serial_for(n, body);
}

// Deterministic blocked reduction: the summation order is fixed by the block
// decomposition, independent of the thread count, so reports are bit-reproducible.
template <class T, class Term>
T blocked_sum(std::size_t n, Term&& term, Exec exec = Exec::Parallel) {
  constexpr std::size_t kBlock = 1024;
  const std::size_t nblocks = (n + kBlock - 1) / kBlock;
  if (nblocks <= 1) {
    T acc{};
    for (std::size_t i = 0; i < n; ++i) acc += term(i);
    return acc;
  }
  std::vector<T> partial(nblocks, T{});
  parallel_for(
      nblocks,
      [&](std::size_t b) {
        const std::size_t lo = b * kBlock;
        const std::size_t hi = lo + kBlock < n ? lo + kBlock : n;
        T acc{};
        for (std::size_t i = lo; i < hi; ++i) acc += term(i);
        partial[b] = acc;
      },
      exec);
  T acc{};
  for (std::size_t b = 0; b < nblocks; ++b) acc += partial[b];
  return acc;
}

}  // namespace strom

#endif
