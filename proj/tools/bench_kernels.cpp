// Timing comparison of the serial reference path against the OpenMP kernels for the
// data-parallel hot spots: wedge accumulation, pointwise hermitian exponential,
// square-root extraction, and the deterministic blocked reduction.
#include <chrono>
#include <cstdio>

#include "strom/hermitian.hpp"
#include "strom/random_fields.hpp"

using namespace strom;

namespace {

template <class Fn>
double time_ms(Fn&& fn, int reps) {
  // warm up once, then best of reps
  fn();
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  return best;
}

void report(const char* name, double serial_ms, double parallel_ms) {
  std::printf("%-28s serial %9.3f ms   omp %9.3f ms   speedup %.2fx\n", name, serial_ms,
              parallel_ms, serial_ms / parallel_ms);
}

}  // namespace

int main(int argc, char** argv) {
  int n = 12;
  int threads = 2;
  if (argc > 1) n = std::atoi(argv[1]);
  if (argc > 2) threads = std::atoi(argv[2]);
  set_thread_count(threads);

  const LatticePtr lat = Lattice::create(n, {true, true, true, true, false, false});
  Rng rng(0);
  std::printf("lattice: n=%d, 4 active axes, %zu sites, %d threads\n", n, lat->size(), threads);

  const FormField a = random_form(lat, 1, 1, band_limit_linear(*lat), rng);
  const FormField b = random_form(lat, 1, 1, band_limit_linear(*lat), rng);
  report("wedge (1,1)^(1,1)", time_ms([&] { wedge(a, b, Exec::Serial); }, 5),
         time_ms([&] { wedge(a, b, Exec::Parallel); }, 5));

  const FormField c = random_form(lat, 2, 2, band_limit_linear(*lat), rng);
  report("wedge (1,1)^(2,2)", time_ms([&] { wedge(a, c, Exec::Serial); }, 5),
         time_ms([&] { wedge(a, c, Exec::Parallel); }, 5));

  MatrixField u = random_hermitian(lat, 3, band_limit_linear(*lat), rng, true, true);
  report("hermitian exp (3x3)", time_ms([&] { pw_exp_hermitian(u, 1.0, Exec::Serial); }, 5),
         time_ms([&] { pw_exp_hermitian(u, 1.0, Exec::Parallel); }, 5));

  const MatrixField gm = random_positive_matrix(lat, 3, band_limit_linear(*lat), rng, 0.2,
                                                Eigen::Matrix3cd::Identity());
  const HermitianMetric metric = HermitianMetric::from(gm);
  const HolVolForm vol{};
  const FormField psi = balanced_form(metric, vol);
  report("sqrt_positive_22", time_ms([&] { sqrt_positive_22(psi, vol, 1e-12, Exec::Serial); }, 5),
         time_ms([&] { sqrt_positive_22(psi, vol, 1e-12, Exec::Parallel); }, 5));

  report("blocked reduction",
         time_ms([&] { blocked_sum<cplx>(lat->size(), [&](std::size_t i) { return a.comp[0].a[i]; },
                                         Exec::Serial); },
                 20),
         time_ms([&] { blocked_sum<cplx>(lat->size(), [&](std::size_t i) { return a.comp[0].a[i]; },
                                         Exec::Parallel); },
                 20));
  return 0;
}
