#include "strom/lattice.hpp"

#include <fftw3.h>

#include <atomic>
#include <cmath>
#include <mutex>
#include <sstream>

namespace strom {

namespace {
std::atomic<int> g_threads{1};
std::mutex g_plan_mutex;  // FFTW planning is not thread-safe
}  // namespace

int thread_count() { return g_threads.load(); }
void set_thread_count(int n) { g_threads.store(n < 1 ? 1 : n); }

Lattice::Lattice(int n, std::array<bool, 6> active, std::array<double, 6> periods)
    : n_(n), active_(active), periods_(periods) {
  if (n < 4 || n % 2 != 0) throw UsageError("lattice: points per axis must be even and >= 4");
  int nactive = 0;
  size_ = 1;
  for (int a = 0; a < 6; ++a) {
    if (periods[a] <= 0) throw UsageError("lattice: periods must be positive");
    extent_[a] = active[a] ? n : 1;
    size_ *= static_cast<std::size_t>(extent_[a]);
    nactive += active[a] ? 1 : 0;
  }
  if (nactive == 0) throw UsageError("lattice: at least one active axis required");

  // One in-place c2c plan per direction over the active axes. Extent-1 axes do not
  // change the memory layout, so the active subgrid is the array itself.
  std::vector<int> dims;
  for (int a = 0; a < 6; ++a)
    if (active_[a]) dims.push_back(n_);
  std::vector<cplx> scratch(size_);
  auto* ptr = reinterpret_cast<fftw_complex*>(scratch.data());
  std::lock_guard<std::mutex> lock(g_plan_mutex);
  plan_fwd_ = fftw_plan_dft(static_cast<int>(dims.size()), dims.data(), ptr, ptr, FFTW_FORWARD,
                            FFTW_ESTIMATE | FFTW_UNALIGNED);
  plan_bwd_ = fftw_plan_dft(static_cast<int>(dims.size()), dims.data(), ptr, ptr, FFTW_BACKWARD,
                            FFTW_ESTIMATE | FFTW_UNALIGNED);
  if (!plan_fwd_ || !plan_bwd_) throw Error("lattice: FFTW plan creation failed");
}

Lattice::~Lattice() {
  std::lock_guard<std::mutex> lock(g_plan_mutex);
  if (plan_fwd_) fftw_destroy_plan(static_cast<fftw_plan>(plan_fwd_));
  if (plan_bwd_) fftw_destroy_plan(static_cast<fftw_plan>(plan_bwd_));
}

LatticePtr Lattice::create(int n, std::array<bool, 6> active, std::array<double, 6> periods) {
  return std::shared_ptr<const Lattice>(new Lattice(n, active, periods));
}

bool Lattice::same_as(const Lattice& o) const {
  if (n_ != o.n_ || active_ != o.active_) return false;
  for (int a = 0; a < 6; ++a)
    if (std::abs(periods_[a] - o.periods_[a]) > 1e-14 * (1.0 + std::abs(periods_[a]))) return false;
  return true;
}

double Lattice::cell_volume() const {
  double v = 1.0;
  for (int a = 0; a < 6; ++a) v *= periods_[a] / extent_[a];
  return v;
}

double Lattice::total_volume() const {
  double v = 1.0;
  for (int a = 0; a < 6; ++a) v *= periods_[a];
  return v;
}

void Lattice::fft_forward(cplx* data) const {
  auto* ptr = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(static_cast<fftw_plan>(plan_fwd_), ptr, ptr);
}

void Lattice::fft_backward(cplx* data) const {
  auto* ptr = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(static_cast<fftw_plan>(plan_bwd_), ptr, ptr);
  const double scale = 1.0 / static_cast<double>(size_);
  for (std::size_t i = 0; i < size_; ++i) data[i] *= scale;
}

std::string Lattice::describe() const {
  std::ostringstream os;
  os << "n=" << n_ << " active=";
  for (int a = 0; a < 6; ++a)
    if (active_[a]) os << kAxisNames[a] << ",";
  return os.str();
}

void check_same_lattice(const LatticePtr& a, const LatticePtr& b, const char* where) {
  if (!a || !b || !a->same_as(*b)) throw UsageError(std::string(where) + ": mismatched lattices");
}

ScalarField& ScalarField::operator+=(const ScalarField& o) {
  check_same_lattice(lat, o.lat, "scalar +=");
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += o.a[i];
  return *this;
}

ScalarField& ScalarField::operator-=(const ScalarField& o) {
  check_same_lattice(lat, o.lat, "scalar -=");
  for (std::size_t i = 0; i < a.size(); ++i) a[i] -= o.a[i];
  return *this;
}

ScalarField& ScalarField::operator*=(cplx s) {
  for (auto& v : a) v *= s;
  return *this;
}

cplx ScalarField::mean() const {
  cplx s = blocked_sum<cplx>(a.size(), [&](std::size_t i) { return a[i]; });
  return s / static_cast<double>(a.size());
}

double ScalarField::max_abs() const {
  double m = 0.0;
  for (const auto& v : a) m = std::max(m, std::abs(v));
  return m;
}

ScalarField operator+(ScalarField x, const ScalarField& y) { return x += y; }
ScalarField operator-(ScalarField x, const ScalarField& y) { return x -= y; }
ScalarField operator*(cplx s, ScalarField x) { return x *= s; }

ScalarField pointwise_mul(const ScalarField& x, const ScalarField& y, Exec exec) {
  check_same_lattice(x.lat, y.lat, "pointwise_mul");
  ScalarField out(x.lat);
  parallel_for(
      x.size(), [&](std::size_t i) { out.a[i] = x.a[i] * y.a[i]; }, exec);
  return out;
}

ScalarField conj(const ScalarField& x) {
  ScalarField out(x.lat);
  for (std::size_t i = 0; i < x.size(); ++i) out.a[i] = std::conj(x.a[i]);
  return out;
}

cplx deriv_symbol_hol(const Lattice& lat, const std::array<int, 6>& bin, int j) {
  const double kx = lat.wavenumber(2 * j, bin[2 * j]);
  const double ky = lat.wavenumber(2 * j + 1, bin[2 * j + 1]);
  // d/dz = (d/dx - i d/dy)/2 acting on e^{i k.x}: (i kx + ky)/2
  return 0.5 * cplx(ky, kx);
}

cplx deriv_symbol_anti(const Lattice& lat, const std::array<int, 6>& bin, int j) {
  const double kx = lat.wavenumber(2 * j, bin[2 * j]);
  const double ky = lat.wavenumber(2 * j + 1, bin[2 * j + 1]);
  // d/dzbar = (d/dx + i d/dy)/2 acting on e^{i k.x}: (i kx - ky)/2
  return 0.5 * cplx(-ky, kx);
}

ScalarField spectral_derivative(const ScalarField& f, int dir, bool antiholomorphic) {
  if (dir < 1 || dir > 3) throw UsageError("spectral_derivative: direction must be in 1..3");
  const Lattice& lat = *f.lat;
  ScalarField out = f;
  lat.fft_forward(out.a.data());
  const int j = dir - 1;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto bin = lat.coords(i);
    const cplx s = antiholomorphic ? deriv_symbol_anti(lat, bin, j) : deriv_symbol_hol(lat, bin, j);
    out.a[i] *= s;
  }
  lat.fft_backward(out.a.data());
  return out;
}

}  // namespace strom
