#ifndef STROM_LATTICE_HPP
#define STROM_LATTICE_HPP

#include <array>
#include <complex>
#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "strom/error.hpp"
#include "strom/parallel.hpp"

namespace strom {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kTwoPi = 2.0 * kPi;

// Real coordinate axes of the 6-torus, paired into complex coordinates
// z^j = x^j + i y^j (axes 2j and 2j+1, zero-based j = 0,1,2).
inline constexpr std::array<const char*, 6> kAxisNames = {"x1", "y1", "x2", "y2", "x3", "y3"};

class Lattice;
using LatticePtr = std::shared_ptr<const Lattice>;

// Periodic grid on the real 6-torus. Axes not in the active set carry a single
// point: fields are constant along them and every Fourier symbol there is zero.
class Lattice : public std::enable_shared_from_this<Lattice> {
 public:
  static LatticePtr create(int n, std::array<bool, 6> active,
                           std::array<double, 6> periods = default_periods());
  static std::array<double, 6> default_periods() {
    return {kTwoPi, kTwoPi, kTwoPi, kTwoPi, kTwoPi, kTwoPi};
  }
  ~Lattice();

  Lattice(const Lattice&) = delete;
  Lattice& operator=(const Lattice&) = delete;

  int n() const { return n_; }
  const std::array<bool, 6>& active() const { return active_; }
  const std::array<double, 6>& periods() const { return periods_; }
  const std::array<int, 6>& extent() const { return extent_; }
  std::size_t size() const { return size_; }

  bool same_as(const Lattice& other) const;

  std::size_t index(const std::array<int, 6>& idx) const {
    std::size_t flat = 0;
    for (int a = 0; a < 6; ++a) flat = flat * extent_[a] + static_cast<std::size_t>(idx[a]);
    return flat;
  }
  std::array<int, 6> coords(std::size_t flat) const {
    std::array<int, 6> idx{};
    for (int a = 5; a >= 0; --a) {
      idx[a] = static_cast<int>(flat % extent_[a]);
      flat /= extent_[a];
    }
    return idx;
  }
  // Shift a flat index by an integer lattice vector (periodic wrap).
  std::size_t shifted_index(std::size_t flat, const std::array<int, 6>& shift) const {
    auto idx = coords(flat);
    for (int a = 0; a < 6; ++a) idx[a] = ((idx[a] + shift[a]) % extent_[a] + extent_[a]) % extent_[a];
    return index(idx);
  }

  double axis_coord(int axis, int i) const { return periods_[axis] * i / extent_[axis]; }
  // Signed FFT mode number for bin i on `axis` (in [-n/2, n/2) for active axes, 0 otherwise).
  int mode_number(int axis, int i) const {
    if (!active_[axis]) return 0;
    return i <= n_ / 2 - 1 ? i : i - n_;
  }
  // Angular wavenumber 2*pi*m/P for bin i; Nyquist bins are mapped to zero so that
  // first-derivative symbols stay odd.
  double wavenumber(int axis, int i) const {
    const int m = mode_number(axis, i);
    if (2 * m == -n_) return 0.0;
    return kTwoPi * m / periods_[axis];
  }

  double cell_volume() const;   // product over all axes of period/extent
  double total_volume() const;  // product of all periods

  // In-place unnormalized forward / normalized backward DFT over the active axes.
  // Thread-safe for distinct arrays.
  void fft_forward(cplx* data) const;
  void fft_backward(cplx* data) const;

  std::string describe() const;

 private:
  Lattice(int n, std::array<bool, 6> active, std::array<double, 6> periods);

  int n_;
  std::array<bool, 6> active_;
  std::array<double, 6> periods_;
  std::array<int, 6> extent_;
  std::size_t size_;
  void* plan_fwd_ = nullptr;  // fftw_plan
  void* plan_bwd_ = nullptr;
};

// Complex scalar function on the lattice.
struct ScalarField {
  LatticePtr lat;
  std::vector<cplx> a;

  ScalarField() = default;
  explicit ScalarField(LatticePtr l) : lat(std::move(l)), a(lat->size(), cplx(0.0)) {}

  std::size_t size() const { return a.size(); }
  cplx& operator[](std::size_t i) { return a[i]; }
  const cplx& operator[](std::size_t i) const { return a[i]; }

  ScalarField& operator+=(const ScalarField& o);
  ScalarField& operator-=(const ScalarField& o);
  ScalarField& operator*=(cplx s);

  cplx mean() const;
  double max_abs() const;
};

ScalarField operator+(ScalarField x, const ScalarField& y);
ScalarField operator-(ScalarField x, const ScalarField& y);
ScalarField operator*(cplx s, ScalarField x);
ScalarField pointwise_mul(const ScalarField& x, const ScalarField& y, Exec exec = Exec::Parallel);
ScalarField conj(const ScalarField& x);

void check_same_lattice(const LatticePtr& a, const LatticePtr& b, const char* where);

// d/dz^dir or d/dzbar^dir (dir in 1..3) by FFT, exact symbol multiplication, inverse FFT.
ScalarField spectral_derivative(const ScalarField& f, int dir, bool antiholomorphic);

// Holomorphic/antiholomorphic first-derivative symbols at one mode bin.
cplx deriv_symbol_hol(const Lattice& lat, const std::array<int, 6>& bin, int j /*0..2*/);
cplx deriv_symbol_anti(const Lattice& lat, const std::array<int, 6>& bin, int j /*0..2*/);

}  // namespace strom

#endif
