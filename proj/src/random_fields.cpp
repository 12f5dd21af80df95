#include "strom/random_fields.hpp"

#include <cmath>

namespace strom {

int band_limit_linear(const Lattice& lat) { return std::max(1, lat.n() / 4); }

int band_limit_product(const Lattice& lat) {
  return std::max(1, std::min(lat.n() / 4, (lat.n() / 2 - 1) / 2));
}

ScalarField random_scalar(const LatticePtr& lat, int kmax, Rng& rng, bool real_valued,
                          bool mean_zero) {
  if (kmax >= lat->n() / 2) throw UsageError("random_scalar: band limit reaches Nyquist");
  ScalarField f(lat);
  std::normal_distribution<double> gauss(0.0, 1.0);
  // Fill the spectrum deterministically in flat-bin order.
  for (std::size_t i = 0; i < f.size(); ++i) {
    const auto bin = lat->coords(i);
    bool inband = true;
    bool zero_mode = true;
    for (int a = 0; a < 6; ++a) {
      const int m = lat->mode_number(a, bin[a]);
      if (std::abs(m) > kmax) inband = false;
      if (m != 0) zero_mode = false;
    }
    if (!inband || (mean_zero && zero_mode)) continue;
    f.a[i] = cplx(gauss(rng), gauss(rng));
  }
  if (real_valued) {
    // f(-k) = conj(f(k))
    ScalarField sym(lat);
    for (std::size_t i = 0; i < f.size(); ++i) {
      auto bin = lat->coords(i);
      for (int a = 0; a < 6; ++a) bin[a] = bin[a] == 0 ? 0 : lat->extent()[a] - bin[a];
      sym.a[i] = 0.5 * (f.a[i] + std::conj(f.a[lat->index(bin)]));
    }
    f = std::move(sym);
  }
  lat->fft_backward(f.a.data());
  const double m = f.max_abs();
  if (m > 0) f *= cplx(1.0 / m);
  return f;
}

FormField random_form(const LatticePtr& lat, int p, int q, int kmax, Rng& rng, bool real_valued,
                      bool mean_zero) {
  FormField out(lat, p, q);
  for (auto& c : out.comp) c = random_scalar(lat, kmax, rng, false, mean_zero);
  if (real_valued) {
    if (p != q) throw UsageError("random_form: real form requires p == q");
    out = real_form(out);
  }
  return out;
}

FormField random_real_11(const LatticePtr& lat, int kmax, Rng& rng, bool mean_zero) {
  MatrixField m(lat, 3);
  for (int j = 0; j < 3; ++j) {
    ScalarField d = random_scalar(lat, kmax, rng, true, mean_zero);
    for (std::size_t i = 0; i < d.size(); ++i) m.at(i)(j, j) = d.a[i].real();
  }
  for (int j = 0; j < 3; ++j)
    for (int k = j + 1; k < 3; ++k) {
      ScalarField d = random_scalar(lat, kmax, rng, false, mean_zero);
      for (std::size_t i = 0; i < d.size(); ++i) {
        m.at(i)(j, k) = d.a[i];
        m.at(i)(k, j) = std::conj(d.a[i]);
      }
    }
  return form_from_metric_matrix(m);
}

FormField random_exact_22(const LatticePtr& lat, int kmax, Rng& rng) {
  return i_del_dbar(random_real_11(lat, kmax, rng, true));
}

namespace {
// Basis of hermitian traceless rank x rank matrices.
std::vector<Eigen::MatrixXcd> hermitian_traceless_basis(int rank) {
  std::vector<Eigen::MatrixXcd> basis;
  for (int a = 0; a < rank; ++a)
    for (int b = a + 1; b < rank; ++b) {
      Eigen::MatrixXcd s = Eigen::MatrixXcd::Zero(rank, rank);
      s(a, b) = s(b, a) = 1.0;
      basis.push_back(s);
      Eigen::MatrixXcd t = Eigen::MatrixXcd::Zero(rank, rank);
      t(a, b) = cplx(0.0, -1.0);
      t(b, a) = cplx(0.0, 1.0);
      basis.push_back(t);
    }
  for (int a = 0; a + 1 < rank; ++a) {
    Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(rank, rank);
    for (int b = 0; b <= a; ++b) d(b, b) = 1.0;
    d(a + 1, a + 1) = -(a + 1.0);
    basis.push_back(d / d.norm());
  }
  return basis;
}
}  // namespace

MatrixField random_hermitian(const LatticePtr& lat, int rank, int kmax, Rng& rng, bool traceless,
                             bool mean_zero) {
  MatrixField out(lat, rank);
  for (const auto& b : hermitian_traceless_basis(rank)) {
    ScalarField c = random_scalar(lat, kmax, rng, true, mean_zero);
    for (std::size_t i = 0; i < out.sites(); ++i) out.at(i) += c.a[i].real() * b;
  }
  if (!traceless) {
    ScalarField c = random_scalar(lat, kmax, rng, true, mean_zero);
    for (std::size_t i = 0; i < out.sites(); ++i)
      out.at(i) += c.a[i].real() * Eigen::MatrixXcd::Identity(rank, rank);
  }
  const double m = out.max_abs();
  if (m > 0) out *= cplx(1.0 / m);
  return out;
}

MatrixField random_positive_matrix(const LatticePtr& lat, int rank, int kmax, Rng& rng,
                                   double amplitude, const Eigen::MatrixXcd& base) {
  MatrixField u = random_hermitian(lat, rank, kmax, rng, false, false);
  u *= cplx(amplitude);
  const MatrixField eh = pw_exp_hermitian(u, 0.5);
  MatrixField out(lat, rank);
  for (std::size_t i = 0; i < out.sites(); ++i) out.at(i) = eh.at(i) * base * eh.at(i);
  return out;
}

Eigen::Matrix3cd random_constant_positive(Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::Matrix3cd a;
  for (int j = 0; j < 3; ++j)
    for (int k = 0; k < 3; ++k) a(j, k) = cplx(gauss(rng), gauss(rng));
  Eigen::Matrix3cd g = a * a.adjoint() + 0.3 * Eigen::Matrix3cd::Identity();
  return 0.5 * (g + g.adjoint());
}

}  // namespace strom
