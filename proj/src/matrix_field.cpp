#include "strom/matrix_field.hpp"

#include <cmath>

namespace strom {

MatrixField MatrixField::constant(LatticePtr l, const Eigen::MatrixXcd& m) {
  if (m.rows() != m.cols()) throw UsageError("MatrixField::constant: square matrix required");
  MatrixField out(std::move(l), static_cast<int>(m.rows()));
  for (std::size_t i = 0; i < out.sites(); ++i) out.at(i) = m;
  return out;
}

MatrixField MatrixField::identity(LatticePtr l, int rank) {
  return constant(std::move(l), Eigen::MatrixXcd::Identity(rank, rank));
}

void check_same_shape(const MatrixField& x, const MatrixField& y, const char* where) {
  check_same_lattice(x.lat, y.lat, where);
  if (x.r != y.r) throw UsageError(std::string(where) + ": rank mismatch");
}

MatrixField& MatrixField::operator+=(const MatrixField& o) {
  check_same_shape(*this, o, "matrix +=");
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += o.a[i];
  return *this;
}

MatrixField& MatrixField::operator-=(const MatrixField& o) {
  check_same_shape(*this, o, "matrix -=");
  for (std::size_t i = 0; i < a.size(); ++i) a[i] -= o.a[i];
  return *this;
}

MatrixField& MatrixField::operator*=(cplx s) {
  for (auto& v : a) v *= s;
  return *this;
}

double MatrixField::max_abs() const {
  double m = 0.0;
  for (const auto& v : a) m = std::max(m, std::abs(v));
  return m;
}

Eigen::MatrixXcd MatrixField::mean() const {
  Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(r, r);
  for (std::size_t i = 0; i < sites(); ++i) acc += at(i);
  return acc / static_cast<double>(sites());
}

MatrixField operator+(MatrixField x, const MatrixField& y) { return x += y; }
MatrixField operator-(MatrixField x, const MatrixField& y) { return x -= y; }
MatrixField operator*(cplx s, MatrixField x) { return x *= s; }

MatrixField pw_product(const MatrixField& x, const MatrixField& y, Exec exec) {
  check_same_shape(x, y, "pw_product");
  MatrixField out(x.lat, x.r);
  parallel_for(
      x.sites(), [&](std::size_t i) { out.at(i) = x.at(i) * y.at(i); }, exec);
  return out;
}

MatrixField pw_adjoint(const MatrixField& x, Exec exec) {
  MatrixField out(x.lat, x.r);
  parallel_for(
      x.sites(), [&](std::size_t i) { out.at(i) = x.at(i).adjoint(); }, exec);
  return out;
}

MatrixField pw_inverse(const MatrixField& x, Exec exec) {
  MatrixField out(x.lat, x.r);
  parallel_for(
      x.sites(),
      [&](std::size_t i) {
        Eigen::MatrixXcd m = x.at(i);
        Eigen::FullPivLU<Eigen::MatrixXcd> lu(m);
        if (!lu.isInvertible()) throw NumericalError("pw_inverse: singular matrix on the lattice");
        out.at(i) = lu.inverse();
      },
      exec);
  return out;
}

ScalarField pw_det(const MatrixField& x, Exec exec) {
  ScalarField out(x.lat);
  parallel_for(
      x.sites(), [&](std::size_t i) { out.a[i] = Eigen::MatrixXcd(x.at(i)).determinant(); }, exec);
  return out;
}

ScalarField pw_trace(const MatrixField& x, Exec exec) {
  ScalarField out(x.lat);
  parallel_for(
      x.sites(), [&](std::size_t i) { out.a[i] = x.at(i).trace(); }, exec);
  return out;
}

MatrixField pw_scale(const MatrixField& x, const ScalarField& s, Exec exec) {
  check_same_lattice(x.lat, s.lat, "pw_scale");
  MatrixField out(x.lat, x.r);
  parallel_for(
      x.sites(), [&](std::size_t i) { out.at(i) = s.a[i] * x.at(i); }, exec);
  return out;
}

namespace {
// Hermitian symmetrization, eigendecomposition, function of eigenvalues.
template <class Fn>
MatrixField pw_hermitian_calculus(const MatrixField& x, Fn&& fn, Exec exec, const char* where) {
  MatrixField out(x.lat, x.r);
  parallel_for(
      x.sites(),
      [&](std::size_t i) {
        Eigen::MatrixXcd m = x.at(i);
        m = 0.5 * (m + m.adjoint()).eval();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(m);
        if (eig.info() != Eigen::Success) throw NumericalError(std::string(where) + ": eigensolver failed");
        Eigen::VectorXd lam = eig.eigenvalues();
        Eigen::VectorXcd flam(lam.size());
        for (int k = 0; k < lam.size(); ++k) flam[k] = fn(lam[k]);
        out.at(i) = eig.eigenvectors() * flam.asDiagonal() * eig.eigenvectors().adjoint();
      },
      exec);
  return out;
}
}  // namespace

MatrixField pw_exp_hermitian(const MatrixField& x, double factor, Exec exec) {
  return pw_hermitian_calculus(
      x, [factor](double l) { return std::exp(factor * l); }, exec, "pw_exp_hermitian");
}

MatrixField pw_sqrt_hermitian_positive(const MatrixField& x, Exec exec) {
  return pw_hermitian_calculus(
      x,
      [](double l) {
        if (l <= 0) throw PositivityError("pw_sqrt_hermitian_positive: nonpositive eigenvalue", l, 0);
        return std::sqrt(l);
      },
      exec, "pw_sqrt_hermitian_positive");
}

double hermiticity_defect(const MatrixField& x) {
  double m = 0.0;
  for (std::size_t i = 0; i < x.sites(); ++i) {
    Eigen::MatrixXcd d = x.at(i) - x.at(i).adjoint();
    m = std::max(m, d.cwiseAbs().maxCoeff());
  }
  return m;
}

double traceless_defect(const MatrixField& x) {
  double m = 0.0;
  for (std::size_t i = 0; i < x.sites(); ++i) m = std::max(m, std::abs(cplx(x.at(i).trace())));
  return m;
}

MatrixField matrix_derivative(const MatrixField& x, int dir, bool antiholomorphic) {
  if (dir < 1 || dir > 3) throw UsageError("matrix_derivative: direction must be in 1..3");
  const Lattice& lat = *x.lat;
  const int j = dir - 1;
  const std::size_t block = static_cast<std::size_t>(x.r) * x.r;
  MatrixField out = x;
  // One FFT per matrix entry; entries are strided, so gather/scatter through a buffer.
  std::vector<cplx> buf(lat.size());
  for (std::size_t e = 0; e < block; ++e) {
    for (std::size_t i = 0; i < lat.size(); ++i) buf[i] = x.a[i * block + e];
    lat.fft_forward(buf.data());
    for (std::size_t i = 0; i < lat.size(); ++i) {
      const auto bin = lat.coords(i);
      buf[i] *= antiholomorphic ? deriv_symbol_anti(lat, bin, j) : deriv_symbol_hol(lat, bin, j);
    }
    lat.fft_backward(buf.data());
    for (std::size_t i = 0; i < lat.size(); ++i) out.a[i * block + e] = buf[i];
  }
  return out;
}

std::pair<double, std::size_t> min_eigenvalue(const MatrixField& x) {
  double worst = std::numeric_limits<double>::infinity();
  std::size_t site = 0;
  for (std::size_t i = 0; i < x.sites(); ++i) {
    Eigen::MatrixXcd m = x.at(i);
    m = 0.5 * (m + m.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(m, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    if (lo < worst) {
      worst = lo;
      site = i;
    }
  }
  return {worst, site};
}

}  // namespace strom
