#ifndef STROM_MATRIX_FIELD_HPP
#define STROM_MATRIX_FIELD_HPP

#include <Eigen/Dense>

#include "strom/lattice.hpp"

namespace strom {

using MatC = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<MatC>;
using CMapMat = Eigen::Map<const MatC>;

// r x r complex matrix per lattice site (row-major per site). Used for bundle
// metrics H_{ab}, endomorphism fields u, and metric component fields g_{jk}.
struct MatrixField {
  LatticePtr lat;
  int r = 0;
  std::vector<cplx> a;  // size() * r * r

  MatrixField() = default;
  MatrixField(LatticePtr l, int rank)
      : lat(std::move(l)), r(rank), a(lat->size() * rank * rank, cplx(0.0)) {}

  std::size_t sites() const { return lat->size(); }
  MapMat at(std::size_t i) { return MapMat(a.data() + i * r * r, r, r); }
  CMapMat at(std::size_t i) const { return CMapMat(a.data() + i * r * r, r, r); }

  static MatrixField constant(LatticePtr l, const Eigen::MatrixXcd& m);
  static MatrixField identity(LatticePtr l, int rank);

  MatrixField& operator+=(const MatrixField& o);
  MatrixField& operator-=(const MatrixField& o);
  MatrixField& operator*=(cplx s);
  double max_abs() const;
  Eigen::MatrixXcd mean() const;
};

MatrixField operator+(MatrixField x, const MatrixField& y);
MatrixField operator-(MatrixField x, const MatrixField& y);
MatrixField operator*(cplx s, MatrixField x);

void check_same_shape(const MatrixField& x, const MatrixField& y, const char* where);

// Pointwise kernels. All are data-parallel over sites and accept an execution policy.
MatrixField pw_product(const MatrixField& x, const MatrixField& y, Exec exec = Exec::Parallel);
MatrixField pw_adjoint(const MatrixField& x, Exec exec = Exec::Parallel);         // conjugate transpose
MatrixField pw_inverse(const MatrixField& x, Exec exec = Exec::Parallel);
ScalarField pw_det(const MatrixField& x, Exec exec = Exec::Parallel);
ScalarField pw_trace(const MatrixField& x, Exec exec = Exec::Parallel);
MatrixField pw_scale(const MatrixField& x, const ScalarField& s, Exec exec = Exec::Parallel);

// Hermitian functional calculus via pointwise eigendecomposition (input must be
// hermitian to tolerance; enforced by symmetrization of the eigen input).
MatrixField pw_exp_hermitian(const MatrixField& x, double factor = 1.0, Exec exec = Exec::Parallel);
MatrixField pw_sqrt_hermitian_positive(const MatrixField& x, Exec exec = Exec::Parallel);

double hermiticity_defect(const MatrixField& x);  // max |x - x^H|
double traceless_defect(const MatrixField& x);

// Spectral derivative applied entrywise.
MatrixField matrix_derivative(const MatrixField& x, int dir, bool antiholomorphic);

// Worst (lowest) eigenvalue over all sites of a hermitian matrix field, with site.
std::pair<double, std::size_t> min_eigenvalue(const MatrixField& x);

}  // namespace strom

#endif
