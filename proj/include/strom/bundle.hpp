#ifndef STROM_BUNDLE_HPP
#define STROM_BUNDLE_HPP

#include "strom/hermitian.hpp"

namespace strom {

// Endomorphism-valued fields on the trivial rank-r bundle with reference metric
// H_hat = identity. The gauge-fixed deformation space is
//   { u : u^H = u, Tr u = 0 pointwise, lattice mean of u = 0 }.

// H = e^u * H_hat via pointwise hermitian matrix exponential. u must be self-adjoint.
MatrixField exp_metric(const MatrixField& u, double selfadjoint_tol = 1e-9);

// Curvature of the Chern connection of H: F = dbar((del H) H^{-1}).
inline MatrixForm bundle_curvature(const MatrixField& h) { return metric_curvature(h); }

// i Lambda_w F_H = -g^{jk} d_kbar((d_j H) H^{-1})  (pointwise metric allowed).
MatrixField lambda_F(const HermitianMetric& g, const MatrixField& h);

// e^{-u/2} A e^{u/2}: restores self-adjointness with respect to the reference metric.
// Precondition: A is self-adjoint with respect to e^u (i.e. A e^u is hermitian).
MatrixField conjugate_to_reference(const MatrixField& u, const MatrixField& a,
                                   double precondition_tol = 1e-8);

// Orthogonal projection onto the gauge-fixed space: hermitian part, pointwise
// trace removal, constant Fourier mode removal.
MatrixField project_H0(const MatrixField& u);
double gauge_defect(const MatrixField& u);  // max |u - project_H0(u)|

// An element h (x) |Omega|_what what^3/3! of Omega^6(End E): the component of the
// system map valued in V. The volume factor is the testbed's canonical weight.
struct EndSixForm {
  MatrixField h;
};

}  // namespace strom

#endif
