#ifndef STROM_HERMITIAN_HPP
#define STROM_HERMITIAN_HPP

#include "strom/forms.hpp"

namespace strom {

// Positive hermitian metric g_{jk} on the manifold, omega = i g_{jk} dz^j ^ dzbar^k,
// with cached inverse and determinant.
struct HermitianMetric {
  MatrixField g;
  MatrixField ginv;
  ScalarField det;

  static HermitianMetric from(MatrixField g_, bool check_positive = true);
  static HermitianMetric constant(LatticePtr lat, const Eigen::Matrix3cd& m,
                                  bool check_positive = true);

  LatticePtr lat() const { return g.lat; }
  bool is_constant(double tol = 1e-13) const;
  Eigen::Matrix3cd constant_value() const;  // requires is_constant
};

// Holomorphic volume form Omega = f dz^1^dz^2^dz^3 with constant coefficient
// (nowhere zero; f == 1 on the default testbed).
struct HolVolForm {
  cplx f{1.0, 0.0};
};

// omega as a (1,1)-form.
FormField metric_form(const HermitianMetric& m);

// |Omega|_w = sqrt(f fbar / det g) > 0.
ScalarField dilaton(const HermitianMetric& m, const HolVolForm& vol);

// |Omega|_w * w^3/3! as a (3,3)-form (canonical coefficient i |Omega| det g).
TopForm volume_form(const HermitianMetric& m, const HolVolForm& vol);

// |Omega|_w * w^2 as a (2,2)-form.
FormField balanced_form(const HermitianMetric& m, const HolVolForm& vol, Exec exec = Exec::Parallel);

// Chern curvature of a positive matrix metric H (any rank): F = dbar((del H) H^{-1}),
// components F_{jk} = -d_kbar((d_j H) H^{-1}).
MatrixForm metric_curvature(const MatrixField& h);

// Curvature of the Chern connection of the manifold metric, End(T^{1,0})-valued.
inline MatrixForm chern_curvature(const HermitianMetric& m) { return metric_curvature(m.g); }

// The square-root extraction: unique w > 0 with |Omega|_w w^2 = Psi for a real
// positive (2,2)-form Psi (hatted coefficient matrix positive definite pointwise).
// g_{jk} = det(Psi^{pq}) / (f fbar) * (Psi^{-1})_{jk}.
HermitianMetric sqrt_positive_22(const FormField& psi, const HolVolForm& vol,
                                 double positivity_tol = 1e-12, Exec exec = Exec::Parallel);

// Minimal eigenvalue of the hatted coefficient matrix over the lattice
// (positivity margin; negative or zero means Psi has left the positive cone).
std::pair<double, std::size_t> positivity_margin(const FormField& psi);

// The conformally balanced ansatz |Omega|_{w_T} w_T^2 = |Omega|_what what^2 + Theta.
struct BalancedAnsatz {
  FormField theta;
  FormField psi;  // |Omega|_what what^2 + Theta
  HermitianMetric omega_theta;
  ScalarField dilaton_theta;
  double margin = 0.0;  // min eigenvalue of the hatted matrix of psi
};

BalancedAnsatz metric_from_theta(const HermitianMetric& omega_hat, const FormField& theta,
                                 const HolVolForm& vol, double closedness_tol = 1e-8);

}  // namespace strom

#endif
