#ifndef STROM_LINEARIZED_HPP
#define STROM_LINEARIZED_HPP

#include "strom/testbed.hpp"

namespace strom {

// Linearization blocks of the system map at the origin:
//   D2F|_0 = [[L1, A], [0, L2]]
// with L1 h = -ghat^{jk} d_kbar grad_j h (x) |Omega| what^3/3!,
//      A(Td) = Lambda_what Td ^ what ^ i F_hat  (identically zero on the honest testbed),
//      L2 Td = -(1/(2|Omega|)) Laplacian_del Td.

EndSixForm apply_L1(const Testbed& tb, const MatrixField& h, double domain_tol = 1e-7);

// A-block with an injected curvature fixture iF_hat (unit-test hook; the honest
// testbed has F_hat = 0 so A vanishes there).
EndSixForm apply_A(const Testbed& tb, const FormField& theta_dot, const MatrixForm& i_f_hat);

FormField apply_L2(const Testbed& tb, const FormField& theta_dot, double domain_tol = 1e-8);

// Per-mode direct solves on the gauge-fixed spaces (exact on the flat testbed).
// Components outside the range (constant modes, zeroed-symbol bins) larger than
// range_tol * scale raise RangeError; below it they are projected out. verify_tol
// gates the a-posteriori residual of the solve against the range part of rhs.
// Preconditioner call sites relax both (second-order kernel dust is expected there).
MatrixField solve_L1(const Testbed& tb, const EndSixForm& rhs, double range_tol = 1e-6,
                     double verify_tol = 1e-9);
FormField solve_L2(const Testbed& tb, const FormField& rhs, double range_tol = 1e-6,
                   double verify_tol = 1e-9);

// Forward block map and its explicit inverse
//   (D2F|_0)^{-1} = [[L1^{-1}, -L1^{-1} A L2^{-1}], [0, L2^{-1}]].
std::pair<EndSixForm, FormField> apply_block_forward(const Testbed& tb, const MatrixField& u_dot,
                                                     const FormField& theta_dot,
                                                     const MatrixForm* i_f_hat = nullptr);
std::pair<MatrixField, FormField> apply_block_inverse(const Testbed& tb, const EndSixForm& r1,
                                                      const FormField& r2,
                                                      const MatrixForm* i_f_hat = nullptr);

// First variation of sqrt_positive_22 at a general base metric w along dTheta:
// (dg)_{jk} = -(1/(2|Omega|_w)) g^{sr} (dTheta)_{srjk}.
MatrixField variation_metric(const HermitianMetric& omega, const HolVolForm& vol,
                             const FormField& d_theta);

// The two routes for the variation of i del dbar w at the flat base point:
//   route 1: i del dbar[(1/(2|Omega|)) Lambda_what dTheta]
//   route 2: -(1/(2|Omega|)) Laplacian_del dTheta   (Kahler identity, needs d dTheta = 0)
struct VariationRoutes {
  FormField direct;   // route 1
  FormField kaehler;  // route 2
  double mismatch;    // max-norm difference
};
VariationRoutes variation_ddbar_omega(const Testbed& tb, const FormField& d_theta,
                                      double closedness_tol = 1e-8);

// Minimal-norm real beta with i del dbar beta = theta (per-mode pseudo-inverse).
FormField iddbar_pullback(const Testbed& tb, const FormField& theta);

// Synthetic closed Hermitian-Yang-Mills curvature fixture (constant primitive
// (1,1)-forms tensored with traceless hermitian matrices); used only by unit tests
// of A and the off-diagonal inverse, never in continuation runs.
MatrixForm synthetic_curvature_fixture(const Testbed& tb, int kmax, std::uint64_t seed);

// Measured constant between the displayed A-block and the Gateaux derivative of the
// volume-normalized first component along Theta with the curvature frozen at the
// fixture (reported by the `linearize` subcommand; the analytic value is 1/2).
double measure_A_gateaux_factor(const Testbed& tb, const MatrixForm& i_f_hat, std::uint64_t seed);

// Dense assembly of the forward block operator on an orthonormalized basis of the
// gauge-fixed space (reduced lattices; oracle for the block inverse and the
// `linearize` dump).
struct DenseBlockOperator {
  std::vector<MatrixField> u_basis;
  std::vector<FormField> theta_basis;
  Eigen::MatrixXd op;  // real matrix in the Re-L2 orthonormal basis
  int nu() const { return static_cast<int>(u_basis.size()); }
  int ntheta() const { return static_cast<int>(theta_basis.size()); }

  Eigen::VectorXd project(const Testbed& tb, const MatrixField& h, const FormField& th) const;
  std::pair<MatrixField, FormField> expand(const Testbed& tb, const Eigen::VectorXd& v) const;
};
DenseBlockOperator assemble_dense_block_operator(const Testbed& tb, const MatrixForm* i_f_hat);

}  // namespace strom

#endif
