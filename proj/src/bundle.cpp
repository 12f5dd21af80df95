#include "strom/bundle.hpp"

#include <cmath>

namespace strom {

MatrixField exp_metric(const MatrixField& u, double selfadjoint_tol) {
  const double hdef = hermiticity_defect(u);
  if (hdef > selfadjoint_tol * std::max(1.0, u.max_abs()))
    throw UsageError("exp_metric: u is not self-adjoint (defect " + std::to_string(hdef) + ")");
  return pw_exp_hermitian(u);
}

MatrixField lambda_F(const HermitianMetric& g, const MatrixField& h) {
  check_same_lattice(g.lat(), h.lat, "lambda_F");
  const MatrixField hinv = pw_inverse(h);
  MatrixField out(h.lat, h.r);
  for (int j = 0; j < 3; ++j) {
    const MatrixField aj = pw_product(matrix_derivative(h, j + 1, false), hinv);
    for (int k = 0; k < 3; ++k) {
      const MatrixField d = matrix_derivative(aj, k + 1, true);
      // i Lambda F = - g^{jk} d_kbar A_j, g^{jk} = ginv(k,j) pointwise
      parallel_for(out.sites(), [&](std::size_t i) { out.at(i) -= g.ginv.at(i)(k, j) * d.at(i); });
    }
  }
  return out;
}

MatrixField conjugate_to_reference(const MatrixField& u, const MatrixField& a,
                                   double precondition_tol) {
  check_same_shape(u, a, "conjugate_to_reference");
  // Precondition: A self-adjoint w.r.t. e^u, i.e. A e^u hermitian.
  const MatrixField h = pw_exp_hermitian(u);
  const MatrixField ah = pw_product(a, h);
  const double def = hermiticity_defect(ah);
  if (def > precondition_tol * std::max(1.0, ah.max_abs()))
    throw UsageError("conjugate_to_reference: A is not self-adjoint w.r.t. e^u (defect " +
                     std::to_string(def) + ")");
  const MatrixField em = pw_exp_hermitian(u, -0.5);
  const MatrixField ep = pw_exp_hermitian(u, 0.5);
  return pw_product(pw_product(em, a), ep);
}

MatrixField project_H0(const MatrixField& u) {
  MatrixField out(u.lat, u.r);
  const double rinv = 1.0 / u.r;
  parallel_for(u.sites(), [&](std::size_t i) {
    Eigen::MatrixXcd m = 0.5 * (Eigen::MatrixXcd(u.at(i)) + Eigen::MatrixXcd(u.at(i)).adjoint());
    m -= (m.trace() * rinv) * Eigen::MatrixXcd::Identity(u.r, u.r);
    out.at(i) = m;
  });
  const Eigen::MatrixXcd mu = out.mean();
  parallel_for(u.sites(), [&](std::size_t i) { out.at(i) -= mu; });
  return out;
}

double gauge_defect(const MatrixField& u) {
  MatrixField d = project_H0(u);
  d -= u;
  return d.max_abs();
}

}  // namespace strom
