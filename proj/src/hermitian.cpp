#include "strom/hermitian.hpp"

#include <cmath>

namespace strom {

HermitianMetric HermitianMetric::from(MatrixField g_, bool check_positive) {
  if (g_.r != 3) throw UsageError("HermitianMetric: 3x3 component field required");
  const double hdef = hermiticity_defect(g_);
  if (hdef > 1e-10 * std::max(1.0, g_.max_abs()))
    throw UsageError("HermitianMetric: components are not hermitian (defect " + std::to_string(hdef) + ")");
  if (check_positive) {
    const auto [lo, site] = min_eigenvalue(g_);
    if (lo <= 0.0)
      throw PositivityError("HermitianMetric: not positive definite (min eigenvalue " +
                                std::to_string(lo) + ")",
                            lo, site);
  }
  HermitianMetric m;
  m.ginv = pw_inverse(g_);
  m.det = pw_det(g_);
  m.g = std::move(g_);
  return m;
}

HermitianMetric HermitianMetric::constant(LatticePtr lat, const Eigen::Matrix3cd& m,
                                          bool check_positive) {
  return from(MatrixField::constant(std::move(lat), m), check_positive);
}

bool HermitianMetric::is_constant(double tol) const {
  const Eigen::MatrixXcd m0 = g.at(0);
  for (std::size_t i = 1; i < g.sites(); ++i)
    if ((Eigen::MatrixXcd(g.at(i)) - m0).cwiseAbs().maxCoeff() > tol * std::max(1.0, m0.cwiseAbs().maxCoeff()))
      return false;
  return true;
}

Eigen::Matrix3cd HermitianMetric::constant_value() const {
  if (!is_constant()) throw UsageError("HermitianMetric: field is not constant");
  return Eigen::Matrix3cd(g.at(0));
}

FormField metric_form(const HermitianMetric& m) { return form_from_metric_matrix(m.g); }

ScalarField dilaton(const HermitianMetric& m, const HolVolForm& vol) {
  const double ff = std::norm(vol.f);
  if (ff <= 0.0) throw UsageError("dilaton: holomorphic volume coefficient must be nonzero");
  ScalarField out(m.lat());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double d = m.det.a[i].real();
    if (d <= 0.0) throw PositivityError("dilaton: nonpositive metric determinant", d, i);
    out.a[i] = std::sqrt(ff / d);
  }
  return out;
}

TopForm volume_form(const HermitianMetric& m, const HolVolForm& vol) {
  TopForm out(m.lat(), 3, 3);
  const ScalarField dil = dilaton(m, vol);
  for (std::size_t i = 0; i < dil.size(); ++i)
    out.comp[0].a[i] = cplx(0.0, 1.0) * dil.a[i] * m.det.a[i];
  return out;
}

FormField balanced_form(const HermitianMetric& m, const HolVolForm& vol, Exec exec) {
  const FormField omega = metric_form(m);
  FormField psi = wedge(omega, omega, exec);
  const ScalarField dil = dilaton(m, vol);
  for (auto& c : psi.comp)
    for (std::size_t i = 0; i < c.size(); ++i) c.a[i] *= dil.a[i];
  return psi;
}

MatrixForm metric_curvature(const MatrixField& h) {
  MatrixField hinv = pw_inverse(h);
  MatrixForm f(h.lat, 1, 1, h.r);
  for (int j = 0; j < 3; ++j) {
    const MatrixField aj = pw_product(matrix_derivative(h, j + 1, false), hinv);
    for (int k = 0; k < 3; ++k) {
      MatrixField d = matrix_derivative(aj, k + 1, true);
      d *= cplx(-1.0);
      f.at(j, k) = std::move(d);
    }
  }
  return f;
}

std::pair<double, std::size_t> positivity_margin(const FormField& psi) {
  return min_eigenvalue(hatted_from_22(psi));
}

HermitianMetric sqrt_positive_22(const FormField& psi, const HolVolForm& vol, double positivity_tol,
                                 Exec exec) {
  if (psi.p != 2 || psi.q != 2) throw UsageError("sqrt_positive_22: (2,2)-form required");
  const double rdef = reality_defect(psi);
  if (rdef > 1e-9 * std::max(1.0, psi.max_abs()))
    throw UsageError("sqrt_positive_22: input form is not real (defect " + std::to_string(rdef) + ")");
  const MatrixField P = hatted_from_22(psi);
  const auto [lo, site] = min_eigenvalue(P);
  if (lo <= positivity_tol * std::max(1.0, P.max_abs()))
    throw PositivityError("sqrt_positive_22: (2,2)-form is not positive (worst eigenvalue " +
                              std::to_string(lo) + " at site " + std::to_string(site) + ")",
                          lo, site);
  const double ff = std::norm(vol.f);
  MatrixField g(P.lat, 3);
  parallel_for(
      P.sites(),
      [&](std::size_t i) {
        const Eigen::Matrix3cd pm = P.at(i);
        const cplx detp = pm.determinant();
        const Eigen::Matrix3cd pinv = pm.inverse();
        // g_{jk} = det(P)/(f fbar) (P^{-1})_{kj}; hermitian since P is.
        g.at(i) = (detp / ff) * pinv.transpose();
      },
      exec);
  return HermitianMetric::from(std::move(g), false);
}

BalancedAnsatz metric_from_theta(const HermitianMetric& omega_hat, const FormField& theta,
                                 const HolVolForm& vol, double closedness_tol) {
  check_same_lattice(omega_hat.lat(), theta.lat, "metric_from_theta");
  if (theta.p != 2 || theta.q != 2) throw UsageError("metric_from_theta: Theta must be a (2,2)-form");
  const double cdef = closedness_defect(theta);
  if (cdef > closedness_tol * std::max(1.0, theta.max_abs()))
    throw UsageError("metric_from_theta: Theta is not closed (defect " + std::to_string(cdef) + ")");
  BalancedAnsatz out;
  out.theta = theta;
  out.psi = balanced_form(omega_hat, vol);
  out.psi += theta;
  const auto [lo, site] = positivity_margin(out.psi);
  out.margin = lo;
  if (lo <= 0.0)
    throw PositivityError(
        "metric_from_theta: ansatz left the positive cone (worst hatted eigenvalue " +
            std::to_string(lo) + "); continuation step too large",
        lo, site);
  out.omega_theta = sqrt_positive_22(out.psi, vol);
  out.dilaton_theta = dilaton(out.omega_theta, vol);
  return out;
}

}  // namespace strom
