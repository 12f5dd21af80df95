#include "strom/testbed.hpp"

#include <cmath>

namespace strom {

Testbed Testbed::make(LatticePtr lat, const Eigen::Matrix3cd& g_hat, HolVolForm vol, int rank) {
  if (rank < 1 || rank > 4) throw UsageError("testbed: bundle rank must be in 1..4");
  Testbed tb;
  tb.lat = lat;
  tb.g_hat = 0.5 * (g_hat + g_hat.adjoint());  // enforce exact hermiticity
  tb.vol = vol;
  tb.rank = rank;
  tb.omega_hat = HermitianMetric::constant(lat, tb.g_hat);
  tb.omega_hat_form = metric_form(tb.omega_hat);
  tb.psi_hat = balanced_form(tb.omega_hat, vol);
  tb.vol_hat = volume_form(tb.omega_hat, vol);
  const double detg = tb.g_hat.determinant().real();
  tb.omega_norm_hat = std::sqrt(std::norm(vol.f) / detg);
  tb.vol_density = 8.0 * tb.omega_norm_hat * detg;  // -8i * (i |Omega| det g)
  return tb;
}

cplx Testbed::end_inner(const MatrixField& a, const MatrixField& b) const {
  check_same_shape(a, b, "end_inner");
  const double w = vol_density * lat->cell_volume();
  return w * blocked_sum<cplx>(a.sites(), [&](std::size_t i) {
           return cplx((a.at(i) * b.at(i).adjoint()).trace());
         });
}

double Testbed::end_l2(const MatrixField& a) const {
  return std::sqrt(std::max(0.0, end_inner(a, a).real()));
}

}  // namespace strom
