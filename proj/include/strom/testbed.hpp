#ifndef STROM_TESTBED_HPP
#define STROM_TESTBED_HPP

#include "strom/bundle.hpp"

namespace strom {

// Flat reference data for the deformation problem: Kahler Ricci-flat what with
// constant components, trivial bundle with H_hat = identity (already
// Hermitian-Yang-Mills, F_hat = 0), and constant holomorphic volume coefficient.
struct Testbed {
  LatticePtr lat;
  Eigen::Matrix3cd g_hat;  // constant positive hermitian
  HolVolForm vol;
  int rank = 2;  // bundle rank (1..4); tangent bundle rank is 3

  HermitianMetric omega_hat;    // constant field version of g_hat
  FormField omega_hat_form;     // (1,1)
  FormField psi_hat;            // |Omega|_what what^2
  TopForm vol_hat;              // |Omega|_what what^3/3!
  double omega_norm_hat = 1.0;  // |Omega|_what (constant)
  double vol_density = 0.0;     // density of vol_hat w.r.t. the flat coordinate volume

  static Testbed make(LatticePtr lat, const Eigen::Matrix3cd& g_hat, HolVolForm vol, int rank);

  // L2 pairing of End fields with weight vol_hat: int tr(a b^H) dens(vol_hat).
  cplx end_inner(const MatrixField& a, const MatrixField& b) const;
  double end_l2(const MatrixField& a) const;
  cplx end6_inner(const EndSixForm& a, const EndSixForm& b) const { return end_inner(a.h, b.h); }
  double end6_l2(const EndSixForm& a) const { return end_l2(a.h); }

  // L2 pairing of scalar forms with metric g_hat and weight vol_hat.
  cplx form_inner(const FormField& a, const FormField& b) const {
    return l2_inner(a, b, g_hat, vol_hat);
  }
  double form_l2(const FormField& a) const { return l2_norm(a, g_hat, vol_hat); }
};

}  // namespace strom

#endif
