#ifndef STROM_SYSTEM_HPP
#define STROM_SYSTEM_HPP

#include <optional>

#include "strom/linearized.hpp"
#include "strom/random_fields.hpp"

namespace strom {

// State of the deformation problem: (alpha', u, Theta = i del dbar beta), plus the
// tangent-bundle deformation u_tan in coupled mode. beta is a real mean-zero
// (1,1)-form; u (and u_tan) live in the gauge-fixed endomorphism space.
struct SystemState {
  double alpha = 0.0;
  MatrixField u;
  FormField beta;
  std::optional<MatrixField> u_tan;

  bool coupled() const { return u_tan.has_value(); }
  static SystemState zero(const Testbed& tb, double alpha = 0.0, bool coupled = false);
};

// Geometry derived from a state (all caches are recomputed per evaluation, so the
// evaluation is referentially transparent).
struct Derived {
  FormField theta;
  BalancedAnsatz ansatz;
  MatrixField h_bundle;     // e^u
  MatrixForm f_bundle;      // curvature of e^u
  MatrixForm r_curv;        // Chern curvature of omega_theta (plain mode)
                            // or of e^{u_tan} g_hat (coupled mode)
  std::optional<MatrixField> h_tan;
  double positivity_margin = 0.0;
};

// Value of the system map. hym components are h (x) |Omega| what^3/3! densities:
// one entry in plain mode (bundle), two in coupled mode (tangent first, bundle second).
struct Residual {
  std::vector<MatrixField> hym;
  FormField anomaly;

  double hym_l2 = 0.0, hym_max = 0.0;
  double anomaly_l2 = 0.0, anomaly_max = 0.0;
  double combined_l2() const { return std::sqrt(hym_l2 * hym_l2 + anomaly_l2 * anomaly_l2); }
};

void finalize_norms(const Testbed& tb, Residual& r);
Residual residual_axpy(Residual r, double c, const Residual& other);  // r + c*other

// F(alpha', (u, Theta)):
//   component 1: e^{-u/2} [i Lambda_{w_T} F_u] e^{u/2} (x) |Omega|_{w_T} w_T^3/3!
//   component 2: i del dbar w_T - alpha' (Tr R_T ^ R_T - Tr F_u ^ F_u)
Residual eval_F(const Testbed& tb, const SystemState& s, Derived* derived_out = nullptr);

// Coupled three-component variant (tangent-bundle instanton metric e^{u_tan} g_hat):
//   components 1,2: HYM parts for e^{u_tan} g_hat and e^u; component 3: anomaly with
//   Tr R_{u_tan} ^ R_{u_tan} - Tr F_u ^ F_u.
Residual eval_F_coupled(const Testbed& tb, const SystemState& s, Derived* derived_out = nullptr);

// Pointwise gauge transformation sigma with g = conj(sigma)^dagger h conj(sigma)
// (canonical positive solution; sigma = c id when g = c^2 h).
MatrixField gauge_to_unitary(const MatrixField& h, const MatrixField& g);

// Connection transport helpers used to verify the gauge transformation:
// the Chern connection form of a metric h in the representation where
// compatibility reads d_i g = B_i^T g + g conj(B_ibar).
MatrixForm connection_form_of_metric(const MatrixField& h);  // (1,0) part
struct TransportedConnection {
  MatrixForm b10, b01;
};
TransportedConnection gauge_transport(const MatrixForm& b10, const MatrixField& sigma);
// Full curvature dB + B^B of a connection with (1,0) and (0,1) parts; returns the
// (2,0), (1,1), (0,2) pieces.
struct CurvaturePieces {
  MatrixForm r20, r11, r02;
};
CurvaturePieces curvature_from_connection(const MatrixForm& b10, const MatrixForm& b01);
// Max defect of d_i <u,v>_g = <grad_i u, v>_g + <u, grad_ibar v>_g on random sections.
double unitarity_defect(const MatrixField& g, const TransportedConnection& conn, Rng& rng);

// sup over the lattice of alpha' |R|_{g_T} (pointwise tensor norm of the Chern
// curvature 4-tensor measured with g_T).
double ellipticity_monitor(const Testbed& tb, const Derived& d, double alpha);

// Rescaling w~ = alpha'^{-1} w_T: reports the balanced class factor
// alpha'^{-1/2} |Omega|_what and checks the residual covariance of the
// unit-alpha' anomaly equation.
struct RescaleReport {
  double class_factor = 0.0;            // alpha^{-1/2} |Omega|_what
  double anomaly_l2_rescaled = 0.0;     // residual of w~ in the alpha'=1 equation
  double covariance_defect = 0.0;       // max |resid(w~,1) - alpha'^{-1} resid(w,alpha')|
  double covariance_defect_rel = 0.0;
};
RescaleReport rescale_solution(const Testbed& tb, const SystemState& s);
double alpha_from_class_factor(const Testbed& tb, double class_factor);

// Shift every field of the state by an integer lattice vector (equivariance tests).
SystemState translate_state(const SystemState& s, const std::array<int, 6>& shift);
Residual translate_residual(const Residual& r, const std::array<int, 6>& shift);

}  // namespace strom

#endif
