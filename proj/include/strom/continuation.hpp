#ifndef STROM_CONTINUATION_HPP
#define STROM_CONTINUATION_HPP

#include "strom/system.hpp"

namespace strom {

// Correction direction in the unknowns (u [, u_tan], beta).
struct StateDelta {
  MatrixField du;
  std::optional<MatrixField> du_tan;
  FormField dbeta;
};

struct NewtonOptions {
  enum class Mode { Chord, Jfnk };
  Mode mode = Mode::Chord;
  double tol = 1e-9;  // residual L2 tolerance
  int max_iters = 25;
  double fd_step = 1e-5;        // directional finite-difference step (jfnk)
  int gmres_restart = 30;
  int gmres_max_iters = 200;
  double min_positivity_margin = 0.0;  // extra safety margin for trial states
};

struct NewtonReport {
  int iters = 0;
  double final_residual = 0.0;
  bool converged = false;
  std::vector<double> residual_history;
  std::vector<double> step_lengths;

  // Quadratic-contraction diagnostics over the window r_k < window_hi and
  // r_{k+1} > floor: max of r_{k+1}/r_k^2 (0 when the window is empty).
  double quadratic_ratio_max(double window_hi = 1e-3, double floor = 1e-12) const;
  int quadratic_ratio_count(double window_hi = 1e-3, double floor = 1e-12) const;
};

// Damped (quasi-)Newton corrector: x <- x - lambda * (D2F|_0)^{-1} (F(x) - target),
// lambda in {1, 1/2, 1/4, 1/8} by Armijo backtracking on the residual L2 norm.
// Jfnk mode replaces the frozen inverse by a finite-difference Jacobian-vector
// GMRES solve, right-preconditioned with the same frozen block inverse.
SystemState newton_correct(const Testbed& tb, SystemState s, const Residual* target,
                           const NewtonOptions& opt, NewtonReport* report = nullptr);

// Manufactured verification problem: chosen targets (u*, Theta* = i del dbar beta*)
// and forcing rho(alpha') := F(alpha', (u*, Theta*)) evaluated exactly.
struct ManufacturedProblem {
  SystemState target_state;  // alpha field ignored; holds (u*, beta*) [, u_tan*]
  double amplitude = 0.0;
  Residual forcing(const Testbed& tb, double alpha) const;
};

ManufacturedProblem make_manufactured(const Testbed& tb, double amplitude, int max_mode,
                                      std::uint64_t seed, bool coupled = false);

struct ContinuationConfig {
  double alpha_start = 0.0;
  double alpha_target = 1e-2;
  double step = 2.5e-3;
  double min_step = 1e-8;
  double grow = 1.5;
  double shrink = 0.5;
  bool secant_predictor = true;
  NewtonOptions newton;
  bool coupled = false;
  double monitor_epsilon = 0.1;  // ellipticity warning threshold
};

struct StepRecord {
  double alpha = 0.0;
  double step = 0.0;
  int newton_iters = 0;
  double hym_l2 = 0.0, anomaly_l2 = 0.0, residual_l2 = 0.0;
  double ellipticity = 0.0;
  double positivity_margin = 0.0;
  double class_factor = 0.0;  // alpha^{-1/2} |Omega|_what (inf at alpha = 0)
  double quadratic_ratio_max = 0.0;
};

struct PathReport {
  std::vector<StepRecord> steps;
  SystemState final_state;
  bool reached_target = false;
  double alpha_reached = 0.0;
  std::string stop_reason;
};

PathReport continue_in_alpha(const Testbed& tb, const ContinuationConfig& cfg,
                             const ManufacturedProblem* manufactured = nullptr);

// L2 distance between two states: ||u1-u2|| + ||Theta1-Theta2|| (+ tangent part).
double state_distance(const Testbed& tb, const SystemState& a, const SystemState& b);

}  // namespace strom

#endif
