#include "strom/continuation.hpp"

#include <cmath>

#include "strom/random_fields.hpp"

namespace strom {

double NewtonReport::quadratic_ratio_max(double window_hi, double floor) const {
  double m = 0.0;
  for (std::size_t k = 0; k + 1 < residual_history.size(); ++k) {
    const double rk = residual_history[k], rk1 = residual_history[k + 1];
    if (rk < window_hi && rk1 > floor && rk > 0.0) m = std::max(m, rk1 / (rk * rk));
  }
  return m;
}

int NewtonReport::quadratic_ratio_count(double window_hi, double floor) const {
  int n = 0;
  for (std::size_t k = 0; k + 1 < residual_history.size(); ++k) {
    const double rk = residual_history[k], rk1 = residual_history[k + 1];
    if (rk < window_hi && rk1 > floor && rk > 0.0) ++n;
  }
  return n;
}

namespace {

Residual eval_system(const Testbed& tb, const SystemState& s, Derived* d = nullptr) {
  return s.coupled() ? eval_F_coupled(tb, s, d) : eval_F(tb, s, d);
}

Residual sub_target(const Testbed& tb, Residual r, const Residual* target) {
  if (target) r = residual_axpy(std::move(r), -1.0, *target);
  finalize_norms(tb, r);
  return r;
}

double residual_dot(const Testbed& tb, const Residual& a, const Residual& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.hym.size(); ++i) s += tb.end_inner(a.hym[i], b.hym[i]).real();
  s += tb.form_inner(a.anomaly, b.anomaly).real();
  return s;
}

Residual residual_scale(Residual r, double c) {
  for (auto& h : r.hym) h *= cplx(c);
  r.anomaly *= cplx(c);
  return r;
}

// Frozen block-inverse preconditioner, pulled back to the beta parametrization.
// Range tolerances are relaxed: intermediate Newton residuals carry second-order
// kernel-direction dust that the preconditioner simply projects out.
StateDelta block_preconditioner(const Testbed& tb, const Residual& r) {
  StateDelta d;
  const FormField dtheta = solve_L2(tb, r.anomaly, 2.0, 1.0);
  d.dbeta = iddbar_pullback(tb, dtheta);
  if (r.hym.size() == 2) {
    d.du_tan = solve_L1(tb, EndSixForm{r.hym[0]}, 2.0, 1.0);
    d.du = solve_L1(tb, EndSixForm{r.hym[1]}, 2.0, 1.0);
  } else {
    d.du = solve_L1(tb, EndSixForm{r.hym[0]}, 2.0, 1.0);
  }
  return d;
}

SystemState apply_delta(const SystemState& s, const StateDelta& d, double lambda) {
  SystemState out = s;
  MatrixField du = d.du;
  du *= cplx(-lambda);
  out.u += du;
  out.u = project_H0(out.u);
  FormField db = d.dbeta;
  db *= cplx(-lambda);
  out.beta += db;
  out.beta = real_form(out.beta);
  out.beta.remove_constant_mode();
  if (s.u_tan) {
    MatrixField dt = d.du_tan ? *d.du_tan : MatrixField(s.u_tan->lat, s.u_tan->r);
    dt *= cplx(-lambda);
    out.u_tan = *s.u_tan + dt;
    out.u_tan = project_H0(*out.u_tan);
  }
  return out;
}

// Centered finite-difference directional derivative of the system map.
Residual jacobian_vector(const Testbed& tb, const SystemState& s, const StateDelta& v,
                         double fd_step) {
  double vnorm = tb.end_l2(v.du);
  vnorm = std::hypot(vnorm, l2_norm(v.dbeta, tb.g_hat, tb.vol_hat));
  if (v.du_tan) vnorm = std::hypot(vnorm, tb.end_l2(*v.du_tan));
  if (vnorm == 0.0) throw NumericalError("jacobian_vector: zero direction");
  const double t = fd_step / vnorm;
  const Residual plus = eval_system(tb, apply_delta(s, v, -t));   // s + t v
  const Residual minus = eval_system(tb, apply_delta(s, v, t));   // s - t v
  Residual d = residual_axpy(plus, -1.0, minus);
  return residual_scale(std::move(d), 1.0 / (2.0 * t));
}

// Right-preconditioned restarted GMRES on the residual space: solve J M^{-1} w = r,
// return M^{-1} w. At the base point J M^{-1} is the identity on the gauge-fixed
// space, so short Krylov spaces suffice for small alpha' and amplitudes.
StateDelta gmres_solve(const Testbed& tb, const SystemState& s, const Residual& r,
                       const NewtonOptions& opt, double rel_tol) {
  const double rnorm = std::sqrt(residual_dot(tb, r, r));
  if (rnorm == 0.0) return block_preconditioner(tb, r);
  const int m = opt.gmres_restart;
  Residual xw = residual_scale(r, 0.0);  // accumulated Krylov solution w
  bool have_x = false;
  int total_iters = 0;
  while (total_iters < opt.gmres_max_iters) {
    Residual lin_res = r;
    if (have_x) {
      const Residual op_x = jacobian_vector(tb, s, block_preconditioner(tb, xw), opt.fd_step);
      lin_res = residual_axpy(std::move(lin_res), -1.0, op_x);
    }
    const double beta = std::sqrt(residual_dot(tb, lin_res, lin_res));
    if (beta <= rel_tol * rnorm) break;
    std::vector<Residual> basis;
    basis.push_back(residual_scale(lin_res, 1.0 / beta));
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(m + 1, m);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(m + 1);
    g[0] = beta;
    std::vector<double> cs(m, 1.0), sn(m, 0.0);
    int k = 0;
    bool breakdown = false;
    while (k < m && total_iters < opt.gmres_max_iters) {
      ++total_iters;
      Residual w = jacobian_vector(tb, s, block_preconditioner(tb, basis[k]), opt.fd_step);
      for (int i = 0; i <= k; ++i) {
        h(i, k) = residual_dot(tb, w, basis[i]);
        w = residual_axpy(std::move(w), -h(i, k), basis[i]);
      }
      const double hnext = std::sqrt(residual_dot(tb, w, w));
      h(k + 1, k) = hnext;
      for (int i = 0; i < k; ++i) {
        const double t = cs[i] * h(i, k) + sn[i] * h(i + 1, k);
        h(i + 1, k) = -sn[i] * h(i, k) + cs[i] * h(i + 1, k);
        h(i, k) = t;
      }
      const double denom = std::hypot(h(k, k), h(k + 1, k));
      cs[k] = denom == 0.0 ? 1.0 : h(k, k) / denom;
      sn[k] = denom == 0.0 ? 0.0 : h(k + 1, k) / denom;
      h(k, k) = denom;
      h(k + 1, k) = 0.0;
      g[k + 1] = -sn[k] * g[k];
      g[k] *= cs[k];
      ++k;
      if (std::abs(g[k]) <= rel_tol * rnorm) break;
      if (hnext <= 1e-14 * rnorm) {
        breakdown = true;
        break;
      }
      basis.push_back(residual_scale(w, 1.0 / hnext));
    }
    Eigen::VectorXd y = Eigen::VectorXd::Zero(k);
    for (int i = k - 1; i >= 0; --i) {
      double acc = g[i];
      for (int j = i + 1; j < k; ++j) acc -= h(i, j) * y[j];
      y[i] = h(i, i) != 0.0 ? acc / h(i, i) : 0.0;
    }
    for (int i = 0; i < k; ++i) xw = residual_axpy(std::move(xw), y[i], basis[i]);
    have_x = true;
    if (std::abs(g[k]) <= rel_tol * rnorm || breakdown) break;
  }
  return block_preconditioner(tb, xw);
}

}  // namespace

SystemState newton_correct(const Testbed& tb, SystemState s, const Residual* target,
                           const NewtonOptions& opt, NewtonReport* report) {
  NewtonReport rep;
  Residual r = sub_target(tb, eval_system(tb, s), target);
  double rn = r.combined_l2();
  rep.residual_history.push_back(rn);
  for (int it = 0; it < opt.max_iters; ++it) {
    if (rn < opt.tol) {
      rep.converged = true;
      break;
    }
    StateDelta delta;
    if (opt.mode == NewtonOptions::Mode::Chord) {
      delta = block_preconditioner(tb, r);
    } else {
      const double eta = std::clamp(rn, 1e-10, 0.1);
      delta = gmres_solve(tb, s, r, opt, eta);
    }
    bool accepted = false;
    for (double lambda : {1.0, 0.5, 0.25, 0.125}) {
      SystemState trial = apply_delta(s, delta, lambda);
      Residual tr;
      try {
        Derived d;
        tr = sub_target(tb, eval_system(tb, trial, &d), target);
        if (d.positivity_margin <= opt.min_positivity_margin) continue;
      } catch (const PositivityError&) {
        continue;  // positivity lost: shrink the step
      }
      const double tn = tr.combined_l2();
      if (tn <= (1.0 - 1e-4 * lambda) * rn) {
        s = std::move(trial);
        r = std::move(tr);
        rn = tn;
        accepted = true;
        rep.step_lengths.push_back(lambda);
        break;
      }
    }
    if (!accepted)
      throw NumericalError(
          "newton_correct: line search failed (positivity lost or no residual decrease; "
          "continuation step too large)");
    rep.iters = it + 1;
    rep.residual_history.push_back(rn);
  }
  rep.final_residual = rn;
  if (!rep.converged && rn < opt.tol) rep.converged = true;
  if (!rep.converged)
    throw NumericalError("newton_correct: max iterations exceeded (residual " +
                         std::to_string(rn) + ")");
  if (report) *report = std::move(rep);
  return s;
}

Residual ManufacturedProblem::forcing(const Testbed& tb, double alpha) const {
  SystemState s = target_state;
  s.alpha = alpha;
  return s.coupled() ? eval_F_coupled(tb, s) : eval_F(tb, s);
}

ManufacturedProblem make_manufactured(const Testbed& tb, double amplitude, int max_mode,
                                      std::uint64_t seed, bool coupled) {
  Rng rng(seed ^ 0x9e3779b97f4a7c15ull);
  ManufacturedProblem mp;
  mp.amplitude = amplitude;
  mp.target_state = SystemState::zero(tb, 0.0, coupled);
  MatrixField u = random_hermitian(tb.lat, tb.rank, max_mode, rng, true, true);
  u *= cplx(amplitude);
  mp.target_state.u = project_H0(u);
  FormField beta = random_real_11(tb.lat, max_mode, rng, true);
  beta *= cplx(amplitude);
  mp.target_state.beta = std::move(beta);
  if (coupled) {
    MatrixField ut = random_hermitian(tb.lat, 3, max_mode, rng, true, true);
    ut *= cplx(amplitude);
    mp.target_state.u_tan = project_H0(ut);
  }
  // Positivity of the ansatz at the requested amplitude (throws if violated).
  const FormField theta = i_del_dbar(mp.target_state.beta);
  metric_from_theta(tb.omega_hat, theta, tb.vol);
  return mp;
}

double state_distance(const Testbed& tb, const SystemState& a, const SystemState& b) {
  MatrixField du = a.u;
  du -= b.u;
  double d = tb.end_l2(du);
  FormField dth = i_del_dbar(a.beta);
  dth -= i_del_dbar(b.beta);
  d += l2_norm(dth, tb.g_hat, tb.vol_hat);
  if (a.u_tan && b.u_tan) {
    MatrixField dt = *a.u_tan;
    dt -= *b.u_tan;
    d += tb.end_l2(dt);
  }
  return d;
}

PathReport continue_in_alpha(const Testbed& tb, const ContinuationConfig& cfg,
                             const ManufacturedProblem* manufactured) {
  if (cfg.alpha_start < 0.0 || cfg.alpha_start >= cfg.alpha_target)
    throw UsageError("continuation: requires 0 <= alpha_start < alpha_target");
  PathReport rep;
  SystemState state = SystemState::zero(tb, cfg.alpha_start, cfg.coupled);
  std::optional<SystemState> prev_state;
  double prev_alpha = cfg.alpha_start;

  auto record = [&](const SystemState& st, double step, const NewtonReport& nrep) {
    Derived d;
    Residual r = eval_system(tb, st, &d);
    if (manufactured) {
      const Residual rho = manufactured->forcing(tb, st.alpha);
      r = sub_target(tb, std::move(r), &rho);
    }
    StepRecord rec;
    rec.alpha = st.alpha;
    rec.step = step;
    rec.newton_iters = nrep.iters;
    rec.hym_l2 = r.hym_l2;
    rec.anomaly_l2 = r.anomaly_l2;
    rec.residual_l2 = r.combined_l2();
    rec.ellipticity = ellipticity_monitor(tb, d, st.alpha);
    rec.positivity_margin = d.positivity_margin;
    rec.class_factor =
        st.alpha > 0.0 ? tb.omega_norm_hat / std::sqrt(st.alpha) : std::numeric_limits<double>::infinity();
    rec.quadratic_ratio_max = nrep.quadratic_ratio_max();
    rep.steps.push_back(rec);
  };

  // Solve at the starting point (nontrivial only with manufactured forcing).
  {
    NewtonReport nrep;
    if (manufactured) {
      const Residual rho = manufactured->forcing(tb, cfg.alpha_start);
      state = newton_correct(tb, state, &rho, cfg.newton, &nrep);
    } else {
      state = newton_correct(tb, state, nullptr, cfg.newton, &nrep);
    }
    record(state, 0.0, nrep);
  }

  double step = cfg.step;
  double alpha = cfg.alpha_start;
  while (alpha < cfg.alpha_target) {
    if (step < cfg.min_step) {
      rep.stop_reason = "step underflow at alpha " + std::to_string(alpha);
      rep.final_state = state;
      rep.alpha_reached = alpha;
      return rep;
    }
    const double alpha_next = std::min(alpha + step, cfg.alpha_target);
    SystemState predictor = state;
    if (cfg.secant_predictor && prev_state && alpha > prev_alpha) {
      const double c = (alpha_next - alpha) / (alpha - prev_alpha);
      StateDelta d;
      d.du = prev_state->u;
      d.du -= state.u;
      d.dbeta = prev_state->beta;
      d.dbeta -= state.beta;
      if (state.u_tan) {
        d.du_tan = *prev_state->u_tan;
        *d.du_tan -= *state.u_tan;
      }
      predictor = apply_delta(state, d, c);  // x + c (x - x_prev)
    }
    predictor.alpha = alpha_next;
    try {
      NewtonReport nrep;
      SystemState corrected;
      if (manufactured) {
        const Residual rho = manufactured->forcing(tb, alpha_next);
        corrected = newton_correct(tb, predictor, &rho, cfg.newton, &nrep);
      } else {
        corrected = newton_correct(tb, predictor, nullptr, cfg.newton, &nrep);
      }
      prev_state = state;
      prev_alpha = alpha;
      state = std::move(corrected);
      alpha = alpha_next;
      record(state, step, nrep);
      step = std::min(step * cfg.grow, cfg.alpha_target - alpha + cfg.min_step);
    } catch (const NumericalError&) {
      step *= cfg.shrink;
    }
  }
  rep.reached_target = true;
  rep.alpha_reached = alpha;
  rep.final_state = state;
  rep.stop_reason = "target reached";
  return rep;
}

}  // namespace strom
