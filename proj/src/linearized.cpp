#include "strom/linearized.hpp"

#include <cmath>

#include "strom/random_fields.hpp"

namespace strom {

namespace {

// Apply a real scalar Fourier multiplier to every entry of a matrix field.
MatrixField apply_symbol(const Testbed& tb, const MatrixField& x,
                         const std::vector<double>& symbol) {
  const Lattice& lat = *x.lat;
  const std::size_t block = static_cast<std::size_t>(x.r) * x.r;
  MatrixField out = x;
  std::vector<cplx> buf(lat.size());
  for (std::size_t e = 0; e < block; ++e) {
    for (std::size_t i = 0; i < lat.size(); ++i) buf[i] = x.a[i * block + e];
    lat.fft_forward(buf.data());
    for (std::size_t i = 0; i < lat.size(); ++i) buf[i] *= symbol[i];
    lat.fft_backward(buf.data());
    for (std::size_t i = 0; i < lat.size(); ++i) out.a[i * block + e] = buf[i];
  }
  (void)tb;
  return out;
}

std::vector<double> l1_symbol(const Testbed& tb) {
  std::vector<double> s(tb.lat->size());
  for (std::size_t i = 0; i < s.size(); ++i)
    s[i] = laplace_symbol(*tb.lat, tb.g_hat, tb.lat->coords(i));
  return s;
}

constexpr double kSymbolFloor = 1e-13;

}  // namespace

EndSixForm apply_L1(const Testbed& tb, const MatrixField& h, double domain_tol) {
  check_same_lattice(tb.lat, h.lat, "apply_L1");
  const double gd = gauge_defect(h);
  if (gd > domain_tol * std::max(1.0, h.max_abs()))
    throw UsageError("apply_L1: h outside the gauge-fixed domain (defect " + std::to_string(gd) + ")");
  // -ghat^{jk} d_kbar d_j acts per mode as the nonnegative scalar laplace symbol.
  return EndSixForm{apply_symbol(tb, h, l1_symbol(tb))};
}

EndSixForm apply_A(const Testbed& tb, const FormField& theta_dot, const MatrixForm& i_f_hat) {
  check_same_lattice(tb.lat, theta_dot.lat, "apply_A");
  const FormField lam = contract_lambda(tb.omega_hat.g, tb.omega_hat.ginv, theta_dot);
  const FormField lw = wedge(lam, tb.omega_hat_form);
  const MatrixForm six = wedge_scalar_mat(lw, i_f_hat);
  // six is a (3,3) End-valued form; peel off the canonical volume coefficient.
  const cplx avol = cplx(0.0, 1.0) * tb.omega_norm_hat * tb.g_hat.determinant();
  MatrixField h = six.comp[0];
  h *= cplx(1.0) / avol;
  return EndSixForm{std::move(h)};
}

FormField apply_L2(const Testbed& tb, const FormField& theta_dot, double domain_tol) {
  check_same_lattice(tb.lat, theta_dot.lat, "apply_L2");
  if (theta_dot.p != 2 || theta_dot.q != 2) throw UsageError("apply_L2: (2,2)-form required");
  const double cm = theta_dot.constant_mode_abs();
  if (cm > domain_tol * std::max(1.0, theta_dot.max_abs()))
    throw UsageError("apply_L2: input carries a constant Fourier mode (" + std::to_string(cm) + ")");
  FormField out = hodge_laplacian_flat(theta_dot, tb.g_hat);
  out *= cplx(-0.5 / tb.omega_norm_hat);
  return out;
}

MatrixField solve_L1(const Testbed& tb, const EndSixForm& rhs, double range_tol,
                     double verify_tol) {
  check_same_lattice(tb.lat, rhs.h.lat, "solve_L1");
  const double scale = std::max(1.0, rhs.h.max_abs());
  // Range = V intersected with the mean-zero gauge: the whole constant mode
  // (identity trace direction and constant traceless endomorphisms) must vanish.
  const double mean_defect = rhs.h.mean().cwiseAbs().maxCoeff();
  if (mean_defect > range_tol * scale)
    throw RangeError("solve_L1: rhs has a kernel-direction component (constant mode " +
                         std::to_string(mean_defect) + ")",
                     mean_defect);
  const auto symbol = l1_symbol(tb);
  std::vector<double> inv(symbol.size());
  for (std::size_t i = 0; i < symbol.size(); ++i)
    inv[i] = symbol[i] > kSymbolFloor ? 1.0 / symbol[i] : 0.0;
  MatrixField x = apply_symbol(tb, rhs.h, inv);
  x = project_H0(x);
  // Verify against the range part of rhs (constant mode already gated above).
  EndSixForm back = apply_L1(tb, x);
  back.h -= rhs.h;
  const Eigen::MatrixXcd mu = back.h.mean();
  parallel_for(back.h.sites(), [&](std::size_t i) { back.h.at(i) -= mu; });
  const double resid = back.h.max_abs() / scale;
  if (resid > verify_tol)
    throw RangeError("solve_L1: residual " + std::to_string(resid) + " after per-mode solve", resid);
  return x;
}

FormField solve_L2(const Testbed& tb, const FormField& rhs, double range_tol, double verify_tol) {
  check_same_lattice(tb.lat, rhs.lat, "solve_L2");
  if (rhs.p != 2 || rhs.q != 2) throw UsageError("solve_L2: (2,2)-form required");
  const double scale = std::max(1.0, rhs.max_abs());
  const double cm = rhs.constant_mode_abs();
  if (cm > range_tol * scale)
    throw RangeError("solve_L2: rhs has a harmonic (constant) component " + std::to_string(cm), cm);
  // L2 = -(1/(2|Omega|)) Laplacian; at constant metric the Laplacian is the scalar
  // laplace symbol per mode on every component.
  FormField x(rhs.lat, 2, 2);
  const double two_omega = 2.0 * tb.omega_norm_hat;
  for (int c = 0; c < rhs.ncomp(); ++c) {
    std::vector<cplx> buf = rhs.comp[c].a;
    tb.lat->fft_forward(buf.data());
    for (std::size_t i = 0; i < buf.size(); ++i) {
      const double s = laplace_symbol(*tb.lat, tb.g_hat, tb.lat->coords(i));
      buf[i] = s > kSymbolFloor ? buf[i] * (-two_omega / s) : cplx(0.0);
    }
    tb.lat->fft_backward(buf.data());
    x.comp[c].a = std::move(buf);
  }
  FormField back = apply_L2(tb, x);
  back -= rhs;
  back.remove_constant_mode();
  const double resid = back.max_abs() / scale;
  if (resid > verify_tol)
    throw RangeError("solve_L2: residual " + std::to_string(resid) + " after per-mode solve", resid);
  return x;
}

std::pair<EndSixForm, FormField> apply_block_forward(const Testbed& tb, const MatrixField& u_dot,
                                                     const FormField& theta_dot,
                                                     const MatrixForm* i_f_hat) {
  EndSixForm top = apply_L1(tb, u_dot);
  if (i_f_hat) {
    EndSixForm a = apply_A(tb, theta_dot, *i_f_hat);
    top.h += a.h;
  }
  return {std::move(top), apply_L2(tb, theta_dot)};
}

std::pair<MatrixField, FormField> apply_block_inverse(const Testbed& tb, const EndSixForm& r1,
                                                      const FormField& r2,
                                                      const MatrixForm* i_f_hat) {
  FormField theta = solve_L2(tb, r2);
  EndSixForm top = r1;
  if (i_f_hat) {
    EndSixForm a = apply_A(tb, theta, *i_f_hat);
    top.h -= a.h;
  }
  MatrixField u = solve_L1(tb, top);
  return {std::move(u), std::move(theta)};
}

MatrixField variation_metric(const HermitianMetric& omega, const HolVolForm& vol,
                             const FormField& d_theta) {
  check_same_lattice(omega.lat(), d_theta.lat, "variation_metric");
  if (d_theta.p != 2 || d_theta.q != 2) throw UsageError("variation_metric: (2,2)-form required");
  MatrixField raw = contract_lambda_raw(omega.g, omega.ginv, d_theta);
  const ScalarField dil = dilaton(omega, vol);
  parallel_for(raw.sites(), [&](std::size_t i) { raw.at(i) *= -0.5 / dil.a[i].real(); });
  return raw;
}

VariationRoutes variation_ddbar_omega(const Testbed& tb, const FormField& d_theta,
                                      double closedness_tol) {
  check_same_lattice(tb.lat, d_theta.lat, "variation_ddbar_omega");
  const double cdef = closedness_defect(d_theta);
  if (cdef > closedness_tol * std::max(1.0, d_theta.max_abs()))
    throw UsageError("variation_ddbar_omega: dTheta is not closed (defect " + std::to_string(cdef) + ")");
  VariationRoutes out;
  FormField lam = contract_lambda(tb.omega_hat.g, tb.omega_hat.ginv, d_theta);
  lam *= cplx(0.5 / tb.omega_norm_hat);
  out.direct = i_del_dbar(lam);
  out.kaehler = apply_L2(tb, d_theta);
  FormField diff = out.direct;
  diff -= out.kaehler;
  out.mismatch = diff.max_abs();
  return out;
}

FormField iddbar_pullback(const Testbed& tb, const FormField& theta) {
  check_same_lattice(tb.lat, theta.lat, "iddbar_pullback");
  if (theta.p != 2 || theta.q != 2) throw UsageError("iddbar_pullback: (2,2)-form required");
  const Lattice& lat = *tb.lat;
  const int n11 = 9, n22 = 9;
  // Spectra of theta components.
  std::vector<std::vector<cplx>> spec(n22);
  for (int c = 0; c < n22; ++c) {
    spec[c] = theta.comp[c].a;
    lat.fft_forward(spec[c].data());
  }
  FormField beta(theta.lat, 1, 1);
  std::vector<std::vector<cplx>> bspec(n11, std::vector<cplx>(lat.size(), cplx(0.0)));
  for (std::size_t i = 0; i < lat.size(); ++i) {
    const auto bin = lat.coords(i);
    // i del dbar: (1,1) -> (1,2) -> (2,2)
    const Eigen::MatrixXcd m =
        cplx(0.0, 1.0) * del_mode_matrix(lat, bin, 1, 2) * dbar_mode_matrix(lat, bin, 1, 1);
    Eigen::VectorXcd rhs(n22);
    for (int c = 0; c < n22; ++c) rhs[c] = spec[c][i];
    if (rhs.norm() == 0.0) continue;
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXcd> cod(m);
    cod.setThreshold(1e-10);
    const Eigen::VectorXcd b = cod.solve(rhs);
    for (int c = 0; c < n11; ++c) bspec[c][i] = b[c];
  }
  for (int c = 0; c < n11; ++c) {
    beta.comp[c].a = std::move(bspec[c]);
    lat.fft_backward(beta.comp[c].a.data());
  }
  beta = real_form(beta);
  beta.remove_constant_mode();
  return beta;
}

MatrixForm synthetic_curvature_fixture(const Testbed& tb, int kmax, std::uint64_t seed) {
  (void)kmax;
  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  MatrixForm out(tb.lat, 1, 1, tb.rank);
  // i F_hat = sum_t eta_t (x) T_t with constant primitive (1,1)-forms eta_t
  // (hermitian coefficients, ghat-trace zero) and constant hermitian traceless T_t.
  // Closed, Hermitian-Yang-Mills (Lambda iF_hat = 0), self-adjoint, trace-free:
  // every structural property the A-block relies on.
  const Eigen::Matrix3cd gup = tb.g_hat.inverse().transpose();
  const int nterms = 2;
  for (int t = 0; t < nterms; ++t) {
    Eigen::MatrixXcd m(tb.rank, tb.rank);
    for (int a = 0; a < tb.rank; ++a)
      for (int b = 0; b < tb.rank; ++b) m(a, b) = cplx(gauss(rng), gauss(rng));
    m = 0.5 * (m + m.adjoint()).eval();
    m -= (m.trace() / static_cast<double>(tb.rank)) * Eigen::MatrixXcd::Identity(tb.rank, tb.rank);
    Eigen::Matrix3cd eta;
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) eta(j, k) = cplx(gauss(rng), gauss(rng));
    eta = 0.5 * (eta + eta.adjoint()).eval();
    // remove the ghat-trace so the fixture satisfies the HYM condition pointwise
    const cplx tr = (gup.array() * eta.array()).sum();
    eta -= (tr / 3.0) * tb.g_hat;
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) {
        MatrixField& dst = out.at(j, k);
        const cplx coef = cplx(0.0, 1.0) * eta(j, k);  // i eta_{jk} dz^j dzbar^k
        for (std::size_t i = 0; i < dst.sites(); ++i) dst.at(i) += coef * m;
      }
  }
  return out;
}

double measure_A_gateaux_factor(const Testbed& tb, const MatrixForm& i_f_hat, std::uint64_t seed) {
  Rng rng(seed);
  const FormField tdot = random_exact_22(tb.lat, band_limit_product(*tb.lat), rng);
  const EndSixForm a_disp = apply_A(tb, tdot, i_f_hat);
  const double a_norm2 = tb.end6_inner(a_disp, a_disp).real();
  if (a_norm2 <= 0.0) throw NumericalError("measure_A_gateaux_factor: degenerate fixture");
  // Centered finite difference of the first component with the curvature frozen at
  // the fixture: (1/2) |Omega|_{w(t)} w(t)^2 ^ iF_hat along Theta(t) = t tdot, using
  // |Omega|_{w(t)} w(t)^2 = psi_hat + t tdot.
  const cplx avol = cplx(0.0, 1.0) * tb.omega_norm_hat * tb.g_hat.determinant();
  auto comp1_at = [&](double t) {
    FormField psi = tb.psi_hat;
    FormField step = tdot;
    step *= cplx(t);
    psi += step;
    const MatrixForm six = wedge_scalar_mat(psi, i_f_hat);
    MatrixField h = six.comp[0];
    h *= cplx(0.5) / avol;
    return h;
  };
  const double h = 1e-3;
  MatrixField fd = comp1_at(h);
  fd -= comp1_at(-h);
  fd *= cplx(1.0 / (2.0 * h));
  return tb.end_inner(fd, a_disp.h).real() / a_norm2;
}

// ---------------------------------------------------------------------------
// Dense assembly (reduced-lattice oracle)
// ---------------------------------------------------------------------------

Eigen::VectorXd DenseBlockOperator::project(const Testbed& tb, const MatrixField& h,
                                            const FormField& th) const {
  Eigen::VectorXd v(nu() + ntheta());
  for (int i = 0; i < nu(); ++i) v[i] = tb.end_inner(h, u_basis[i]).real();
  for (int i = 0; i < ntheta(); ++i) v[nu() + i] = tb.form_inner(th, theta_basis[i]).real();
  return v;
}

std::pair<MatrixField, FormField> DenseBlockOperator::expand(const Testbed& tb,
                                                             const Eigen::VectorXd& v) const {
  MatrixField h(tb.lat, tb.rank);
  FormField th(tb.lat, 2, 2);
  for (int i = 0; i < nu(); ++i) {
    MatrixField s = u_basis[i];
    s *= cplx(v[i]);
    h += s;
  }
  for (int i = 0; i < ntheta(); ++i) {
    FormField s = theta_basis[i];
    s *= cplx(v[nu() + i]);
    th += s;
  }
  return {std::move(h), std::move(th)};
}

DenseBlockOperator assemble_dense_block_operator(const Testbed& tb, const MatrixForm* i_f_hat) {
  DenseBlockOperator dbo;
  const LatticePtr lat = tb.lat;
  const std::size_t nsites = lat->size();
  const FormField zero22(lat, 2, 2);
  const MatrixField zerou(lat, tb.rank);

  // u-basis: project coordinate bumps (site, hermitian-traceless direction) into
  // the gauge-fixed space and orthonormalize (modified Gram-Schmidt with drop tol).
  std::vector<Eigen::MatrixXcd> tbasis;
  for (int a = 0; a < tb.rank; ++a)
    for (int b = a + 1; b < tb.rank; ++b) {
      Eigen::MatrixXcd s = Eigen::MatrixXcd::Zero(tb.rank, tb.rank);
      s(a, b) = s(b, a) = 1.0;
      tbasis.push_back(s);
      Eigen::MatrixXcd t = Eigen::MatrixXcd::Zero(tb.rank, tb.rank);
      t(a, b) = cplx(0.0, -1.0);
      t(b, a) = cplx(0.0, 1.0);
      tbasis.push_back(t);
    }
  for (int a = 0; a + 1 < tb.rank; ++a) {
    Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(tb.rank, tb.rank);
    for (int b = 0; b <= a; ++b) d(b, b) = 1.0;
    d(a + 1, a + 1) = -(a + 1.0);
    tbasis.push_back(d / d.norm());
  }
  const double drop = 1e-8;
  for (std::size_t s = 0; s < nsites; ++s)
    for (const auto& m : tbasis) {
      MatrixField cand(lat, tb.rank);
      cand.at(s) = m;
      cand = project_H0(cand);
      for (const auto& u : dbo.u_basis) {
        const double c = tb.end_inner(cand, u).real();
        MatrixField tmp = u;
        tmp *= cplx(c);
        cand -= tmp;
      }
      const double nn = tb.end_l2(cand);
      if (nn > drop) {
        cand *= cplx(1.0 / nn);
        dbo.u_basis.push_back(std::move(cand));
      }
    }

  // Theta-basis: images i del dbar of coordinate (1,1) bumps (hermitian structure).
  std::vector<FormField> seeds;
  for (std::size_t s = 0; s < nsites; ++s) {
    for (int j = 0; j < 3; ++j) {
      MatrixField m(lat, 3);
      m.at(s)(j, j) = 1.0;
      seeds.push_back(form_from_metric_matrix(m));
    }
    for (int j = 0; j < 3; ++j)
      for (int k = j + 1; k < 3; ++k) {
        MatrixField m(lat, 3);
        m.at(s)(j, k) = 1.0;
        m.at(s)(k, j) = 1.0;
        seeds.push_back(form_from_metric_matrix(m));
        MatrixField mi(lat, 3);
        mi.at(s)(j, k) = cplx(0.0, 1.0);
        mi.at(s)(k, j) = cplx(0.0, -1.0);
        seeds.push_back(form_from_metric_matrix(mi));
      }
  }
  for (auto& b : seeds) {
    FormField cand = i_del_dbar(b);
    for (const auto& t : dbo.theta_basis) {
      const double c = tb.form_inner(cand, t).real();
      FormField tmp = t;
      tmp *= cplx(c);
      cand -= tmp;
    }
    const double nn = tb.form_l2(cand);
    if (nn > drop) {
      cand *= cplx(1.0 / nn);
      dbo.theta_basis.push_back(std::move(cand));
    }
  }

  const int nu = dbo.nu(), nt = dbo.ntheta();
  dbo.op = Eigen::MatrixXd::Zero(nu + nt, nu + nt);
  for (int j = 0; j < nu; ++j) {
    auto [r1, r2] = apply_block_forward(tb, dbo.u_basis[j], zero22, i_f_hat);
    for (int i = 0; i < nu; ++i) dbo.op(i, j) = tb.end_inner(r1.h, dbo.u_basis[i]).real();
    for (int i = 0; i < nt; ++i) dbo.op(nu + i, j) = tb.form_inner(r2, dbo.theta_basis[i]).real();
  }
  for (int j = 0; j < nt; ++j) {
    auto [r1, r2] = apply_block_forward(tb, zerou, dbo.theta_basis[j], i_f_hat);
    for (int i = 0; i < nu; ++i) dbo.op(i, nu + j) = tb.end_inner(r1.h, dbo.u_basis[i]).real();
    for (int i = 0; i < nt; ++i)
      dbo.op(nu + i, nu + j) = tb.form_inner(r2, dbo.theta_basis[i]).real();
  }
  return dbo;
}

}  // namespace strom
