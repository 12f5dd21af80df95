#include "strom/verify.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "strom/random_fields.hpp"

namespace strom {

namespace {

double rel(double defect, double scale) { return defect / std::max(1.0, scale); }

double log2_ratio(double a, double b) { return std::log2(a / b); }

// max |a - b| over paper-convention (2,2) components at every site
double paper22_defect(const FormField& psi, const std::vector<Eigen::Matrix3cd>& g,
                      const std::vector<Eigen::Matrix3cd>& dg, bool delta_formula) {
  double m = 0.0;
  for (std::size_t i = 0; i < psi.lat->size(); ++i)
    for (int s = 0; s < 3; ++s)
      for (int r = 0; r < 3; ++r)
        for (int j = 0; j < 3; ++j)
          for (int k = 0; k < 3; ++k) {
            const cplx have = paper22_component(psi, i, s, r, j, k);
            cplx want;
            const auto& gm = g[i % g.size()];
            const auto& dm = dg[i % dg.size()];
            if (delta_formula) {
              // (w ^ dw)_{srjk} = -g_{sr} dg_{jk} + g_{jr} dg_{sk} - g_{jk} dg_{sr} + g_{sk} dg_{jr}
              want = -gm(s, r) * dm(j, k) + gm(j, r) * dm(s, k) - gm(j, k) * dm(s, r) +
                     gm(s, k) * dm(j, r);
            } else {
              // (w^2)_{srjk} = -2 g_{sr} g_{jk} + 2 g_{jr} g_{sk}
              want = -2.0 * gm(s, r) * gm(j, k) + 2.0 * gm(j, r) * gm(s, k);
            }
            m = std::max(m, std::abs(have - want));
          }
  return m;
}

struct Battery {
  const VerifyOptions& opt;
  LatticePtr lat;
  Testbed tb;
  Rng rng;
  std::vector<CheckRow> rows;
  int kml;  // band limit for linear identities
  int kmp;  // band limit for identities differentiating products
  bool products_resolved;

  explicit Battery(const VerifyOptions& o)
      : opt(o),
        lat(Lattice::create(o.n, o.active_axes, o.periods)),
        tb(Testbed::make(lat, o.g_hat, HolVolForm{}, o.rank)),
        rng(o.seed),
        kml(band_limit_linear(*lat)),
        kmp(band_limit_product(*lat)) {
    products_resolved = 2 * kmp < lat->n() / 2;
  }

  void add(const std::string& id, const std::string& desc, double residual, double tol) {
    rows.push_back({id, desc, residual, tol,
                    residual <= tol ? CheckRow::Status::Pass : CheckRow::Status::Fail});
  }
  void skip(const std::string& id, const std::string& desc) {
    rows.push_back({id, desc, 0.0, 0.0, CheckRow::Status::Skip});
  }

  FormField faulted_lambda(const MatrixField& g, const MatrixField& gi, const FormField& psi) {
    FormField f = contract_lambda(g, gi, psi);
    f *= cplx(opt.fault_lambda_scale);
    return f;
  }
  MatrixField faulted_raw(const MatrixField& g, const MatrixField& gi, const FormField& psi) {
    MatrixField f = contract_lambda_raw(g, gi, psi);
    f *= cplx(opt.fault_lambda_scale);
    return f;
  }

  void run();
  void spectral_rows();
  void contraction_rows();
  void hodge_rows();
  void hermitian_rows();
  void bundle_rows();
  void linearized_rows();
  void system_rows();
  void parallel_rows();
};

void Battery::spectral_rows() {
  // d/dz of a single analytic mode
  {
    ScalarField f(lat);
    for (std::size_t i = 0; i < f.size(); ++i) {
      const auto c = lat->coords(i);
      f.a[i] = std::exp(cplx(0.0, lat->axis_coord(0, c[0])));
    }
    ScalarField d = spectral_derivative(f, 1, false);
    double m = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i)
      m = std::max(m, std::abs(d.a[i] - cplx(0.0, 0.5) * f.a[i]));
    ScalarField db = spectral_derivative(f, 1, true);
    for (std::size_t i = 0; i < f.size(); ++i)
      m = std::max(m, std::abs(db.a[i] - cplx(0.0, 0.5) * f.a[i]));
    add("spectral_forms.derivative_mode", "d/dz, d/dzbar of e^{i x1} match the chain rule", m,
        1e-12);
  }
  // del^2 = dbar^2 = 0, del dbar + dbar del = 0
  {
    double m = 0.0;
    for (auto [p, q] : {std::pair{0, 0}, {1, 1}, {1, 0}, {2, 1}}) {
      FormField x = random_form(lat, p, q, kml, rng);
      if (p + 2 <= 3) m = std::max(m, del(del(x)).max_abs());
      if (q + 2 <= 3) m = std::max(m, dbar(dbar(x)).max_abs());
      if (p + 1 <= 3 && q + 1 <= 3) {
        FormField anti = del(dbar(x));
        anti += dbar(del(x));
        m = std::max(m, anti.max_abs());
      }
    }
    add("spectral_forms.d_squared", "del^2 = dbar^2 = 0 and del dbar = -dbar del", m, 1e-10);
  }
  // graded commutativity and associativity
  {
    double m = 0.0;
    FormField a = random_form(lat, 1, 0, kml, rng);
    FormField b = random_form(lat, 0, 1, kml, rng);
    FormField c = random_form(lat, 1, 1, kml, rng);
    FormField ab = wedge(a, b), ba = wedge(b, a);
    ba *= cplx(-1.0);  // (-1)^{1*1}
    FormField diff = ab;
    diff -= ba;
    m = std::max(m, diff.max_abs());
    FormField lhs = wedge(wedge(a, b), c), rhs = wedge(a, wedge(b, c));
    lhs -= rhs;
    m = std::max(m, lhs.max_abs());
    FormField cc = random_form(lat, 1, 1, kml, rng);
    FormField cw = wedge(c, cc), wc = wedge(cc, c);
    cw -= wc;  // even degree: commute
    m = std::max(m, cw.max_abs());
    add("spectral_forms.wedge_graded", "wedge graded commutativity and associativity", m, 1e-12);
  }
  // Leibniz
  if (products_resolved) {
    FormField a = random_form(lat, 1, 0, kmp, rng);
    FormField b = random_form(lat, 0, 1, kmp, rng);
    FormField lhs = del(wedge(a, b));
    FormField rhs = wedge(del(a), b);
    FormField ab2 = wedge(a, del(b));
    ab2 *= cplx(-1.0);  // (-1)^{deg a}
    rhs += ab2;
    lhs -= rhs;
    double m = lhs.max_abs();
    FormField lhs2 = dbar(wedge(a, b));
    FormField rhs2 = wedge(dbar(a), b);
    FormField ab3 = wedge(a, dbar(b));
    ab3 *= cplx(-1.0);
    rhs2 += ab3;
    lhs2 -= rhs2;
    m = std::max(m, lhs2.max_abs());
    add("spectral_forms.leibniz", "Leibniz rule for del and dbar on products", m, 1e-9);
  } else {
    skip("spectral_forms.leibniz", "Leibniz rule (needs product resolution, n >= 8)");
  }
  // Stokes and the closed-form volume
  {
    FormField gamma = random_form(lat, 3, 2, kml, rng);
    const double m = std::abs(integrate(dbar(gamma)));
    add("spectral_forms.integrate_stokes", "integral of dbar-exact (3,3) vanishes", m, 1e-10);
    const cplx vol = integrate(tb.vol_hat);
    const double want = 8.0 * tb.omega_norm_hat * tb.g_hat.determinant().real() *
                        lat->total_volume();
    add("spectral_forms.volume_closed_form",
        "integral of |Omega| what^3/3! equals 8 |Omega| det(g) x periods",
        rel(std::abs(vol - want), std::abs(want)), 1e-12);
  }
  // i del dbar: real, closed, no constant mode
  {
    FormField beta = random_real_11(lat, kml, rng);
    FormField theta = i_del_dbar(beta);
    double m = reality_defect(theta);
    m = std::max(m, closedness_defect(theta));
    m = std::max(m, theta.constant_mode_abs());
    add("spectral_forms.iddbar", "i del dbar beta is real, closed, mean-zero", m, 1e-10);
  }
}

void Battery::contraction_rows() {
  // omega^2 component formula
  {
    const Eigen::Matrix3cd gc = random_constant_positive(rng);
    const HermitianMetric gm = HermitianMetric::constant(lat, gc);
    const FormField w = metric_form(gm);
    const FormField w2 = wedge(w, w);
    double m = paper22_defect(w2, {gc}, {gc}, false);
    add("spectral_forms.omega2_components",
        "(w^2)_{srjk} = -2 g_{sr} g_{jk} + 2 g_{jr} g_{sk} componentwise", m, 1e-12);
  }
  // omega ^ delta omega component formula
  {
    const Eigen::Matrix3cd gc = random_constant_positive(rng);
    Eigen::Matrix3cd dg;
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) dg(j, k) = cplx(gauss(rng), gauss(rng));
    dg = 0.5 * (dg + dg.adjoint()).eval();
    const HermitianMetric gm = HermitianMetric::constant(lat, gc);
    const FormField w = metric_form(gm);
    const FormField dw = form_from_metric_matrix(MatrixField::constant(lat, dg));
    const FormField wdw = wedge(w, dw);
    double m = paper22_defect(wdw, {gc}, {dg}, true);
    add("spectral_forms.delta_omega_components",
        "(w ^ dw)_{srjk} matches the four-term variation formula", m, 1e-12);
  }
  // raw contraction of omega^2 is -4g (exact component identity)
  {
    const MatrixField gmat =
        random_positive_matrix(lat, 3, kml, rng, 0.3, random_constant_positive(rng));
    const HermitianMetric gm = HermitianMetric::from(gmat);
    const FormField w2 = wedge(metric_form(gm), metric_form(gm));
    MatrixField raw = faulted_raw(gm.g, gm.ginv, w2);
    MatrixField want = gm.g;
    want *= cplx(-4.0);
    raw -= want;
    add("spectral_forms.contraction_raw", "g^{sr} (w^2)_{srjk} = -4 g_{jk} pointwise",
        rel(raw.max_abs(), gm.g.max_abs()), 1e-12);
  }
  // form-valued Lambda: normalization and agreement with the adjoint route
  {
    const MatrixField gmat =
        random_positive_matrix(lat, 3, kml, rng, 0.3, random_constant_positive(rng));
    const HermitianMetric gm = HermitianMetric::from(gmat);
    const FormField w = metric_form(gm);
    const FormField w2 = wedge(w, w);
    FormField lam = faulted_lambda(gm.g, gm.ginv, w2);
    FormField want = w;
    want *= cplx(4.0);
    lam -= want;
    double m = rel(lam.max_abs(), w.max_abs());
    // adjoint route at a constant metric
    const Eigen::Matrix3cd gc = random_constant_positive(rng);
    const HermitianMetric gcm = HermitianMetric::constant(lat, gc);
    const FormField psi = random_form(lat, 2, 2, kml, rng);
    FormField a = faulted_lambda(gcm.g, gcm.ginv, psi);
    FormField b = lambda_adjoint_flat(psi, gc);
    a -= b;
    m = std::max(m, rel(a.max_abs(), psi.max_abs()));
    add("spectral_forms.lambda_normalization",
        "Lambda(w^2) = 4w and contraction route equals the adjoint route", m, 1e-10);
  }
}

void Battery::hodge_rows() {
  const Eigen::Matrix3cd gc = tb.g_hat;
  // adjointness of del and del^+
  {
    double m = 0.0;
    for (auto [p, q] : {std::pair{1, 2}, {2, 2}}) {
      FormField a = random_form(lat, p, q, kml, rng);
      FormField b = random_form(lat, p + 1, q, kml, rng);
      const cplx lhs = l2_inner(del(a), b, gc, tb.vol_hat);
      const cplx rhs = l2_inner(a, del_adjoint_flat(b, gc), gc, tb.vol_hat);
      m = std::max(m, std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)));
    }
    add("spectral_forms.hodge_adjoint", "l2(del a, b) = l2(a, del^+ b) at the flat metric", m,
        1e-10);
  }
  // Laplacian acts per mode as the scalar symbol; constants are harmonic
  {
    FormField c22(lat, 2, 2);
    for (int i = 0; i < c22.ncomp(); ++i)
      for (auto& v : c22.comp[i].a) v = cplx(1.0 + 0.1 * i, -0.2 * i);
    double m = hodge_laplacian_flat(c22, gc).max_abs();
    std::array<int, 6> mode{};
    for (int a = 0; a < 6; ++a)
      if (lat->active()[a]) mode[a] = 1;
    FormField single(lat, 2, 2);
    for (std::size_t i = 0; i < lat->size(); ++i) {
      const auto c = lat->coords(i);
      double phase = 0.0;
      for (int a = 0; a < 6; ++a) phase += kTwoPi * mode[a] * c[a] / lat->extent()[a];
      single.comp[4].a[i] = std::exp(cplx(0.0, phase));
    }
    std::array<int, 6> bin{};
    for (int a = 0; a < 6; ++a) bin[a] = lat->active()[a] ? mode[a] : 0;
    const double sym = laplace_symbol(*lat, gc, bin);
    FormField lap = hodge_laplacian_flat(single, gc);
    FormField want = single;
    want *= cplx(sym);
    lap -= want;
    m = std::max(m, rel(lap.max_abs(), sym));
    add("spectral_forms.laplacian_symbol",
        "flat Hodge Laplacian: harmonic constants, scalar symbol per mode", m, 1e-10);
  }
  // Kahler identity [Lambda, dbar] = -i del^+
  {
    double m = 0.0;
    for (auto [p, q] : {std::pair{1, 1}, {2, 1}, {2, 2}, {3, 2}}) {
      if (q + 1 > 3) continue;
      FormField eta = random_form(lat, p, q, kml, rng);
      FormField lhs = lambda_adjoint_flat(dbar(eta), gc);
      if (q >= 1) {
        FormField t = dbar(lambda_adjoint_flat(eta, gc));
        lhs -= t;
      }
      FormField rhs = del_adjoint_flat(eta, gc);
      rhs *= cplx(0.0, -1.0);
      lhs -= rhs;
      m = std::max(m, rel(lhs.max_abs(), eta.max_abs()));
    }
    add("spectral_forms.kahler_identity", "[Lambda, dbar] = -i del^+ on (p,q)-forms", m, 1e-9);
  }
}

void Battery::hermitian_rows() {
  // square-root round trip: constant and smooth metrics
  {
    double m = 0.0;
    const HolVolForm vol{};
    for (int t = 0; t < 100; ++t) {
      const Eigen::Matrix3cd gc = random_constant_positive(rng);
      const HermitianMetric gm = HermitianMetric::constant(lat, gc);
      const HermitianMetric rec = sqrt_positive_22(balanced_form(gm, vol), vol);
      MatrixField diff = rec.g;
      diff -= gm.g;
      m = std::max(m, diff.max_abs() / gm.g.max_abs());
    }
    for (int t = 0; t < 10; ++t) {
      const MatrixField gmat =
          random_positive_matrix(lat, 3, kml, rng, 0.2, random_constant_positive(rng));
      const HermitianMetric gm = HermitianMetric::from(gmat);
      const HermitianMetric rec = sqrt_positive_22(balanced_form(gm, vol), vol);
      MatrixField diff = rec.g;
      diff -= gm.g;
      m = std::max(m, diff.max_abs() / gm.g.max_abs());
    }
    add("hermitian_geometry.sqrt_roundtrip",
        "sqrt_positive_22(|Omega|_w w^2) = w on 100 constant + 10 smooth metrics", m, 1e-10);
  }
  // scaling law: extraction from c Psi gives c^2 times the metric
  {
    const HolVolForm vol{};
    const Eigen::Matrix3cd gc = random_constant_positive(rng);
    const HermitianMetric gm = HermitianMetric::constant(lat, gc);
    const FormField psi = balanced_form(gm, vol);
    const double c = 1.7;
    FormField cpsi = psi;
    cpsi *= cplx(c);
    MatrixField a = sqrt_positive_22(cpsi, vol).g;
    MatrixField b = sqrt_positive_22(psi, vol).g;
    b *= cplx(c * c);
    a -= b;
    add("hermitian_geometry.sqrt_scaling", "sqrt_positive_22(c Psi) = c^2 sqrt_positive_22(Psi)",
        rel(a.max_abs(), gc.cwiseAbs().maxCoeff()), 1e-12);
  }
  // conformally balanced by construction
  if (products_resolved) {
    FormField beta = random_real_11(lat, kmp, rng);
    beta *= cplx(0.05);
    const BalancedAnsatz ans = metric_from_theta(tb.omega_hat, i_del_dbar(beta), tb.vol);
    const FormField bal = balanced_form(ans.omega_theta, tb.vol);
    add("hermitian_geometry.balanced_closed", "d(|Omega|_{w_T} w_T^2) = 0 for Theta = i del dbar beta",
        rel(closedness_defect(bal), bal.max_abs()), 1e-9);
  } else {
    skip("hermitian_geometry.balanced_closed", "conformally balanced (needs n >= 8)");
  }
  // curvature of a constant metric vanishes identically
  {
    const HermitianMetric gm = HermitianMetric::constant(lat, random_constant_positive(rng));
    add("hermitian_geometry.curvature_flat", "chern_curvature(constant g) = 0",
        chern_curvature(gm).max_abs(), 1e-13);
  }
  // trace identity Tr iF_u = -i del dbar log det e^u
  if (products_resolved) {
    MatrixField u = random_hermitian(lat, tb.rank, kmp, rng, false, true);
    u *= cplx(1e-3);
    const MatrixField h = exp_metric(u);
    MatrixForm f = bundle_curvature(h);
    FormField lhs = trace_form(f);
    lhs *= cplx(0.0, 1.0);
    // log det e^u = tr u exactly
    FormField tru(lat, 0, 0);
    tru.comp[0] = pw_trace(u);
    FormField rhs = del(dbar(tru));
    rhs *= cplx(0.0, -1.0);  // -i del dbar
    lhs -= rhs;
    add("hermitian_geometry.trace_identity", "Tr iF_u = -i del dbar log det e^u",
        rel(lhs.max_abs(), rhs.max_abs()), 1e-9);
  } else {
    skip("hermitian_geometry.trace_identity", "trace identity (needs n >= 8)");
  }
}

void Battery::bundle_rows() {
  // abelian reduction
  if (products_resolved) {
    ScalarField s = random_scalar(lat, kmp, rng, true, true);
    MatrixField u(lat, 1);
    for (std::size_t i = 0; i < u.sites(); ++i) u.at(i)(0, 0) = 1e-3 * s.a[i].real();
    const MatrixForm f = bundle_curvature(exp_metric(u));
    FormField fu(lat, 1, 1);
    for (int c = 0; c < 9; ++c)
      for (std::size_t i = 0; i < lat->size(); ++i) fu.comp[c].a[i] = f.comp[c].at(i)(0, 0);
    FormField u00(lat, 0, 0);
    u00.comp[0] = pw_trace(u);
    FormField want = del(dbar(u00));
    want *= cplx(-1.0);  // F = -del dbar u for rank 1
    fu -= want;
    add("bundle_geometry.abelian", "rank-1 curvature reduces to -del dbar u",
        rel(fu.max_abs(), want.max_abs()), 1e-10);
  } else {
    skip("bundle_geometry.abelian", "abelian reduction (needs n >= 8)");
  }
  // wedge normalization w^2 ^ iF = (i Lambda F) w^3 / 3 and hermiticity of (i Lambda F) H
  {
    MatrixField u = random_hermitian(lat, tb.rank, kmp, rng, true, true);
    u *= cplx(0.2);
    const MatrixField h = exp_metric(u);
    MatrixForm f = bundle_curvature(h);
    f *= cplx(0.0, 1.0);  // iF
    const MatrixField ilf = lambda_F(tb.omega_hat, h);
    const FormField w2 = wedge(tb.omega_hat_form, tb.omega_hat_form);
    const MatrixForm lhs = wedge_scalar_mat(w2, f);
    // (i Lambda F) * w^3/3: the (3,3) coefficient of w^3 is 6 i det g
    const cplx coef = cplx(0.0, 6.0) * tb.g_hat.determinant() / 3.0;
    MatrixField want = ilf;
    want *= coef;
    MatrixField diff = lhs.comp[0];
    diff -= want;
    double m = rel(diff.max_abs(), want.max_abs());
    add("bundle_geometry.lambda_wedge", "w^2 ^ iF = (i Lambda F) w^3 / 3", m, 1e-9);
    MatrixField us = random_hermitian(lat, tb.rank, kmp, rng, true, true);
    us *= cplx(5e-3);
    const MatrixField hs = exp_metric(us);
    const MatrixField ilfs = lambda_F(tb.omega_hat, hs);
    const MatrixField ilfh = pw_product(ilfs, hs);
    add("bundle_geometry.lambda_selfadjoint", "(i Lambda F) H is pointwise hermitian",
        rel(hermiticity_defect(ilfh), ilfh.max_abs()), 1e-9);
  }
  // conjugation restores reference self-adjointness (spectral accuracy: alias tails
  // scale like the fourth power of the amplitude at this band limit)
  {
    MatrixField u = random_hermitian(lat, tb.rank, kmp, rng, true, true);
    u *= cplx(5e-3);
    const MatrixField h = exp_metric(u);
    const MatrixField a = lambda_F(tb.omega_hat, h);
    const MatrixField c = conjugate_to_reference(u, a);
    add("bundle_geometry.conjugation", "e^{-u/2} (i Lambda F) e^{u/2} is H_hat-self-adjoint",
        rel(hermiticity_defect(c), std::max(1e-30, c.max_abs())), 1e-10);
    MatrixField id = MatrixField::identity(lat, tb.rank);
    MatrixField cid = conjugate_to_reference(u, id);
    cid -= id;
    add("bundle_geometry.conjugation_identity", "conjugation fixes the identity endomorphism",
        cid.max_abs(), 1e-12);
  }
  // projection: idempotent and orthogonal
  {
    MatrixField x(lat, tb.rank);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (auto& v : x.a) v = cplx(gauss(rng), gauss(rng));
    const MatrixField p = project_H0(x);
    MatrixField pp = project_H0(p);
    pp -= p;
    double m = rel(pp.max_abs(), p.max_abs());
    MatrixField y(lat, tb.rank);
    for (auto& v : y.a) v = cplx(gauss(rng), gauss(rng));
    MatrixField comp = y;
    comp -= project_H0(y);
    const double ip = std::abs(tb.end_inner(p, comp));
    m = std::max(m, ip / std::max(1.0, tb.end_l2(p) * tb.end_l2(comp)));
    add("bundle_geometry.projection", "project_H0 is an idempotent orthogonal projection", m,
        1e-12);
  }
}

void Battery::linearized_rows() {
  // Bochner formula
  {
    MatrixField h = random_hermitian(lat, tb.rank, kml, rng, true, true);
    const EndSixForm l1h = apply_L1(tb, h);
    const double lhs = tb.end_inner(l1h.h, h).real();
    // 1/2 int (|del h|^2 + |dbar h|^2) |Omega| what^3/3!
    const Eigen::Matrix3cd gup = tb.g_hat.inverse().transpose();
    std::vector<MatrixField> dh, dbh;
    for (int j = 0; j < 3; ++j) {
      dh.push_back(matrix_derivative(h, j + 1, false));
      dbh.push_back(matrix_derivative(h, j + 1, true));
    }
    const double w = tb.vol_density * lat->cell_volume();
    const double rhs =
        0.5 * w *
        blocked_sum<double>(lat->size(), [&](std::size_t i) {
          double acc = 0.0;
          for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k) {
              acc += (gup(j, k) * (dh[j].at(i) * dh[k].at(i).adjoint()).trace()).real();
              acc += (gup(j, k) * (dbh[k].at(i) * dbh[j].at(i).adjoint()).trace()).real();
            }
          return acc;
        });
    add("linearized_ops.bochner", "(L1 h, h) = 1/2 int (|del h|^2 + |dbar h|^2) |Omega| what^3/3!",
        std::abs(lhs - rhs) / std::max(1.0, std::abs(rhs)), 1e-9);
    add("linearized_ops.l1_positivity", "(L1 h, h) > 0 on the gauge-fixed space",
        lhs > 0 ? 0.0 : 1.0, 0.5);
  }
  // self-adjointness of L1 and L2
  {
    MatrixField a = random_hermitian(lat, tb.rank, kml, rng, true, true);
    MatrixField b = random_hermitian(lat, tb.rank, kml, rng, true, true);
    const double lhs = tb.end_inner(apply_L1(tb, a).h, b).real();
    const double rhs = tb.end_inner(a, apply_L1(tb, b).h).real();
    double m = std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs));
    FormField ta = random_exact_22(lat, kml, rng);
    FormField tbf = random_exact_22(lat, kml, rng);
    const cplx l2lhs = tb.form_inner(apply_L2(tb, ta), tbf);
    const cplx l2rhs = tb.form_inner(ta, apply_L2(tb, tbf));
    m = std::max(m, std::abs(l2lhs - l2rhs) / std::max(1.0, std::abs(l2lhs)));
    add("linearized_ops.selfadjoint", "L1 and L2 are symmetric for their L2 pairings", m, 1e-10);
  }
  // variation of the square root: finite-difference convergence order
  {
    const VariationOrderReport rep = variation_metric_order(tb, opt.seed + 11,
                                                            opt.fault_lambda_scale);
    const double m = std::max(std::abs(rep.order_lo - 2.0), std::abs(rep.order_hi - 2.0));
    add("linearized_ops.variation_metric_fd",
        "variation_metric matches centered differences of sqrt_positive_22 at order 2", m, 0.1);
  }
  // the two routes of the variation of i del dbar w
  {
    FormField dtheta = random_exact_22(lat, kml, rng);
    VariationRoutes routes = variation_ddbar_omega(tb, dtheta);
    if (opt.fault_lambda_scale != 1.0) {
      FormField lam = faulted_lambda(tb.omega_hat.g, tb.omega_hat.ginv, dtheta);
      lam *= cplx(0.5 / tb.omega_norm_hat);
      routes.direct = i_del_dbar(lam);
      FormField diff = routes.direct;
      diff -= routes.kaehler;
      routes.mismatch = diff.max_abs();
    }
    add("linearized_ops.variation_two_routes",
        "i del dbar (Lambda/2|Omega|) route equals the Laplacian route",
        rel(routes.mismatch, dtheta.max_abs()), 1e-9);
  }
  // solves are left inverses on the range
  {
    MatrixField h = random_hermitian(lat, tb.rank, kml, rng, true, true);
    MatrixField hs = solve_L1(tb, apply_L1(tb, h));
    hs -= h;
    double m = rel(hs.max_abs(), h.max_abs());
    FormField t = random_exact_22(lat, kml, rng);
    FormField ts = solve_L2(tb, apply_L2(tb, t));
    ts -= t;
    m = std::max(m, rel(ts.max_abs(), t.max_abs()));
    add("linearized_ops.solve_roundtrip", "solve_L1, solve_L2 invert on the gauge-fixed range", m,
        1e-10);
    // identity direction is a range error
    bool threw = false;
    try {
      solve_L1(tb, EndSixForm{MatrixField::identity(lat, tb.rank)});
    } catch (const RangeError&) {
      threw = true;
    }
    add("linearized_ops.solve_range_error", "rhs = id (x) vol is flagged outside the range",
        threw ? 0.0 : 1.0, 0.5);
  }
  // block inverse round trip with the synthetic fixture
  {
    const MatrixForm fix = synthetic_curvature_fixture(tb, kml, opt.seed + 5);
    double m = 0.0;
    for (int t = 0; t < 3; ++t) {
      MatrixField ud = random_hermitian(lat, tb.rank, kml, rng, true, true);
      FormField td = random_exact_22(lat, kml, rng);
      auto [r1, r2] = apply_block_forward(tb, ud, td, &fix);
      auto [us, tsv] = apply_block_inverse(tb, r1, r2, &fix);
      us -= ud;
      tsv -= td;
      m = std::max(m, rel(us.max_abs(), ud.max_abs()));
      m = std::max(m, rel(tsv.max_abs(), td.max_abs()));
      auto [r1d, r2d] = apply_block_forward(tb, ud, td, nullptr);
      auto [usd, tsd] = apply_block_inverse(tb, r1d, r2d, nullptr);
      usd -= ud;
      tsd -= td;
      m = std::max(m, rel(usd.max_abs(), ud.max_abs()));
      m = std::max(m, rel(tsd.max_abs(), td.max_abs()));
    }
    add("linearized_ops.block_inverse_roundtrip",
        "block inverse composed with the forward block map is the identity", m, 1e-9);
  }
}

void Battery::system_rows() {
  // base point
  {
    const SystemState s = SystemState::zero(tb);
    const Residual r = eval_F(tb, s);
    add("strominger_system.base_point", "F(0,(0,0)) = 0 at the flat base point",
        std::max({r.hym_max, r.anomaly_max}), 1e-12);
  }
  // W-membership on random states
  if (products_resolved) {
    double m_sa = 0.0, m_tr = 0.0, m_cl = 0.0, m_cm = 0.0;
    const int nstates = 20;
    for (int t = 0; t < nstates; ++t) {
      SystemState s = SystemState::zero(tb, 0.02);
      MatrixField u = random_hermitian(lat, tb.rank, kmp, rng, true, true);
      u *= cplx(5e-3);
      s.u = project_H0(u);
      FormField beta = random_real_11(lat, kmp, rng);
      beta *= cplx(5e-3);
      s.beta = std::move(beta);
      const Residual r = eval_F(tb, s);
      const double s1 = std::max(1.0, r.hym_max);
      m_sa = std::max(m_sa, hermiticity_defect(r.hym[0]) / s1);
      const double w = tb.vol_density * lat->cell_volume();
      const cplx trint = w * blocked_sum<cplx>(lat->size(), [&](std::size_t i) {
                           return cplx(r.hym[0].at(i).trace());
                         });
      m_tr = std::max(m_tr, std::abs(trint) / s1);
      const double s2 = std::max(1.0, r.anomaly_max);
      m_cl = std::max(m_cl, closedness_defect(r.anomaly) / s2);
      m_cm = std::max(m_cm, r.anomaly.constant_mode_abs() / s2);
    }
    add("strominger_system.w_selfadjoint", "first residual component is H_hat-self-adjoint", m_sa,
        1e-10);
    add("strominger_system.w_meanzero_trace",
        "first residual component integrates to zero trace (Stokes)", m_tr, 1e-9);
    add("strominger_system.w_anomaly_closed", "second residual component is d-closed", m_cl, 1e-9);
    add("strominger_system.w_anomaly_meanzero", "second residual component has no constant mode",
        m_cm, 1e-10);
  } else {
    skip("strominger_system.w_membership", "W-membership on random states (needs n >= 8)");
  }
  // Gateaux vs assembled blocks
  if (products_resolved) {
    const GateauxReport rep = gateaux_vs_blocks(tb, opt.seed + 17);
    double m = std::max(std::abs(rep.order_lo - 2.0), std::abs(rep.order_hi - 2.0));
    m = std::max(m, std::max(std::abs(rep.offdiag_order_lo - 2.0),
                             std::abs(rep.offdiag_order_hi - 2.0)));
    add("strominger_system.gateaux_blocks",
        "finite-difference Gateaux of eval_F matches (L1, A, L2) at order 2; (2,1) block "
        "vanishes at the same order",
        m, 0.1);
  } else {
    skip("strominger_system.gateaux_blocks", "Gateaux vs blocks (needs n >= 8)");
  }
  // translation equivariance
  if (products_resolved) {
    SystemState s = SystemState::zero(tb, 0.01);
    MatrixField u = random_hermitian(lat, tb.rank, kmp, rng, true, true);
    u *= cplx(5e-3);
    s.u = project_H0(u);
    FormField beta = random_real_11(lat, kmp, rng);
    beta *= cplx(5e-3);
    s.beta = std::move(beta);
    std::array<int, 6> shift{};
    for (int a = 0; a < 6; ++a) shift[a] = lat->active()[a] ? (a % 2 ? 2 : 1) : 0;
    const Residual r1 = translate_residual(eval_F(tb, s), shift);
    const Residual r2 = eval_F(tb, translate_state(s, shift));
    double m = 0.0;
    MatrixField dh = r1.hym[0];
    dh -= r2.hym[0];
    m = std::max(m, dh.max_abs());
    FormField da = r1.anomaly;
    da -= r2.anomaly;
    m = std::max(m, da.max_abs());
    add("strominger_system.translation_equivariance",
        "eval_F commutes with lattice translations", rel(m, r1.anomaly.max_abs()), 1e-11);
  } else {
    skip("strominger_system.translation_equivariance", "translation equivariance (needs n >= 8)");
  }
}

void Battery::parallel_rows() {
  // serial reference vs OpenMP kernels: identical results, summation order fixed
  FormField a = random_form(lat, 1, 1, kml, rng);
  FormField b = random_form(lat, 1, 1, kml, rng);
  FormField ws = wedge(a, b, Exec::Serial);
  FormField wp = wedge(a, b, Exec::Parallel);
  ws -= wp;
  double m = ws.max_abs();
  MatrixField u = random_hermitian(lat, tb.rank, kml, rng, true, true);
  MatrixField es = pw_exp_hermitian(u, 1.0, Exec::Serial);
  MatrixField ep = pw_exp_hermitian(u, 1.0, Exec::Parallel);
  es -= ep;
  m = std::max(m, es.max_abs());
  const cplx s1 = blocked_sum<cplx>(lat->size(), [&](std::size_t i) { return a.comp[0].a[i]; },
                                    Exec::Serial);
  const cplx s2 = blocked_sum<cplx>(lat->size(), [&](std::size_t i) { return a.comp[0].a[i]; },
                                    Exec::Parallel);
  m = std::max(m, std::abs(s1 - s2));
  add("parallel.consistency", "OpenMP kernels agree bitwise with the serial reference", m, 0.0);
}

void Battery::run() {
  spectral_rows();
  contraction_rows();
  hodge_rows();
  hermitian_rows();
  bundle_rows();
  linearized_rows();
  system_rows();
  parallel_rows();
}

}  // namespace

std::vector<CheckRow> run_verify_battery(const VerifyOptions& opt) {
  Battery b(opt);
  b.run();
  return b.rows;
}

bool all_pass(const std::vector<CheckRow>& rows) {
  for (const auto& r : rows)
    if (r.status == CheckRow::Status::Fail) return false;
  return true;
}

std::string format_rows(const std::vector<CheckRow>& rows) {
  std::ostringstream os;
  os << "  status  residual      tolerance     id\n";
  for (const auto& r : rows) {
    const char* st = r.status == CheckRow::Status::Pass   ? "PASS"
                     : r.status == CheckRow::Status::Fail ? "FAIL"
                                                          : "SKIP";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "  %-6s  %-12.3e  %-12.3e  ", st, r.residual, r.tol);
    os << buf << r.id << "  (" << r.desc << ")\n";
  }
  return os.str();
}

GateauxReport gateaux_vs_blocks(const Testbed& tb, std::uint64_t seed) {
  Rng rng(seed);
  GateauxReport rep;
  const int kmp = band_limit_product(*tb.lat);
  MatrixField udot = random_hermitian(tb.lat, tb.rank, kmp, rng, true, true);
  udot = project_H0(udot);
  FormField bdot = random_real_11(tb.lat, kmp, rng);
  const FormField tdot = i_del_dbar(bdot);

  const EndSixForm l1u = apply_L1(tb, udot);
  const FormField l2t = apply_L2(tb, tdot);

  auto eval_at = [&](double ucoef, double bcoef) {
    SystemState s = SystemState::zero(tb, rep.alpha_probe);
    MatrixField u = udot;
    u *= cplx(ucoef);
    s.u = project_H0(u);
    FormField beta = bdot;
    beta *= cplx(bcoef);
    s.beta = std::move(beta);
    return eval_F(tb, s);
  };

  for (int k = 0; k < 3; ++k) {
    const double h = rep.steps[k];
    // joint probe: FD along (udot, tdot) vs (L1 udot, L2 tdot); A = 0 on the testbed
    Residual fd = residual_axpy(eval_at(h, h), -1.0, eval_at(-h, -h));
    for (auto& hh : fd.hym) hh *= cplx(1.0 / (2.0 * h));
    fd.anomaly *= cplx(1.0 / (2.0 * h));
    fd.hym[0] -= l1u.h;
    fd.anomaly -= l2t;
    finalize_norms(tb, fd);
    rep.block_err[k] = fd.combined_l2();
    // u-only probe: the (2,1) block response
    Residual od = residual_axpy(eval_at(h, 0.0), -1.0, eval_at(-h, 0.0));
    od.anomaly *= cplx(1.0 / (2.0 * h));
    finalize_norms(tb, od);
    rep.offdiag_err[k] = od.anomaly_l2;
  }
  rep.order_lo = log2_ratio(rep.block_err[0], rep.block_err[1]);
  rep.order_hi = log2_ratio(rep.block_err[1], rep.block_err[2]);
  rep.offdiag_order_lo = log2_ratio(rep.offdiag_err[0], rep.offdiag_err[1]);
  rep.offdiag_order_hi = log2_ratio(rep.offdiag_err[1], rep.offdiag_err[2]);
  return rep;
}

VariationOrderReport variation_metric_order(const Testbed& tb, std::uint64_t seed,
                                            double lambda_scale) {
  Rng rng(seed);
  VariationOrderReport rep;
  const HolVolForm vol = tb.vol;
  // well-conditioned base so the perturbed form stays positive for all steps
  const Eigen::Matrix3cd gc =
      Eigen::Matrix3cd::Identity() + 0.3 * random_constant_positive(rng);
  const HermitianMetric base = HermitianMetric::constant(tb.lat, gc);
  const FormField psi0 = balanced_form(base, vol);
  FormField dtheta = random_form(tb.lat, 2, 2, band_limit_linear(*tb.lat), rng, true);
  MatrixField analytic = variation_metric(base, vol, dtheta);
  analytic *= cplx(lambda_scale);
  for (int k = 0; k < 3; ++k) {
    const double h = rep.steps[k];
    FormField up = psi0, dn = psi0;
    FormField hd = dtheta;
    hd *= cplx(h);
    up += hd;
    dn -= hd;
    MatrixField gp = sqrt_positive_22(up, vol).g;
    MatrixField gm = sqrt_positive_22(dn, vol).g;
    gp -= gm;
    gp *= cplx(1.0 / (2.0 * h));
    gp -= analytic;
    rep.err[k] = gp.max_abs();
  }
  rep.order_lo = log2_ratio(rep.err[0], rep.err[1]);
  rep.order_hi = log2_ratio(rep.err[1], rep.err[2]);
  return rep;
}

}  // namespace strom
