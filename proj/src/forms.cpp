#include "strom/forms.hpp"

#include <algorithm>
#include <cmath>

namespace strom {

namespace multi {

namespace {
// Rank-p increasing tuples as bitmasks, lexicographic order.
constexpr unsigned kMasks0[] = {0u};
constexpr unsigned kMasks1[] = {0b001u, 0b010u, 0b100u};
constexpr unsigned kMasks2[] = {0b011u, 0b101u, 0b110u};
constexpr unsigned kMasks3[] = {0b111u};
constexpr const unsigned* kMasks[4] = {kMasks0, kMasks1, kMasks2, kMasks3};
}  // namespace

int count(int p) {
  if (p < 0 || p > 3) throw UsageError("multi-index rank out of range");
  return kChoose3[p];
}

unsigned mask_at(int p, int idx) { return kMasks[p][idx]; }

int index_of(int p, unsigned mask) {
  for (int i = 0; i < count(p); ++i)
    if (kMasks[p][i] == mask) return i;
  throw Error("multi::index_of: bad mask");
}

int merge_sign(unsigned a, unsigned b) {
  if (a & b) return 0;
  int inv = 0;
  for (int bb = 0; bb < 3; ++bb) {
    if (!(b & (1u << bb))) continue;
    for (int aa = bb + 1; aa < 3; ++aa)
      if (a & (1u << aa)) ++inv;
  }
  return inv % 2 ? -1 : 1;
}

int insert_sign(int m, unsigned a) {
  int cnt = 0;
  for (int s = 0; s < m; ++s)
    if (a & (1u << s)) ++cnt;
  return cnt % 2 ? -1 : 1;
}

}  // namespace multi

// ---------------------------------------------------------------------------
// FormField basics
// ---------------------------------------------------------------------------

FormField::FormField(LatticePtr l, int p_, int q_) : lat(std::move(l)), p(p_), q(q_) {
  if (p < 0 || p > 3 || q < 0 || q > 3) throw UsageError("FormField: bidegree out of range");
  comp.assign(static_cast<std::size_t>(multi::count(p)) * multi::count(q), ScalarField(lat));
}

static void check_same_form(const FormField& x, const FormField& y, const char* where) {
  check_same_lattice(x.lat, y.lat, where);
  if (x.p != y.p || x.q != y.q) throw UsageError(std::string(where) + ": bidegree mismatch");
}

FormField& FormField::operator+=(const FormField& o) {
  check_same_form(*this, o, "form +=");
  for (int c = 0; c < ncomp(); ++c) comp[c] += o.comp[c];
  return *this;
}

FormField& FormField::operator-=(const FormField& o) {
  check_same_form(*this, o, "form -=");
  for (int c = 0; c < ncomp(); ++c) comp[c] -= o.comp[c];
  return *this;
}

FormField& FormField::operator*=(cplx s) {
  for (auto& c : comp) c *= s;
  return *this;
}

double FormField::max_abs() const {
  double m = 0.0;
  for (const auto& c : comp) m = std::max(m, c.max_abs());
  return m;
}

void FormField::remove_constant_mode() {
  for (auto& c : comp) {
    const cplx mu = c.mean();
    for (auto& v : c.a) v -= mu;
  }
}

double FormField::constant_mode_abs() const {
  double m = 0.0;
  for (const auto& c : comp) m = std::max(m, std::abs(c.mean()));
  return m;
}

FormField operator+(FormField x, const FormField& y) { return x += y; }
FormField operator-(FormField x, const FormField& y) { return x -= y; }
FormField operator*(cplx s, FormField x) { return x *= s; }

// ---------------------------------------------------------------------------
// Wedge
// ---------------------------------------------------------------------------

namespace {
struct WedgeEntry {
  int c1, c2, cout;
  double sign;
};

std::vector<WedgeEntry> build_wedge_table(int p1, int q1, int p2, int q2) {
  std::vector<WedgeEntry> tab;
  const int cross = (q1 * p2) % 2 ? -1 : 1;
  for (int h1 = 0; h1 < multi::count(p1); ++h1)
    for (int a1 = 0; a1 < multi::count(q1); ++a1)
      for (int h2 = 0; h2 < multi::count(p2); ++h2)
        for (int a2 = 0; a2 < multi::count(q2); ++a2) {
          const unsigned i1 = multi::mask_at(p1, h1), i2 = multi::mask_at(p2, h2);
          const unsigned j1 = multi::mask_at(q1, a1), j2 = multi::mask_at(q2, a2);
          const int sh = multi::merge_sign(i1, i2);
          const int sa = multi::merge_sign(j1, j2);
          if (sh == 0 || sa == 0) continue;
          const int hout = multi::index_of(p1 + p2, i1 | i2);
          const int aout = multi::index_of(q1 + q2, j1 | j2);
          tab.push_back({h1 * multi::count(q1) + a1, h2 * multi::count(q2) + a2,
                         hout * multi::count(q1 + q2) + aout,
                         static_cast<double>(cross * sh * sa)});
        }
  return tab;
}
}  // namespace

FormField wedge(const FormField& x, const FormField& y, Exec exec) {
  check_same_lattice(x.lat, y.lat, "wedge");
  if (x.p + y.p > 3 || x.q + y.q > 3) throw UsageError("wedge: bidegree overflow");
  FormField out(x.lat, x.p + y.p, x.q + y.q);
  const auto tab = build_wedge_table(x.p, x.q, y.p, y.q);
  parallel_for(
      x.lat->size(),
      [&](std::size_t i) {
        for (const auto& e : tab) out.comp[e.cout].a[i] += e.sign * x.comp[e.c1].a[i] * y.comp[e.c2].a[i];
      },
      exec);
  return out;
}

// ---------------------------------------------------------------------------
// Exterior derivatives
// ---------------------------------------------------------------------------

FormField del(const FormField& x) {
  if (x.p + 1 > 3) throw UsageError("del: bidegree overflow");
  FormField out(x.lat, x.p + 1, x.q);
  for (int hi = 0; hi < multi::count(x.p); ++hi)
    for (int ai = 0; ai < multi::count(x.q); ++ai) {
      const unsigned im = multi::mask_at(x.p, hi);
      for (int m = 0; m < 3; ++m) {
        if (im & (1u << m)) continue;
        const double sgn = multi::insert_sign(m, im);
        ScalarField d = spectral_derivative(x.at(hi, ai), m + 1, false);
        ScalarField& dst = out.at(multi::index_of(x.p + 1, im | (1u << m)), ai);
        for (std::size_t i = 0; i < d.size(); ++i) dst.a[i] += sgn * d.a[i];
      }
    }
  return out;
}

FormField dbar(const FormField& x) {
  if (x.q + 1 > 3) throw UsageError("dbar: bidegree overflow");
  FormField out(x.lat, x.p, x.q + 1);
  const double psign = x.p % 2 ? -1.0 : 1.0;
  for (int hi = 0; hi < multi::count(x.p); ++hi)
    for (int ai = 0; ai < multi::count(x.q); ++ai) {
      const unsigned jm = multi::mask_at(x.q, ai);
      for (int m = 0; m < 3; ++m) {
        if (jm & (1u << m)) continue;
        const double sgn = psign * multi::insert_sign(m, jm);
        ScalarField d = spectral_derivative(x.at(hi, ai), m + 1, true);
        ScalarField& dst = out.at(hi, multi::index_of(x.q + 1, jm | (1u << m)));
        for (std::size_t i = 0; i < d.size(); ++i) dst.a[i] += sgn * d.a[i];
      }
    }
  return out;
}

FormField conj_form(const FormField& x) {
  FormField out(x.lat, x.q, x.p);
  const double sgn = (x.p * x.q) % 2 ? -1.0 : 1.0;
  for (int hi = 0; hi < multi::count(x.p); ++hi)
    for (int ai = 0; ai < multi::count(x.q); ++ai) {
      ScalarField& dst = out.at(ai, hi);
      const ScalarField& src = x.at(hi, ai);
      for (std::size_t i = 0; i < src.size(); ++i) dst.a[i] = sgn * std::conj(src.a[i]);
    }
  return out;
}

FormField real_form(const FormField& x) {
  if (x.p != x.q) throw UsageError("real_form: requires p == q");
  FormField c = conj_form(x);
  FormField out = x;
  out += c;
  out *= 0.5;
  return out;
}

double reality_defect(const FormField& x) {
  if (x.p != x.q) return std::numeric_limits<double>::infinity();
  FormField d = conj_form(x);
  d -= x;
  return d.max_abs();
}

bool is_real(const FormField& x, double tol) { return reality_defect(x) <= tol; }

double closedness_defect(const FormField& x) {
  double m = 0.0;
  if (x.p < 3) m = std::max(m, del(x).max_abs());
  if (x.q < 3) m = std::max(m, dbar(x).max_abs());
  return m;
}

FormField i_del_dbar(const FormField& beta, double reality_tol) {
  if (beta.p != 1 || beta.q != 1) throw UsageError("i_del_dbar: expects a (1,1)-form");
  const double defect = reality_defect(beta);
  if (defect > reality_tol * std::max(1.0, beta.max_abs()))
    throw UsageError("i_del_dbar: input form is not real (defect " + std::to_string(defect) + ")");
  FormField theta = dbar(beta);
  theta = del(theta);
  theta *= cplx(0.0, 1.0);
  theta = real_form(theta);
  theta.remove_constant_mode();
  return theta;
}

// ---------------------------------------------------------------------------
// Codecs
// ---------------------------------------------------------------------------

FormField form_from_metric_matrix(const MatrixField& g) {
  if (g.r != 3) throw UsageError("form_from_metric_matrix: 3x3 field required");
  FormField out(g.lat, 1, 1);
  for (int j = 0; j < 3; ++j)
    for (int k = 0; k < 3; ++k) {
      ScalarField& dst = out.at(j, k);
      for (std::size_t i = 0; i < g.sites(); ++i) dst.a[i] = cplx(0.0, 1.0) * g.at(i)(j, k);
    }
  return out;
}

MatrixField metric_matrix_from_form(const FormField& omega11) {
  if (omega11.p != 1 || omega11.q != 1) throw UsageError("metric_matrix_from_form: (1,1) required");
  MatrixField g(omega11.lat, 3);
  for (int j = 0; j < 3; ++j)
    for (int k = 0; k < 3; ++k) {
      const ScalarField& src = omega11.at(j, k);
      for (std::size_t i = 0; i < g.sites(); ++i) g.at(i)(j, k) = cplx(0.0, -1.0) * src.a[i];
    }
  return g;
}

cplx paper22_component(const FormField& psi, std::size_t site, int s, int r, int j, int k) {
  if (psi.p != 2 || psi.q != 2) throw UsageError("paper22_component: (2,2) required");
  if (s == j || r == k) return cplx(0.0);
  double sgn = -1.0;  // A_{(s,j),(r,k)} = -Psi_{s rbar j kbar}
  if (s > j) {
    std::swap(s, j);
    sgn = -sgn;
  }
  if (r > k) {
    std::swap(r, k);
    sgn = -sgn;
  }
  const int hi = multi::index_of(2, (1u << s) | (1u << j));
  const int ai = multi::index_of(2, (1u << r) | (1u << k));
  return sgn * psi.at(hi, ai).a[site];
}

MatrixField hatted_from_22(const FormField& psi) {
  if (psi.p != 2 || psi.q != 2) throw UsageError("hatted_from_22: (2,2) required");
  MatrixField P(psi.lat, 3);
  for (int p = 0; p < 3; ++p)
    for (int q = 0; q < 3; ++q) {
      // complement of {p} has pair index 2-p in lexicographic order
      const ScalarField& src = psi.at(2 - p, 2 - q);
      const double sgn = (p + q) % 2 ? -0.5 : 0.5;
      for (std::size_t i = 0; i < P.sites(); ++i) P.at(i)(p, q) = sgn * src.a[i];
    }
  return P;
}

FormField form22_from_hatted(const MatrixField& P) {
  if (P.r != 3) throw UsageError("form22_from_hatted: 3x3 field required");
  FormField out(P.lat, 2, 2);
  for (int p = 0; p < 3; ++p)
    for (int q = 0; q < 3; ++q) {
      ScalarField& dst = out.at(2 - p, 2 - q);
      const double sgn = (p + q) % 2 ? -2.0 : 2.0;
      for (std::size_t i = 0; i < P.sites(); ++i) dst.a[i] = sgn * P.at(i)(p, q);
    }
  return out;
}

// ---------------------------------------------------------------------------
// Gram matrices and pairings
// ---------------------------------------------------------------------------

namespace {
// Determinant of the gup submatrix over tuple masks a (rows) and b (cols).
cplx tuple_minor(const Eigen::Matrix3cd& gup, unsigned a, unsigned b, int rank) {
  int ia[3], ib[3], na = 0, nb = 0;
  for (int t = 0; t < 3; ++t) {
    if (a & (1u << t)) ia[na++] = t;
    if (b & (1u << t)) ib[nb++] = t;
  }
  Eigen::MatrixXcd sub(rank, rank);
  for (int u = 0; u < rank; ++u)
    for (int v = 0; v < rank; ++v) sub(u, v) = gup(ia[u], ib[v]);
  return rank == 0 ? cplx(1.0) : cplx(sub.determinant());
}

Eigen::MatrixXcd rank_gram(const Eigen::Matrix3cd& gup, int rank) {
  const int n = multi::count(rank);
  Eigen::MatrixXcd gm(n, n);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k)
      gm(i, k) = tuple_minor(gup, multi::mask_at(rank, i), multi::mask_at(rank, k), rank);
  return gm;
}
}  // namespace

Eigen::MatrixXcd form_gram(const Eigen::Matrix3cd& g, int p, int q) {
  // gup^{ik} = g^{i kbar} = (g^{-1})(k,i)
  const Eigen::Matrix3cd gup = g.inverse().transpose();
  const Eigen::MatrixXcd gh = rank_gram(gup, p);
  const Eigen::MatrixXcd ga = rank_gram(gup, q);
  const int np = multi::count(p), nq = multi::count(q);
  Eigen::MatrixXcd gram(np * nq, np * nq);
  for (int h1 = 0; h1 < np; ++h1)
    for (int a1 = 0; a1 < nq; ++a1)
      for (int h2 = 0; h2 < np; ++h2)
        for (int a2 = 0; a2 < nq; ++a2)
          gram(h1 * nq + a1, h2 * nq + a2) = gh(h1, h2) * std::conj(ga(a1, a2));
  return gram;
}

cplx pointwise_inner(const FormField& a, const FormField& b, const Eigen::MatrixXcd& gram,
                     std::size_t site) {
  cplx s(0.0);
  for (int c1 = 0; c1 < a.ncomp(); ++c1)
    for (int c2 = 0; c2 < b.ncomp(); ++c2)
      s += gram(c1, c2) * a.comp[c1].a[site] * std::conj(b.comp[c2].a[site]);
  return s;
}

cplx integrate(const TopForm& t) {
  if (t.p != 3 || t.q != 3) throw UsageError("integrate: (3,3)-form required");
  const cplx s = blocked_sum<cplx>(t.comp[0].size(), [&](std::size_t i) { return t.comp[0].a[i]; });
  // dz^{123} ^ dzbar^{123} = -8i dx1 dy1 dx2 dy2 dx3 dy3
  return cplx(0.0, -8.0) * s * t.lat->cell_volume();
}

ScalarField top_density(const TopForm& t) {
  if (t.p != 3 || t.q != 3) throw UsageError("top_density: (3,3)-form required");
  ScalarField out(t.lat);
  for (std::size_t i = 0; i < out.size(); ++i) out.a[i] = cplx(0.0, -8.0) * t.comp[0].a[i];
  return out;
}

cplx l2_inner(const FormField& a, const FormField& b, const Eigen::Matrix3cd& g,
              const TopForm& weight) {
  check_same_form(a, b, "l2_inner");
  check_same_lattice(a.lat, weight.lat, "l2_inner");
  const Eigen::MatrixXcd gram = form_gram(g, a.p, a.q);
  const ScalarField dens = top_density(weight);
  const double cv = a.lat->cell_volume();
  return cv * blocked_sum<cplx>(a.lat->size(), [&](std::size_t i) {
           return pointwise_inner(a, b, gram, i) * dens.a[i].real();
         });
}

double l2_norm(const FormField& a, const Eigen::Matrix3cd& g, const TopForm& weight) {
  return std::sqrt(std::max(0.0, l2_inner(a, a, g, weight).real()));
}

// ---------------------------------------------------------------------------
// Lambda contractions
// ---------------------------------------------------------------------------

MatrixField contract_lambda_raw(const MatrixField& g, const MatrixField& ginv,
                                const FormField& psi22, Exec exec) {
  if (psi22.p != 2 || psi22.q != 2) throw UsageError("contract_lambda_raw: (2,2) required");
  check_same_lattice(g.lat, psi22.lat, "contract_lambda_raw");
  // Precompute the contraction table: raw(j,k) = sum_{a,b} g^{a bbar} Psi_{a bbar j kbar}.
  struct Term {
    int j, k, a, b, comp;
    double sign;
  };
  std::vector<Term> terms;
  for (int j = 0; j < 3; ++j)
    for (int k = 0; k < 3; ++k)
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
          if (a == j || b == k) continue;
          double sgn = -1.0;
          int s = a, jj = j, r = b, kk = k;
          if (s > jj) {
            std::swap(s, jj);
            sgn = -sgn;
          }
          if (r > kk) {
            std::swap(r, kk);
            sgn = -sgn;
          }
          const int hi = multi::index_of(2, (1u << s) | (1u << jj));
          const int ai = multi::index_of(2, (1u << r) | (1u << kk));
          terms.push_back({j, k, a, b, hi * 3 + ai, sgn});
        }
  MatrixField raw(g.lat, 3);
  parallel_for(
      g.sites(),
      [&](std::size_t i) {
        auto out = raw.at(i);
        auto gi = ginv.at(i);
        for (const auto& t : terms)
          out(t.j, t.k) += gi(t.b, t.a) * t.sign * psi22.comp[t.comp].a[i];
      },
      exec);
  return raw;
}

FormField contract_lambda(const MatrixField& g, const MatrixField& ginv, const FormField& psi22,
                          Exec exec) {
  MatrixField raw = contract_lambda_raw(g, ginv, psi22, exec);
  raw *= cplx(-1.0);
  return form_from_metric_matrix(raw);
}

namespace {
// Adjoint of a coefficient-space map D with respect to the pairing
// <a,b> = sum Gram(c1,c2) a_{c1} conj(b_{c2}); the matrix acting on coefficient
// columns is the transposed Gram.
Eigen::MatrixXcd gram_adjoint(const Eigen::MatrixXcd& d, const Eigen::MatrixXcd& gram_lo,
                              const Eigen::MatrixXcd& gram_hi) {
  return gram_lo.transpose().inverse() * d.adjoint() * gram_hi.transpose();
}
}  // namespace

FormField lambda_adjoint_flat(const FormField& psi, const Eigen::Matrix3cd& g) {
  if (psi.p < 1 || psi.q < 1) throw UsageError("lambda_adjoint_flat: p,q >= 1 required");
  const int p = psi.p, q = psi.q;
  // Matrix of wedging with omega = i g_{jk} dz^j dzbar^k: (p-1,q-1) -> (p,q).
  const auto tab = build_wedge_table(1, 1, p - 1, q - 1);
  const int nin = multi::count(p - 1) * multi::count(q - 1);
  const int nout = multi::count(p) * multi::count(q);
  Eigen::MatrixXcd L = Eigen::MatrixXcd::Zero(nout, nin);
  for (const auto& e : tab) {
    const int j = e.c1 / 3, k = e.c1 % 3;
    L(e.cout, e.c2) += e.sign * cplx(0.0, 1.0) * g(j, k);
  }
  const Eigen::MatrixXcd lam =
      gram_adjoint(L, form_gram(g, p - 1, q - 1), form_gram(g, p, q));
  FormField out(psi.lat, p - 1, q - 1);
  parallel_for(psi.lat->size(), [&](std::size_t i) {
    Eigen::VectorXcd v(nout);
    for (int c = 0; c < nout; ++c) v[c] = psi.comp[c].a[i];
    Eigen::VectorXcd w = lam * v;
    for (int c = 0; c < nin; ++c) out.comp[c].a[i] = w[c];
  });
  return out;
}

// ---------------------------------------------------------------------------
// Flat-metric del-adjoint and Hodge Laplacian (exact per Fourier mode)
// ---------------------------------------------------------------------------

Eigen::MatrixXcd del_mode_matrix(const Lattice& lat, const std::array<int, 6>& bin, int p, int q) {
  const int nq = multi::count(q);
  Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(multi::count(p + 1) * nq, multi::count(p) * nq);
  for (int hi = 0; hi < multi::count(p); ++hi) {
    const unsigned im = multi::mask_at(p, hi);
    for (int m = 0; m < 3; ++m) {
      if (im & (1u << m)) continue;
      const double sgn = multi::insert_sign(m, im);
      const cplx sym = deriv_symbol_hol(lat, bin, m);
      const int ho = multi::index_of(p + 1, im | (1u << m));
      for (int ai = 0; ai < nq; ++ai) d(ho * nq + ai, hi * nq + ai) += sgn * sym;
    }
  }
  return d;
}

Eigen::MatrixXcd dbar_mode_matrix(const Lattice& lat, const std::array<int, 6>& bin, int p, int q) {
  const int np = multi::count(p), nq = multi::count(q), nq1 = multi::count(q + 1);
  Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(np * nq1, np * nq);
  const double psign = p % 2 ? -1.0 : 1.0;
  for (int ai = 0; ai < nq; ++ai) {
    const unsigned jm = multi::mask_at(q, ai);
    for (int m = 0; m < 3; ++m) {
      if (jm & (1u << m)) continue;
      const double sgn = psign * multi::insert_sign(m, jm);
      const cplx sym = deriv_symbol_anti(lat, bin, m);
      const int ao = multi::index_of(q + 1, jm | (1u << m));
      for (int hi = 0; hi < np; ++hi) d(hi * nq1 + ao, hi * nq + ai) += sgn * sym;
    }
  }
  return d;
}

namespace {
struct Spectra {
  std::vector<std::vector<cplx>> c;
  explicit Spectra(const FormField& x) : c(x.ncomp()) {
    for (int k = 0; k < x.ncomp(); ++k) {
      c[k] = x.comp[k].a;
      x.lat->fft_forward(c[k].data());
    }
  }
  void store(FormField& out) const {
    for (int k = 0; k < out.ncomp(); ++k) {
      out.comp[k].a = c[k];
      out.lat->fft_backward(out.comp[k].a.data());
    }
  }
};
}  // namespace

FormField del_adjoint_flat(const FormField& x, const Eigen::Matrix3cd& g) {
  if (x.p < 1) throw UsageError("del_adjoint_flat: p >= 1 required");
  const int p = x.p, q = x.q;
  const Eigen::MatrixXcd gram_lo = form_gram(g, p - 1, q);
  const Eigen::MatrixXcd gram_hi = form_gram(g, p, q);
  Spectra sp(x);
  FormField out(x.lat, p - 1, q);
  const int nin = x.ncomp(), nout = out.ncomp();
  std::vector<std::vector<cplx>> oc(nout, std::vector<cplx>(x.lat->size(), cplx(0.0)));
  for (std::size_t i = 0; i < x.lat->size(); ++i) {
    const auto bin = x.lat->coords(i);
    const Eigen::MatrixXcd d = del_mode_matrix(*x.lat, bin, p - 1, q);
    const Eigen::MatrixXcd adj = gram_adjoint(d, gram_lo, gram_hi);
    Eigen::VectorXcd v(nin);
    for (int c = 0; c < nin; ++c) v[c] = sp.c[c][i];
    Eigen::VectorXcd w = adj * v;
    for (int c = 0; c < nout; ++c) oc[c][i] = w[c];
  }
  for (int c = 0; c < nout; ++c) {
    out.comp[c].a = oc[c];
    out.lat->fft_backward(out.comp[c].a.data());
  }
  return out;
}

FormField hodge_laplacian_flat(const FormField& x, const Eigen::Matrix3cd& g) {
  const int p = x.p, q = x.q;
  const Eigen::MatrixXcd gram = form_gram(g, p, q);
  std::optional<Eigen::MatrixXcd> gram_up, gram_dn;
  if (p + 1 <= 3) gram_up = form_gram(g, p + 1, q);
  if (p - 1 >= 0) gram_dn = form_gram(g, p - 1, q);
  Spectra sp(x);
  FormField out(x.lat, p, q);
  const int n = x.ncomp();
  for (std::size_t i = 0; i < x.lat->size(); ++i) {
    const auto bin = x.lat->coords(i);
    Eigen::MatrixXcd lap = Eigen::MatrixXcd::Zero(n, n);
    if (gram_up) {
      const Eigen::MatrixXcd d = del_mode_matrix(*x.lat, bin, p, q);
      lap += gram_adjoint(d, gram, *gram_up) * d;
    }
    if (gram_dn && p >= 1) {
      const Eigen::MatrixXcd d = del_mode_matrix(*x.lat, bin, p - 1, q);
      lap += d * gram_adjoint(d, *gram_dn, gram);
    }
    Eigen::VectorXcd v(n);
    for (int c = 0; c < n; ++c) v[c] = sp.c[c][i];
    Eigen::VectorXcd w = lap * v;
    for (int c = 0; c < n; ++c) sp.c[c][i] = w[c];
  }
  for (int c = 0; c < n; ++c) {
    out.comp[c].a = sp.c[c];
    out.lat->fft_backward(out.comp[c].a.data());
  }
  return out;
}

double laplace_symbol(const Lattice& lat, const Eigen::Matrix3cd& g,
                      const std::array<int, 6>& bin) {
  const Eigen::Matrix3cd ginv = g.inverse();
  cplx s(0.0);
  for (int j = 0; j < 3; ++j)
    for (int k = 0; k < 3; ++k)
      s += ginv(k, j) * deriv_symbol_hol(lat, bin, j) * std::conj(deriv_symbol_hol(lat, bin, k));
  return s.real();
}

// ---------------------------------------------------------------------------
// Matrix-valued forms
// ---------------------------------------------------------------------------

MatrixForm::MatrixForm(LatticePtr l, int p_, int q_, int rank) : lat(std::move(l)), p(p_), q(q_), r(rank) {
  comp.assign(static_cast<std::size_t>(multi::count(p)) * multi::count(q), MatrixField(lat, rank));
}

static void check_same_matform(const MatrixForm& x, const MatrixForm& y, const char* where) {
  check_same_lattice(x.lat, y.lat, where);
  if (x.p != y.p || x.q != y.q || x.r != y.r) throw UsageError(std::string(where) + ": shape mismatch");
}

MatrixForm& MatrixForm::operator+=(const MatrixForm& o) {
  check_same_matform(*this, o, "matform +=");
  for (int c = 0; c < ncomp(); ++c) comp[c] += o.comp[c];
  return *this;
}

MatrixForm& MatrixForm::operator-=(const MatrixForm& o) {
  check_same_matform(*this, o, "matform -=");
  for (int c = 0; c < ncomp(); ++c) comp[c] -= o.comp[c];
  return *this;
}

MatrixForm& MatrixForm::operator*=(cplx s) {
  for (auto& c : comp) c *= s;
  return *this;
}

double MatrixForm::max_abs() const {
  double m = 0.0;
  for (const auto& c : comp) m = std::max(m, c.max_abs());
  return m;
}

MatrixForm operator+(MatrixForm x, const MatrixForm& y) { return x += y; }
MatrixForm operator-(MatrixForm x, const MatrixForm& y) { return x -= y; }

MatrixForm mat_del(const MatrixForm& x) {
  if (x.p + 1 > 3) throw UsageError("mat_del: bidegree overflow");
  MatrixForm out(x.lat, x.p + 1, x.q, x.r);
  for (int hi = 0; hi < multi::count(x.p); ++hi)
    for (int ai = 0; ai < multi::count(x.q); ++ai) {
      const unsigned im = multi::mask_at(x.p, hi);
      for (int m = 0; m < 3; ++m) {
        if (im & (1u << m)) continue;
        const double sgn = multi::insert_sign(m, im);
        MatrixField d = matrix_derivative(x.at(hi, ai), m + 1, false);
        d *= cplx(sgn);
        out.at(multi::index_of(x.p + 1, im | (1u << m)), ai) += d;
      }
    }
  return out;
}

MatrixForm mat_dbar(const MatrixForm& x) {
  if (x.q + 1 > 3) throw UsageError("mat_dbar: bidegree overflow");
  MatrixForm out(x.lat, x.p, x.q + 1, x.r);
  const double psign = x.p % 2 ? -1.0 : 1.0;
  for (int hi = 0; hi < multi::count(x.p); ++hi)
    for (int ai = 0; ai < multi::count(x.q); ++ai) {
      const unsigned jm = multi::mask_at(x.q, ai);
      for (int m = 0; m < 3; ++m) {
        if (jm & (1u << m)) continue;
        const double sgn = psign * multi::insert_sign(m, jm);
        MatrixField d = matrix_derivative(x.at(hi, ai), m + 1, true);
        d *= cplx(sgn);
        out.at(hi, multi::index_of(x.q + 1, jm | (1u << m))) += d;
      }
    }
  return out;
}

MatrixForm wedge_mat(const MatrixForm& x, const MatrixForm& y, Exec exec) {
  check_same_lattice(x.lat, y.lat, "wedge_mat");
  if (x.r != y.r) throw UsageError("wedge_mat: rank mismatch");
  if (x.p + y.p > 3 || x.q + y.q > 3) throw UsageError("wedge_mat: bidegree overflow");
  MatrixForm out(x.lat, x.p + y.p, x.q + y.q, x.r);
  const auto tab = build_wedge_table(x.p, x.q, y.p, y.q);
  parallel_for(
      x.lat->size(),
      [&](std::size_t i) {
        for (const auto& e : tab)
          out.comp[e.cout].at(i) += e.sign * (x.comp[e.c1].at(i) * y.comp[e.c2].at(i)).eval();
      },
      exec);
  return out;
}

MatrixForm wedge_scalar_mat(const FormField& x, const MatrixForm& y, Exec exec) {
  check_same_lattice(x.lat, y.lat, "wedge_scalar_mat");
  if (x.p + y.p > 3 || x.q + y.q > 3) throw UsageError("wedge_scalar_mat: bidegree overflow");
  MatrixForm out(x.lat, x.p + y.p, x.q + y.q, y.r);
  const auto tab = build_wedge_table(x.p, x.q, y.p, y.q);
  parallel_for(
      x.lat->size(),
      [&](std::size_t i) {
        for (const auto& e : tab)
          out.comp[e.cout].at(i) += (e.sign * x.comp[e.c1].a[i]) * y.comp[e.c2].at(i);
      },
      exec);
  return out;
}

FormField trace_form(const MatrixForm& x) {
  FormField out(x.lat, x.p, x.q);
  for (int c = 0; c < x.ncomp(); ++c) out.comp[c] = pw_trace(x.comp[c]);
  return out;
}

FormField wedge_trace(const MatrixForm& x, const MatrixForm& y, Exec exec) {
  check_same_lattice(x.lat, y.lat, "wedge_trace");
  if (x.r != y.r) throw UsageError("wedge_trace: rank mismatch");
  if (x.p + y.p > 3 || x.q + y.q > 3) throw UsageError("wedge_trace: bidegree overflow");
  FormField out(x.lat, x.p + y.p, x.q + y.q);
  const auto tab = build_wedge_table(x.p, x.q, y.p, y.q);
  parallel_for(
      x.lat->size(),
      [&](std::size_t i) {
        for (const auto& e : tab)
          out.comp[e.cout].a[i] += e.sign * (x.comp[e.c1].at(i) * y.comp[e.c2].at(i)).trace();
      },
      exec);
  return out;
}

double closedness_defect_mat(const MatrixForm& x) {
  double m = 0.0;
  if (x.p < 3) m = std::max(m, mat_del(x).max_abs());
  if (x.q < 3) m = std::max(m, mat_dbar(x).max_abs());
  return m;
}

}  // namespace strom
