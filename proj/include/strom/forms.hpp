#ifndef STROM_FORMS_HPP
#define STROM_FORMS_HPP

#include <Eigen/Dense>
#include <optional>

#include "strom/matrix_field.hpp"

namespace strom {

// ---------------------------------------------------------------------------
// Multi-index tables for increasing tuples in {1,2,3} (stored zero-based as
// bitmasks over {0,1,2}).
// ---------------------------------------------------------------------------
namespace multi {

inline constexpr int kChoose3[4] = {1, 3, 3, 1};

// Masks of rank-p increasing tuples in lexicographic order.
int count(int p);
unsigned mask_at(int p, int idx);
int index_of(int p, unsigned mask);

// Sign of sorting dz^A ^ dz^B into increasing order; 0 if A and B overlap.
int merge_sign(unsigned a, unsigned b);
// Sign of sorting dz^m ^ dz^A (m not in A).
int insert_sign(int m, unsigned a);

}  // namespace multi

// ---------------------------------------------------------------------------
// FormField: smooth (p,q)-form, canonical storage.
//
// Components are the coefficients A_{I,J} in
//   Psi = sum_{I,J increasing} A_{I,J} dz^I ^ dzbar^J,
// all holomorphic factors first. In the fully antisymmetrized convention
// Psi = (1/(p!q!)) Psi_{I Jbar} dz^I ^ dzbar^J with interleaved (2,2) components
// Psi_{s rbar j kbar}, the translation is A_{(s,j),(r,k)} = -Psi_{s rbar j kbar}
// (s<j, r<k); accessors below convert both ways.
// ---------------------------------------------------------------------------
struct FormField {
  LatticePtr lat;
  int p = 0, q = 0;
  std::vector<ScalarField> comp;  // size count(p)*count(q); index hi*count(q)+ai

  FormField() = default;
  FormField(LatticePtr l, int p_, int q_);

  int ncomp() const { return static_cast<int>(comp.size()); }
  int ci(int hi, int ai) const { return hi * multi::count(q) + ai; }
  ScalarField& at(int hi, int ai) { return comp[ci(hi, ai)]; }
  const ScalarField& at(int hi, int ai) const { return comp[ci(hi, ai)]; }

  FormField& operator+=(const FormField& o);
  FormField& operator-=(const FormField& o);
  FormField& operator*=(cplx s);
  double max_abs() const;

  void remove_constant_mode();
  double constant_mode_abs() const;
};

FormField operator+(FormField x, const FormField& y);
FormField operator-(FormField x, const FormField& y);
FormField operator*(cplx s, FormField x);

// A (3,3)-form; scalar density relative to the flat volume element.
using TopForm = FormField;

// Graded-commutative wedge in the stored convention.
FormField wedge(const FormField& x, const FormField& y, Exec exec = Exec::Parallel);

// Exterior derivatives by spectral differentiation of components.
FormField del(const FormField& x);
FormField dbar(const FormField& x);

// Complex conjugate form ((p,q) -> (q,p)).
FormField conj_form(const FormField& x);
// (x + conj(x))/2; requires p == q.
FormField real_form(const FormField& x);
bool is_real(const FormField& x, double tol = 1e-12);
double reality_defect(const FormField& x);
// max |d x| over components of del x and dbar x.
double closedness_defect(const FormField& x);

// Theta = i del dbar beta for a real (1,1)-form beta. Real, closed, no constant mode.
FormField i_del_dbar(const FormField& beta, double reality_tol = 1e-10);

// ---------------------------------------------------------------------------
// Codecs between component conventions.
// ---------------------------------------------------------------------------

// omega = i g_{jk} dz^j ^ dzbar^k  <->  3x3 hermitian matrix field g.
FormField form_from_metric_matrix(const MatrixField& g);
MatrixField metric_matrix_from_form(const FormField& omega11);

// Fully antisymmetrized interleaved (2,2) component Psi_{s rbar j kbar}
// (all indices 0-based) from canonical storage; and the inverse fill.
cplx paper22_component(const FormField& psi, std::size_t site, int s, int r, int j, int k);

// Hatted-basis coefficients Psi^{p qbar} of a (2,2)-form: the 3x3 matrix field P with
// A_{I_p, J_q} = 2 (-1)^{p+q} P(p,q), I_p / J_q the complements of p / q. For
// Psi = |Omega|_w w^2 this gives P = |Omega| det(g) (g^{-1})^T, positive hermitian.
MatrixField hatted_from_22(const FormField& psi);
FormField form22_from_hatted(const MatrixField& P);

// ---------------------------------------------------------------------------
// Metric pairings (constant background metric).
// ---------------------------------------------------------------------------

// Gram matrix of the canonical (p,q) basis for constant metric g:
// <dz^I dzbar^J, dz^K dzbar^L> = det(gup[I,K]) * conj(det(gup[J,L])), gup^{ik} = (g^{-1})(k,i).
Eigen::MatrixXcd form_gram(const Eigen::Matrix3cd& g, int p, int q);

// Pointwise inner product <a,b>_g at one site (antilinear in b).
cplx pointwise_inner(const FormField& a, const FormField& b, const Eigen::MatrixXcd& gram,
                     std::size_t site);

// Integration of a (3,3)-form: spectrally exact trapezoidal quadrature.
cplx integrate(const TopForm& t);
// Scalar density rho with integral(t) = sum rho * cell_volume (rho = -8i * A).
ScalarField top_density(const TopForm& t);

// L2 inner product with TopForm weight: int <a,b>_g dens(weight). Conjugate-symmetric,
// positive definite for positive weights.
cplx l2_inner(const FormField& a, const FormField& b, const Eigen::Matrix3cd& g,
              const TopForm& weight);
double l2_norm(const FormField& a, const Eigen::Matrix3cd& g, const TopForm& weight);

// ---------------------------------------------------------------------------
// Contractions and flat-metric Hodge theory.
// ---------------------------------------------------------------------------

// Raw index contraction (i Lambda_w Psi)_{jk} = g^{ab} Psi_{a bbar j kbar} (pointwise
// metric allowed). For Psi = w^2 this equals -4 g.
MatrixField contract_lambda_raw(const MatrixField& g, const MatrixField& ginv,
                                const FormField& psi22, Exec exec = Exec::Parallel);

// Form-valued Lambda_w Psi, normalized so that Lambda_w(w^2) = 4 w: the (1,1)-form
// with metric matrix -raw.
FormField contract_lambda(const MatrixField& g, const MatrixField& ginv, const FormField& psi22,
                          Exec exec = Exec::Parallel);

// Adjoint route for tests: Lambda as the metric adjoint of wedging with omega
// (constant metric, any bidegree with p,q >= 1).
FormField lambda_adjoint_flat(const FormField& psi, const Eigen::Matrix3cd& g);

// del-adjoint with respect to the constant-metric L2 pairing: (p,q) -> (p-1,q).
FormField del_adjoint_flat(const FormField& x, const Eigen::Matrix3cd& g);

// Hodge Laplacian del del^+ + del^+ del at a constant background metric.
FormField hodge_laplacian_flat(const FormField& x, const Eigen::Matrix3cd& g);

// Per-mode scalar symbol of the flat Laplacian: sum g^{jk} s_j(k) conj(s_k(k)).
double laplace_symbol(const Lattice& lat, const Eigen::Matrix3cd& g, const std::array<int, 6>& bin);

// Per-mode coefficient matrices of del ((p,q) -> (p+1,q)) and dbar ((p,q) -> (p,q+1)).
Eigen::MatrixXcd del_mode_matrix(const Lattice& lat, const std::array<int, 6>& bin, int p, int q);
Eigen::MatrixXcd dbar_mode_matrix(const Lattice& lat, const std::array<int, 6>& bin, int p, int q);

// ---------------------------------------------------------------------------
// Matrix-valued forms (End E - valued): curvatures, characteristic forms.
// ---------------------------------------------------------------------------
struct MatrixForm {
  LatticePtr lat;
  int p = 0, q = 0;
  int r = 0;
  std::vector<MatrixField> comp;

  MatrixForm() = default;
  MatrixForm(LatticePtr l, int p_, int q_, int rank);
  int ncomp() const { return static_cast<int>(comp.size()); }
  int ci(int hi, int ai) const { return hi * multi::count(q) + ai; }
  MatrixField& at(int hi, int ai) { return comp[ci(hi, ai)]; }
  const MatrixField& at(int hi, int ai) const { return comp[ci(hi, ai)]; }
  MatrixForm& operator+=(const MatrixForm& o);
  MatrixForm& operator-=(const MatrixForm& o);
  MatrixForm& operator*=(cplx s);
  double max_abs() const;
};

MatrixForm operator+(MatrixForm x, const MatrixForm& y);
MatrixForm operator-(MatrixForm x, const MatrixForm& y);

MatrixForm mat_del(const MatrixForm& x);
MatrixForm mat_dbar(const MatrixForm& x);
// Wedge with pointwise matrix product (order preserved).
MatrixForm wedge_mat(const MatrixForm& x, const MatrixForm& y, Exec exec = Exec::Parallel);
// Wedge of a scalar form with a matrix form.
MatrixForm wedge_scalar_mat(const FormField& x, const MatrixForm& y, Exec exec = Exec::Parallel);
// Componentwise trace.
FormField trace_form(const MatrixForm& x);
// tr(x ^ y) for matrix-valued forms.
FormField wedge_trace(const MatrixForm& x, const MatrixForm& y, Exec exec = Exec::Parallel);

double closedness_defect_mat(const MatrixForm& x);

}  // namespace strom

#endif
