#ifndef STROM_RANDOM_FIELDS_HPP
#define STROM_RANDOM_FIELDS_HPP

#include <random>

#include "strom/hermitian.hpp"

namespace strom {

using Rng = std::mt19937_64;

// Band limit that keeps identities involving derivatives of *products* exact:
// quadratic mode sums must stay strictly below the Nyquist bin.
int band_limit_linear(const Lattice& lat);   // n/4
int band_limit_product(const Lattice& lat);  // min(n/4, (n/2 - 1)/2)

// Band-limited random scalar: Fourier modes with |m| <= kmax on every active axis,
// unit-normalized in max norm. Deterministic for a given rng state.
ScalarField random_scalar(const LatticePtr& lat, int kmax, Rng& rng, bool real_valued,
                          bool mean_zero);

// Random (p,q)-form with band-limited components; symmetrized to a real form when
// requested (requires p == q).
FormField random_form(const LatticePtr& lat, int p, int q, int kmax, Rng& rng,
                      bool real_valued = false, bool mean_zero = false);

// Random real (1,1)-form (pointwise hermitian coefficient matrix).
FormField random_real_11(const LatticePtr& lat, int kmax, Rng& rng, bool mean_zero = true);

// Random closed real (2,2)-form in Im(i del dbar).
FormField random_exact_22(const LatticePtr& lat, int kmax, Rng& rng);

// Random hermitian matrix field; optionally traceless and with zero lattice mean
// (the gauge-fixed deformation space).
MatrixField random_hermitian(const LatticePtr& lat, int rank, int kmax, Rng& rng,
                             bool traceless = true, bool mean_zero = true);

// Random positive hermitian metric exp(amplitude * random_hermitian)* base.
MatrixField random_positive_matrix(const LatticePtr& lat, int rank, int kmax, Rng& rng,
                                   double amplitude, const Eigen::MatrixXcd& base);

// Random constant positive hermitian 3x3 matrix with condition number bounded away
// from zero (for codec round-trip suites).
Eigen::Matrix3cd random_constant_positive(Rng& rng);

}  // namespace strom

#endif
