// Small dense linear-algebra helpers shared by all modules: Hermiticity
// checks, SVD-based null spaces with an auditable threshold gap, and
// principal angles between subspaces.
#pragma once

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>

namespace lrk {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

// Thrown when an input violates a documented precondition (CLI exit 2).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Thrown when a cross-check the theory guarantees fails (CLI exit 3).
class AssertionFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

double hermiticity_defect(const CMatrix& a);      // ||A - A^dag||_F / max(1, ||A||_F)
bool is_hermitian(const CMatrix& a, double tol);

double spectral_norm(const CMatrix& a);           // largest singular value

// Null space of a real matrix. Columns of `basis` are orthonormal.
// `gap` is the ratio smallest-kept / largest-dropped singular value
// (infinity when nothing was dropped or the dropped values vanish).
struct Nullspace {
  RMatrix basis;
  RVector singular_values;  // descending
  int rank = 0;
  double gap = 0.0;
};

// The rank cut is tol_rank * max(sigma_max, scale_floor): relative to the
// largest singular value, with an absolute floor so a map whose entries
// are pure numerical noise (sigma_max far below the natural scale of the
// problem) reads as zero. An empty or zero matrix has a full null space.
Nullspace nullspace(const RMatrix& a, int n_cols, double tol_rank,
                    double scale_floor = 0.0);

// Principal angles between the column spans of two orthonormal bases,
// ascending, computed through sines (singular values of (I - U U^T) V) so
// that angles far below sqrt(machine eps) are resolved.
RVector principal_angles(const RMatrix& u, const RMatrix& v);

// Largest principal angle, with dimension mismatch reported as pi/2.
double subspace_max_angle(const RMatrix& u, const RMatrix& v);

// Distance of a single vector to the span of an orthonormal basis,
// relative to ||x||.
double distance_to_span(const RMatrix& basis, const RVector& x);

// Stack [Re; Im] of a complex matrix row-wise: (2m) x n real matrix.
RMatrix realify_rows(const CMatrix& a);

}  // namespace lrk
