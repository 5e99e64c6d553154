#include "lrkernel/linalg.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>

namespace lrk {

double hermiticity_defect(const CMatrix& a) {
  const double scale = std::max(1.0, a.norm());
  return (a - a.adjoint()).norm() / scale;
}

bool is_hermitian(const CMatrix& a, double tol) {
  return a.rows() == a.cols() && hermiticity_defect(a) <= tol;
}

double spectral_norm(const CMatrix& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<CMatrix> svd(a);
  return svd.singularValues()(0);
}

Nullspace nullspace(const RMatrix& a, int n_cols, double tol_rank, double scale_floor) {
  Nullspace out;
  if (a.rows() == 0 || a.size() == 0 || a.norm() == 0.0) {
    out.basis = RMatrix::Identity(n_cols, n_cols);
    out.singular_values = RVector::Zero(std::min<int>(a.rows(), n_cols));
    out.rank = 0;
    out.gap = std::numeric_limits<double>::infinity();
    return out;
  }
  Eigen::JacobiSVD<RMatrix> svd(a, Eigen::ComputeFullV);
  const RVector& sv = svd.singularValues();
  const double cut = tol_rank * std::max(sv(0), scale_floor);
  int rank = 0;
  while (rank < sv.size() && sv(rank) > cut) ++rank;
  out.singular_values = sv;
  out.rank = rank;
  out.basis = svd.matrixV().rightCols(n_cols - rank);
  if (rank == 0) {
    out.gap = std::numeric_limits<double>::infinity();
  } else if (rank < sv.size() && sv(rank) > 0.0) {
    out.gap = sv(rank - 1) / sv(rank);
  } else {
    out.gap = std::numeric_limits<double>::infinity();
  }
  return out;
}

RVector principal_angles(const RMatrix& u, const RMatrix& v) {
  const int p = static_cast<int>(std::min(u.cols(), v.cols()));
  if (p == 0) return RVector(0);
  // sines of the angles: singular values of (I - U U^T) V (and symmetric
  // in the other order when the dimensions differ)
  const RMatrix& small = u.cols() <= v.cols() ? u : v;
  const RMatrix& large = u.cols() <= v.cols() ? v : u;
  RMatrix residual = small - large * (large.transpose() * small);
  Eigen::JacobiSVD<RMatrix> svd(residual);
  const RVector& sines = svd.singularValues();  // descending
  RVector angles(p);
  for (int i = 0; i < p; ++i) {
    angles(i) = std::asin(std::clamp(sines(p - 1 - i), 0.0, 1.0));
  }
  return angles;
}

double subspace_max_angle(const RMatrix& u, const RMatrix& v) {
  if (u.cols() != v.cols()) return std::acos(0.0);
  if (u.cols() == 0) return 0.0;
  RVector angles = principal_angles(u, v);
  return angles(angles.size() - 1);
}

double distance_to_span(const RMatrix& basis, const RVector& x) {
  const double nx = x.norm();
  if (nx == 0.0) return 0.0;
  if (basis.cols() == 0) return 1.0;
  RVector residual = x - basis * (basis.transpose() * x);
  return residual.norm() / nx;
}

RMatrix realify_rows(const CMatrix& a) {
  RMatrix out(2 * a.rows(), a.cols());
  out.topRows(a.rows()) = a.real();
  out.bottomRows(a.rows()) = a.imag();
  return out;
}

}  // namespace lrk
