#include "lrkernel/spectrum.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>
#include <utility>

namespace lrk {

SpectralDecomposition::SpectralDecomposition(ManyBodyOperator hamiltonian, double tol_e)
    : hamiltonian_(std::move(hamiltonian)), tol_e_(tol_e) {
  if (!(tol_e > 0.0)) throw ValidationError("diagonalize: tol_e must be positive");
  const CMatrix& h = hamiltonian_.matrix();
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(h);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("diagonalize: eigensolver did not converge");
  }
  energies_ = solver.eigenvalues();
  eigenvectors_ = solver.eigenvectors();

  const double h_norm = h.norm();
  residual_norm_ = (h * eigenvectors_ - eigenvectors_ * energies_.asDiagonal()).norm();
  const double gram_defect =
      (eigenvectors_.adjoint() * eigenvectors_ - CMatrix::Identity(dim(), dim())).norm();
  if (residual_norm_ > 1e-10 * std::max(1.0, h_norm) || gram_defect > 1e-12 * dim()) {
    std::ostringstream os;
    os << "diagonalize: eigensolver accuracy check failed (residual " << residual_norm_
       << ", Gram defect " << gram_defect << ", ||H|| " << h_norm << ")";
    throw std::runtime_error(os.str());
  }

  // Relative-tolerance grouping with transitive closure; on the sorted
  // spectrum this reduces to chaining adjacent near-equal pairs.
  group_of_.assign(dim(), 0);
  for (int k = 0; k < dim(); ++k) {
    if (k > 0) {
      const double gap = energies_(k) - energies_(k - 1);
      const double scale = std::max(1.0, std::abs(energies_(k)));
      group_of_[k] = (gap <= tol_e_ * scale) ? group_of_[k - 1] : group_of_[k - 1] + 1;
    }
  }
  const int n_groups = dim() == 0 ? 0 : group_of_.back() + 1;
  groups_.assign(n_groups, {});
  for (int k = 0; k < dim(); ++k) groups_[group_of_[k]].push_back(k);
  group_energy_.assign(n_groups, 0.0);
  for (int g = 0; g < n_groups; ++g) {
    double sum = 0.0;
    for (int k : groups_[g]) sum += energies_(k);
    group_energy_[g] = sum / static_cast<double>(groups_[g].size());
  }
}

double SpectralDecomposition::omega(int k, int l) const {
  if (group_of_.at(k) == group_of_.at(l)) return 0.0;
  return group_energy_[group_of_[k]] - group_energy_[group_of_[l]];
}

std::vector<GapEntry> SpectralDecomposition::excitation_gaps() const {
  std::vector<GapEntry> gaps;
  gaps.reserve(static_cast<std::size_t>(dim()) * (dim() - 1) / 2);
  for (int k = 1; k < dim(); ++k) {
    for (int l = 0; l < k; ++l) gaps.push_back({k, l, omega(k, l)});
  }
  return gaps;
}

SpectrumPtr diagonalize(const ManyBodyOperator& hamiltonian, double tol_e) {
  return std::make_shared<const SpectralDecomposition>(hamiltonian, tol_e);
}

}  // namespace lrk
