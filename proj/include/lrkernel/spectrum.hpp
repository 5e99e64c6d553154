// Exact diagonalization with tolerance-based degeneracy grouping. Gaps
// between states of the same group are snapped to exactly zero so that
// downstream degeneracy branches are exact.
#pragma once

#include "lrkernel/fock_space.hpp"

#include <memory>
#include <vector>

namespace lrk {

struct GapEntry {
  int k = 0;  // upper state, k > l
  int l = 0;
  double omega = 0.0;  // E_k - E_l, snapped to 0 inside a degeneracy group
};

class SpectralDecomposition {
 public:
  SpectralDecomposition(ManyBodyOperator hamiltonian, double tol_e);

  int dim() const { return static_cast<int>(energies_.size()); }
  const RVector& energies() const { return energies_; }
  double energy(int k) const { return energies_(k); }
  const CMatrix& eigenvectors() const { return eigenvectors_; }
  CVector eigenvector(int k) const { return eigenvectors_.col(k); }

  const std::vector<std::vector<int>>& degeneracy_groups() const { return groups_; }
  int group_of(int k) const { return group_of_.at(k); }
  // Representative energy of a group (mean over members); equal by
  // construction for all members, used for exact weight equality.
  double group_energy(int g) const { return group_energy_.at(g); }
  double snapped_energy(int k) const { return group_energy_.at(group_of_.at(k)); }

  bool degenerate(int k, int l) const { return group_of_.at(k) == group_of_.at(l); }
  double omega(int k, int l) const;  // E_k - E_l, exactly 0 within a group
  std::vector<GapEntry> excitation_gaps() const;

  const ManyBodyOperator& hamiltonian() const { return hamiltonian_; }
  const FockBasisPtr& basis_ptr() const { return hamiltonian_.basis_ptr(); }
  double tol_e() const { return tol_e_; }
  double residual_norm() const { return residual_norm_; }

 private:
  ManyBodyOperator hamiltonian_;
  double tol_e_;
  RVector energies_;
  CMatrix eigenvectors_;
  std::vector<std::vector<int>> groups_;
  std::vector<int> group_of_;
  std::vector<double> group_energy_;
  double residual_norm_ = 0.0;
};

using SpectrumPtr = std::shared_ptr<const SpectralDecomposition>;

SpectrumPtr diagonalize(const ManyBodyOperator& hamiltonian, double tol_e = 1e-9);

}  // namespace lrk
