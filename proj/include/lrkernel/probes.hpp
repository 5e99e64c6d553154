// Probe-operator families {Q_i}: site densities, the full Hermitian
// one-body basis, symmetry operators, ensemble 1RDMs with natural
// orbitals, zero-temperature pathological-kernel predictions, and the
// commutant of H within the probe span.
#pragma once

#include "lrkernel/ensemble.hpp"

#include <string>
#include <vector>

namespace lrk {

enum class SpanKind { site_density, one_body_full, custom };

// An ordered family of Hermitian one-body probes on a shared basis.
// Potential directions are real coefficient vectors over this family.
class ProbeSet {
 public:
  ProbeSet(FockBasisPtr basis, std::vector<OneBodyCoefficients> coefficients,
           std::vector<std::string> labels, SpanKind span_kind);

  int size() const { return static_cast<int>(operators_.size()); }
  const ManyBodyOperator& probe(int i) const { return operators_.at(i); }
  const OneBodyCoefficients& coefficients(int i) const { return coefficients_.at(i); }
  const std::string& label(int i) const { return labels_.at(i); }
  const std::vector<std::string>& labels() const { return labels_; }
  SpanKind span_kind() const { return span_kind_; }
  const FockBasisPtr& basis_ptr() const { return basis_; }

  // max_i ||Q_i||_2 (largest eigenvalue magnitude); tolerance scale.
  double max_norm() const { return max_norm_; }

  // L_v = sum_j v_j Q_j as a dense operator on the probe basis.
  ManyBodyOperator assemble(const RVector& v) const;
  // Coefficient matrix of L_v; usable to rebuild L_v on another basis.
  OneBodyCoefficients assemble_coefficients(const RVector& v) const;

  // Expand a Hermitian coefficient matrix in the probe family. Rejects
  // matrices outside the span (relative residual > 1e-10).
  RVector coefficients_of(const OneBodyCoefficients& h) const;

 private:
  FockBasisPtr basis_;
  std::vector<OneBodyCoefficients> coefficients_;
  std::vector<ManyBodyOperator> operators_;
  std::vector<std::string> labels_;
  SpanKind span_kind_;
  double max_norm_ = 0.0;
};

// One probe per site, n(site) = sum_spin c^dag c.
ProbeSet site_density_probes(FockBasisPtr basis);

// M^2 probes spanning all Hermitian M x M coefficient matrices:
// E(p) diagonals, then S(p:q) = E_pq + E_qp, then A(p:q) = i(E_pq - E_qp).
ProbeSet one_body_hermitian_basis(FockBasisPtr basis);

ProbeSet custom_probes(FockBasisPtr basis, std::vector<OneBodyCoefficients> coefficients,
                       std::vector<std::string> labels = {});

struct SymmetryProbe {
  std::string name;
  ManyBodyOperator op;
  RVector expansion;  // coefficients in one_body_hermitian_basis order
};

// N always; Sx, Sy, Sz when the orbitals carry spin labels.
std::vector<SymmetryProbe> symmetry_probes(FockBasisPtr basis);

struct NaturalOrbitalData {
  CMatrix gamma;        // 1RDM, gamma_pq = <c^dag_q c_p>
  RVector occupations;  // descending, in [0, 1]
  CMatrix orbitals;     // orthonormal columns, gamma u_k = n_k u_k
  double tol_occ = 1e-8;
};

NaturalOrbitalData ensemble_1rdm(const Ensemble& ensemble, double tol_occ = 1e-8);

// T=0 pathological kernel generators from the 1RDM structure: Hermitian
// couplings within the n=0 block and the n=1 block, plus couplings within
// every degenerate-occupation block when the system is non-interacting.
// Returned in the orbital basis. The two-electron paired-NO potentials are
// not predicted here; compute_kernel detects them numerically.
std::vector<OneBodyCoefficients> predict_pathological_generators(
    const NaturalOrbitalData& nodata, bool interacting, int n_particles);

struct CommutantResult {
  RMatrix basis;  // orthonormal coefficient vectors v with [H, L_v] = 0
  RVector singular_values;
  double gap = 0.0;
  int dim() const { return static_cast<int>(basis.cols()); }
};

// Null space of v -> [H, sum_j v_j Q_j] over real coefficient vectors.
CommutantResult commutant_basis(const ManyBodyOperator& hamiltonian, const ProbeSet& probes,
                                double tol_rank = 1e-10);

}  // namespace lrk
