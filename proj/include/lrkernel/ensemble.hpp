// Ensemble weights over a spectral decomposition: pure ground state,
// custom, canonical and grand canonical, plus the monotone-weight check
// and the extended degenerate subspaces D(K) and D^r(K).
#pragma once

#include "lrkernel/spectrum.hpp"

#include <vector>

namespace lrk {

enum class EnsembleKind { pure, custom, canonical, grand_canonical };

const char* to_string(EnsembleKind kind);

class Ensemble {
 public:
  Ensemble(SpectrumPtr spectrum, RVector weights, EnsembleKind kind, double beta, double mu,
           double tol_w);

  const RVector& weights() const { return weights_; }
  double weight(int k) const { return weights_(k); }
  int dim() const { return static_cast<int>(weights_.size()); }
  EnsembleKind kind() const { return kind_; }
  double beta() const { return beta_; }
  double mu() const { return mu_; }
  // Weight-equality tolerance, relative to the largest weight.
  double tol_w() const { return tol_w_; }
  double tol_w_abs() const { return tol_w_ * weights_.maxCoeff(); }
  // Canonical and grand canonical weights depend on the energy alone;
  // the sufficiency condition is trivially satisfied for them.
  bool energy_only() const {
    return kind_ == EnsembleKind::canonical || kind_ == EnsembleKind::grand_canonical;
  }
  bool equal_weights(int k, int l) const;

  const SpectralDecomposition& spectrum() const { return *spectrum_; }
  const SpectrumPtr& spectrum_ptr() const { return spectrum_; }

  CMatrix density_matrix() const;  // sum_K w_K |Psi_K><Psi_K|

 private:
  SpectrumPtr spectrum_;
  RVector weights_;
  EnsembleKind kind_;
  double beta_;
  double mu_;
  double tol_w_;
};

inline constexpr double kDefaultTolW = 1e-12;

// Requires a non-degenerate ground state; use custom_weights for an
// equal-weight mixture over a degenerate ground manifold.
Ensemble pure_ground_state(SpectrumPtr spectrum, double tol_w = kDefaultTolW);

// w_K = exp(-beta (E_K - E_0)) / Z on snapped group energies, so
// degenerate states carry bitwise-equal weights.
Ensemble canonical_weights(SpectrumPtr spectrum, double beta, double tol_w = kDefaultTolW);

// The spectrum must be of the shifted generator H' = H - mu N on the full
// Fock basis (see grand_canonical_generator); weights are Boltzmann in E'.
Ensemble grand_canonical_weights(SpectrumPtr spectrum, double beta, double mu,
                                 double tol_w = kDefaultTolW);

// H' = H - mu N. Rejects Hamiltonians that do not commute with N.
ManyBodyOperator grand_canonical_generator(const ManyBodyOperator& hamiltonian, double mu);

Ensemble custom_weights(SpectrumPtr spectrum, RVector weights, double tol_w = kDefaultTolW);

struct MonotoneViolation {
  int k = 0;  // pair with k > l and (w_l - w_k) Omega_kl < 0
  int l = 0;
  double value = 0.0;
};

// Empty iff (w_L - w_K) Omega_KL >= -tol_w_abs |Omega_KL| for all pairs.
std::vector<MonotoneViolation> check_monotone(const Ensemble& ensemble);

struct ExtendedDegenerateStructure {
  // d[k] = D(K): same degeneracy group or equal weight. Sorted, contains k.
  std::vector<std::vector<int>> d;
  // dr[k] = D^r(K): same degeneracy group and different weight. Sorted.
  std::vector<std::vector<int>> dr;

  bool in_d(int k, int l) const;
  bool in_dr(int k, int l) const;
};

ExtendedDegenerateStructure extended_degenerate_structure(const Ensemble& ensemble);

}  // namespace lrk
