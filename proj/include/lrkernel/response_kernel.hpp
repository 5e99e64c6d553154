// Kernel characterization of the retarded response map: Lehmann-form
// evaluation of chi(tau), the necessary-condition linear map and its null
// space, sufficiency residuals in pairwise and commutator form, final
// kernel assembly with commutant comparison, and the static thermal
// response probe.
#pragma once

#include "lrkernel/probes.hpp"

#include <string>
#include <vector>

namespace lrk {

// q[i](K, L) = <Psi_K| Q_i |Psi_L> for every probe.
class TransitionMoments {
 public:
  TransitionMoments(const ProbeSet& probes, const SpectralDecomposition& spectrum);

  int n_probes() const { return static_cast<int>(moments_.size()); }
  int dim() const { return dim_; }
  const CMatrix& moments(int i) const { return moments_.at(i); }
  Complex q(int i, int k, int l) const { return moments_.at(i)(k, l); }
  // Largest moment magnitude; the natural scale of the necessary map.
  double scale() const { return scale_; }

 private:
  int dim_;
  std::vector<CMatrix> moments_;
  double scale_ = 0.0;
};

struct PairIndex {
  int k = 0;  // k > l
  int l = 0;
};

// Rows of the necessary-condition map: pairs (K, L), K > L, outside the
// extended degenerate subspace, with entries q_j^{KL}.
struct NecessaryMap {
  std::vector<PairIndex> pairs;
  CMatrix a;       // pairs x probes
  RMatrix a_real;  // [Re; Im] stacked, 2*pairs x probes
  double scale = 0.0;  // probe-moment scale, floor for the rank cut
};

NecessaryMap necessary_map(const TransitionMoments& tm, const Ensemble& ensemble,
                           const ExtendedDegenerateStructure& eds);

// Null space of the realified necessary map; empty basis means the
// kernel candidate space is trivial.
Nullspace candidate_kernel(const NecessaryMap& map, int n_probes, double tol_rank = 1e-10);

// Eq.-(2) form: sum over pairs of (w_L - w_K) Omega / (s^2 + Omega^2)
// |a_KL|^2 for a static direction v. Non-negative for monotone ensembles;
// zero exactly on the candidate kernel, for every s > 0.
double necessary_value(const RVector& v, double s, const TransitionMoments& tm,
                       const Ensemble& ensemble);

struct SufficiencyResidual {
  RVector pairwise;    // r_i from the restricted pair sum
  RVector commutator;  // c_i = Re[i Tr(rho [Q_i, L_v])], independent route
  double max_abs = 0.0;
  double scale = 1.0;  // max_i ||Q_i||_2^2
  bool pass = false;   // max_i |r_i| <= 1e-10 * scale
};

SufficiencyResidual sufficiency_residual(const RVector& v, const TransitionMoments& tm,
                                         const Ensemble& ensemble,
                                         const ExtendedDegenerateStructure& eds,
                                         const ProbeSet& probes);

struct KernelOptions {
  double tol_rank = 1e-10;
  double tol_angle = 1e-8;
  double tol_sufficiency = 1e-10;  // relative to max ||Q_i||_2^2
  // For energy-only ensembles the theory guarantees kernel == commutant
  // within the probe span; failing that check throws AssertionFailure
  // unless disabled.
  bool enforce_commutant_match = true;
};

struct KernelReport {
  EnsembleKind kind = EnsembleKind::pure;
  double beta = 0.0;
  double mu = 0.0;
  int n_probes = 0;
  int n_pairs = 0;

  RMatrix candidate_basis;  // probes x n_candidates, orthonormal
  RVector necessary_singular_values;
  double necessary_gap = 0.0;
  int necessary_rank = 0;

  bool sufficiency_skipped = false;  // energy-only kind
  std::vector<double> candidate_residual_max;
  std::vector<double> candidate_residual_form_gap;  // max |r_i - c_i|
  RMatrix kernel_basis;                             // probes x kernel_dim

  RMatrix commutant;
  RVector commutant_singular_values;
  double commutant_gap = 0.0;
  RVector principal_angles;  // kernel vs commutant
  double max_principal_angle = 0.0;
  bool commutant_match = false;

  double tol_rank = 0.0;
  double tol_angle = 0.0;
  double probe_scale = 0.0;  // max ||Q_i||_2

  int candidate_dim() const { return static_cast<int>(candidate_basis.cols()); }
  int kernel_dim() const { return static_cast<int>(kernel_basis.cols()); }
  int commutant_dim() const { return static_cast<int>(commutant.cols()); }
};

// Full pipeline. Rejects non-monotone ensembles with the violating pairs.
KernelReport compute_kernel(const ProbeSet& probes, const Ensemble& ensemble,
                           const KernelOptions& options = {});

// Retarded response matrix chi_ij(tau) in Lehmann form; exactly zero for
// tau < 0 and real for tau >= 0.
RMatrix chi_time(const TransitionMoments& tm, const Ensemble& ensemble, double tau);
RMatrix chi_time(const ProbeSet& probes, const Ensemble& ensemble, double tau);

// g_i(tau_k) = sum_j chi_ij(tau_k) v_j tabulated on a uniform grid;
// the convolution kernel of a separable perturbation along v.
RMatrix chi_direction_series(const TransitionMoments& tm, const Ensemble& ensemble,
                             const RVector& v, const RVector& taus);

// Central finite difference of Tr[rho(H + lambda L_v) Q_i] at lambda = 0
// where rho is the thermal state of the perturbed generator (canonical on
// the sector of H; grand canonical uses H + lambda L_v - mu N).
RVector static_thermal_response(const ManyBodyOperator& hamiltonian, const ProbeSet& probes,
                                EnsembleKind kind, double beta, double mu, const RVector& v,
                                double step = 1e-5);

}  // namespace lrk
