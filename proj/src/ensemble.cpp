#include "lrkernel/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <utility>

namespace lrk {

const char* to_string(EnsembleKind kind) {
  switch (kind) {
    case EnsembleKind::pure: return "pure";
    case EnsembleKind::custom: return "custom";
    case EnsembleKind::canonical: return "canonical";
    case EnsembleKind::grand_canonical: return "grand_canonical";
  }
  return "unknown";
}

Ensemble::Ensemble(SpectrumPtr spectrum, RVector weights, EnsembleKind kind, double beta,
                   double mu, double tol_w)
    : spectrum_(std::move(spectrum)),
      weights_(std::move(weights)),
      kind_(kind),
      beta_(beta),
      mu_(mu),
      tol_w_(tol_w) {
  if (!spectrum_) throw ValidationError("Ensemble: null spectrum");
  if (weights_.size() != spectrum_->dim()) {
    throw ValidationError("Ensemble: weight count does not match spectrum dimension");
  }
  for (int k = 0; k < dim(); ++k) {
    if (!(weights_(k) >= 0.0)) throw ValidationError("Ensemble: weights must be non-negative");
  }
  const double sum = weights_.sum();
  if (std::abs(sum - 1.0) > 1e-12) {
    throw ValidationError("Ensemble: weights must sum to one");
  }
}

bool Ensemble::equal_weights(int k, int l) const {
  return std::abs(weights_(k) - weights_(l)) <= tol_w_abs();
}

CMatrix Ensemble::density_matrix() const {
  const CMatrix& psi = spectrum_->eigenvectors();
  return psi * weights_.asDiagonal() * psi.adjoint();
}

Ensemble pure_ground_state(SpectrumPtr spectrum, double tol_w) {
  const auto& groups = spectrum->degeneracy_groups();
  if (groups.empty()) throw ValidationError("pure_ground_state: empty spectrum");
  if (groups.front().size() != 1) {
    std::ostringstream os;
    os << "pure_ground_state: ground state is " << groups.front().size()
       << "-fold degenerate; use custom_weights to build an ensemble over the manifold";
    throw ValidationError(os.str());
  }
  RVector w = RVector::Zero(spectrum->dim());
  w(0) = 1.0;
  return Ensemble(std::move(spectrum), std::move(w), EnsembleKind::pure,
                  std::numeric_limits<double>::infinity(), 0.0, tol_w);
}

namespace {

// Boltzmann weights on snapped group energies, shifted by the ground
// energy for overflow safety. Members of a group get the identical double.
RVector boltzmann_weights(const SpectralDecomposition& spectrum, double beta) {
  const int dim = spectrum.dim();
  RVector w(dim);
  const double e0 = spectrum.group_energy(0);
  for (int k = 0; k < dim; ++k) {
    w(k) = std::exp(-beta * (spectrum.snapped_energy(k) - e0));
  }
  w /= w.sum();
  return w;
}

}  // namespace

Ensemble canonical_weights(SpectrumPtr spectrum, double beta, double tol_w) {
  if (!(beta >= 0.0) || !std::isfinite(beta)) {
    throw ValidationError("canonical_weights: beta must be finite and >= 0");
  }
  RVector w = boltzmann_weights(*spectrum, beta);
  return Ensemble(std::move(spectrum), std::move(w), EnsembleKind::canonical, beta, 0.0, tol_w);
}

Ensemble grand_canonical_weights(SpectrumPtr spectrum, double beta, double mu, double tol_w) {
  if (!(beta >= 0.0) || !std::isfinite(beta)) {
    throw ValidationError("grand_canonical_weights: beta must be finite and >= 0");
  }
  if (spectrum->basis_ptr()->sector().kind != Sector::Kind::full) {
    throw ValidationError(
        "grand_canonical_weights: the spectrum must live on the full Fock basis");
  }
  RVector w = boltzmann_weights(*spectrum, beta);
  return Ensemble(std::move(spectrum), std::move(w), EnsembleKind::grand_canonical, beta, mu,
                  tol_w);
}

ManyBodyOperator grand_canonical_generator(const ManyBodyOperator& hamiltonian, double mu) {
  const ManyBodyOperator n_op = number_operator(hamiltonian.basis_ptr());
  const double h_scale = std::max(1.0, hamiltonian.frobenius_norm());
  if (commutator_norm(hamiltonian, n_op) > 1e-12 * h_scale * n_op.matrix().norm()) {
    throw ValidationError(
        "grand_canonical_generator: Hamiltonian does not commute with the number operator");
  }
  return ManyBodyOperator(hamiltonian.basis_ptr(),
                          hamiltonian.matrix() - mu * n_op.matrix(), Provenance::composite);
}

Ensemble custom_weights(SpectrumPtr spectrum, RVector weights, double tol_w) {
  if (weights.size() != spectrum->dim()) {
    throw ValidationError("custom_weights: weight count does not match spectrum dimension");
  }
  for (int k = 0; k < weights.size(); ++k) {
    if (!(weights(k) >= 0.0)) {
      throw ValidationError("custom_weights: weights must be non-negative");
    }
  }
  const double sum = weights.sum();
  if (!(sum > 0.0)) throw ValidationError("custom_weights: weights sum to zero");
  weights /= sum;
  return Ensemble(std::move(spectrum), std::move(weights), EnsembleKind::custom,
                  std::numeric_limits<double>::quiet_NaN(), 0.0, tol_w);
}

std::vector<MonotoneViolation> check_monotone(const Ensemble& ensemble) {
  const SpectralDecomposition& spec = ensemble.spectrum();
  const RVector& w = ensemble.weights();
  const double tol = ensemble.tol_w_abs();
  std::vector<MonotoneViolation> violations;
  for (int k = 1; k < ensemble.dim(); ++k) {
    for (int l = 0; l < k; ++l) {
      const double omega = spec.omega(k, l);
      const double value = (w(l) - w(k)) * omega;
      if (value < -tol * std::abs(omega)) violations.push_back({k, l, value});
    }
  }
  return violations;
}

bool ExtendedDegenerateStructure::in_d(int k, int l) const {
  const auto& v = d.at(k);
  return std::binary_search(v.begin(), v.end(), l);
}

bool ExtendedDegenerateStructure::in_dr(int k, int l) const {
  const auto& v = dr.at(k);
  return std::binary_search(v.begin(), v.end(), l);
}

ExtendedDegenerateStructure extended_degenerate_structure(const Ensemble& ensemble) {
  const SpectralDecomposition& spec = ensemble.spectrum();
  const int dim = ensemble.dim();
  ExtendedDegenerateStructure eds;
  eds.d.assign(dim, {});
  eds.dr.assign(dim, {});
  for (int k = 0; k < dim; ++k) {
    for (int l = 0; l < dim; ++l) {
      const bool degenerate = spec.degenerate(k, l);
      const bool same_weight = ensemble.equal_weights(k, l);
      if (degenerate || same_weight) eds.d[k].push_back(l);
      if (degenerate && !same_weight) eds.dr[k].push_back(l);
    }
  }
  return eds;
}

}  // namespace lrk
