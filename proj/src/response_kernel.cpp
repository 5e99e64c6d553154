#include "lrkernel/response_kernel.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

namespace lrk {

TransitionMoments::TransitionMoments(const ProbeSet& probes,
                                     const SpectralDecomposition& spectrum)
    : dim_(spectrum.dim()) {
  if (probes.basis_ptr() != spectrum.basis_ptr()) {
    throw ValidationError("TransitionMoments: probes and spectrum live on different bases");
  }
  const CMatrix& psi = spectrum.eigenvectors();
  moments_.reserve(probes.size());
  for (int i = 0; i < probes.size(); ++i) {
    moments_.push_back(psi.adjoint() * probes.probe(i).matrix() * psi);
    scale_ = std::max(scale_, moments_.back().cwiseAbs().maxCoeff());
  }
}

namespace {

void require_monotone(const Ensemble& ensemble, const char* where) {
  const auto violations = check_monotone(ensemble);
  if (violations.empty()) return;
  std::ostringstream os;
  os << where << ": ensemble violates the monotone-weight condition on pairs";
  for (const auto& v : violations) os << " (" << v.k << "," << v.l << ")";
  throw ValidationError(os.str());
}

}  // namespace

NecessaryMap necessary_map(const TransitionMoments& tm, const Ensemble& ensemble,
                           const ExtendedDegenerateStructure& eds) {
  require_monotone(ensemble, "necessary_map");
  const int dim = tm.dim();
  const int n_probes = tm.n_probes();
  NecessaryMap map;
  for (int k = 1; k < dim; ++k) {
    for (int l = 0; l < k; ++l) {
      if (eds.in_d(k, l)) continue;
      map.pairs.push_back({k, l});
    }
  }
  const int n_pairs = static_cast<int>(map.pairs.size());
  map.a.resize(n_pairs, n_probes);
  for (int r = 0; r < n_pairs; ++r) {
    const auto [k, l] = map.pairs[r];
    for (int j = 0; j < n_probes; ++j) map.a(r, j) = tm.q(j, k, l);
  }
  map.a_real = realify_rows(map.a);
  map.scale = tm.scale();
  return map;
}

Nullspace candidate_kernel(const NecessaryMap& map, int n_probes, double tol_rank) {
  return nullspace(map.a_real, n_probes, tol_rank, map.scale);
}

double necessary_value(const RVector& v, double s, const TransitionMoments& tm,
                       const Ensemble& ensemble) {
  if (!(s > 0.0)) throw ValidationError("necessary_value: Laplace variable s must be > 0");
  require_monotone(ensemble, "necessary_value");
  const SpectralDecomposition& spec = ensemble.spectrum();
  const RVector& w = ensemble.weights();
  const int dim = tm.dim();
  double value = 0.0;
  for (int k = 1; k < dim; ++k) {
    for (int l = 0; l < k; ++l) {
      const double omega = spec.omega(k, l);
      if (omega == 0.0) continue;
      Complex a_kl(0.0, 0.0);
      for (int j = 0; j < tm.n_probes(); ++j) a_kl += tm.q(j, k, l) * v(j);
      value += (w(l) - w(k)) * omega / (s * s + omega * omega) * std::norm(a_kl);
    }
  }
  return value;
}

SufficiencyResidual sufficiency_residual(const RVector& v, const TransitionMoments& tm,
                                         const Ensemble& ensemble,
                                         const ExtendedDegenerateStructure& eds,
                                         const ProbeSet& probes) {
  const int n_probes = tm.n_probes();
  const RVector& w = ensemble.weights();
  SufficiencyResidual out;
  out.pairwise = RVector::Zero(n_probes);
  out.commutator = RVector::Zero(n_probes);
  out.scale = std::max(probes.max_norm() * probes.max_norm(), 1e-300);

  // Pairwise form, Eq.-(4) style: r_i = i sum_{L<K in D^r(L)}
  // (w_L - w_K) q_i^{LK} l^{KL} + c.c., a real number per probe.
  for (int l = 0; l < tm.dim(); ++l) {
    for (int k : eds.dr[l]) {
      if (k <= l) continue;
      Complex l_kl(0.0, 0.0);
      for (int j = 0; j < n_probes; ++j) l_kl += tm.q(j, k, l) * v(j);
      const double dw = w(l) - w(k);
      for (int i = 0; i < n_probes; ++i) {
        out.pairwise(i) += -2.0 * dw * std::imag(tm.q(i, l, k) * l_kl);
      }
    }
  }

  // Independent commutator route, Eq.-(5) style:
  // c_i = Re[ i sum_K w_K <Psi_K| [Q_i, L_v] |Psi_K> ].
  const CMatrix rho = ensemble.density_matrix();
  const CMatrix lv = probes.assemble(v).matrix();
  for (int i = 0; i < n_probes; ++i) {
    const CMatrix& q = probes.probe(i).matrix();
    const Complex tr = (rho * (q * lv - lv * q)).trace();
    out.commutator(i) = std::real(Complex(0.0, 1.0) * tr);
  }

  out.max_abs = out.pairwise.cwiseAbs().maxCoeff();
  out.pass = out.max_abs <= 1e-10 * out.scale;
  return out;
}

KernelReport compute_kernel(const ProbeSet& probes, const Ensemble& ensemble,
                           const KernelOptions& options) {
  require_monotone(ensemble, "compute_kernel");
  const SpectralDecomposition& spec = ensemble.spectrum();
  const ExtendedDegenerateStructure eds = extended_degenerate_structure(ensemble);
  const TransitionMoments tm(probes, spec);

  KernelReport report;
  report.kind = ensemble.kind();
  report.beta = ensemble.beta();
  report.mu = ensemble.mu();
  report.n_probes = probes.size();
  report.tol_rank = options.tol_rank;
  report.tol_angle = options.tol_angle;
  report.probe_scale = probes.max_norm();

  const NecessaryMap map = necessary_map(tm, ensemble, eds);
  report.n_pairs = static_cast<int>(map.pairs.size());
  const Nullspace candidates = candidate_kernel(map, probes.size(), options.tol_rank);
  report.candidate_basis = candidates.basis;
  report.necessary_singular_values = candidates.singular_values;
  report.necessary_gap = candidates.gap;
  report.necessary_rank = candidates.rank;

  // Sufficiency: the residual map is linear in v, so the kernel is the
  // null space of the residual matrix restricted to the candidate span.
  // Per-candidate residuals are reported for auditability either way.
  const int n_candidates = report.candidate_dim();
  const double suff_scale = std::max(probes.max_norm() * probes.max_norm(), 1e-300);
  report.sufficiency_skipped = ensemble.energy_only();
  std::vector<SufficiencyResidual> residuals;
  residuals.reserve(n_candidates);
  for (int c = 0; c < n_candidates; ++c) {
    residuals.push_back(
        sufficiency_residual(report.candidate_basis.col(c), tm, ensemble, eds, probes));
    report.candidate_residual_max.push_back(residuals.back().max_abs);
    report.candidate_residual_form_gap.push_back(
        (residuals.back().pairwise - residuals.back().commutator).cwiseAbs().maxCoeff());
  }
  if (report.sufficiency_skipped || n_candidates == 0) {
    report.kernel_basis = report.candidate_basis;
  } else {
    RMatrix residual_map(probes.size(), n_candidates);
    for (int c = 0; c < n_candidates; ++c) residual_map.col(c) = residuals[c].pairwise;
    // Absolute threshold relative to the probe scale, not to the largest
    // singular value: a residual map that is zero must keep every candidate.
    RMatrix scaled = residual_map / suff_scale;
    Eigen::JacobiSVD<RMatrix> svd(scaled, Eigen::ComputeFullV);
    int rank = 0;
    while (rank < svd.singularValues().size() &&
           svd.singularValues()(rank) > options.tol_sufficiency) {
      ++rank;
    }
    const RMatrix null_coords = svd.matrixV().rightCols(n_candidates - rank);
    report.kernel_basis = report.candidate_basis * null_coords;
  }

  const CommutantResult commutant =
      commutant_basis(spec.hamiltonian(), probes, options.tol_rank);
  report.commutant = commutant.basis;
  report.commutant_singular_values = commutant.singular_values;
  report.commutant_gap = commutant.gap;
  report.principal_angles = principal_angles(report.kernel_basis, report.commutant);
  report.max_principal_angle = subspace_max_angle(report.kernel_basis, report.commutant);
  report.commutant_match = report.kernel_dim() == report.commutant_dim() &&
                           report.max_principal_angle <= options.tol_angle;

  if (ensemble.energy_only() && options.enforce_commutant_match && !report.commutant_match) {
    std::ostringstream os;
    os << "compute_kernel: finite-temperature kernel (dim " << report.kernel_dim()
       << ") does not match the commutant within the probe span (dim "
       << report.commutant_dim() << ", max principal angle " << report.max_principal_angle
       << ")";
    throw AssertionFailure(os.str());
  }
  return report;
}

RMatrix chi_time(const TransitionMoments& tm, const Ensemble& ensemble, double tau) {
  const int n_probes = tm.n_probes();
  RMatrix chi = RMatrix::Zero(n_probes, n_probes);
  if (tau < 0.0) return chi;
  const SpectralDecomposition& spec = ensemble.spectrum();
  const RVector& w = ensemble.weights();
  const int dim = tm.dim();
  for (int k = 1; k < dim; ++k) {
    for (int l = 0; l < k; ++l) {
      const double dw = w(l) - w(k);
      if (dw == 0.0) continue;
      const double omega = spec.omega(k, l);
      const Complex phase = std::exp(Complex(0.0, omega * tau));
      for (int i = 0; i < n_probes; ++i) {
        for (int j = 0; j < n_probes; ++j) {
          // i (w_L - w_K) e^{i Omega tau} q_j^{LK} q_i^{KL} + c.c.
          chi(i, j) += -2.0 * dw * std::imag(phase * tm.q(j, l, k) * tm.q(i, k, l));
        }
      }
    }
  }
  return chi;
}

RMatrix chi_time(const ProbeSet& probes, const Ensemble& ensemble, double tau) {
  const TransitionMoments tm(probes, ensemble.spectrum());
  return chi_time(tm, ensemble, tau);
}

RMatrix chi_direction_series(const TransitionMoments& tm, const Ensemble& ensemble,
                             const RVector& v, const RVector& taus) {
  const SpectralDecomposition& spec = ensemble.spectrum();
  const RVector& w = ensemble.weights();
  const int dim = tm.dim();
  const int n_probes = tm.n_probes();

  // Collect contributing pairs once: amplitude_i = (w_L - w_K) q_i^{KL},
  // direction moment a^{LK} = sum_j q_j^{LK} v_j.
  struct PairTerm {
    double omega;
    Complex a_lk;
    CVector q_kl;  // per probe
  };
  std::vector<PairTerm> terms;
  for (int k = 1; k < dim; ++k) {
    for (int l = 0; l < k; ++l) {
      const double dw = w(l) - w(k);
      if (dw == 0.0) continue;
      PairTerm term;
      term.omega = spec.omega(k, l);
      term.a_lk = Complex(0.0, 0.0);
      term.q_kl = CVector(n_probes);
      for (int j = 0; j < n_probes; ++j) {
        term.a_lk += tm.q(j, l, k) * v(j);
        term.q_kl(j) = tm.q(j, k, l);
      }
      term.a_lk *= dw;
      terms.push_back(std::move(term));
    }
  }

  RMatrix g = RMatrix::Zero(taus.size(), n_probes);
  for (int n = 0; n < taus.size(); ++n) {
    const double tau = taus(n);
    if (tau < 0.0) continue;
    for (const auto& term : terms) {
      const Complex phase = std::exp(Complex(0.0, term.omega * tau)) * term.a_lk;
      for (int i = 0; i < n_probes; ++i) {
        g(n, i) += -2.0 * std::imag(phase * term.q_kl(i));
      }
    }
  }
  return g;
}

RVector static_thermal_response(const ManyBodyOperator& hamiltonian, const ProbeSet& probes,
                                EnsembleKind kind, double beta, double mu, const RVector& v,
                                double step) {
  if (kind != EnsembleKind::canonical && kind != EnsembleKind::grand_canonical) {
    throw ValidationError("static_thermal_response: ensemble kind must be energy-only");
  }
  if (!(step > 0.0)) throw ValidationError("static_thermal_response: step must be positive");
  if (kind == EnsembleKind::grand_canonical &&
      hamiltonian.basis_ptr()->sector().kind != Sector::Kind::full) {
    throw ValidationError("static_thermal_response: grand canonical needs the full Fock basis");
  }

  const CMatrix lv = probes.assemble(v).matrix();
  CMatrix generator = hamiltonian.matrix();
  if (kind == EnsembleKind::grand_canonical) {
    generator -= mu * number_operator(hamiltonian.basis_ptr()).matrix();
  }

  auto thermal_expectations = [&](double lambda) {
    const CMatrix h = generator + lambda * lv;
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(h);
    const RVector& e = solver.eigenvalues();
    RVector w(e.size());
    for (int k = 0; k < e.size(); ++k) w(k) = std::exp(-beta * (e(k) - e(0)));
    w /= w.sum();
    const CMatrix& psi = solver.eigenvectors();
    RVector expectations(probes.size());
    for (int i = 0; i < probes.size(); ++i) {
      const CMatrix q = psi.adjoint() * probes.probe(i).matrix() * psi;
      double value = 0.0;
      for (int k = 0; k < e.size(); ++k) value += w(k) * std::real(q(k, k));
      expectations(i) = value;
    }
    return expectations;
  };

  const RVector plus = thermal_expectations(step);
  const RVector minus = thermal_expectations(-step);
  return (plus - minus) / (2.0 * step);
}

}  // namespace lrk
