#include "lrkernel/probes.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <utility>

namespace lrk {

namespace {

double operator_two_norm(const CMatrix& hermitian) {
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(hermitian, Eigen::EigenvaluesOnly);
  const RVector& ev = solver.eigenvalues();
  return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
}

}  // namespace

ProbeSet::ProbeSet(FockBasisPtr basis, std::vector<OneBodyCoefficients> coefficients,
                   std::vector<std::string> labels, SpanKind span_kind)
    : basis_(std::move(basis)),
      coefficients_(std::move(coefficients)),
      labels_(std::move(labels)),
      span_kind_(span_kind) {
  if (coefficients_.empty()) throw ValidationError("ProbeSet: need at least one probe");
  if (labels_.size() != coefficients_.size()) {
    throw ValidationError("ProbeSet: label count does not match probe count");
  }
  std::set<std::string> seen;
  for (const auto& l : labels_) {
    if (!seen.insert(l).second) throw ValidationError("ProbeSet: duplicate label " + l);
  }
  operators_.reserve(coefficients_.size());
  for (const auto& c : coefficients_) {
    operators_.push_back(one_body_operator(c, basis_));
    max_norm_ = std::max(max_norm_, operator_two_norm(operators_.back().matrix()));
  }
}

ManyBodyOperator ProbeSet::assemble(const RVector& v) const {
  return one_body_operator(assemble_coefficients(v), basis_);
}

OneBodyCoefficients ProbeSet::assemble_coefficients(const RVector& v) const {
  if (v.size() != size()) throw ValidationError("ProbeSet: direction length mismatch");
  const int m = basis_->num_orbitals();
  CMatrix h = CMatrix::Zero(m, m);
  for (int j = 0; j < size(); ++j) h += v(j) * coefficients_[j].matrix();
  return OneBodyCoefficients(std::move(h));
}

RVector ProbeSet::coefficients_of(const OneBodyCoefficients& h) const {
  const int p = size();
  // Re-trace inner products against every probe coefficient matrix.
  RMatrix gram(p, p);
  RVector rhs(p);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) {
      gram(i, j) = (coefficients_[i].matrix().adjoint() * coefficients_[j].matrix())
                       .trace()
                       .real();
    }
    rhs(i) = (coefficients_[i].matrix().adjoint() * h.matrix()).trace().real();
  }
  RVector v = gram.ldlt().solve(rhs);
  CMatrix residual = h.matrix();
  for (int j = 0; j < p; ++j) residual -= v(j) * coefficients_[j].matrix();
  if (residual.norm() > 1e-10 * std::max(1.0, h.matrix().norm())) {
    throw ValidationError("ProbeSet: coefficient matrix is outside the probe span");
  }
  return v;
}

ProbeSet site_density_probes(FockBasisPtr basis) {
  const OrbitalSet& orbitals = basis->orbitals();
  std::set<int> site_set;
  for (int q = 0; q < orbitals.size(); ++q) site_set.insert(orbitals.label(q).site);
  const int m = orbitals.size();
  std::vector<OneBodyCoefficients> coeffs;
  std::vector<std::string> labels;
  for (int site : site_set) {
    CMatrix h = CMatrix::Zero(m, m);
    for (int q : orbitals.orbitals_of_site(site)) h(q, q) = 1.0;
    coeffs.emplace_back(std::move(h));
    labels.push_back("n(" + std::to_string(site) + ")");
  }
  return ProbeSet(std::move(basis), std::move(coeffs), std::move(labels),
                  SpanKind::site_density);
}

ProbeSet one_body_hermitian_basis(FockBasisPtr basis) {
  const int m = basis->num_orbitals();
  std::vector<OneBodyCoefficients> coeffs;
  std::vector<std::string> labels;
  coeffs.reserve(m * m);
  for (int p = 0; p < m; ++p) {
    CMatrix h = CMatrix::Zero(m, m);
    h(p, p) = 1.0;
    coeffs.emplace_back(std::move(h));
    labels.push_back("E(" + std::to_string(p) + ")");
  }
  for (int p = 0; p < m; ++p) {
    for (int q = p + 1; q < m; ++q) {
      CMatrix h = CMatrix::Zero(m, m);
      h(p, q) = 1.0;
      h(q, p) = 1.0;
      coeffs.emplace_back(std::move(h));
      labels.push_back("S(" + std::to_string(p) + ":" + std::to_string(q) + ")");
    }
  }
  for (int p = 0; p < m; ++p) {
    for (int q = p + 1; q < m; ++q) {
      CMatrix h = CMatrix::Zero(m, m);
      h(p, q) = Complex(0.0, 1.0);
      h(q, p) = Complex(0.0, -1.0);
      coeffs.emplace_back(std::move(h));
      labels.push_back("A(" + std::to_string(p) + ":" + std::to_string(q) + ")");
    }
  }
  return ProbeSet(std::move(basis), std::move(coeffs), std::move(labels),
                  SpanKind::one_body_full);
}

ProbeSet custom_probes(FockBasisPtr basis, std::vector<OneBodyCoefficients> coefficients,
                       std::vector<std::string> labels) {
  if (labels.empty()) {
    for (std::size_t i = 0; i < coefficients.size(); ++i) {
      labels.push_back("Q(" + std::to_string(i) + ")");
    }
  }
  return ProbeSet(std::move(basis), std::move(coefficients), std::move(labels),
                  SpanKind::custom);
}

std::vector<SymmetryProbe> symmetry_probes(FockBasisPtr basis) {
  const OrbitalSet& orbitals = basis->orbitals();
  const int m = orbitals.size();

  // Expansion bookkeeping in one_body_hermitian_basis order: m diagonals,
  // then symmetric pairs (p < q), then antisymmetric pairs.
  auto sym_index = [m](int p, int q) {
    int idx = m;
    for (int a = 0; a < m; ++a) {
      for (int b = a + 1; b < m; ++b) {
        if (a == p && b == q) return idx;
        ++idx;
      }
    }
    return -1;
  };
  const int n_pairs = m * (m - 1) / 2;

  auto make = [&](const std::string& name, const CMatrix& h) {
    RVector expansion = RVector::Zero(m * m);
    for (int p = 0; p < m; ++p) expansion(p) = h(p, p).real();
    for (int p = 0; p < m; ++p) {
      for (int q = p + 1; q < m; ++q) {
        const int s = sym_index(p, q);
        expansion(s) = h(p, q).real();
        expansion(s + n_pairs) = h(p, q).imag();
      }
    }
    return SymmetryProbe{name, one_body_operator(OneBodyCoefficients(h), basis), expansion};
  };

  std::vector<SymmetryProbe> out;
  out.push_back(make("N", CMatrix::Identity(m, m)));
  if (!orbitals.has_spin()) return out;

  CMatrix sx = CMatrix::Zero(m, m);
  CMatrix sy = CMatrix::Zero(m, m);
  CMatrix sz = CMatrix::Zero(m, m);
  std::set<int> sites;
  for (int p = 0; p < m; ++p) sites.insert(orbitals.label(p).site);
  for (int site : sites) {
    int up = -1;
    int down = -1;
    for (int p : orbitals.orbitals_of_site(site)) {
      if (orbitals.label(p).spin == Spin::up) up = p;
      if (orbitals.label(p).spin == Spin::down) down = p;
    }
    if (up >= 0) sz(up, up) += 0.5;
    if (down >= 0) sz(down, down) -= 0.5;
    if (up >= 0 && down >= 0) {
      sx(up, down) += 0.5;
      sx(down, up) += 0.5;
      sy(up, down) += Complex(0.0, -0.5);
      sy(down, up) += Complex(0.0, 0.5);
    }
  }
  out.push_back(make("Sx", sx));
  out.push_back(make("Sy", sy));
  out.push_back(make("Sz", sz));
  return out;
}

NaturalOrbitalData ensemble_1rdm(const Ensemble& ensemble, double tol_occ) {
  const SpectralDecomposition& spec = ensemble.spectrum();
  const FockBasis& basis = *spec.basis_ptr();
  const int m = basis.num_orbitals();
  const int dim = basis.dim();
  const CMatrix rho = ensemble.density_matrix();

  CMatrix gamma = CMatrix::Zero(m, m);
  for (int col = 0; col < dim; ++col) {
    const std::uint64_t word = basis.state(col);
    for (int p = 0; p < m; ++p) {
      const auto ann = apply_annihilation(p, word);
      if (!ann) continue;
      for (int q = 0; q < m; ++q) {
        const auto cre = apply_creation(q, ann->word);
        if (!cre) continue;
        const int row = basis.index_of(cre->word);
        if (row < 0) continue;
        // gamma_pq = Tr(rho c^dag_q c_p)
        gamma(p, q) += static_cast<double>(ann->sign * cre->sign) * rho(col, row);
      }
    }
  }
  gamma = 0.5 * (gamma + gamma.adjoint().eval());

  Eigen::SelfAdjointEigenSolver<CMatrix> solver(gamma);
  NaturalOrbitalData data;
  data.gamma = gamma;
  data.tol_occ = tol_occ;
  data.occupations = solver.eigenvalues().reverse();
  data.orbitals = solver.eigenvectors().rowwise().reverse();
  for (int k = 0; k < m; ++k) {
    if (data.occupations(k) < -1e-10 || data.occupations(k) > 1.0 + 1e-10) {
      std::ostringstream os;
      os << "ensemble_1rdm: occupation " << data.occupations(k) << " outside [0, 1]";
      throw std::runtime_error(os.str());
    }
  }
  return data;
}

std::vector<OneBodyCoefficients> predict_pathological_generators(
    const NaturalOrbitalData& nodata, bool interacting, int n_particles) {
  const int m = static_cast<int>(nodata.occupations.size());
  const double tol = nodata.tol_occ;
  const RVector& n = nodata.occupations;
  const double total = n.sum();
  if (std::abs(total - n_particles) > 1e-8 * std::max(1.0, std::abs(total))) {
    throw ValidationError(
        "predict_pathological_generators: occupations do not sum to n_particles");
  }

  std::vector<std::vector<int>> blocks;
  if (interacting) {
    std::vector<int> occupied;
    std::vector<int> unoccupied;
    for (int k = 0; k < m; ++k) {
      if (n(k) >= 1.0 - tol) occupied.push_back(k);
      if (n(k) <= tol) unoccupied.push_back(k);
    }
    if (!occupied.empty()) blocks.push_back(occupied);
    if (!unoccupied.empty()) blocks.push_back(unoccupied);
  } else {
    // Degenerate-occupation blocks by transitive closure on the sorted
    // occupations; the n=0 and n=1 blocks arise as special cases.
    std::vector<int> current{0};
    for (int k = 1; k < m; ++k) {
      if (std::abs(n(k) - n(k - 1)) <= tol) {
        current.push_back(k);
      } else {
        blocks.push_back(current);
        current = {k};
      }
    }
    blocks.push_back(current);
  }

  std::vector<OneBodyCoefficients> generators;
  for (const auto& block : blocks) {
    for (int k : block) {
      const CVector u = nodata.orbitals.col(k);
      generators.emplace_back(CMatrix(u * u.adjoint()));
    }
    for (std::size_t a = 0; a < block.size(); ++a) {
      for (std::size_t b = a + 1; b < block.size(); ++b) {
        const CVector uk = nodata.orbitals.col(block[a]);
        const CVector ul = nodata.orbitals.col(block[b]);
        generators.emplace_back(CMatrix(uk * ul.adjoint() + ul * uk.adjoint()));
        generators.emplace_back(
            CMatrix(Complex(0.0, 1.0) * (uk * ul.adjoint() - ul * uk.adjoint())));
      }
    }
  }
  return generators;
}

CommutantResult commutant_basis(const ManyBodyOperator& hamiltonian, const ProbeSet& probes,
                                double tol_rank) {
  if (hamiltonian.basis_ptr() != probes.basis_ptr()) {
    throw ValidationError("commutant_basis: Hamiltonian and probes live on different bases");
  }
  const int dim = hamiltonian.dim();
  const int p = probes.size();
  const CMatrix& h = hamiltonian.matrix();
  RMatrix map(2 * dim * dim, p);
  for (int j = 0; j < p; ++j) {
    const CMatrix& q = probes.probe(j).matrix();
    const CMatrix comm = h * q - q * h;
    const RMatrix re = comm.real();
    const RMatrix im = comm.imag();
    map.col(j).head(dim * dim) = Eigen::Map<const RVector>(re.data(), dim * dim);
    map.col(j).tail(dim * dim) = Eigen::Map<const RVector>(im.data(), dim * dim);
  }
  const double floor = h.norm() * probes.max_norm();
  const Nullspace ns = nullspace(map, p, tol_rank, floor);
  return CommutantResult{ns.basis, ns.singular_values, ns.gap};
}

}  // namespace lrk
