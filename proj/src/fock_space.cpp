#include "lrkernel/fock_space.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <set>
#include <sstream>
#include <utility>

namespace lrk {

namespace {

int popcount_below(std::uint64_t word, int p) {
  const std::uint64_t mask = (p == 0) ? 0 : ((std::uint64_t{1} << p) - 1);
  return std::popcount(word & mask);
}

int twice_sz_of(std::uint64_t word, const OrbitalSet& orbitals) {
  int twice_sz = 0;
  for (int p = 0; p < orbitals.size(); ++p) {
    if (!((word >> p) & 1)) continue;
    switch (orbitals.label(p).spin) {
      case Spin::up: twice_sz += 1; break;
      case Spin::down: twice_sz -= 1; break;
      case Spin::none: break;
    }
  }
  return twice_sz;
}

}  // namespace

OrbitalSet::OrbitalSet(std::vector<OrbitalLabel> labels) : labels_(std::move(labels)) {
  if (labels_.empty()) throw ValidationError("OrbitalSet: need at least one orbital");
  if (labels_.size() > 63) throw ValidationError("OrbitalSet: at most 63 orbitals supported");
  std::set<std::pair<int, int>> seen;
  for (const auto& l : labels_) {
    if (!seen.insert({l.site, static_cast<int>(l.spin)}).second) {
      throw ValidationError("OrbitalSet: duplicate (site, spin) label");
    }
  }
}

OrbitalSet OrbitalSet::spinless_sites(int n_sites) {
  if (n_sites < 1) throw ValidationError("OrbitalSet: n_sites must be positive");
  std::vector<OrbitalLabel> labels(n_sites);
  for (int s = 0; s < n_sites; ++s) labels[s] = {s, Spin::none};
  return OrbitalSet(std::move(labels));
}

OrbitalSet OrbitalSet::spinful_sites(int n_sites) {
  if (n_sites < 1) throw ValidationError("OrbitalSet: n_sites must be positive");
  std::vector<OrbitalLabel> labels(2 * n_sites);
  for (int s = 0; s < n_sites; ++s) {
    labels[2 * s] = {s, Spin::up};
    labels[2 * s + 1] = {s, Spin::down};
  }
  return OrbitalSet(std::move(labels));
}

bool OrbitalSet::has_spin() const {
  return std::any_of(labels_.begin(), labels_.end(),
                     [](const OrbitalLabel& l) { return l.spin != Spin::none; });
}

int OrbitalSet::n_sites() const {
  std::set<int> sites;
  for (const auto& l : labels_) sites.insert(l.site);
  return static_cast<int>(sites.size());
}

std::vector<int> OrbitalSet::orbitals_of_site(int site) const {
  std::vector<int> out;
  for (int p = 0; p < size(); ++p) {
    if (labels_[p].site == site) out.push_back(p);
  }
  return out;
}

Sector Sector::fixed(int n, double sz) {
  const double twice = 2.0 * sz;
  const int rounded = static_cast<int>(std::lround(twice));
  if (std::abs(twice - rounded) > 1e-9) {
    throw ValidationError("Sector: Sz must be an integer or half-integer");
  }
  return {Kind::fixed_n_sz, n, rounded};
}

FockBasis::FockBasis(OrbitalSet orbitals, Sector sector)
    : orbitals_(std::move(orbitals)), sector_(sector) {
  const int m = orbitals_.size();
  if (sector_.kind != Sector::Kind::full) {
    if (sector_.n < 0 || sector_.n > m) {
      throw ValidationError("FockBasis: particle number N must satisfy 0 <= N <= M, got N=" +
                            std::to_string(sector_.n) + " for M=" + std::to_string(m));
    }
  }
  if (sector_.kind == Sector::Kind::fixed_n_sz && !orbitals_.has_spin()) {
    throw ValidationError("FockBasis: Sz sector requested but orbitals carry no spin labels");
  }
  const std::uint64_t total = std::uint64_t{1} << m;
  for (std::uint64_t word = 0; word < total; ++word) {
    if (sector_.kind != Sector::Kind::full &&
        std::popcount(word) != sector_.n) continue;
    if (sector_.kind == Sector::Kind::fixed_n_sz &&
        twice_sz_of(word, orbitals_) != sector_.twice_sz) continue;
    states_.push_back(word);
  }
  // ascending by construction of the loop
}

int FockBasis::index_of(std::uint64_t word) const {
  auto it = std::lower_bound(states_.begin(), states_.end(), word);
  if (it == states_.end() || *it != word) return -1;
  return static_cast<int>(it - states_.begin());
}

int FockBasis::particle_count(int i) const { return std::popcount(states_.at(i)); }

FockBasisPtr build_basis(OrbitalSet orbitals, Sector sector) {
  return std::make_shared<const FockBasis>(std::move(orbitals), sector);
}

std::optional<LadderResult> apply_creation(int p, std::uint64_t word) {
  if ((word >> p) & 1) return std::nullopt;
  const int sign = (popcount_below(word, p) % 2 == 0) ? 1 : -1;
  return LadderResult{sign, word | (std::uint64_t{1} << p)};
}

std::optional<LadderResult> apply_annihilation(int p, std::uint64_t word) {
  if (!((word >> p) & 1)) return std::nullopt;
  const int sign = (popcount_below(word, p) % 2 == 0) ? 1 : -1;
  return LadderResult{sign, word & ~(std::uint64_t{1} << p)};
}

OneBodyCoefficients::OneBodyCoefficients(CMatrix h) : h_(std::move(h)) {
  if (h_.rows() != h_.cols()) throw ValidationError("OneBodyCoefficients: matrix must be square");
  if (!is_hermitian(h_, 1e-14)) {
    throw ValidationError("OneBodyCoefficients: matrix is not Hermitian to 1e-14");
  }
  h_ = 0.5 * (h_ + h_.adjoint().eval());
}

ManyBodyOperator::ManyBodyOperator(FockBasisPtr basis, CMatrix matrix, Provenance provenance,
                                   std::optional<OneBodyCoefficients> coefficients)
    : basis_(std::move(basis)),
      matrix_(std::move(matrix)),
      provenance_(provenance),
      coefficients_(std::move(coefficients)) {
  if (!basis_) throw ValidationError("ManyBodyOperator: null basis");
  if (matrix_.rows() != basis_->dim() || matrix_.cols() != basis_->dim()) {
    throw ValidationError("ManyBodyOperator: matrix dimension does not match basis");
  }
  if (hermiticity_defect(matrix_) > 1e-12) {
    throw ValidationError("ManyBodyOperator: matrix is not Hermitian to 1e-12 relative");
  }
  matrix_ = 0.5 * (matrix_ + matrix_.adjoint().eval());
}

ManyBodyOperator one_body_operator(const OneBodyCoefficients& h, FockBasisPtr basis) {
  if (h.size() != basis->num_orbitals()) {
    throw ValidationError("one_body_operator: coefficient size does not match orbital count");
  }
  const int dim = basis->dim();
  const int m = basis->num_orbitals();
  const CMatrix& hm = h.matrix();
  CMatrix op = CMatrix::Zero(dim, dim);
  for (int col = 0; col < dim; ++col) {
    const std::uint64_t word = basis->state(col);
    for (int q = 0; q < m; ++q) {
      const auto ann = apply_annihilation(q, word);
      if (!ann) continue;
      for (int p = 0; p < m; ++p) {
        if (hm(p, q) == Complex(0.0, 0.0)) continue;
        const auto cre = apply_creation(p, ann->word);
        if (!cre) continue;
        const int row = basis->index_of(cre->word);
        if (row < 0) continue;  // cannot happen within a particle-number sector
        op(row, col) += static_cast<double>(ann->sign * cre->sign) * hm(p, q);
      }
    }
  }
  return ManyBodyOperator(std::move(basis), std::move(op), Provenance::one_body, h);
}

ManyBodyOperator two_body_density_interaction(const std::vector<DensityTerm>& terms,
                                              FockBasisPtr basis) {
  const int m = basis->num_orbitals();
  for (const auto& term : terms) {
    if (term.p < 0 || term.p >= m || term.q < 0 || term.q >= m) {
      throw ValidationError("two_body_density_interaction: orbital index out of range");
    }
  }
  const int dim = basis->dim();
  CMatrix op = CMatrix::Zero(dim, dim);
  for (int i = 0; i < dim; ++i) {
    const std::uint64_t word = basis->state(i);
    double value = 0.0;
    for (const auto& term : terms) {
      const bool np = (word >> term.p) & 1;
      const bool nq = (word >> term.q) & 1;
      if (np && nq) value += term.u;
    }
    op(i, i) = value;
  }
  return ManyBodyOperator(std::move(basis), std::move(op), Provenance::two_body);
}

ManyBodyOperator number_operator(FockBasisPtr basis) {
  const int m = basis->num_orbitals();
  return one_body_operator(OneBodyCoefficients(CMatrix::Identity(m, m)), std::move(basis));
}

double commutator_norm(const ManyBodyOperator& a, const ManyBodyOperator& b) {
  const CMatrix& am = a.matrix();
  const CMatrix& bm = b.matrix();
  return (am * bm - bm * am).norm();
}

OrbitalSet model_orbitals(const ModelSpec& spec) {
  if (const auto* hub = std::get_if<HubbardChainSpec>(&spec)) {
    return OrbitalSet::spinful_sites(hub->sites);
  }
  const auto& custom = std::get<CustomModelSpec>(spec);
  return OrbitalSet::spinless_sites(static_cast<int>(custom.h.rows()));
}

ManyBodyOperator build_model(const ModelSpec& spec, FockBasisPtr basis) {
  if (const auto* hub = std::get_if<HubbardChainSpec>(&spec)) {
    if (hub->sites < 1) throw ValidationError("build_model: field 'sites' must be >= 1");
    if (!std::isfinite(hub->t) || !std::isfinite(hub->u)) {
      throw ValidationError("build_model: fields 't' and 'U' must be finite");
    }
    const int m = basis->num_orbitals();
    if (m != 2 * hub->sites) {
      throw ValidationError("build_model: basis does not match hubbard_chain orbital count");
    }
    CMatrix h = CMatrix::Zero(m, m);
    auto add_bond = [&](int s1, int s2) {
      for (int spin = 0; spin < 2; ++spin) {
        const int p = 2 * s1 + spin;
        const int q = 2 * s2 + spin;
        h(p, q) += -hub->t;
        h(q, p) += -hub->t;
      }
    };
    for (int s = 0; s + 1 < hub->sites; ++s) add_bond(s, s + 1);
    if (hub->periodic && hub->sites > 2) add_bond(hub->sites - 1, 0);
    std::vector<DensityTerm> terms;
    for (int s = 0; s < hub->sites; ++s) terms.push_back({2 * s, 2 * s + 1, hub->u});
    const ManyBodyOperator kinetic = one_body_operator(OneBodyCoefficients(h), basis);
    const ManyBodyOperator interaction = two_body_density_interaction(terms, basis);
    return ManyBodyOperator(basis, kinetic.matrix() + interaction.matrix(),
                            Provenance::composite);
  }
  const auto& custom = std::get<CustomModelSpec>(spec);
  if (custom.h.rows() != basis->num_orbitals()) {
    throw ValidationError("build_model: field 'h' does not match basis orbital count");
  }
  const ManyBodyOperator one = one_body_operator(OneBodyCoefficients(custom.h), basis);
  if (custom.density_density.empty()) return one;
  const ManyBodyOperator two = two_body_density_interaction(custom.density_density, basis);
  return ManyBodyOperator(basis, one.matrix() + two.matrix(), Provenance::composite);
}

std::string to_string(const Sector& sector) {
  std::ostringstream os;
  switch (sector.kind) {
    case Sector::Kind::full: os << "full Fock"; break;
    case Sector::Kind::fixed_n: os << "N=" << sector.n; break;
    case Sector::Kind::fixed_n_sz:
      os << "N=" << sector.n << ", Sz=" << sector.twice_sz / 2.0;
      break;
  }
  return os.str();
}

}  // namespace lrk
