// Occupation-number bases for a finite set of spin-orbitals and dense
// second-quantized Hermitian operators on them. Bit p of a basis word is
// the occupation of orbital p; creation signs count set bits below p.
#pragma once

#include "lrkernel/linalg.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace lrk {

enum class Spin { none, up, down };

struct OrbitalLabel {
  int site = 0;
  Spin spin = Spin::none;
};

class OrbitalSet {
 public:
  explicit OrbitalSet(std::vector<OrbitalLabel> labels);

  static OrbitalSet spinless_sites(int n_sites);
  // Orbital 2*s is (site s, up), orbital 2*s+1 is (site s, down).
  static OrbitalSet spinful_sites(int n_sites);

  int size() const { return static_cast<int>(labels_.size()); }
  const OrbitalLabel& label(int p) const { return labels_.at(p); }
  bool has_spin() const;
  int n_sites() const;
  std::vector<int> orbitals_of_site(int site) const;

 private:
  std::vector<OrbitalLabel> labels_;
};

struct Sector {
  enum class Kind { full, fixed_n, fixed_n_sz };
  Kind kind = Kind::full;
  int n = 0;
  int twice_sz = 0;  // 2*Sz, integer for any particle number

  static Sector full() { return {}; }
  static Sector fixed(int n) { return {Kind::fixed_n, n, 0}; }
  static Sector fixed(int n, double sz);
  bool operator==(const Sector&) const = default;
};

class FockBasis {
 public:
  FockBasis(OrbitalSet orbitals, Sector sector);

  int dim() const { return static_cast<int>(states_.size()); }
  int num_orbitals() const { return orbitals_.size(); }
  std::uint64_t state(int i) const { return states_.at(i); }
  const std::vector<std::uint64_t>& states() const { return states_; }
  int index_of(std::uint64_t word) const;  // -1 when not in the sector
  const OrbitalSet& orbitals() const { return orbitals_; }
  const Sector& sector() const { return sector_; }
  int particle_count(int i) const;

 private:
  OrbitalSet orbitals_;
  Sector sector_;
  std::vector<std::uint64_t> states_;
};

using FockBasisPtr = std::shared_ptr<const FockBasis>;

FockBasisPtr build_basis(OrbitalSet orbitals, Sector sector);

struct LadderResult {
  int sign;            // +1 or -1
  std::uint64_t word;  // result occupation word
};

// c^dag_p |word>; empty when the orbital is already occupied.
std::optional<LadderResult> apply_creation(int p, std::uint64_t word);
// c_p |word>; empty when the orbital is empty.
std::optional<LadderResult> apply_annihilation(int p, std::uint64_t word);

// Hermitian M x M coefficient matrix of a one-body operator
// sum_pq h_pq c^dag_p c_q.
class OneBodyCoefficients {
 public:
  explicit OneBodyCoefficients(CMatrix h);
  const CMatrix& matrix() const { return h_; }
  int size() const { return static_cast<int>(h_.rows()); }

 private:
  CMatrix h_;
};

struct DensityTerm {
  int p = 0;
  int q = 0;
  double u = 0.0;
};

enum class Provenance { one_body, two_body, composite };

// Dense Hermitian matrix on a FockBasis. Immutable after construction.
class ManyBodyOperator {
 public:
  ManyBodyOperator(FockBasisPtr basis, CMatrix matrix, Provenance provenance,
                   std::optional<OneBodyCoefficients> coefficients = {});

  const CMatrix& matrix() const { return matrix_; }
  const FockBasis& basis() const { return *basis_; }
  const FockBasisPtr& basis_ptr() const { return basis_; }
  Provenance provenance() const { return provenance_; }
  const std::optional<OneBodyCoefficients>& one_body() const { return coefficients_; }
  int dim() const { return static_cast<int>(matrix_.rows()); }
  double frobenius_norm() const { return matrix_.norm(); }

 private:
  FockBasisPtr basis_;
  CMatrix matrix_;
  Provenance provenance_;
  std::optional<OneBodyCoefficients> coefficients_;
};

ManyBodyOperator one_body_operator(const OneBodyCoefficients& h, FockBasisPtr basis);
ManyBodyOperator two_body_density_interaction(const std::vector<DensityTerm>& terms,
                                              FockBasisPtr basis);
ManyBodyOperator number_operator(FockBasisPtr basis);

// ||[A, B]||_F
double commutator_norm(const ManyBodyOperator& a, const ManyBodyOperator& b);

struct HubbardChainSpec {
  int sites = 2;
  double t = 1.0;
  double u = 0.0;
  bool periodic = false;
};

struct CustomModelSpec {
  CMatrix h;                                // Hermitian one-body part
  std::vector<DensityTerm> density_density;  // optional diagonal interaction
};

using ModelSpec = std::variant<HubbardChainSpec, CustomModelSpec>;

// Orbital set implied by a model: spinful sites for Hubbard chains,
// one spinless orbital per row of h for custom models.
OrbitalSet model_orbitals(const ModelSpec& spec);

ManyBodyOperator build_model(const ModelSpec& spec, FockBasisPtr basis);

std::string to_string(const Sector& sector);

}  // namespace lrk
