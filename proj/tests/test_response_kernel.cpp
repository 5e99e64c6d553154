#include <catch2/catch_amalgamated.hpp>

#include "lrkernel/response_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <random>

using namespace lrk;

namespace {

FockBasisPtr dimer_basis(Sector sector) {
  return build_basis(OrbitalSet::spinful_sites(2), sector);
}

ManyBodyOperator dimer_h(FockBasisPtr basis, double t = 1.0, double u = 2.0) {
  return build_model(HubbardChainSpec{2, t, u, false}, std::move(basis));
}

// Three orbitals, one particle, on-site energies (0, 0, 2): a degenerate
// ground pair with a deterministic eigenvector gauge (the input matrix is
// already diagonal).
SpectrumPtr three_level_spectrum() {
  const auto basis = build_basis(OrbitalSet::spinless_sites(3), Sector::fixed(1));
  CMatrix h = CMatrix::Zero(3, 3);
  h(2, 2) = 2.0;
  const auto spec = diagonalize(build_model(CustomModelSpec{h, {}}, basis));
  // the engineered residual values below assume the trivial gauge
  REQUIRE((spec->eigenvectors() - CMatrix::Identity(3, 3)).norm() < 1e-12);
  return spec;
}

RVector vec(std::initializer_list<double> values) {
  RVector v(static_cast<int>(values.size()));
  int i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

RVector unit(int size, int index) {
  RVector v = RVector::Zero(size);
  v(index) = 1.0;
  return v;
}

}  // namespace

TEST_CASE("transition moments of diagonal operators") {
  const auto basis = dimer_basis(Sector::fixed(2, 0.0));
  const auto spec = diagonalize(dimer_h(basis));

  // the number operator on a fixed-N sector: q = N delta_KL
  const auto identity =
      custom_probes(basis, {OneBodyCoefficients(CMatrix::Identity(4, 4))});
  const TransitionMoments tm_n(identity, *spec);
  CHECK((tm_n.moments(0) - 2.0 * CMatrix::Identity(4, 4)).norm() < 1e-12);

  const auto densities = site_density_probes(basis);
  const TransitionMoments tm(densities, *spec);
  for (int i = 0; i < 2; ++i) {
    CHECK((tm.moments(i) - tm.moments(i).adjoint().eval()).norm() < 1e-12);
  }
  // the site density couples the two singlets
  CHECK(std::abs(tm.q(0, 1, 0)) + std::abs(tm.q(0, 2, 0)) + std::abs(tm.q(0, 3, 0)) > 0.1);
}

TEST_CASE("chi is retarded and vanishes at equal times for commuting probes") {
  const auto basis = dimer_basis(Sector::fixed(2));
  const auto ens = canonical_weights(diagonalize(dimer_h(basis)), 1.0);
  const auto probes = site_density_probes(basis);
  CHECK(chi_time(probes, ens, -1.0).norm() == 0.0);
  CHECK(chi_time(probes, ens, 0.0).norm() < 1e-12);

  const auto full = one_body_hermitian_basis(basis);
  const RMatrix chi0 = chi_time(full, ens, 0.0);
  CHECK(chi0.diagonal().cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("two-level chi has the closed form") {
  const auto basis = build_basis(OrbitalSet::spinless_sites(2), Sector::fixed(1));
  CMatrix h(2, 2);
  h << 0, -1, -1, 0;
  const auto ens = pure_ground_state(diagonalize(build_model(CustomModelSpec{h, {}}, basis)));
  const auto probes = site_density_probes(basis);
  // chi_00(tau) = -2 |<1|n_0|0>|^2 sin(Omega tau) = -(1/2) sin(2 tau)
  for (double tau : {0.3, 1.0, 2.7}) {
    const RMatrix chi = chi_time(probes, ens, tau);
    CHECK(chi(0, 0) == Catch::Approx(-0.5 * std::sin(2.0 * tau)).margin(1e-12));
    CHECK(chi(0, 1) == Catch::Approx(+0.5 * std::sin(2.0 * tau)).margin(1e-12));
  }
}

TEST_CASE("necessary map enumerates the right pairs") {
  SECTION("pure ground state keeps only (K, 0) pairs") {
    const auto spec = diagonalize(dimer_h(dimer_basis(Sector::fixed(2, 0.0))));
    const auto ens = pure_ground_state(spec);
    const TransitionMoments tm(site_density_probes(spec->basis_ptr()), *spec);
    const auto map = necessary_map(tm, ens, extended_degenerate_structure(ens));
    REQUIRE(map.pairs.size() == 3);
    for (const auto& pair : map.pairs) CHECK(pair.l == 0);
  }
  SECTION("canonical dimer singlet sector has all 6 pairs") {
    const auto spec = diagonalize(dimer_h(dimer_basis(Sector::fixed(2, 0.0))));
    const auto ens = canonical_weights(spec, 1.0);
    const TransitionMoments tm(site_density_probes(spec->basis_ptr()), *spec);
    const auto map = necessary_map(tm, ens, extended_degenerate_structure(ens));
    CHECK(map.pairs.size() == 6);
    CHECK(map.a_real.rows() == 12);
  }
  SECTION("degenerate triplet pairs are excluded") {
    const auto spec = diagonalize(dimer_h(dimer_basis(Sector::fixed(2))));
    const auto ens = canonical_weights(spec, 1.0);
    const TransitionMoments tm(site_density_probes(spec->basis_ptr()), *spec);
    const auto map = necessary_map(tm, ens, extended_degenerate_structure(ens));
    CHECK(map.pairs.size() == 12);  // C(6,2) minus the 3 intra-triplet pairs
  }
  SECTION("non-monotone ensembles are rejected with the violating pair") {
    const auto spec = diagonalize(dimer_h(dimer_basis(Sector::fixed(2, 0.0))));
    const auto ens = custom_weights(spec, vec({0.1, 0.6, 0.2, 0.1}));
    const TransitionMoments tm(site_density_probes(spec->basis_ptr()), *spec);
    CHECK_THROWS_WITH(necessary_map(tm, ens, extended_degenerate_structure(ens)),
                      Catch::Matchers::ContainsSubstring("(1,0)"));
  }
}

TEST_CASE("candidate kernel of site densities is the constant shift") {
  const auto basis = dimer_basis(Sector::fixed(2));
  const auto ens = canonical_weights(diagonalize(dimer_h(basis)), 1.0);
  const auto probes = site_density_probes(basis);
  const auto map = necessary_map(TransitionMoments(probes, ens.spectrum()), ens,
                                 extended_degenerate_structure(ens));
  const auto null = candidate_kernel(map, probes.size(), 1e-10);
  REQUIRE(null.basis.cols() == 1);
  const RVector constant = RVector::Constant(2, 1.0 / std::sqrt(2.0));
  CHECK(std::abs(std::abs(null.basis.col(0).dot(constant)) - 1.0) < 1e-10);
  CHECK(null.gap > 1e6);
}

TEST_CASE("identity probe spans a trivial kernel") {
  const auto basis = dimer_basis(Sector::fixed(2, 0.0));
  const auto spec = diagonalize(dimer_h(basis));
  const auto probes = custom_probes(basis, {OneBodyCoefficients(CMatrix::Identity(4, 4))});
  const auto ens = canonical_weights(spec, 1.0);
  const auto map = necessary_map(TransitionMoments(probes, *spec), ens,
                                 extended_degenerate_structure(ens));
  CHECK(candidate_kernel(map, probes.size(), 1e-10).basis.cols() == 1);
}

TEST_CASE("necessary_value separates kernel from non-kernel directions") {
  const auto basis = dimer_basis(Sector::fixed(2));
  const auto ens = canonical_weights(diagonalize(dimer_h(basis)), 1.0);
  const auto probes = site_density_probes(basis);
  const TransitionMoments tm(probes, ens.spectrum());

  const RVector constant = RVector::Constant(2, 1.0 / std::sqrt(2.0));
  const RVector skew = vec({1.0, -1.0}) / std::sqrt(2.0);

  for (double s : {0.1, 1.0, 10.0}) {
    CHECK(necessary_value(constant, s, tm, ens) < 1e-12);
    CHECK(necessary_value(skew, s, tm, ens) > 1e-3);
  }
  CHECK_THROWS_AS(necessary_value(constant, 0.0, tm, ens), ValidationError);
}

TEST_CASE("engineered degenerate ensemble: sufficiency rejects couplings") {
  const auto spec = three_level_spectrum();
  const auto probes = one_body_hermitian_basis(spec->basis_ptr());
  REQUIRE(probes.size() == 9);
  // probe order: E(0) E(1) E(2) S(0:1) S(0:2) S(1:2) A(0:1) A(0:2) A(1:2)
  const int s01 = 3;
  const int a01 = 6;

  const auto ens = custom_weights(spec, vec({0.5, 0.3, 0.2}));
  const auto eds = extended_degenerate_structure(ens);
  const TransitionMoments tm(probes, *spec);

  SECTION("hand-enumerated residual of the symmetric coupling") {
    const auto residual = sufficiency_residual(unit(9, s01), tm, ens, eds, probes);
    // only the antisymmetric partner probe sees the coupling:
    // r = i (w_0 - w_1) q_A^{01} l^{10} + c.c. = i (0.2) (i) (1) + c.c. = -0.4
    CHECK(residual.pairwise(a01) == Catch::Approx(-0.4).margin(1e-12));
    for (int i = 0; i < 9; ++i) {
      if (i != a01) CHECK(std::abs(residual.pairwise(i)) < 1e-12);
    }
    CHECK_FALSE(residual.pass);
    CHECK((residual.pairwise - residual.commutator).cwiseAbs().maxCoeff() <
          1e-10 * residual.scale);
  }

  SECTION("diagonal candidates pass") {
    const auto residual = sufficiency_residual(unit(9, 0), tm, ens, eds, probes);
    CHECK(residual.pass);
    CHECK(residual.max_abs < 1e-12);
  }

  SECTION("equal weights on the degenerate pair restore the coupling") {
    const auto equal = custom_weights(spec, vec({0.4, 0.4, 0.2}));
    const auto residual = sufficiency_residual(unit(9, s01), tm, equal,
                                               extended_degenerate_structure(equal), probes);
    CHECK(residual.pass);
    CHECK(residual.max_abs < 1e-14);
  }
}

TEST_CASE("compute_kernel on the engineered ensemble filters the candidate space") {
  const auto spec = three_level_spectrum();
  const auto probes = one_body_hermitian_basis(spec->basis_ptr());
  const int s01 = 3;

  KernelOptions options;
  options.enforce_commutant_match = false;

  const auto unequal =
      compute_kernel(probes, custom_weights(spec, vec({0.5, 0.3, 0.2})), options);
  CHECK(unequal.candidate_dim() == 5);
  CHECK(unequal.kernel_dim() == 3);
  CHECK_FALSE(unequal.sufficiency_skipped);
  CHECK(distance_to_span(unequal.kernel_basis, unit(9, s01)) > 0.9);
  // the commutant stays larger: unequal weights break Eq.-(6) equality
  CHECK(unequal.commutant_dim() == 5);

  const auto equal =
      compute_kernel(probes, custom_weights(spec, vec({0.4, 0.4, 0.2})), options);
  CHECK(equal.candidate_dim() == 5);
  CHECK(equal.kernel_dim() == 5);
  CHECK(distance_to_span(equal.kernel_basis, unit(9, s01)) < 1e-10);

  for (int c = 0; c < unequal.kernel_dim(); ++c) {
    CHECK(distance_to_span(unequal.candidate_basis, unequal.kernel_basis.col(c)) < 1e-10);
  }
}

TEST_CASE("finite-temperature kernel equals the commutant on the dimer") {
  const auto basis = dimer_basis(Sector::fixed(2));
  const auto spec = diagonalize(dimer_h(basis));
  const auto probes = one_body_hermitian_basis(basis);
  const auto report = compute_kernel(probes, canonical_weights(spec, 1.0));
  CHECK(report.kernel_dim() == 4);
  CHECK(report.commutant_dim() == 4);
  CHECK(report.max_principal_angle <= 1e-8);
  CHECK(report.commutant_match);
  CHECK(report.sufficiency_skipped);
  CHECK(report.necessary_gap > 1e6);
}

TEST_CASE("zero-temperature kernel exceeds the commutant") {
  const auto basis = dimer_basis(Sector::fixed(2));
  const auto spec = diagonalize(dimer_h(basis));
  const auto probes = one_body_hermitian_basis(basis);
  KernelOptions options;
  options.enforce_commutant_match = false;
  const auto report = compute_kernel(probes, pure_ground_state(spec), options);
  CHECK(report.kernel_dim() > 4);
  // commutant directions satisfy both conditions at any temperature
  for (int c = 0; c < report.commutant_dim(); ++c) {
    CHECK(distance_to_span(report.kernel_basis, report.commutant.col(c)) < 1e-8);
  }
}

TEST_CASE("pathological generators of the non-interacting dimer lie in the kernel") {
  const auto basis = dimer_basis(Sector::fixed(2));
  const auto spec = diagonalize(dimer_h(basis, 1.0, 0.0));
  const auto ens = pure_ground_state(spec);
  const auto probes = one_body_hermitian_basis(basis);
  const auto nodata = ensemble_1rdm(ens);
  REQUIRE(nodata.occupations(1) > 1.0 - 1e-8);
  REQUIRE(nodata.occupations(2) < 1e-8);

  KernelOptions options;
  options.enforce_commutant_match = false;
  const auto report = compute_kernel(probes, ens, options);
  const auto map = necessary_map(TransitionMoments(probes, *spec), ens,
                                 extended_degenerate_structure(ens));

  const auto generators = predict_pathological_generators(nodata, false, 2);
  CHECK(generators.size() >= 8);
  for (const auto& gen : generators) {
    const RVector v = probes.coefficients_of(gen);
    CHECK((map.a_real * v).cwiseAbs().maxCoeff() < 1e-8 * std::max(1.0, v.norm()));
    CHECK(distance_to_span(report.kernel_basis, v) < 1e-8);
  }
}

TEST_CASE("N=1 canonical kernel exceeds the grand canonical kernel") {
  const auto sector_basis = dimer_basis(Sector::fixed(1));
  const auto sector_spec = diagonalize(dimer_h(sector_basis));
  const auto sector_probes = one_body_hermitian_basis(sector_basis);
  const auto canonical =
      compute_kernel(sector_probes, canonical_weights(sector_spec, 1.0));

  const auto full_basis = dimer_basis(Sector::full());
  const auto h_full = dimer_h(full_basis);
  const double mu = 1.0;
  const auto gc_spec = diagonalize(grand_canonical_generator(h_full, mu));
  const auto gc = compute_kernel(one_body_hermitian_basis(full_basis),
                                 grand_canonical_weights(gc_spec, 1.0, mu));

  CHECK(canonical.kernel_dim() == 8);  // two two-fold degenerate one-particle levels
  CHECK(gc.kernel_dim() == 4);
  CHECK(canonical.kernel_dim() > gc.kernel_dim());

  // an excess direction commutes with H on the one-particle sector only
  RVector excess;
  bool found = false;
  for (int c = 0; c < canonical.kernel_dim(); ++c) {
    RVector v = canonical.kernel_basis.col(c);
    v -= gc.kernel_basis * (gc.kernel_basis.transpose() * v);
    if (v.norm() > 0.5) {
      excess = v / v.norm();
      found = true;
      break;
    }
  }
  REQUIRE(found);
  const auto coeffs = sector_probes.assemble_coefficients(excess);
  const auto h_sector = dimer_h(sector_basis);
  CHECK(commutator_norm(h_sector, one_body_operator(coeffs, sector_basis)) <
        1e-9 * std::max(1.0, h_sector.frobenius_norm()));
  CHECK(commutator_norm(h_full, one_body_operator(coeffs, full_basis)) > 1e-3);
}

TEST_CASE("kernel dimension is temperature independent and collapses from T=0") {
  const auto basis = dimer_basis(Sector::fixed(2));
  const auto spec = diagonalize(dimer_h(basis));
  const auto probes = one_body_hermitian_basis(basis);
  KernelOptions options;
  options.enforce_commutant_match = false;

  const int t0_dim = compute_kernel(probes, pure_ground_state(spec), options).kernel_dim();
  int last = -1;
  for (double beta : {0.5, 1.0, 2.0, 5.0}) {
    const int dim =
        compute_kernel(probes, canonical_weights(spec, beta), options).kernel_dim();
    if (last >= 0) CHECK(dim == last);
    last = dim;
    CHECK(dim < t0_dim);
  }
}

TEST_CASE("row scaling leaves the candidate kernel unchanged") {
  const auto basis = dimer_basis(Sector::fixed(2));
  const auto ens = canonical_weights(diagonalize(dimer_h(basis)), 1.0);
  const auto probes = one_body_hermitian_basis(basis);
  const auto map = necessary_map(TransitionMoments(probes, ens.spectrum()), ens,
                                 extended_degenerate_structure(ens));
  const auto base = candidate_kernel(map, probes.size(), 1e-10);

  NecessaryMap scaled = map;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> scale_dist(0.1, 10.0);
  for (int r = 0; r < scaled.a.rows(); ++r) scaled.a.row(r) *= scale_dist(rng);
  scaled.a_real = realify_rows(scaled.a);
  const auto rescaled = candidate_kernel(scaled, probes.size(), 1e-10);

  REQUIRE(base.basis.cols() == rescaled.basis.cols());
  CHECK(subspace_max_angle(base.basis, rescaled.basis) < 1e-10);
}

TEST_CASE("kernel subspace is invariant under orbital relabeling") {
  // Relabeling the orbitals permutes the occupation words (an input-basis
  // permutation); degenerate eigenvectors come back in a different gauge
  // while the kernel, expressed over the same probe list, must not move.
  const int m = 4;
  std::vector<int> perm{2, 0, 3, 1};

  const auto basis = dimer_basis(Sector::fixed(2));
  const auto h = dimer_h(basis);
  const auto probes = one_body_hermitian_basis(basis);
  const auto report = compute_kernel(probes, canonical_weights(diagonalize(h), 1.0));

  CMatrix r = CMatrix::Zero(m, m);
  for (int p = 0; p < m; ++p) r(perm[p], p) = 1.0;

  // same physical Hamiltonian with relabeled orbitals
  REQUIRE(h.one_body().has_value() == false);
  CMatrix h_kin = CMatrix::Zero(m, m);
  h_kin(0, 2) = h_kin(2, 0) = -1.0;  // up hopping
  h_kin(1, 3) = h_kin(3, 1) = -1.0;  // down hopping
  CustomModelSpec relabeled;
  relabeled.h = r * h_kin * r.adjoint();
  relabeled.density_density = {{perm[0], perm[1], 2.0}, {perm[2], perm[3], 2.0}};
  const auto basis2 = build_basis(OrbitalSet::spinless_sites(m), Sector::fixed(2));
  const auto h2 = build_model(relabeled, basis2);

  std::vector<OneBodyCoefficients> relabeled_probes;
  for (int j = 0; j < probes.size(); ++j) {
    relabeled_probes.emplace_back(CMatrix(r * probes.coefficients(j).matrix() * r.adjoint()));
  }
  const auto probes2 = custom_probes(basis2, std::move(relabeled_probes));

  KernelOptions options;
  options.enforce_commutant_match = false;
  const auto report2 =
      compute_kernel(probes2, canonical_weights(diagonalize(h2), 1.0), options);

  REQUIRE(report.kernel_dim() == report2.kernel_dim());
  CHECK(subspace_max_angle(report.kernel_basis, report2.kernel_basis) <= 1e-8);
}

TEST_CASE("static thermal response distinguishes directions") {
  const auto basis = dimer_basis(Sector::fixed(2));
  const auto h = dimer_h(basis);
  const auto probes = one_body_hermitian_basis(basis);
  const auto syms = symmetry_probes(basis);
  const double scale = probes.max_norm();

  // canonical: the number direction is exactly stationary
  const RVector d_n = static_thermal_response(h, probes, EnsembleKind::canonical, 1.0, 0.0,
                                              syms[0].expansion);
  CHECK(d_n.cwiseAbs().maxCoeff() <= 1e-9 * scale);

  // canonical: spin directions reweight the spin sectors
  const RVector d_sz = static_thermal_response(h, probes, EnsembleKind::canonical, 1.0, 0.0,
                                               syms[3].expansion);
  CHECK(d_sz.cwiseAbs().maxCoeff() >= 1e-3);

  // grand canonical: the number direction changes <N>
  const auto full_basis = dimer_basis(Sector::full());
  const auto h_full = dimer_h(full_basis);
  const auto probes_full = one_body_hermitian_basis(full_basis);
  const RVector d_gc = static_thermal_response(h_full, probes_full,
                                               EnsembleKind::grand_canonical, 1.0, 1.0,
                                               symmetry_probes(full_basis)[0].expansion);
  CHECK(d_gc.cwiseAbs().maxCoeff() >= 1e-3);

  CHECK_THROWS_AS(static_thermal_response(h, probes, EnsembleKind::pure, 1.0, 0.0,
                                          syms[0].expansion),
                  ValidationError);
}

TEST_CASE("pairwise and commutator residuals agree on random monotone ensembles") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  for (int trial = 0; trial < 8; ++trial) {
    // single-particle model with an exactly degenerate ground pair
    const auto basis = build_basis(OrbitalSet::spinless_sites(4), Sector::fixed(1));
    CMatrix h = CMatrix::Zero(4, 4);
    h(0, 0) = -1.0;
    h(1, 1) = -1.0;
    h(2, 2) = 0.5 + uniform(rng);
    h(3, 3) = 2.0 + uniform(rng);
    const auto spec = diagonalize(build_model(CustomModelSpec{h, {}}, basis));

    RVector w(4);
    w << 0.4 + 0.1 * uniform(rng), 0.3, 0.2, 0.1;
    const auto ens = custom_weights(spec, RVector(w / w.sum()));
    const auto eds = extended_degenerate_structure(ens);
    const auto probes = one_body_hermitian_basis(basis);
    const TransitionMoments tm(probes, *spec);
    const auto map = necessary_map(tm, ens, eds);
    const auto null = candidate_kernel(map, probes.size(), 1e-10);

    for (int c = 0; c < null.basis.cols(); ++c) {
      const auto residual = sufficiency_residual(null.basis.col(c), tm, ens, eds, probes);
      CHECK((residual.pairwise - residual.commutator).cwiseAbs().maxCoeff() <=
            1e-10 * residual.scale);
      CHECK(necessary_value(null.basis.col(c), 0.7, tm, ens) < 1e-12);
    }
  }
}
