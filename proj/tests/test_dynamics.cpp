#include <catch2/catch_amalgamated.hpp>

#include "lrkernel/dynamics.hpp"

#include <cmath>
#include <sstream>

using namespace lrk;

namespace {

struct DimerSetup {
  FockBasisPtr basis;
  ManyBodyOperator h;
  Ensemble ensemble;
  ProbeSet probes;
};

DimerSetup canonical_dimer(double beta = 1.0, double u = 2.0) {
  auto basis = build_basis(OrbitalSet::spinful_sites(2), Sector::fixed(2));
  auto h = build_model(HubbardChainSpec{2, 1.0, u, false}, basis);
  auto ens = canonical_weights(diagonalize(h), beta);
  auto probes = site_density_probes(basis);
  return {basis, std::move(h), std::move(ens), std::move(probes)};
}

RVector direction(std::initializer_list<double> values) {
  RVector v(static_cast<int>(values.size()));
  int i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

}  // namespace

TEST_CASE("response scales linearly in the pulse amplitude") {
  const auto setup = canonical_dimer();
  PulseSpec pulse;
  pulse.shape = PulseShape::gaussian(2.0, 0.5);
  pulse.direction = direction({1.0, -1.0}) / std::sqrt(2.0);
  pulse.t_end = 6.0;
  pulse.n_steps = 600;

  pulse.amplitude = 1e-4;
  const auto full = propagate_response(setup.h, setup.ensemble, setup.probes, pulse);
  pulse.amplitude = 5e-5;
  const auto half = propagate_response(setup.h, setup.ensemble, setup.probes, pulse);

  const RMatrix scaled_full = full.delta_q / 1e-4;
  const RMatrix scaled_half = half.delta_q / 5e-5;
  const double scale = setup.probes.max_norm();
  CHECK((scaled_full - scaled_half).cwiseAbs().maxCoeff() < 20.0 * 1e-4 * scale);
  CHECK(full.max_abs() > 1e-6);  // the direction responds at all
  CHECK(full.max_norm_drift < 1e-9);
  CHECK(full.delta_q.row(0).cwiseAbs().maxCoeff() == 0.0);  // delta Q(0) = 0
}

TEST_CASE("constant site-density direction produces no response") {
  const auto setup = canonical_dimer();
  PulseSpec pulse;
  pulse.shape = PulseShape::gaussian(2.0, 0.5);
  pulse.direction = direction({1.0, 1.0}) / std::sqrt(2.0);
  pulse.amplitude = 1e-4;
  pulse.t_end = 6.0;
  pulse.n_steps = 600;
  const auto traj = propagate_response(setup.h, setup.ensemble, setup.probes, pulse);
  CHECK(traj.max_abs() < 1e-10);
}

TEST_CASE("commutant directions are dynamically silent") {
  const auto basis = build_basis(OrbitalSet::spinful_sites(2), Sector::fixed(2));
  const auto h = build_model(HubbardChainSpec{2, 1.0, 2.0, false}, basis);
  const auto ens = canonical_weights(diagonalize(h), 1.0);
  const auto probes = one_body_hermitian_basis(basis);
  const auto report = compute_kernel(probes, ens);
  REQUIRE(report.kernel_dim() == 4);

  PulseSpec pulse;
  pulse.shape = PulseShape::gaussian(2.0, 0.5);
  pulse.amplitude = 1e-4;
  pulse.t_end = 6.0;
  pulse.n_steps = 1200;
  const double scale = probes.max_norm();
  for (int c = 0; c < report.kernel_dim(); ++c) {
    pulse.direction = report.kernel_basis.col(c);
    const auto traj = propagate_response(h, ens, probes, pulse);
    CHECK(traj.max_abs() / pulse.amplitude <= 1e-6 * scale);
  }
}

TEST_CASE("zero direction gives a zero trajectory") {
  const auto setup = canonical_dimer();
  PulseSpec pulse;
  pulse.shape = PulseShape::step();
  pulse.direction = direction({0.0, 0.0});
  pulse.amplitude = 1e-4;
  pulse.t_end = 6.0;
  pulse.n_steps = 600;
  CHECK(convolution_reference(setup.probes, setup.ensemble, pulse).max_abs() == 0.0);
  CHECK(propagate_response(setup.h, setup.ensemble, setup.probes, pulse).max_abs() < 1e-12);
}

TEST_CASE("two-level step response has the closed form") {
  const auto basis = build_basis(OrbitalSet::spinless_sites(2), Sector::fixed(1));
  CMatrix hm(2, 2);
  hm << 0, -1, -1, 0;
  const auto h = build_model(CustomModelSpec{hm, {}}, basis);
  const auto ens = pure_ground_state(diagonalize(h));
  const auto probes = site_density_probes(basis);

  PulseSpec pulse;
  pulse.shape = PulseShape::step();
  pulse.direction = direction({1.0, 0.0});
  pulse.amplitude = 1e-4;
  pulse.t_end = 10.0;
  pulse.n_steps = 20000;

  // chi_00(tau) = -(1/2) sin(2 tau)  =>  dQ_0(t) = -lambda (1 - cos 2t)/4
  const auto reference = convolution_reference(probes, ens, pulse);
  double worst = 0.0;
  for (int k = 0; k <= pulse.n_steps; k += 50) {
    const double t = reference.times(k);
    const double closed = -pulse.amplitude * (1.0 - std::cos(2.0 * t)) / 4.0;
    worst = std::max(worst, std::abs(reference.delta_q(k, 0) - closed));
  }
  CHECK(worst < 1e-6 * pulse.amplitude);

  const auto propagated = propagate_response(h, ens, probes, pulse);
  CHECK(relative_l2_difference(propagated, reference) < 1e-3);
}

TEST_CASE("propagation matches the Lehmann convolution on the dimer") {
  const auto setup = canonical_dimer();
  PulseSpec pulse;
  pulse.shape = PulseShape::sinusoid(1.3);
  pulse.direction = direction({0.8, -0.6});
  pulse.amplitude = 1e-4;
  pulse.t_end = 10.0;
  pulse.n_steps = 2000;
  const auto propagated = propagate_response(setup.h, setup.ensemble, setup.probes, pulse);
  const auto reference = convolution_reference(setup.probes, setup.ensemble, pulse);
  CHECK(relative_l2_difference(propagated, reference) < 1e-3);
  CHECK(propagated.max_abs() / pulse.amplitude > 1e-2);
}

TEST_CASE("energy is conserved after the pulse has passed") {
  // non-interacting chain so that H itself is in the one-body probe span
  const auto basis = build_basis(OrbitalSet::spinful_sites(2), Sector::fixed(2));
  const auto h = build_model(HubbardChainSpec{2, 1.0, 0.0, false}, basis);
  const auto ens = canonical_weights(diagonalize(h), 1.0);
  const auto probes = one_body_hermitian_basis(basis);

  PulseSpec pulse;
  pulse.shape = PulseShape::gaussian(1.5, 0.25);  // support well inside [0, 4]
  pulse.amplitude = 1e-3;
  pulse.t_end = 8.0;
  pulse.n_steps = 1600;
  pulse.direction = RVector::Zero(16);
  pulse.direction(0) = 1.0;  // local density, does not commute with H

  const auto traj = propagate_response(h, ens, probes, pulse);
  // expectation of H = -t sum (S probes on same-spin neighbors)
  CMatrix hk = CMatrix::Zero(4, 4);
  hk(0, 2) = hk(2, 0) = -1.0;
  hk(1, 3) = hk(3, 1) = -1.0;
  const RVector h_dir = probes.coefficients_of(OneBodyCoefficients(hk));
  const RVector energy_shift = traj.delta_q * h_dir;
  const int after_pulse = 1000;  // t = 5
  const double settled = energy_shift(after_pulse);
  CHECK(std::abs(settled) > 1e-12);  // the pulse did pump energy
  for (int k = after_pulse; k <= pulse.n_steps; k += 25) {
    CHECK(energy_shift(k) == Catch::Approx(settled).margin(1e-10));
  }
  CHECK(traj.max_norm_drift <= 1e-9);
}

TEST_CASE("under-resolved grids are rejected with the required step count") {
  const auto setup = canonical_dimer();
  PulseSpec pulse;
  pulse.shape = PulseShape::step();
  pulse.direction = direction({1.0, 0.0});
  pulse.amplitude = 1e-4;
  pulse.t_end = 50.0;
  pulse.n_steps = 100;
  CHECK_THROWS_WITH(propagate_response(setup.h, setup.ensemble, setup.probes, pulse),
                    Catch::Matchers::ContainsSubstring("n_steps >="));
  CHECK_THROWS_AS(propagate_response(setup.h, setup.ensemble, setup.probes,
                                     PulseSpec{PulseShape::step(), 0.0,
                                               direction({1.0, 0.0}), 1.0, 200}),
                  ValidationError);
}

TEST_CASE("csv export format") {
  const auto setup = canonical_dimer();
  PulseSpec pulse;
  pulse.shape = PulseShape::gaussian(2.0, 0.5);
  pulse.direction = direction({1.0, -1.0});
  pulse.amplitude = 1e-4;
  pulse.t_end = 6.0;
  pulse.n_steps = 600;
  const auto traj = propagate_response(setup.h, setup.ensemble, setup.probes, pulse);

  std::ostringstream os;
  write_csv(traj, os);
  std::istringstream in(os.str());
  std::string header;
  std::getline(in, header);
  CHECK(header == "t,n(0),n(1)");
  int rows = 0;
  std::string line;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == pulse.n_steps + 1);
}
