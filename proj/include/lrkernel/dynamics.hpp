// Time-domain verification: propagate every ensemble member under a weak
// separable perturbation with fixed-step RK4 and compare the extracted
// first-order response against the Lehmann-form convolution.
#pragma once

#include "lrkernel/response_kernel.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace lrk {

struct PulseShape {
  enum class Kind { sinusoid, gaussian, step };
  Kind kind = Kind::gaussian;
  double omega = 1.0;   // sinusoid
  double center = 0.0;  // gaussian
  double width = 1.0;   // gaussian

  double operator()(double t) const;

  static PulseShape sinusoid(double omega) { return {Kind::sinusoid, omega, 0.0, 1.0}; }
  static PulseShape gaussian(double center, double width) {
    return {Kind::gaussian, 0.0, center, width};
  }
  static PulseShape step() { return {Kind::step, 0.0, 0.0, 1.0}; }
};

struct PulseSpec {
  PulseShape shape;
  double amplitude = 1e-4;  // lambda, must be nonzero
  RVector direction;        // probe-coefficient vector v
  double t_end = 10.0;
  int n_steps = 1000;  // >= 100; grid must resolve max |Omega|
};

struct ResponseTrajectory {
  RVector times;
  RMatrix delta_q;  // (n_steps + 1) x probes
  double amplitude = 0.0;
  std::string method;
  std::vector<std::string> labels;
  double max_norm_drift = 0.0;  // propagation only

  double max_abs() const { return delta_q.size() ? delta_q.cwiseAbs().maxCoeff() : 0.0; }
};

// Smallest n_steps that resolves the largest excitation energy with 20
// steps per period over [0, t_end].
int minimum_resolved_steps(const SpectralDecomposition& spectrum, double t_end);

// RK4 propagation of each ensemble member under H0 + lambda f(t) L_v.
// The unperturbed reference expectation is analytic (eigenstates are
// stationary), so delta Q(0) = 0 exactly.
ResponseTrajectory propagate_response(const ManyBodyOperator& h0, const Ensemble& ensemble,
                                      const ProbeSet& probes, const PulseSpec& pulse);

// Trapezoidal convolution of the Lehmann chi with the same pulse.
ResponseTrajectory convolution_reference(const ProbeSet& probes, const Ensemble& ensemble,
                                         const PulseSpec& pulse);

// Relative L2 difference over the whole grid, normalized by the larger
// trajectory norm.
double relative_l2_difference(const ResponseTrajectory& a, const ResponseTrajectory& b);

// Header `t,<probe labels...>`, one row per grid point, 15 significant digits.
void write_csv(const ResponseTrajectory& trajectory, std::ostream& os);

}  // namespace lrk
