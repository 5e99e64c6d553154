#include "lrkernel/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <sstream>

namespace lrk {

double PulseShape::operator()(double t) const {
  switch (kind) {
    case Kind::sinusoid: return std::sin(omega * t);
    case Kind::gaussian: {
      const double x = (t - center) / width;
      return std::exp(-0.5 * x * x);
    }
    case Kind::step: return t >= 0.0 ? 1.0 : 0.0;
  }
  return 0.0;
}

namespace {

void validate_pulse(const PulseSpec& pulse, int n_probes) {
  if (pulse.amplitude == 0.0) throw ValidationError("pulse: amplitude must be nonzero");
  if (pulse.n_steps < 100) throw ValidationError("pulse: n_steps must be >= 100");
  if (!(pulse.t_end > 0.0)) throw ValidationError("pulse: t_end must be positive");
  if (pulse.direction.size() != n_probes) {
    throw ValidationError("pulse: direction length does not match probe count");
  }
}

}  // namespace

int minimum_resolved_steps(const SpectralDecomposition& spec, double t_end) {
  const double omega_max =
      spec.energies()(spec.dim() - 1) - spec.energies()(0);  // largest |Omega_KL|
  if (omega_max <= 0.0) return 100;
  const double period = 2.0 * std::numbers::pi / omega_max;
  return std::max(100, static_cast<int>(std::ceil(20.0 * t_end / period)));
}

ResponseTrajectory propagate_response(const ManyBodyOperator& h0, const Ensemble& ensemble,
                                      const ProbeSet& probes, const PulseSpec& pulse) {
  validate_pulse(pulse, probes.size());
  const SpectralDecomposition& spec = ensemble.spectrum();
  if (h0.basis_ptr() != probes.basis_ptr() || h0.basis_ptr() != spec.basis_ptr()) {
    throw ValidationError("propagate_response: operators live on different bases");
  }
  const int need = minimum_resolved_steps(spec, pulse.t_end);
  if (pulse.n_steps < need) {
    std::ostringstream os;
    os << "propagate_response: grid under-resolves the spectrum; need n_steps >= " << need
       << " for t_end = " << pulse.t_end << " (20 steps per shortest period)";
    throw ValidationError(os.str());
  }

  const int dim = spec.dim();
  const int n_probes = probes.size();
  const int n_steps = pulse.n_steps;
  const double dt = pulse.t_end / n_steps;
  const double lambda = pulse.amplitude;

  // Mid-spectrum shift: only a global phase, but it halves the spectral
  // radius seen by the integrator.
  const double e_mid = 0.5 * (spec.energies()(0) + spec.energies()(dim - 1));
  const CMatrix h_shifted = h0.matrix() - e_mid * CMatrix::Identity(dim, dim);
  const CMatrix lv = probes.assemble(pulse.direction).matrix();

  // Substep count: keep the accumulated RK4 norm error near 1e-12 so the
  // extracted response stays clean after dividing by lambda.
  const double radius = 0.5 * (spec.energies()(dim - 1) - spec.energies()(0)) +
                        std::abs(lambda) * lv.norm() + 1e-12;
  int substeps = 1;
  const double total_budget = 1e-12;
  auto norm_error = [&](int m) {
    const double theta = radius * dt / m;
    return std::pow(theta, 6) / 144.0 * static_cast<double>(n_steps) * m;
  };
  while ((radius * dt / substeps > 0.1 || norm_error(substeps) > total_budget) &&
         substeps < 1 << 20) {
    substeps *= 2;
  }
  const double h_sub = dt / substeps;

  // Static reference expectations: eigenstates are stationary under H0.
  RMatrix reference(dim, n_probes);
  std::vector<CMatrix> probe_matrices;
  probe_matrices.reserve(n_probes);
  for (int i = 0; i < n_probes; ++i) probe_matrices.push_back(probes.probe(i).matrix());
  for (int k = 0; k < dim; ++k) {
    const CVector psi = spec.eigenvector(k);
    for (int i = 0; i < n_probes; ++i) {
      reference(k, i) = std::real(psi.dot(probe_matrices[i] * psi));
    }
  }

  ResponseTrajectory out;
  out.amplitude = lambda;
  out.method = "rk4";
  out.labels = probes.labels();
  out.times = RVector::LinSpaced(n_steps + 1, 0.0, pulse.t_end);
  out.delta_q = RMatrix::Zero(n_steps + 1, n_probes);

  // Members with negligible weight contribute below every tolerance used
  // downstream; skip them.
  const double w_cut = 1e-14 * ensemble.weights().maxCoeff();

  auto rhs = [&](double t, const CVector& psi) -> CVector {
    const double f = pulse.shape(t);
    CVector h_psi = h_shifted * psi;
    h_psi.noalias() += (lambda * f) * (lv * psi);
    return Complex(0.0, -1.0) * h_psi;
  };

  double max_drift = 0.0;
  for (int k = 0; k < dim; ++k) {
    const double w = ensemble.weight(k);
    if (w <= w_cut) continue;
    CVector psi = spec.eigenvector(k);
    double t = 0.0;
    for (int i = 0; i < n_probes; ++i) {
      out.delta_q(0, i) += w * (std::real(psi.dot(probe_matrices[i] * psi)) - reference(k, i));
    }
    for (int step = 1; step <= n_steps; ++step) {
      for (int sub = 0; sub < substeps; ++sub) {
        const CVector k1 = rhs(t, psi);
        const CVector k2 = rhs(t + 0.5 * h_sub, psi + 0.5 * h_sub * k1);
        const CVector k3 = rhs(t + 0.5 * h_sub, psi + 0.5 * h_sub * k2);
        const CVector k4 = rhs(t + h_sub, psi + h_sub * k3);
        psi += (h_sub / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        t += h_sub;
      }
      for (int i = 0; i < n_probes; ++i) {
        out.delta_q(step, i) +=
            w * (std::real(psi.dot(probe_matrices[i] * psi)) - reference(k, i));
      }
    }
    max_drift = std::max(max_drift, std::abs(psi.norm() - 1.0));
  }
  out.max_norm_drift = max_drift;
  if (max_drift > 1e-9) {
    std::ostringstream os;
    os << "propagate_response: norm drift " << max_drift << " exceeds 1e-9";
    throw std::runtime_error(os.str());
  }
  return out;
}

ResponseTrajectory convolution_reference(const ProbeSet& probes, const Ensemble& ensemble,
                                         const PulseSpec& pulse) {
  validate_pulse(pulse, probes.size());
  const int n_steps = pulse.n_steps;
  const int n_probes = probes.size();
  const double dt = pulse.t_end / n_steps;

  const TransitionMoments tm(probes, ensemble.spectrum());
  const RVector taus = RVector::LinSpaced(n_steps + 1, 0.0, pulse.t_end);
  const RMatrix g = chi_direction_series(tm, ensemble, pulse.direction, taus);

  RVector f(n_steps + 1);
  for (int j = 0; j <= n_steps; ++j) f(j) = pulse.shape(j * dt);

  ResponseTrajectory out;
  out.amplitude = pulse.amplitude;
  out.method = "lehmann-convolution";
  out.labels = probes.labels();
  out.times = taus;
  out.delta_q = RMatrix::Zero(n_steps + 1, n_probes);
  // delta Q_i(t_k) = lambda * integral_0^{t_k} g_i(t_k - t') f(t') dt'
  for (int k = 1; k <= n_steps; ++k) {
    RVector acc = RVector::Zero(n_probes);
    for (int j = 0; j <= k; ++j) {
      const double weight = (j == 0 || j == k) ? 0.5 : 1.0;
      acc += weight * f(j) * g.row(k - j).transpose();
    }
    out.delta_q.row(k) = pulse.amplitude * dt * acc.transpose();
  }
  return out;
}

double relative_l2_difference(const ResponseTrajectory& a, const ResponseTrajectory& b) {
  if (a.delta_q.rows() != b.delta_q.rows() || a.delta_q.cols() != b.delta_q.cols()) {
    throw ValidationError("relative_l2_difference: trajectories have different shapes");
  }
  const double denom = std::max(a.delta_q.norm(), b.delta_q.norm());
  if (denom == 0.0) return 0.0;
  return (a.delta_q - b.delta_q).norm() / denom;
}

void write_csv(const ResponseTrajectory& trajectory, std::ostream& os) {
  os << "t";
  for (const auto& label : trajectory.labels) os << "," << label;
  os << "\n";
  char buffer[64];
  for (int row = 0; row < trajectory.times.size(); ++row) {
    std::snprintf(buffer, sizeof(buffer), "%.15g", trajectory.times(row));
    os << buffer;
    for (int i = 0; i < trajectory.delta_q.cols(); ++i) {
      std::snprintf(buffer, sizeof(buffer), "%.15g", trajectory.delta_q(row, i));
      os << "," << buffer;
    }
    os << "\n";
  }
}

}  // namespace lrk
