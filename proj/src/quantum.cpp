#include "kho/quantum.hpp"

#include <lapacke.h>

#include <cmath>
#include <stdexcept>
#include <string>

#include "kho/errors.hpp"

namespace kho {

namespace {

int tail_start(int dim) { return dim - dim / 8; }

void require_dim(int dim) {
  if (dim < 8) throw std::invalid_argument("Fock dimension must be at least 8 for the tail rule");
}

// log of binomial(n, k)
double log_choose(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

Eigen::VectorXcd rotation_phases(int dim, double angle) {
  Eigen::VectorXcd ph(dim);
  for (int n = 0; n < dim; ++n) ph(n) = std::polar(1.0, -angle * n);
  return ph;
}

// real matrix times complex matrix without promoting the real one
Eigen::MatrixXcd real_times(const Eigen::MatrixXd& a, const Eigen::MatrixXcd& b) {
  Eigen::MatrixXcd out(a.rows(), b.cols());
  out.real() = a * b.real();
  out.imag() = a * b.imag();
  return out;
}

Eigen::MatrixXcd times_real(const Eigen::MatrixXcd& b, const Eigen::MatrixXd& a) {
  Eigen::MatrixXcd out(b.rows(), a.cols());
  out.real() = b.real() * a;
  out.imag() = b.imag() * a;
  return out;
}

struct Expectations {
  cdouble a;
  cdouble a2;
  double photons;
  double trace;
};

MomentRecord to_record(const Expectations& e, int kick) {
  MomentRecord r;
  r.kick = kick;
  r.mean_v = e.a.real();
  r.mean_u = e.a.imag();
  r.var_v = (2.0 * e.a2.real() + 2.0 * e.photons + e.trace) / 4.0 - r.mean_v * r.mean_v;
  r.var_u = (2.0 * e.photons + e.trace - 2.0 * e.a2.real()) / 4.0 - r.mean_u * r.mean_u;
  r.photons = e.photons;
  return r;
}

}  // namespace

double tail_population(const Eigen::VectorXd& populations) {
  const int dim = static_cast<int>(populations.size());
  return populations.tail(dim - tail_start(dim)).sum();
}

PureState::PureState(Eigen::VectorXcd amplitudes) : amp_(std::move(amplitudes)) { require_dim(dim()); }

PureState PureState::vacuum(int dim) { return fock(dim, 0); }

PureState PureState::fock(int dim, int n) {
  require_dim(dim);
  if (n < 0 || n >= dim) throw std::invalid_argument("Fock index outside the truncated basis");
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(dim);
  v(n) = 1.0;
  return PureState(std::move(v));
}

PureState PureState::coherent(int dim, cdouble beta) {
  require_dim(dim);
  Eigen::VectorXcd v(dim);
  v(0) = std::exp(-0.5 * std::norm(beta));
  for (int n = 1; n < dim; ++n) v(n) = v(n - 1) * beta / std::sqrt(static_cast<double>(n));
  v /= v.norm();
  return PureState(std::move(v));
}

double PureState::tail_population() const { return kho::tail_population(amp_.cwiseAbs2()); }

DensityOperator::DensityOperator(Eigen::MatrixXcd rho) : rho_(std::move(rho)) {
  if (rho_.rows() != rho_.cols()) throw std::invalid_argument("density operator must be square");
  require_dim(dim());
}

DensityOperator DensityOperator::vacuum(int dim) { return from_pure(PureState::vacuum(dim)); }
DensityOperator DensityOperator::fock(int dim, int n) { return from_pure(PureState::fock(dim, n)); }
DensityOperator DensityOperator::coherent(int dim, cdouble beta) { return from_pure(PureState::coherent(dim, beta)); }

DensityOperator DensityOperator::from_pure(const PureState& psi) {
  return DensityOperator(psi.amplitudes() * psi.amplitudes().adjoint());
}

double DensityOperator::trace() const { return rho_.trace().real(); }

double DensityOperator::hermiticity_error() const { return (rho_ - rho_.adjoint()).cwiseAbs().maxCoeff(); }

double DensityOperator::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (rho_ + rho_.adjoint()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double DensityOperator::tail_population() const { return kho::tail_population(rho_.diagonal().real()); }

bool DensityOperator::truncation_safe(double tolerance) const { return tail_population() <= tolerance; }

QuadratureBasis quadrature_basis(int dim) {
  require_dim(dim);
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd off(dim);
  for (int n = 1; n < dim; ++n) off(n - 1) = std::sqrt(static_cast<double>(n));
  off(dim - 1) = 0.0;
  QuadratureBasis basis;
  basis.positions.resize(dim);
  basis.vectors.resize(dim, dim);
  std::vector<lapack_int> support(2 * static_cast<std::size_t>(dim));
  lapack_int found = 0;
  const lapack_int info = LAPACKE_dstevr(LAPACK_COL_MAJOR, 'V', 'A', dim, diag.data(), off.data(), 0.0, 0.0, 0, 0,
                                         0.0, &found, basis.positions.data(), basis.vectors.data(), dim,
                                         support.data());
  if (info != 0 || found != dim) {
    throw NumericalAbort("quadrature eigendecomposition failed (dstevr info " + std::to_string(info) + ")");
  }
  return basis;
}

KickOperator::KickOperator(double eta, double quantum_kick, int dim) : basis_(quadrature_basis(dim)) {
  if (!std::isfinite(eta) || !std::isfinite(quantum_kick)) throw std::invalid_argument("kick parameters must be finite");
  phases_.resize(dim);
  for (int j = 0; j < dim; ++j) phases_(j) = std::polar(1.0, -quantum_kick * std::cos(eta * basis_.positions(j)));
}

Eigen::MatrixXcd KickOperator::matrix() const {
  const Eigen::MatrixXd& v = basis_.vectors;
  Eigen::MatrixXcd left(v.rows(), v.cols());
  for (int j = 0; j < v.cols(); ++j) left.col(j) = v.col(j).cast<cdouble>() * phases_(j);
  return times_real(left, v.transpose());
}

void KickOperator::apply(DensityOperator& rho) const {
  const Eigen::MatrixXd& v = basis_.vectors;
  Eigen::MatrixXcd b = times_real(real_times(v.transpose(), rho.matrix()), v);
  b = phases_.asDiagonal() * b * phases_.conjugate().asDiagonal();
  rho.matrix() = times_real(real_times(v, b), v.transpose());
}

void KickOperator::apply(PureState& psi) const {
  const Eigen::MatrixXd& v = basis_.vectors;
  Eigen::VectorXcd c(v.cols());
  c.real() = v.transpose() * psi.amplitudes().real();
  c.imag() = v.transpose() * psi.amplitudes().imag();
  c = c.cwiseProduct(phases_);
  psi.amplitudes().real() = v * c.real();
  psi.amplitudes().imag() = v * c.imag();
}

Eigen::MatrixXcd build_kick_unitary(double eta, double quantum_kick, int dim) {
  if (quantum_kick == 0.0) {
    require_dim(dim);
    return Eigen::MatrixXcd::Identity(dim, dim);
  }
  return KickOperator(eta, quantum_kick, dim).matrix();
}

void apply_harmonic(DensityOperator& rho, double angle) {
  const Eigen::VectorXcd ph = rotation_phases(rho.dim(), angle);
  rho.matrix() = ph.asDiagonal() * rho.matrix() * ph.conjugate().asDiagonal();
}

void apply_harmonic(PureState& psi, double angle) {
  psi.amplitudes() = psi.amplitudes().cwiseProduct(rotation_phases(psi.dim(), angle));
}

ChannelReport apply_amplitude_damping(DensityOperator& rho, double gamma_tau, double angle) {
  if (!(gamma_tau >= 0) || !std::isfinite(gamma_tau)) throw std::invalid_argument("gamma_tau must be finite and >= 0");
  const int dim = rho.dim();
  const double before = rho.trace();
  if (gamma_tau > 0) {
    const double log_t = -gamma_tau;
    const double log_loss = std::log(-std::expm1(-gamma_tau));
    const Eigen::MatrixXcd& in = rho.matrix();
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(dim, dim);
    Eigen::VectorXd c(dim);
    for (int k = 0; k < dim; ++k) {
      const int len = dim - k;
      double largest = -INFINITY;
      for (int m = 0; m < len; ++m) {
        const double lc = 0.5 * (log_choose(m + k, k) + m * log_t + k * log_loss);
        c(m) = std::exp(lc);
        largest = std::max(largest, lc);
      }
      if (largest < -745.0) continue;  // every coefficient underflows
      out.topLeftCorner(len, len).noalias() +=
          c.head(len).asDiagonal() * in.bottomRightCorner(len, len) * c.head(len).asDiagonal();
    }
    rho.matrix() = std::move(out);
  }
  apply_harmonic(rho, angle);
  ChannelReport report;
  report.trace_change = rho.trace() - before;
  report.tail_population = rho.tail_population();
  report.truncation_safe = report.tail_population <= kDefaultTailTolerance;
  if (std::abs(report.trace_change) > 1e-8) {
    throw NumericalAbort("amplitude damping: trace drifted by " + std::to_string(report.trace_change));
  }
  return report;
}

ChannelReport apply_diffusion_channel(DensityOperator& rho, double gamma_tau, double tolerance) {
  if (!(gamma_tau >= 0) || !std::isfinite(gamma_tau)) throw std::invalid_argument("gamma_tau must be finite and >= 0");
  const double before = rho.trace();
  ChannelReport report;
  if (gamma_tau > 0) {
    const int dim = rho.dim();
    const double gain = 1.0 + gamma_tau;
    // loss with T = 1 / gain
    apply_amplitude_damping(rho, std::log(gain), 0.0);
    const Eigen::MatrixXcd& in = rho.matrix();
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(dim, dim);
    const double log_gain = std::log(gain);
    const double log_ratio = std::log(gamma_tau / gain);
    Eigen::VectorXd c(dim);
    for (int k = 0; k < dim; ++k) {
      const int len = dim - k;
      double largest = -INFINITY;
      for (int m = 0; m < len; ++m) {
        const double lc = 0.5 * (log_choose(m + k, k) - (m + 1) * log_gain + k * log_ratio);
        c(m) = std::exp(lc);
        largest = std::max(largest, lc);
      }
      if (largest < -745.0) continue;
      out.bottomRightCorner(len, len).noalias() +=
          c.head(len).asDiagonal() * in.topLeftCorner(len, len) * c.head(len).asDiagonal();
    }
    rho.matrix() = std::move(out);
  }
  report.trace_change = rho.trace() - before;
  report.tail_population = rho.tail_population();
  report.truncation_safe = report.tail_population <= tolerance;
  return report;
}

namespace {

// d rho / dt for the rotating oscillator plus the reservoir, O(N^2) using the
// bidiagonal structure of a and a^dagger.
Eigen::MatrixXcd lindblad_rhs(const Eigen::MatrixXcd& rho, double frequency, const EnvironmentSpec& env) {
  const int dim = static_cast<int>(rho.rows());
  Eigen::MatrixXcd out(dim, dim);
  const cdouble minus_i(0.0, -1.0);
  const bool damping = env.kind != EnvironmentKind::none && env.rate > 0;
  const bool heating = env.kind == EnvironmentKind::diffusive && env.rate > 0;
  const double r = env.rate;
  for (int n = 0; n < dim; ++n) {
    for (int m = 0; m < dim; ++m) {
      cdouble v = minus_i * frequency * static_cast<double>(m - n) * rho(m, n);
      if (damping) {
        if (m + 1 < dim && n + 1 < dim) v += r * std::sqrt((m + 1.0) * (n + 1.0)) * rho(m + 1, n + 1);
        v -= r * 0.5 * (m + n) * rho(m, n);
      }
      if (heating) {
        if (m > 0 && n > 0) v += r * std::sqrt(static_cast<double>(m) * n) * rho(m - 1, n - 1);
        v -= r * 0.5 * (m + n + 2.0) * rho(m, n);
      }
      out(m, n) = v;
    }
  }
  return out;
}

Eigen::MatrixXcd rk4(const Eigen::MatrixXcd& rho0, double frequency, const EnvironmentSpec& env, double duration,
                     long steps) {
  const double h = duration / static_cast<double>(steps);
  Eigen::MatrixXcd rho = rho0;
  for (long s = 0; s < steps; ++s) {
    const Eigen::MatrixXcd k1 = lindblad_rhs(rho, frequency, env);
    const Eigen::MatrixXcd k2 = lindblad_rhs(rho + 0.5 * h * k1, frequency, env);
    const Eigen::MatrixXcd k3 = lindblad_rhs(rho + 0.5 * h * k2, frequency, env);
    const Eigen::MatrixXcd k4 = lindblad_rhs(rho + h * k3, frequency, env);
    rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return rho;
}

double photon_number(const Eigen::MatrixXcd& rho) {
  double n = 0.0;
  for (int i = 0; i < rho.rows(); ++i) n += i * rho(i, i).real();
  return n;
}

}  // namespace

DensityOperator lindblad_integrate(const DensityOperator& rho, double frequency, const EnvironmentSpec& env,
                                   double duration, const StepControl& control) {
  if (!(env.rate >= 0)) throw std::invalid_argument("reservoir rate must be >= 0");
  if (!(duration >= 0) || !std::isfinite(duration)) throw std::invalid_argument("duration must be finite and >= 0");
  if (duration == 0.0) return rho;
  const int dim = rho.dim();
  long steps = control.initial_steps;
  if (steps <= 0) {
    const double stiffness = std::abs(frequency) * (dim - 1) + (env.kind == EnvironmentKind::none ? 0.0 : env.rate) * (dim + 1);
    steps = std::max<long>(16, static_cast<long>(std::ceil(duration * stiffness / 0.5)));
  }
  Eigen::MatrixXcd coarse = rk4(rho.matrix(), frequency, env, duration, steps);
  for (int doubling = 0; doubling < control.max_doublings; ++doubling) {
    steps *= 2;
    Eigen::MatrixXcd fine = rk4(rho.matrix(), frequency, env, duration, steps);
    const double d_trace = std::abs((fine.trace() - coarse.trace()).real());
    const double d_photons = std::abs(photon_number(fine) - photon_number(coarse));
    const double d_max = (fine - coarse).cwiseAbs().maxCoeff();
    if (d_trace < control.tolerance && d_photons < control.tolerance && d_max < control.tolerance) {
      DensityOperator out(std::move(fine));
      if (out.min_eigenvalue() < -1e-6) throw NumericalAbort("Lindblad integration lost positivity");
      return out;
    }
    coarse = std::move(fine);
  }
  throw NumericalAbort("Lindblad integration did not converge within the step-doubling budget");
}

cdouble expectation_a(const DensityOperator& rho) {
  const Eigen::MatrixXcd& m = rho.matrix();
  cdouble a = 0.0;
  for (int n = 1; n < rho.dim(); ++n) a += std::sqrt(static_cast<double>(n)) * m(n, n - 1);
  return a;
}

MomentRecord moments(const DensityOperator& rho, int kick) {
  const Eigen::MatrixXcd& m = rho.matrix();
  Expectations e{expectation_a(rho), 0.0, 0.0, rho.trace()};
  for (int n = 2; n < rho.dim(); ++n) e.a2 += std::sqrt(static_cast<double>(n) * (n - 1)) * m(n, n - 2);
  e.photons = photon_number(m);
  return to_record(e, kick);
}

MomentRecord moments(const PureState& psi, int kick) {
  const Eigen::VectorXcd& c = psi.amplitudes();
  Expectations e{0.0, 0.0, 0.0, psi.norm_squared()};
  for (int n = 1; n < psi.dim(); ++n) {
    e.a += std::sqrt(static_cast<double>(n)) * std::conj(c(n - 1)) * c(n);
    e.photons += n * std::norm(c(n));
    if (n >= 2) e.a2 += std::sqrt(static_cast<double>(n) * (n - 1)) * std::conj(c(n - 2)) * c(n);
  }
  return to_record(e, kick);
}

KickedMap::KickedMap(const DimensionlessParams& d, EnvironmentKind env, int dim)
    : params_(d),
      env_(env),
      kick_(d.eta, env == EnvironmentKind::dissipative ? d.quantum_damped_kick() : d.quantum_kick, dim) {}

ChannelReport KickedMap::step(DensityOperator& rho) const {
  if (rho.dim() != dim()) throw std::invalid_argument("state dimension does not match the kicked map");
  kick_.apply(rho);
  switch (env_) {
    case EnvironmentKind::none:
      apply_harmonic(rho, params_.angle);
      return {0.0, rho.tail_population(), true};
    case EnvironmentKind::dissipative:
      return apply_amplitude_damping(rho, 2.0 * params_.half_damping, params_.damped_angle);
    case EnvironmentKind::diffusive:
      apply_harmonic(rho, params_.angle);
      return apply_diffusion_channel(rho, 2.0 * params_.diffusion);
  }
  throw std::invalid_argument("unknown environment kind");
}

void KickedMap::step(PureState& psi) const {
  if (env_ != EnvironmentKind::none) throw std::invalid_argument("pure states cannot evolve under a reservoir");
  if (psi.dim() != dim()) throw std::invalid_argument("state dimension does not match the kicked map");
  kick_.apply(psi);
  apply_harmonic(psi, params_.angle);
}

QuantumEvolution evolve_kicked(DensityOperator rho, const DimensionlessParams& d, EnvironmentKind env, int kicks,
                               const EvolveOptions& options) {
  if (kicks < 0) throw std::invalid_argument("kick count must be >= 0");
  const KickedMap map(d, env, rho.dim());
  QuantumEvolution out{std::move(rho), {}, {}, std::nullopt};
  out.moments.push_back(moments(out.state, 0));
  for (int k = 1; k <= kicks; ++k) {
    DensityOperator next = out.state;
    map.step(next);
    const double drift = std::abs(next.trace() - 1.0);
    if (!next.truncation_safe(options.tail_tolerance) || drift > options.trace_tolerance) {
      if (options.abort_on_truncation) {
        throw TruncationError("Fock truncation unsafe at kick " + std::to_string(k) + " (tail population " +
                                  std::to_string(next.tail_population()) + ", trace drift " + std::to_string(drift) + ")",
                              k - 1);
      }
      out.truncated_at = k;
      break;
    }
    out.state = std::move(next);
    out.moments.push_back(moments(out.state, k));
    out.trace_drift.push_back(drift);
  }
  return out;
}

PureEvolution evolve_kicked(PureState psi, const DimensionlessParams& d, int kicks, const EvolveOptions& options) {
  if (kicks < 0) throw std::invalid_argument("kick count must be >= 0");
  const KickedMap map(d, EnvironmentKind::none, psi.dim());
  PureEvolution out{std::move(psi), {}, {}, std::nullopt};
  out.moments.push_back(moments(out.state, 0));
  for (int k = 1; k <= kicks; ++k) {
    PureState next = out.state;
    map.step(next);
    const double drift = std::abs(next.norm_squared() - 1.0);
    if (next.tail_population() > options.tail_tolerance || drift > options.trace_tolerance) {
      if (options.abort_on_truncation) {
        throw TruncationError("Fock truncation unsafe at kick " + std::to_string(k) + " (tail population " +
                                  std::to_string(next.tail_population()) + ", trace drift " + std::to_string(drift) + ")",
                              k - 1);
      }
      out.truncated_at = k;
      break;
    }
    out.state = std::move(next);
    out.moments.push_back(moments(out.state, k));
    out.trace_drift.push_back(drift);
  }
  return out;
}

}  // namespace kho
