#pragma once

#include <complex>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "kho/params.hpp"

namespace kho {

using cdouble = std::complex<double>;

inline constexpr double kDefaultTailTolerance = 1e-6;
inline constexpr double kDefaultTraceTolerance = 1e-8;

/// Population in the top eighth of the Fock basis.
double tail_population(const Eigen::VectorXd& populations);

class PureState {
 public:
  explicit PureState(Eigen::VectorXcd amplitudes);
  static PureState vacuum(int dim);
  static PureState fock(int dim, int n);
  static PureState coherent(int dim, cdouble beta);

  int dim() const { return static_cast<int>(amp_.size()); }
  const Eigen::VectorXcd& amplitudes() const { return amp_; }
  Eigen::VectorXcd& amplitudes() { return amp_; }
  double norm_squared() const { return amp_.squaredNorm(); }
  double tail_population() const;

 private:
  Eigen::VectorXcd amp_;
};

class DensityOperator {
 public:
  explicit DensityOperator(Eigen::MatrixXcd rho);
  static DensityOperator vacuum(int dim);
  static DensityOperator fock(int dim, int n);
  static DensityOperator coherent(int dim, cdouble beta);
  static DensityOperator from_pure(const PureState& psi);

  int dim() const { return static_cast<int>(rho_.rows()); }
  const Eigen::MatrixXcd& matrix() const { return rho_; }
  Eigen::MatrixXcd& matrix() { return rho_; }

  double trace() const;
  double hermiticity_error() const;  // max |rho - rho^dagger|
  double min_eigenvalue() const;
  double tail_population() const;
  bool truncation_safe(double tolerance = kDefaultTailTolerance) const;

 private:
  Eigen::MatrixXcd rho_;
};

/// Eigen-decomposition of the truncated quadrature X = a + a^dagger.
struct QuadratureBasis {
  Eigen::VectorXd positions;  // eigenvalues, ascending
  Eigen::MatrixXd vectors;    // columns are eigenvectors
};

QuadratureBasis quadrature_basis(int dim);

/// exp(-i K_q cos(eta X)) in the truncated Fock basis, kept in factored form.
class KickOperator {
 public:
  KickOperator(double eta, double quantum_kick, int dim);

  int dim() const { return static_cast<int>(basis_.positions.size()); }
  Eigen::MatrixXcd matrix() const;
  void apply(DensityOperator& rho) const;
  void apply(PureState& psi) const;

 private:
  QuadratureBasis basis_;
  Eigen::VectorXcd phases_;
};

Eigen::MatrixXcd build_kick_unitary(double eta, double quantum_kick, int dim);

void apply_harmonic(DensityOperator& rho, double angle);
void apply_harmonic(PureState& psi, double angle);

struct ChannelReport {
  double trace_change = 0.0;
  double tail_population = 0.0;
  bool truncation_safe = true;
};

/// Zero-temperature attenuation with transmissivity exp(-Gamma tau), composed
/// with the free rotation by `angle`.
ChannelReport apply_amplitude_damping(DensityOperator& rho, double gamma_tau, double angle);

/// Equal-rate heating and cooling over one interval: C(lambda) gains the factor
/// exp(-gamma_tau |lambda|^2). Realized as loss T = 1/(1+gamma_tau) followed by a
/// quantum-limited amplifier of gain 1+gamma_tau.
ChannelReport apply_diffusion_channel(DensityOperator& rho, double gamma_tau,
                                      double tolerance = kDefaultTailTolerance);

struct EnvironmentSpec {
  EnvironmentKind kind = EnvironmentKind::none;
  double rate = 0.0;      // Gamma or gamma
  double duration = 1.0;  // tau
};

struct StepControl {
  int initial_steps = 0;  // 0 picks a stable count from the generator norm
  double tolerance = 1e-8;
  int max_doublings = 14;
};

/// RK4 integration of -i[omega a^dagger a, rho] + L rho over `duration`.
DensityOperator lindblad_integrate(const DensityOperator& rho, double frequency, const EnvironmentSpec& env,
                                   double duration, const StepControl& control = {});

struct MomentRecord {
  int kick = 0;
  double mean_v = 0.0;
  double mean_u = 0.0;
  double var_v = 0.0;
  double var_u = 0.0;
  double photons = 0.0;
};

MomentRecord moments(const DensityOperator& rho, int kick = 0);
MomentRecord moments(const PureState& psi, int kick = 0);
cdouble expectation_a(const DensityOperator& rho);

/// Kick followed by the inter-kick channel, built once for a parameter set.
class KickedMap {
 public:
  KickedMap(const DimensionlessParams& d, EnvironmentKind env, int dim);

  int dim() const { return kick_.dim(); }
  EnvironmentKind environment() const { return env_; }
  ChannelReport step(DensityOperator& rho) const;
  void step(PureState& psi) const;

 private:
  DimensionlessParams params_;
  EnvironmentKind env_;
  KickOperator kick_;
};

struct EvolveOptions {
  double tail_tolerance = kDefaultTailTolerance;
  /// Norm leaking out of the basis also counts as unsafe truncation.
  double trace_tolerance = kDefaultTraceTolerance;
  /// When false, a truncation-unsafe state stops the run and is reported in
  /// `truncated_at` instead of throwing.
  bool abort_on_truncation = true;
};

struct QuantumEvolution {
  DensityOperator state;
  std::vector<MomentRecord> moments;  // kicks 0..n
  std::vector<double> trace_drift;    // per kick, abs(Tr rho_k - 1)
  std::optional<int> truncated_at;    // first unsafe kick
};

struct PureEvolution {
  PureState state;
  std::vector<MomentRecord> moments;
  std::vector<double> trace_drift;
  std::optional<int> truncated_at;
};

QuantumEvolution evolve_kicked(DensityOperator rho, const DimensionlessParams& d, EnvironmentKind env, int kicks,
                               const EvolveOptions& options = {});
/// Pure-state path, valid only without a reservoir.
PureEvolution evolve_kicked(PureState psi, const DimensionlessParams& d, int kicks, const EvolveOptions& options = {});

}  // namespace kho
