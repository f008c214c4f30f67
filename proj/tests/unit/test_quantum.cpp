#include <numbers>
#include <random>
#include <stdexcept>

#include <unsupported/Eigen/MatrixFunctions>

#include "kho/errors.hpp"
#include "kho/phase_space.hpp"
#include "kho/quantum.hpp"
#include "support.hpp"

using namespace kho;
using std::numbers::pi;

namespace {

Eigen::MatrixXd truncated_quadrature(int dim) {
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(dim, dim);
  for (int n = 0; n + 1 < dim; ++n) x(n, n + 1) = x(n + 1, n) = std::sqrt(n + 1.0);
  return x;
}

// Wishart-type state supported on the lowest `support` levels.
DensityOperator random_state(int dim, int support, std::mt19937_64& gen) {
  std::normal_distribution<double> g;
  Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(dim, support);
  for (int i = 0; i < support; ++i)
    for (int j = 0; j < support; ++j) a(i, j) = cdouble(g(gen), g(gen));
  Eigen::MatrixXcd rho = a * a.adjoint();
  rho /= rho.trace().real();
  return DensityOperator(rho);
}

double trace_norm(const Eigen::MatrixXcd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (m + m.adjoint()));
  return es.eigenvalues().cwiseAbs().sum();
}

DimensionlessParams kicked(double kick, double angle, double eta) {
  DimensionlessKnobs k;
  k.kick = kick;
  k.angle = angle;
  k.eta = eta;
  return make_dimensionless(k);
}

}  // namespace

TEST_SUITE("quantum") {

TEST_CASE("kick unitary matches a dense matrix exponential") {
  const int dim = 128;
  const double eta = 0.5, kq = 4.0;
  const Eigen::MatrixXd cosx = (eta * truncated_quadrature(dim)).cos();
  const Eigen::MatrixXcd oracle = (cdouble(0.0, -kq) * cosx.cast<cdouble>()).exp();
  const Eigen::MatrixXcd u = build_kick_unitary(eta, kq, dim);
  CHECK((u - oracle).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((u * u.adjoint() - Eigen::MatrixXcd::Identity(dim, dim)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("kick unitary with zero strength is the identity") {
  const Eigen::MatrixXcd u = build_kick_unitary(0.3, 0.0, 16);
  CHECK(u == Eigen::MatrixXcd::Identity(16, 16));
  CHECK_THROWS_AS(build_kick_unitary(0.3, 1.0, 4), std::invalid_argument);
  CHECK_THROWS_AS(build_kick_unitary(0.3, INFINITY, 16), std::invalid_argument);
}

TEST_CASE("kick operator applied to states agrees with its matrix") {
  std::mt19937_64 gen(1);
  const KickOperator k(0.4, 3.0, 40);
  const Eigen::MatrixXcd u = k.matrix();
  DensityOperator rho = random_state(40, 10, gen);
  const Eigen::MatrixXcd expected = u * rho.matrix() * u.adjoint();
  k.apply(rho);
  CHECK((rho.matrix() - expected).cwiseAbs().maxCoeff() < 1e-12);
  PureState psi = PureState::coherent(40, cdouble(0.7, -0.4));
  const Eigen::VectorXcd v = u * psi.amplitudes();
  k.apply(psi);
  CHECK((psi.amplitudes() - v).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("harmonic rotation") {
  DensityOperator fock = DensityOperator::fock(16, 3);
  const Eigen::MatrixXcd before = fock.matrix();
  apply_harmonic(fock, 2.0 * pi);
  CHECK((fock.matrix() - before).cwiseAbs().maxCoeff() < 1e-15);

  const cdouble beta(0.8, 0.3);
  DensityOperator coh = DensityOperator::coherent(48, beta);
  apply_harmonic(coh, 0.7);
  CHECK_NEAR(expectation_a(coh), beta * std::polar(1.0, -0.7), 1e-10);

  std::mt19937_64 gen(2);
  DensityOperator r = random_state(24, 8, gen);
  const Eigen::MatrixXcd r0 = r.matrix();
  for (int i = 0; i < 4; ++i) apply_harmonic(r, pi / 2);
  CHECK((r.matrix() - r0).cwiseAbs().maxCoeff() < 1e-12);

  PureState psi = PureState::coherent(48, beta);
  apply_harmonic(psi, 0.7);
  CHECK_NEAR(expectation_a(DensityOperator::from_pure(psi)), beta * std::polar(1.0, -0.7), 1e-10);
}

TEST_CASE("amplitude damping") {
  std::mt19937_64 gen(3);
  DensityOperator r = random_state(24, 8, gen);
  DensityOperator rotated = r;
  apply_harmonic(rotated, 0.4);
  apply_amplitude_damping(r, 0.0, 0.4);
  CHECK((r.matrix() - rotated.matrix()).cwiseAbs().maxCoeff() < 1e-15);

  DensityOperator vac = DensityOperator::vacuum(16);
  apply_amplitude_damping(vac, 0.8, 1.0);
  CHECK((vac.matrix() - DensityOperator::vacuum(16).matrix()).cwiseAbs().maxCoeff() < 1e-15);

  const cdouble beta(1.1, -0.6);
  DensityOperator coh = DensityOperator::coherent(64, beta);
  const ChannelReport rep = apply_amplitude_damping(coh, 0.72, pi / 3);
  const DensityOperator target = DensityOperator::coherent(64, beta * std::exp(cdouble(-0.36, -pi / 3)));
  CHECK((coh.matrix() - target.matrix()).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(std::abs(rep.trace_change) < 1e-12);
  CHECK(rep.truncation_safe);
  CHECK_THROWS_AS(apply_amplitude_damping(coh, -0.1, 0.0), std::invalid_argument);
}

TEST_CASE("Ehrenfest check for the damping channel") {
  std::mt19937_64 gen(4);
  for (int i = 0; i < 5; ++i) {
    DensityOperator r = random_state(40, 10, gen);
    const cdouble a0 = expectation_a(r);
    apply_amplitude_damping(r, 0.5, 0.9);
    CHECK_NEAR(expectation_a(r), a0 * std::exp(cdouble(-0.25, -0.9)), 1e-8);
  }
}

TEST_CASE("amplitude damping agrees with the Lindblad integrator") {
  std::mt19937_64 gen(5);
  const double tau = 1.3, gamma = 0.4, omega = 0.8;
  for (int i = 0; i < 3; ++i) {
    DensityOperator r = random_state(32, 8, gen);
    const DensityOperator oracle = lindblad_integrate(r, omega, {EnvironmentKind::dissipative, gamma, tau}, tau);
    apply_amplitude_damping(r, gamma * tau, omega * tau);
    CHECK(trace_norm(r.matrix() - oracle.matrix()) < 1e-6);
  }
}

TEST_CASE("Lindblad integrator without a reservoir is the rotation") {
  std::mt19937_64 gen(6);
  DensityOperator r = random_state(20, 6, gen);
  const DensityOperator oracle = lindblad_integrate(r, 1.1, {EnvironmentKind::none, 0.0, 1.0}, 1.0);
  apply_harmonic(r, 1.1);
  CHECK((r.matrix() - oracle.matrix()).cwiseAbs().maxCoeff() < 1e-8);
  CHECK_THROWS_AS(lindblad_integrate(r, 1.0, {EnvironmentKind::dissipative, -1.0, 1.0}, 1.0), std::invalid_argument);
}

TEST_CASE("diffusion channel") {
  DensityOperator vac = DensityOperator::vacuum(64);
  apply_diffusion_channel(vac, 0.1);
  CHECK_NEAR(moments(vac).photons, 0.1, 1e-8);
  CHECK_NEAR(vac.trace(), 1.0, 1e-12);

  std::mt19937_64 gen(7);
  for (int i = 0; i < 4; ++i) {
    DensityOperator r = random_state(96, 8, gen);
    const MomentRecord before = moments(r);
    const Eigen::MatrixXcd copy = r.matrix();
    const ChannelReport rep = apply_diffusion_channel(r, 0.06);
    CHECK(rep.truncation_safe);
    const MomentRecord after = moments(r);
    CHECK_NEAR(after.photons - before.photons, 0.06, 1e-8);
    CHECK_NEAR(after.var_v - before.var_v, 0.03, 1e-8);
    CHECK_NEAR(after.var_u - before.var_u, 0.03, 1e-8);
    CHECK_NEAR(r.trace(), 1.0, 1e-10);
    const DensityOperator original(copy);
    for (cdouble l : {cdouble(0.3, 0.2), cdouble(-1.0, 0.5), cdouble(0.0, 1.5)}) {
      const cdouble c0 = char_fn_from_state(original, l).value;
      const cdouble c1 = char_fn_from_state(r, l).value;
      CHECK_NEAR(c1, c0 * std::exp(-0.06 * std::norm(l)), 1e-8);
    }
  }

  DensityOperator same = DensityOperator::coherent(32, cdouble(0.5, 0.5));
  const Eigen::MatrixXcd m0 = same.matrix();
  apply_diffusion_channel(same, 0.0);
  CHECK(same.matrix() == m0);
}

TEST_CASE("diffusion channel agrees with the Lindblad integrator") {
  std::mt19937_64 gen(8);
  const double tau = 1.0, gamma = 0.05;
  for (int i = 0; i < 2; ++i) {
    DensityOperator r = random_state(48, 6, gen);
    const DensityOperator oracle = lindblad_integrate(r, 0.0, {EnvironmentKind::diffusive, gamma, tau}, tau);
    apply_diffusion_channel(r, gamma * tau);
    CHECK(trace_norm(r.matrix() - oracle.matrix()) < 1e-6);
  }
}

TEST_CASE("diffusion flags truncation when heating reaches the tail") {
  DensityOperator r = DensityOperator::fock(16, 10);
  const ChannelReport rep = apply_diffusion_channel(r, 2.0);
  CHECK_FALSE(rep.truncation_safe);
}

TEST_CASE("moments of reference states") {
  const MomentRecord vac = moments(DensityOperator::vacuum(16));
  CHECK_NEAR(vac.mean_v, 0.0, 1e-15);
  CHECK_NEAR(vac.var_v, 0.25, 1e-15);
  CHECK_NEAR(vac.var_u, 0.25, 1e-15);
  CHECK_NEAR(vac.photons, 0.0, 1e-15);

  const MomentRecord one = moments(DensityOperator::fock(16, 1));
  CHECK_NEAR(one.var_v, 0.75, 1e-15);
  CHECK_NEAR(one.var_u, 0.75, 1e-15);
  CHECK_NEAR(one.photons, 1.0, 1e-15);

  const cdouble beta(0.9, -1.2);
  for (const MomentRecord& m : {moments(DensityOperator::coherent(64, beta)), moments(PureState::coherent(64, beta))}) {
    CHECK_NEAR(m.mean_v, 0.9, 1e-10);
    CHECK_NEAR(m.mean_u, -1.2, 1e-10);
    CHECK_NEAR(m.var_v, 0.25, 1e-10);
    CHECK_NEAR(m.var_u, 0.25, 1e-10);
    CHECK_NEAR(m.photons, std::norm(beta), 1e-10);
  }
}

TEST_CASE("state construction checks") {
  CHECK_THROWS_AS(DensityOperator::vacuum(4), std::invalid_argument);
  CHECK_THROWS_AS(DensityOperator::fock(16, 16), std::invalid_argument);
  CHECK_THROWS_AS(DensityOperator(Eigen::MatrixXcd::Zero(8, 9)), std::invalid_argument);
  const DensityOperator coh = DensityOperator::coherent(64, cdouble(1.0, 1.0));
  CHECK_NEAR(coh.trace(), 1.0, 1e-14);
  CHECK(coh.hermiticity_error() < 1e-15);
  CHECK(coh.min_eigenvalue() > -1e-12);
  CHECK(coh.truncation_safe());
  CHECK_FALSE(DensityOperator::fock(16, 15).truncation_safe());
}

TEST_CASE("evolution with no kicks returns the initial state") {
  const QuantumEvolution ev = evolve_kicked(DensityOperator::vacuum(32), kicked(2.0, pi / 3, 0.5), EnvironmentKind::none, 0);
  REQUIRE(ev.moments.size() == 1);
  CHECK(ev.moments[0].var_v == 0.25);
  CHECK(ev.moments[0].var_u == 0.25);
  CHECK(ev.moments[0].mean_v == 0.0);
  CHECK(ev.moments[0].photons == 0.0);
}

TEST_CASE("free rotation of a coherent state") {
  const cdouble beta(1.0, 0.4);
  const double alpha = 0.77;
  const DimensionlessParams d = kicked(0.0, alpha, 0.5);
  const QuantumEvolution ev = evolve_kicked(DensityOperator::coherent(48, beta), d, EnvironmentKind::none, 7);
  for (int n = 0; n <= 7; ++n) {
    const cdouble expected = beta * std::polar(1.0, -n * alpha);
    CHECK_NEAR(ev.moments[n].mean_v, expected.real(), 1e-8);
    CHECK_NEAR(ev.moments[n].mean_u, expected.imag(), 1e-8);
  }
}

TEST_CASE("pure and density paths agree") {
  const DimensionlessParams d = kicked(2.0, pi / 3, 0.5);
  const int dim = 256;
  const QuantumEvolution mixed = evolve_kicked(DensityOperator::vacuum(dim), d, EnvironmentKind::none, 9);
  const PureEvolution pure = evolve_kicked(PureState::vacuum(dim), d, 9);
  REQUIRE(pure.moments.size() == mixed.moments.size());
  for (std::size_t k = 0; k < pure.moments.size(); ++k) {
    CHECK_NEAR(pure.moments[k].var_v, mixed.moments[k].var_v, 1e-10);
    CHECK_NEAR(pure.moments[k].var_u, mixed.moments[k].var_u, 1e-10);
    // uncertainty relation for pure states in scaled quadratures
    CHECK(pure.moments[k].var_v * pure.moments[k].var_u >= 1.0 / 16.0 - 1e-12);
  }
  for (double drift : mixed.trace_drift) CHECK(drift < 1e-8);
  for (double drift : pure.trace_drift) CHECK(drift < 1e-8);
  CHECK(mixed.state.hermiticity_error() < 1e-10);
  const Eigen::MatrixXcd from_pure = DensityOperator::from_pure(pure.state).matrix();
  CHECK((from_pure - mixed.state.matrix()).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("open evolution keeps trace and hermiticity") {
  DimensionlessKnobs k;
  k.kick = 6.0;
  k.symmetry = 6;
  k.eta = 0.5;
  k.half_damping = 0.36;
  k.frame = KickFrame::dissipative;
  const QuantumEvolution dis = evolve_kicked(DensityOperator::vacuum(256), make_dimensionless(k), EnvironmentKind::dissipative, 10);
  for (double drift : dis.trace_drift) CHECK(drift < 1e-8);
  CHECK(dis.state.hermiticity_error() < 1e-10);
  CHECK(dis.state.min_eigenvalue() > -1e-8);

  const DimensionlessParams diff = with_diffusion(kicked(2.0, pi / 3, 0.5), 0.01047);
  const QuantumEvolution dif = evolve_kicked(DensityOperator::vacuum(256), diff, EnvironmentKind::diffusive, 9);
  for (double drift : dif.trace_drift) CHECK(drift < 1e-8);
  CHECK(dif.state.hermiticity_error() < 1e-10);
}

TEST_CASE("truncation is reported with the last safe kick") {
  const DimensionlessParams d = kicked(2.0, pi / 3, 0.5);
  try {
    evolve_kicked(DensityOperator::vacuum(16), d, EnvironmentKind::none, 20);
    FAIL("expected a truncation error");
  } catch (const TruncationError& e) {
    CHECK(e.kick() >= 0);
    CHECK(e.kick() < 20);
  }
  EvolveOptions soft;
  soft.abort_on_truncation = false;
  const QuantumEvolution ev = evolve_kicked(DensityOperator::vacuum(16), d, EnvironmentKind::none, 20, soft);
  REQUIRE(ev.truncated_at.has_value());
  CHECK(ev.moments.size() == static_cast<std::size_t>(*ev.truncated_at));
  CHECK_THROWS_AS(evolve_kicked(PureState::vacuum(16), d, -1), std::invalid_argument);
}

TEST_CASE("semiclassical first kick from the vacuum") {
  for (double eta : {0.05, 0.03}) {
    const DimensionlessParams d = kicked(2.0, pi / 3, eta);
    const int dim = 512;
    const PureEvolution q = evolve_kicked(PureState::vacuum(dim), d, 1);
    // the classical image of the centred Gaussian has zero mean by symmetry
    CHECK_NEAR(q.moments[1].mean_v, 0.0, 1e-3);
    CHECK_NEAR(q.moments[1].mean_u, 0.0, 1e-3);
  }
}

TEST_CASE("kicked coherent state follows the classical mean for small eta") {
  const double eta = 0.05;
  const DimensionlessParams d = kicked(2.0, pi / 3, eta);
  const int dim = 1024;
  const cdouble beta(3.0, 1.0);
  const PureEvolution q = evolve_kicked(PureState::coherent(dim, beta), d, 1);
  // the kick shifts u by a function of v alone, so its mean is the Gaussian
  // (Wigner) average exactly:
  // <(K / 2 eta) sin(2 eta v)> = (K / 2 eta) sin(2 eta v0) exp(-eta^2 / 2)
  const double s = 2.0 / (2.0 * eta) * std::sin(2.0 * eta * 3.0) * std::exp(-0.5 * eta * eta);
  const double c = std::cos(pi / 3), sn = std::sin(pi / 3);
  CHECK_NEAR(q.moments[1].mean_v, c * 3.0 + sn * (1.0 + s), 1e-8);
  CHECK_NEAR(q.moments[1].mean_u, -sn * 3.0 + c * (1.0 + s), 1e-8);
}

}
