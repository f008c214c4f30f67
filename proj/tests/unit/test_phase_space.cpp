#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include "kho/phase_space.hpp"
#include "kho/quantum.hpp"
#include "support.hpp"

using namespace kho;
using std::numbers::pi;

namespace {

Eigen::MatrixXcd dense_displacement(int dim, cdouble beta) {
  Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(dim, dim);
  for (int n = 1; n < dim; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  const Eigen::MatrixXcd gen = beta * a.adjoint() - std::conj(beta) * a;
  return gen.exp();
}

// Normalized Hermite functions phi_n(q) for n < count.
std::vector<double> hermite_functions(double q, int count) {
  std::vector<double> phi(count);
  phi[0] = std::pow(pi, -0.25) * std::exp(-0.5 * q * q);
  if (count > 1) phi[1] = std::sqrt(2.0) * q * phi[0];
  for (int n = 2; n < count; ++n) phi[n] = std::sqrt(2.0 / n) * q * phi[n - 1] - std::sqrt((n - 1.0) / n) * phi[n - 2];
  return phi;
}

PureState random_pure(int dim, int support, std::mt19937_64& gen) {
  std::normal_distribution<double> g;
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(dim);
  for (int i = 0; i < support; ++i) v(i) = cdouble(g(gen), g(gen));
  v.normalize();
  return PureState(v);
}

GridSpec square(double half, int n) {
  GridSpec s;
  s.first_min = s.second_min = -half;
  s.first_max = s.second_max = half;
  s.n_first = s.n_second = n;
  s.frame = Frame::scaled;
  return s;
}

}  // namespace

TEST_SUITE("phase_space") {

TEST_CASE("displacement bands match a dense exponential") {
  const int dim = 160;
  for (cdouble beta : {cdouble(0.3, 0.1), cdouble(-1.2, 0.8), cdouble(2.0, -2.2), cdouble(0.0, 3.0)}) {
    const Eigen::MatrixXcd dm = dense_displacement(dim, beta);
    const double x = std::norm(beta);
    const cdouble unit = beta / std::abs(beta);
    for (int d : {0, 1, 2, 5, 13}) {
      std::vector<double> h(40);
      displacement_band(x, d, h);
      for (int m = 0; m + d < 40; ++m) {
        CHECK_NEAR(h[m] * std::pow(unit, d), dm(m + d, m), 1e-11);
        CHECK_NEAR(h[m] * std::pow(-std::conj(unit), d), dm(m, m + d), 1e-11);
      }
    }
  }
}

TEST_CASE("displacement bands survive large arguments") {
  // |beta|^2 = 900 underflows exp(-x/2) alone; the unitary row norm must stay 1
  const int count = 3000;
  double row = 0.0;
  std::vector<double> h(count);
  for (int d = 0; d < count; ++d) {
    displacement_band(900.0, d, std::span<double>(h.data(), 1));
    row += h[0] * h[0];
  }
  CHECK_NEAR(row, 1.0, 1e-10);
  displacement_band(0.0, 0, h);
  CHECK(h[7] == 1.0);
  CHECK_THROWS_AS(displacement_band(-1.0, 0, h), std::invalid_argument);
}

TEST_CASE("characteristic function closed forms") {
  const DensityOperator vac = DensityOperator::vacuum(64);
  CHECK(char_fn_from_state(vac, 0.0).value == cdouble(1.0, 0.0));
  const cdouble beta(0.7, -1.1);
  const DensityOperator coh = DensityOperator::coherent(96, beta);
  for (cdouble l : {cdouble(0.2, 0.1), cdouble(-1.5, 0.4), cdouble(2.0, 2.0), cdouble(0.0, -3.0)}) {
    CHECK_NEAR(char_fn_from_state(vac, l).value, std::exp(-0.5 * std::norm(l)), 1e-8);
    const cdouble expected = std::exp(l * std::conj(beta) - std::conj(l) * beta - 0.5 * std::norm(l));
    CHECK_NEAR(char_fn_from_state(coh, l).value, expected, 1e-8);
    CHECK_NEAR(char_fn_from_state(PureState::coherent(96, beta), l).value, expected, 1e-8);
    CHECK_NEAR(char_fn_from_state(coh, -l).value, std::conj(char_fn_from_state(coh, l).value), 1e-10);
  }
  CHECK_THROWS_AS(char_fn_from_state(vac, cdouble(20.0, 0.0)), std::domain_error);
}

TEST_CASE("characteristic function of a kicked state is hermitian") {
  DimensionlessKnobs k;
  k.kick = 2.0;
  k.symmetry = 6;
  const PureEvolution ev = evolve_kicked(PureState::vacuum(256), make_dimensionless(k), 3);
  for (cdouble l : {cdouble(0.4, 0.9), cdouble(-2.0, 1.0), cdouble(2.5, -2.5)}) {
    CHECK_NEAR(char_fn_from_state(ev.state, -l).value, std::conj(char_fn_from_state(ev.state, l).value), 1e-10);
  }
}

TEST_CASE("vacuum and Fock Wigner functions") {
  const GridSpec spec = square(3.0, 61);
  const WignerGrid w = wigner(DensityOperator::vacuum(32), spec);
  CHECK_NEAR(w.at(30, 30), 2.0 / pi, 1e-8);
  CHECK_NEAR(w.max(), 2.0 / pi, 1e-8);
  for (int i = 0; i < 61; i += 6)
    for (int j = 0; j < 61; j += 5) {
      const double r2 = std::pow(spec.first_at(i), 2) + std::pow(spec.second_at(j), 2);
      CHECK_NEAR(w.at(i, j), 2.0 / pi * std::exp(-2.0 * r2), 1e-10);
    }
  CHECK_NEAR(w.integral(), 1.0, 1e-3);
  CHECK_FALSE(w.coarse);

  const WignerGrid one = wigner(DensityOperator::fock(32, 1), spec);
  for (int i = 0; i < 61; i += 4) {
    const double r2 = std::pow(spec.first_at(i), 2) + std::pow(spec.second_at(i), 2);
    CHECK_NEAR(one.at(i, i), 2.0 / pi * (4.0 * r2 - 1.0) * std::exp(-2.0 * r2), 1e-10);
  }
  CHECK(one.min() < 0.0);
}

TEST_CASE("coherent Wigner function is a displaced vacuum") {
  const cdouble beta(1.0, -0.5);
  const GridSpec spec = square(3.0, 25);
  const WignerGrid w = wigner(PureState::coherent(64, beta), spec);
  for (int i = 0; i < 25; i += 3)
    for (int j = 0; j < 25; j += 4) {
      const double r2 = std::pow(spec.first_at(i) - 1.0, 2) + std::pow(spec.second_at(j) + 0.5, 2);
      CHECK_NEAR(w.at(i, j), 2.0 / pi * std::exp(-2.0 * r2), 1e-10);
    }
}

TEST_CASE("Wigner marginal equals the quadrature distribution") {
  std::mt19937_64 gen(12);
  const PureState psi = random_pure(48, 10, gen);
  GridSpec spec;
  spec.first_min = -2.0;
  spec.first_max = 2.0;
  spec.n_first = 9;
  spec.second_min = -8.0;
  spec.second_max = 8.0;
  spec.n_second = 1601;
  spec.frame = Frame::scaled;
  const WignerGrid w = wigner(psi, spec);
  const double du = 16.0 / 1600.0;
  for (int i = 0; i < spec.n_first; ++i) {
    double marginal = 0.0;
    for (int j = 0; j < spec.n_second; ++j) marginal += w.at(i, j) * ((j == 0 || j + 1 == spec.n_second) ? 0.5 : 1.0);
    marginal *= du;
    // v = X / 2 = q / sqrt(2), so P(v) = sqrt(2) |psi(sqrt(2) v)|^2
    const std::vector<double> phi = hermite_functions(std::sqrt(2.0) * spec.first_at(i), 48);
    cdouble amp = 0.0;
    for (int n = 0; n < 48; ++n) amp += psi.amplitudes()(n) * phi[n];
    CHECK_NEAR(marginal, std::sqrt(2.0) * std::norm(amp), 1e-6);
  }
}

TEST_CASE("pure and mixed Wigner paths agree and flag coarse grids") {
  std::mt19937_64 gen(13);
  const PureState psi = random_pure(40, 8, gen);
  const GridSpec spec = square(4.0, 9);
  const WignerGrid a = wigner(psi, spec);
  const WignerGrid b = wigner(DensityOperator::from_pure(psi), spec);
  for (std::size_t i = 0; i < a.values.size(); ++i) CHECK_NEAR(a.values[i], b.values[i], 1e-12);
  CHECK(a.coarse);
  GridSpec raw = spec;
  raw.frame = Frame::raw;
  CHECK_THROWS_AS(wigner(psi, raw), std::invalid_argument);
}

TEST_CASE("support fraction") {
  const std::vector<double> v{0.0, 0.5, 1.0, 0.005, 0.02};
  CHECK_NEAR(support_fraction(v, 0.01), 0.6, 1e-15);
  CHECK_THROWS_AS(support_fraction(std::vector<double>{}, 0.1), std::invalid_argument);
}

}
