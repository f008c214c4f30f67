#include <numbers>
#include <stdexcept>

#include "kho/params.hpp"
#include "support.hpp"

using namespace kho;

namespace {
bool throws_invalid(const PhysicalParams& p) {
  try {
    derive_dimensionless(p);
  } catch (const std::invalid_argument&) {
    return true;
  }
  return false;
}
}  // namespace

TEST_SUITE("params") {

TEST_CASE("undamped physical parameters give K' = K and alpha-bar = alpha") {
  PhysicalParams p;
  p.mass = 1.7;
  p.trap_frequency = 0.9;
  p.kick_wavevector = 1.3;
  p.kick_amplitude = 0.8;
  p.kick_period = 2.1;
  const DimensionlessParams d = derive_dimensionless(p);
  CHECK(d.damped_kick == d.kick);
  CHECK(d.damped_angle == d.angle);
  CHECK_NEAR(d.kick, 0.8 * 1.69 / (1.7 * 0.9), 1e-14);
  CHECK_NEAR(d.angle, 0.9 * 2.1, 1e-14);
  CHECK_NEAR(d.eta, 1.3 * std::sqrt(1.0 / (2.0 * 1.7 * 0.9)), 1e-14);
  CHECK_NEAR(d.quantum_kick * 2.0 * d.eta * d.eta / d.kick, 1.0, 1e-12);
}

TEST_CASE("half damping from the dissipation rate") {
  PhysicalParams p;
  p.kick_period = 2.0;
  p.dissipation_rate = 0.72 / p.kick_period;
  p.kick_amplitude = 1.0;
  const DimensionlessParams d = derive_dimensionless(p);
  CHECK_NEAR(d.half_damping, 0.36, 1e-15);
  CHECK(d.damped_kick >= d.kick);
  CHECK(d.damped_angle < d.angle);
}

TEST_CASE("K' approaches K monotonically as the damping vanishes") {
  PhysicalParams p;
  p.kick_amplitude = 2.0;
  double previous = INFINITY;
  for (double gamma : {1.5, 1.0, 0.5, 0.1, 0.01, 1e-6}) {
    p.dissipation_rate = gamma;
    const DimensionlessParams d = derive_dimensionless(p);
    CHECK(d.damped_kick >= d.kick);
    CHECK(d.damped_kick <= previous);
    previous = d.damped_kick;
  }
  CHECK_NEAR(previous, 2.0, 1e-11);
}

TEST_CASE("quantum kick K_q = K / 2 eta^2") {
  DimensionlessKnobs k;
  k.kick = 2.0;
  k.symmetry = 6;
  k.eta = 0.5;
  const DimensionlessParams d = make_dimensionless(k);
  CHECK_NEAR(d.quantum_kick, 4.0, 1e-15);
  CHECK(d.angle == 2.0 * std::numbers::pi / 6.0);
  CHECK_NOTHROW(validate(d));
}

TEST_CASE("diffusion constants agree through gamma = D_cl / eta^2") {
  PhysicalParams p;
  p.kick_period = 0.7;
  p.kick_wavevector = 0.4;
  const double eta = 0.4 * std::sqrt(0.5);
  p.classical_diffusion = 0.03;
  const DimensionlessParams from_classical = derive_dimensionless(p);
  CHECK_NEAR(from_classical.diffusion / (0.5 * 0.03 * 0.7 / (eta * eta)), 1.0, 1e-12);
  p.diffusion_rate = 0.03 / (eta * eta);
  const DimensionlessParams both = derive_dimensionless(p);
  CHECK_NEAR(both.diffusion / from_classical.diffusion, 1.0, 1e-12);
  p.diffusion_rate *= 1.5;
  CHECK_THROWS_AS(derive_dimensionless(p), std::invalid_argument);
}

TEST_CASE("physical parameter domain errors") {
  PhysicalParams p;
  p.dissipation_rate = 2.0;
  CHECK_THROWS_AS(derive_dimensionless(p), std::invalid_argument);
  p.dissipation_rate = 0.0;
  auto rejects = [](auto&& edit) {
    PhysicalParams bad;
    edit(bad);
    return throws_invalid(bad);
  };
  CHECK(rejects([](PhysicalParams& b) { b.mass = 0.0; }));
  CHECK(rejects([](PhysicalParams& b) { b.trap_frequency = -1.0; }));
  CHECK(rejects([](PhysicalParams& b) { b.kick_wavevector = 0.0; }));
  CHECK(rejects([](PhysicalParams& b) { b.kick_period = 0.0; }));
  CHECK(rejects([](PhysicalParams& b) { b.diffusion_rate = -0.1; }));
}

TEST_CASE("derivation is bitwise deterministic") {
  PhysicalParams p;
  p.kick_amplitude = 1.234;
  p.dissipation_rate = 0.3;
  const DimensionlessParams a = derive_dimensionless(p);
  const DimensionlessParams b = derive_dimensionless(p);
  CHECK(a.kick == b.kick);
  CHECK(a.damped_kick == b.damped_kick);
  CHECK(a.damped_angle == b.damped_angle);
  CHECK(a.quantum_kick == b.quantum_kick);
}

TEST_CASE("damped knobs keep K' and alpha-bar") {
  DimensionlessKnobs k;
  k.kick = 6.0;
  k.symmetry = 6;
  k.half_damping = 0.36;
  k.frame = KickFrame::dissipative;
  const DimensionlessParams d = make_dimensionless(k);
  CHECK(d.damped_kick == 6.0);
  CHECK(d.damped_angle == std::numbers::pi / 3.0);
  CHECK_NEAR(d.angle, std::hypot(std::numbers::pi / 3.0, 0.36), 1e-15);
  CHECK_NEAR(d.kick * d.angle, 6.0 * std::numbers::pi / 3.0, 1e-12);
  CHECK_NEAR(d.projected_damped_kick(), 6.0 * std::sin(std::numbers::pi / 3.0), 1e-14);

  const DimensionlessParams moved = with_half_damping(d, 0.2);
  CHECK(moved.damped_kick == 6.0);
  CHECK(moved.damped_angle == d.damped_angle);
  CHECK(moved.half_damping == 0.2);
}

TEST_CASE("conservative knobs with damping derive K' and alpha-bar") {
  DimensionlessKnobs k;
  k.kick = 2.0;
  k.angle = 1.0;
  k.half_damping = 0.3;
  const DimensionlessParams d = make_dimensionless(k);
  const double ratio = std::sqrt(1.0 - 0.09);
  CHECK_NEAR(d.damped_kick, 2.0 / ratio, 1e-14);
  CHECK_NEAR(d.damped_angle, ratio, 1e-14);
  k.half_damping = 1.2;
  CHECK_THROWS_AS(make_dimensionless(k), std::invalid_argument);
}

TEST_CASE("knob errors") {
  DimensionlessKnobs k;
  k.kick = 1.0;
  CHECK_THROWS_AS(make_dimensionless(k), std::invalid_argument);  // no angle
  k.symmetry = 6;
  k.eta = 0.0;
  CHECK_THROWS_AS(make_dimensionless(k), std::invalid_argument);
  k.eta = 0.5;
  k.diffusion = -0.1;
  CHECK_THROWS_AS(make_dimensionless(k), std::invalid_argument);
  CHECK_THROWS_AS(angle_for_symmetry(0), std::invalid_argument);
}

TEST_CASE("validate catches inconsistent derived fields") {
  DimensionlessKnobs k;
  k.kick = 2.0;
  k.symmetry = 6;
  DimensionlessParams d = make_dimensionless(k);
  d.quantum_kick *= 1.01;
  CHECK_THROWS_AS(validate(d), std::invalid_argument);
  d = make_dimensionless(k);
  d.damped_kick = 3.0;
  CHECK_THROWS_AS(validate(d), std::invalid_argument);
  CHECK_NOTHROW(validate(with_eta(make_dimensionless(k), 0.1)));
}

TEST_CASE("scale_state conversions") {
  DimensionlessParams d;
  d.eta = 0.5;
  const ClassicalState s = scale_state({1.0, 0.0, Frame::raw}, d, Frame::scaled);
  CHECK(s.frame == Frame::scaled);
  CHECK_NEAR(s.first, 1.0, 1e-15);
  CHECK_NEAR(s.second, 0.0, 1e-15);

  for (double eta : {0.05, 0.31, 0.5, 2.0}) {
    d.eta = eta;
    const ClassicalState origin = scale_state({0.0, 0.0, Frame::scaled}, d, Frame::raw);
    CHECK(origin.first == 0.0);
    CHECK(origin.second == 0.0);
    const ClassicalState there = scale_state({0.3, -0.7, Frame::raw}, d, Frame::scaled);
    const ClassicalState back = scale_state(there, d, Frame::raw);
    CHECK_NEAR(back.first, 0.3, 1e-14);
    CHECK_NEAR(back.second, -0.7, 1e-14);
    const ClassicalState doubled = scale_state({0.6, -1.4, Frame::raw}, d, Frame::scaled);
    CHECK_NEAR(doubled.first, 2.0 * there.first, 1e-14);
    CHECK_NEAR(doubled.second, 2.0 * there.second, 1e-14);
  }
  CHECK_THROWS_AS(scale_state({1.0, 0.0, Frame::raw}, d, Frame::dissipative), std::invalid_argument);
  CHECK_THROWS_AS(scale_state({1.0, 0.0, static_cast<Frame>(7)}, d, Frame::scaled), std::invalid_argument);
}

TEST_CASE("environment names round-trip") {
  for (EnvironmentKind e : {EnvironmentKind::none, EnvironmentKind::dissipative, EnvironmentKind::diffusive}) {
    CHECK(parse_environment(to_string(e)) == e);
  }
  CHECK_THROWS_AS(parse_environment("thermal"), std::invalid_argument);
}

}
