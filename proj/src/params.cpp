#include "kho/params.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace kho {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

bool finite(double x) { return std::isfinite(x); }

}  // namespace

std::string to_string(EnvironmentKind env) {
  switch (env) {
    case EnvironmentKind::none: return "none";
    case EnvironmentKind::dissipative: return "dissipative";
    case EnvironmentKind::diffusive: return "diffusive";
  }
  throw std::invalid_argument("unknown environment kind");
}

EnvironmentKind parse_environment(std::string_view name) {
  if (name == "none") return EnvironmentKind::none;
  if (name == "dissipative") return EnvironmentKind::dissipative;
  if (name == "diffusive") return EnvironmentKind::diffusive;
  throw std::invalid_argument("unknown environment '" + std::string(name) +
                              "' (expected none, dissipative or diffusive)");
}

std::string to_string(Frame f) {
  switch (f) {
    case Frame::raw: return "raw";
    case Frame::dissipative: return "dissipative";
    case Frame::scaled: return "scaled";
  }
  throw std::invalid_argument("unknown frame tag");
}

double DimensionlessParams::damping_factor() const { return std::exp(-half_damping); }
double DimensionlessParams::transmissivity() const { return std::exp(-2.0 * half_damping); }
double DimensionlessParams::projected_kick() const { return kick * std::sin(angle); }
double DimensionlessParams::projected_damped_kick() const {
  return damped_kick * std::sin(damped_angle);
}
double DimensionlessParams::quantum_damped_kick() const { return damped_kick / (2.0 * eta * eta); }

double angle_for_symmetry(int q) {
  require(q > 0, "symmetry index q must be positive");
  return 2.0 * std::numbers::pi / static_cast<double>(q);
}

DimensionlessParams derive_dimensionless(const PhysicalParams& p) {
  require(p.mass > 0 && finite(p.mass), "mass must be positive");
  require(p.trap_frequency > 0 && finite(p.trap_frequency), "trap frequency must be positive");
  require(p.kick_wavevector > 0 && finite(p.kick_wavevector), "kick wavevector must be positive");
  require(p.kick_period > 0 && finite(p.kick_period), "kick period must be positive");
  require(finite(p.kick_amplitude), "kick amplitude must be finite");
  require(p.dissipation_rate >= 0 && finite(p.dissipation_rate), "dissipation rate must be >= 0");
  require(p.diffusion_rate >= 0 && finite(p.diffusion_rate), "diffusion rate must be >= 0");
  require(p.classical_diffusion >= 0 && finite(p.classical_diffusion),
          "classical diffusion must be >= 0");
  require(p.dissipation_rate < 2.0 * p.trap_frequency,
          "dissipation rate must stay below twice the trap frequency");

  const double nu = p.trap_frequency;
  const double gamma = p.dissipation_rate;
  const double omega = std::sqrt(nu * nu - 0.25 * gamma * gamma);
  const double k2 = p.kick_wavevector * p.kick_wavevector;

  DimensionlessParams d;
  d.eta = p.kick_wavevector * std::sqrt(1.0 / (2.0 * p.mass * nu));
  d.kick = p.kick_amplitude * k2 / (p.mass * nu);
  d.angle = nu * p.kick_period;
  if (gamma == 0.0) {
    d.damped_kick = d.kick;
    d.damped_angle = d.angle;
  } else {
    d.damped_kick = p.kick_amplitude * k2 / (p.mass * omega);
    d.damped_angle = omega * p.kick_period;
  }
  d.quantum_kick = d.kick / (2.0 * d.eta * d.eta);
  d.half_damping = 0.5 * gamma * p.kick_period;

  // gamma and script-D describe the same reservoir: gamma = D_cl / eta^2.
  const double eta2 = d.eta * d.eta;
  const double from_quantum = 0.5 * p.diffusion_rate * p.kick_period;
  const double from_classical = 0.5 * p.classical_diffusion * p.kick_period / eta2;
  if (p.diffusion_rate > 0 && p.classical_diffusion > 0) {
    require(std::abs(from_quantum - from_classical) <= 1e-12 * std::max(from_quantum, from_classical),
            "diffusion rate and classical diffusion disagree (expected gamma = D_cl / eta^2)");
  }
  d.diffusion = p.diffusion_rate > 0 ? from_quantum : from_classical;
  return d;
}

DimensionlessParams make_dimensionless(const DimensionlessKnobs& knobs) {
  require(finite(knobs.kick), "kick strength must be finite");
  require(knobs.eta > 0 && finite(knobs.eta), "eta must be positive");
  require(knobs.half_damping >= 0 && finite(knobs.half_damping), "gamma_tau_half must be >= 0");
  require(knobs.diffusion >= 0 && finite(knobs.diffusion), "D must be >= 0");

  double given_angle = 0.0;
  if (knobs.symmetry) {
    given_angle = angle_for_symmetry(*knobs.symmetry);
  } else {
    require(knobs.angle.has_value(), "either q or alpha is required");
    given_angle = *knobs.angle;
  }
  require(given_angle > 0 && finite(given_angle), "alpha must be positive");

  DimensionlessParams d;
  d.symmetry = knobs.symmetry;
  d.eta = knobs.eta;
  d.half_damping = knobs.half_damping;
  d.diffusion = knobs.diffusion;
  const double h = knobs.half_damping;

  if (h == 0.0) {
    d.kick = d.damped_kick = knobs.kick;
    d.angle = d.damped_angle = given_angle;
  } else if (knobs.frame == KickFrame::conservative) {
    // Omega / nu = sqrt(1 - (Gamma / 2 nu)^2) and Gamma / 2 nu = h / alpha.
    require(h < given_angle, "gamma_tau_half must stay below alpha (underdamped regime)");
    const double ratio = std::sqrt(1.0 - (h / given_angle) * (h / given_angle));
    d.kick = knobs.kick;
    d.angle = given_angle;
    d.damped_kick = knobs.kick / ratio;
    d.damped_angle = given_angle * ratio;
  } else {
    const double ratio = given_angle / std::hypot(given_angle, h);
    d.damped_kick = knobs.kick;
    d.damped_angle = given_angle;
    d.kick = knobs.kick * ratio;
    d.angle = std::hypot(given_angle, h);
  }
  d.quantum_kick = d.kick / (2.0 * d.eta * d.eta);
  return d;
}

DimensionlessParams with_half_damping(const DimensionlessParams& d, double half_damping) {
  DimensionlessKnobs k;
  k.kick = d.damped_kick;
  if (d.symmetry) k.symmetry = d.symmetry;
  else k.angle = d.damped_angle;
  k.eta = d.eta;
  k.half_damping = half_damping;
  k.diffusion = d.diffusion;
  k.frame = KickFrame::dissipative;
  return make_dimensionless(k);
}

DimensionlessParams with_eta(const DimensionlessParams& d, double eta) {
  require(eta > 0 && finite(eta), "eta must be positive");
  DimensionlessParams out = d;
  out.eta = eta;
  out.quantum_kick = out.kick / (2.0 * eta * eta);
  return out;
}

DimensionlessParams with_diffusion(const DimensionlessParams& d, double diffusion) {
  require(diffusion >= 0 && finite(diffusion), "D must be >= 0");
  DimensionlessParams out = d;
  out.diffusion = diffusion;
  return out;
}

void validate(const DimensionlessParams& d) {
  require(d.eta > 0 && finite(d.eta), "eta must be positive");
  require(finite(d.kick) && finite(d.damped_kick), "kick strengths must be finite");
  require(d.angle > 0 && d.damped_angle > 0, "rotation angles must be positive");
  require(d.half_damping >= 0 && finite(d.half_damping), "gamma_tau_half must be >= 0");
  require(d.diffusion >= 0 && finite(d.diffusion), "D must be >= 0");
  const double kq = d.quantum_kick * 2.0 * d.eta * d.eta;
  require(std::abs(kq - d.kick) <= 1e-12 * std::max(1.0, std::abs(d.kick)),
          "quantum kick strength inconsistent with K and eta");
  if (d.half_damping == 0.0) {
    require(d.kick == d.damped_kick && d.angle == d.damped_angle,
            "without damping K' must equal K and alpha-bar must equal alpha");
  }
}

ClassicalState scale_state(const ClassicalState& s, const DimensionlessParams& d, Frame target) {
  require(d.eta > 0, "eta must be positive");
  const auto known = [](Frame f) {
    return f == Frame::raw || f == Frame::dissipative || f == Frame::scaled;
  };
  require(known(s.frame) && known(target), "unknown frame tag");
  if (s.frame == target) return s;
  const double two_eta = 2.0 * d.eta;
  if (target == Frame::scaled) return {s.first / two_eta, s.second / two_eta, Frame::scaled};
  if (s.frame == Frame::scaled) return {s.first * two_eta, s.second * two_eta, target};
  throw std::invalid_argument("no direct conversion between raw and dissipative frames");
}

}  // namespace kho
