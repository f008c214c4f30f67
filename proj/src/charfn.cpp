#include "kho/charfn.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "kho/errors.hpp"

namespace kho {

namespace {

struct Recursion {
  double kick_over_eta2;  // K / eta^2 (K' for the dissipative kind)
  double eta;
  cdouble rotation;       // e^{i angle} times the contraction
  double envelope;        // exponent c in exp(-c |lambda|^2) applied at every level
  bool linearized;
  const GaussianCharFn* initial;
  TruncationPolicy policy;
  std::uint64_t terms = 0;
  double error = 0.0;
};

// J_m(z) for m = 0..order, with J_m(-z) = (-1)^m J_m(z).
void bessel_table(double z, int order, std::vector<double>& out) {
  out.resize(order + 1);
  const double az = std::abs(z);
  for (int m = 0; m <= order; ++m) {
    double v = az == 0.0 ? (m == 0 ? 1.0 : 0.0) : std::cyl_bessel_j(static_cast<double>(m), az);
    if (z < 0 && (m % 2)) v = -v;
    out[m] = v;
  }
}

cdouble evaluate(Recursion& r, cdouble lambda, int level, double weight) {
  if (level == 0) {
    ++r.terms;
    return (*r.initial)(lambda);
  }
  const double gauss = r.envelope > 0 ? std::exp(-r.envelope * std::norm(lambda)) : 1.0;
  const cdouble moved = lambda * r.rotation;
  const double xi = -r.eta * moved.real();
  const double z = r.kick_over_eta2 * (r.linearized ? xi : std::sin(xi));
  const double az = std::abs(z);
  const int order = static_cast<int>(std::floor(az + r.policy.margin * (std::cbrt(az) + 1.0)));

  std::vector<double> j;
  bessel_table(z, order + 1, j);
  // first discarded band on both sides, times a geometric allowance
  r.error += weight * gauss * 4.0 * std::abs(j[order + 1]);

  cdouble sum = 0.0;
  for (int m = -order; m <= order; ++m) {
    const int am = std::abs(m);
    const double jm = (m < 0 && (am % 2)) ? -j[am] : j[am];
    const double branch = weight * gauss * std::abs(jm);
    if (branch < r.policy.prune_below) {
      r.error += branch;
      continue;
    }
    if (++r.terms > r.policy.term_budget) {
      throw NumericalAbort("Bessel sum exceeded the term budget (error bound so far " + std::to_string(r.error) + ")");
    }
    const cdouble shifted = moved + cdouble(0.0, kRecoilShiftFactor * m * r.eta);
    sum += jm * evaluate(r, shifted, level - 1, branch);
  }
  return gauss * sum;
}

CharFnEstimate run(const CharFnQuery& q, const DimensionlessParams& d, const GaussianCharFn& initial, bool linearized) {
  if (q.kicks < 0) throw std::invalid_argument("kick count must be >= 0");
  if (!(q.policy.margin > 0) || !(q.policy.prune_below > 0) || q.policy.term_budget == 0) {
    throw std::invalid_argument("truncation policy parameters must be positive");
  }
  if (!(d.eta > 0)) throw std::invalid_argument("eta must be positive");
  Recursion r{};
  r.eta = d.eta;
  r.linearized = linearized;
  r.initial = &initial;
  r.policy = q.policy;
  switch (q.env) {
    case EnvironmentKind::none:
      r.kick_over_eta2 = d.kick / (d.eta * d.eta);
      r.rotation = std::polar(1.0, d.angle);
      r.envelope = 0.0;
      break;
    case EnvironmentKind::dissipative:
      r.kick_over_eta2 = d.damped_kick / (d.eta * d.eta);
      r.rotation = std::polar(d.damping_factor(), d.damped_angle);
      // vacuum noise of the attenuation channel, (1 - e^{-Gamma tau}) |lambda|^2 / 2
      r.envelope = -0.5 * std::expm1(-2.0 * d.half_damping);
      break;
    case EnvironmentKind::diffusive:
      r.kick_over_eta2 = d.kick / (d.eta * d.eta);
      r.rotation = std::polar(1.0, d.angle);
      r.envelope = 2.0 * d.diffusion;  // gamma tau
      break;
  }
  CharFnEstimate out;
  out.value.lambda = q.lambda;
  out.value.value = evaluate(r, q.lambda, q.kicks, 1.0);
  out.error_bound = r.error;
  out.terms = r.terms;
  return out;
}

}  // namespace

cdouble GaussianCharFn::operator()(cdouble lambda) const {
  // exp(lambda mean^* - lambda^* mean) exp(-2 s |lambda|^2)
  const cdouble drift = lambda * std::conj(mean) - std::conj(lambda) * mean;
  return std::exp(drift) * std::exp(-2.0 * variance * std::norm(lambda));
}

CharFnEstimate bessel_sum_charfn(const CharFnQuery& q, const DimensionlessParams& d, const GaussianCharFn& initial) {
  return run(q, d, initial, false);
}

CharFnEstimate semiclassical_charfn(const CharFnQuery& q, const DimensionlessParams& d, const GaussianCharFn& initial) {
  return run(q, d, initial, true);
}

double breaking_time_formula(double projected_kick, double eta) {
  if (!(projected_kick > 1.0)) throw std::invalid_argument("breaking-time formula needs Kbar > 1 (strong chaos)");
  if (!(eta > 0)) throw std::invalid_argument("eta must be positive");
  return std::log(2.0 * projected_kick / eta) / std::log(projected_kick);
}

char to_char(Region r) { return static_cast<char>('a' + static_cast<int>(r)); }

RegionVerdict classify_dissipative_region(double eta, double projected_damped_kick, double half_damping) {
  if (!std::isfinite(eta) || !std::isfinite(projected_damped_kick) || !std::isfinite(half_damping)) {
    throw std::invalid_argument("region classifier inputs must be finite");
  }
  if (!(eta > 0) || !(projected_damped_kick > 0)) throw std::invalid_argument("eta and Kbar' must be positive");
  if (half_damping < 0) throw std::invalid_argument("damping must be >= 0");

  RegionVerdict v;
  v.eta = eta;
  v.projected_kick = projected_damped_kick;
  v.half_damping = half_damping;
  const double quantum_edge = std::log(eta / 2.0);
  const double log_k = std::log(projected_damped_kick);
  v.indeterminate = std::abs(half_damping - quantum_edge) <= 1e-9 || std::abs(log_k - half_damping) <= 1e-9;
  const bool weak_damping = half_damping < quantum_edge;
  const bool stretching = log_k > half_damping;
  if (weak_damping) {
    v.region = stretching ? Region::a : Region::b;
    v.breaking_time = 1.0;
  } else if (stretching) {
    v.region = Region::c;
    v.breaking_time = std::log(2.0 * projected_damped_kick / eta) / (log_k - half_damping);
  } else {
    v.region = Region::d;
    v.breaking_time = std::numeric_limits<double>::infinity();
  }
  return v;
}

double breaking_time_ratio(double projected_damped_kick, double half_damping) {
  if (!(projected_damped_kick > 0)) throw std::invalid_argument("Kbar' must be positive");
  const double log_k = std::log(projected_damped_kick);
  if (!(log_k - half_damping > 0)) throw std::invalid_argument("breaking-time ratio needs ln Kbar' > gamma_tau_half");
  return log_k / (log_k - half_damping);
}

double critical_diffusion(double eta, double calibration) {
  if (!(eta > 0)) throw std::invalid_argument("eta must be positive");
  return calibration * eta * eta;
}

}  // namespace kho
