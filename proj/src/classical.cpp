#include "kho/classical.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "kho/errors.hpp"

namespace kho {

namespace {

// One deterministic kick-rotate-contract step, expressed for any frame:
// u += K sin(s v) / s, rotate by `angle`, multiply by `contraction`.
struct MapCoefficients {
  double kick;
  double scale;  // 1 in physical frames, 2 eta in the scaled frame
  double cos_a;
  double sin_a;
  double contraction;
};

MapCoefficients coefficients(Frame frame, const DimensionlessParams& d, MapKind kind) {
  const double scale = frame == Frame::scaled ? 2.0 * d.eta : 1.0;
  if (kind == MapKind::dissipative) {
    return {d.damped_kick, scale, std::cos(d.damped_angle), std::sin(d.damped_angle), d.damping_factor()};
  }
  return {d.kick, scale, std::cos(d.angle), std::sin(d.angle), 1.0};
}

inline ClassicalState forward(const ClassicalState& s, const MapCoefficients& c) {
  const double kicked = s.second + c.kick * std::sin(c.scale * s.first) / c.scale;
  return {c.contraction * (c.cos_a * s.first + c.sin_a * kicked),
          c.contraction * (-c.sin_a * s.first + c.cos_a * kicked), s.frame};
}

inline ClassicalState backward(const ClassicalState& s, const MapCoefficients& c, double expansion) {
  const double v = expansion * s.first;
  const double u = expansion * s.second;
  const double v0 = c.cos_a * v - c.sin_a * u;
  const double kicked = c.sin_a * v + c.cos_a * u;
  return {v0, kicked - c.kick * std::sin(c.scale * v0) / c.scale, s.frame};
}

void require_frame(const ClassicalState& s, Frame expected, const char* op) {
  if (s.frame != expected) {
    throw std::invalid_argument(std::string(op) + ": expected " + to_string(expected) +
                                " frame, got " + to_string(s.frame));
  }
}

// Which frames each deterministic map kind may run in.
void check_kind_frame(Frame frame, MapKind kind, const char* op) {
  bool ok = false;
  switch (kind) {
    case MapKind::conservative: ok = frame == Frame::raw || frame == Frame::scaled; break;
    case MapKind::dissipative: ok = frame == Frame::dissipative || frame == Frame::scaled; break;
    case MapKind::diffusive: ok = frame == Frame::raw || frame == Frame::scaled; break;
  }
  if (!ok) {
    throw std::invalid_argument(std::string(op) + ": " + to_string(kind) + " map cannot run in the " +
                                to_string(frame) + " frame");
  }
}

}  // namespace

std::string to_string(MapKind kind) {
  switch (kind) {
    case MapKind::conservative: return "conservative";
    case MapKind::dissipative: return "dissipative";
    case MapKind::diffusive: return "diffusive";
  }
  throw std::invalid_argument("unknown map kind");
}

MapKind parse_map_kind(std::string_view name) {
  if (name == "conservative") return MapKind::conservative;
  if (name == "dissipative") return MapKind::dissipative;
  if (name == "diffusive") return MapKind::diffusive;
  throw std::invalid_argument("unknown map kind '" + std::string(name) + "'");
}

ClassicalState step_conservative(const ClassicalState& s, const DimensionlessParams& d) {
  require_frame(s, Frame::raw, "step_conservative");
  return forward(s, coefficients(Frame::raw, d, MapKind::conservative));
}

ClassicalState step_dissipative(const ClassicalState& s, const DimensionlessParams& d) {
  require_frame(s, Frame::dissipative, "step_dissipative");
  if (!(d.half_damping >= 0)) throw std::invalid_argument("step_dissipative: gamma_tau_half must be >= 0");
  return forward(s, coefficients(Frame::dissipative, d, MapKind::dissipative));
}

ClassicalState step_scaled(const ClassicalState& s, const DimensionlessParams& d, MapKind kind) {
  require_frame(s, Frame::scaled, "step_scaled");
  if (!(d.eta > 0)) throw std::invalid_argument("step_scaled: eta must be positive");
  if (kind == MapKind::diffusive) throw std::invalid_argument("step_scaled: use step_diffusive for noise");
  return forward(s, coefficients(Frame::scaled, d, kind));
}

ClassicalState inverse_step(const ClassicalState& s, const DimensionlessParams& d, MapKind kind) {
  if (kind == MapKind::diffusive) throw std::invalid_argument("inverse_step: diffusive map has no inverse");
  check_kind_frame(s.frame, kind, "inverse_step");
  double expansion = 1.0;
  if (kind == MapKind::dissipative) {
    if (!std::isfinite(d.half_damping)) throw std::invalid_argument("inverse_step: damping must be finite");
    expansion = std::exp(d.half_damping);
    if (!(expansion <= 1e300)) throw NumericalAbort("inverse_step: un-damping factor overflows");
  }
  const ClassicalState out = backward(s, coefficients(s.frame, d, kind), expansion);
  if (!std::isfinite(out.first) || !std::isfinite(out.second) || std::abs(out.first) > 1e300 ||
      std::abs(out.second) > 1e300) {
    throw NumericalAbort("inverse_step: preimage overflowed");
  }
  return out;
}

ClassicalState step_diffusive(const ClassicalState& s, const DimensionlessParams& d, CounterRng& noise) {
  if (s.frame != Frame::raw && s.frame != Frame::scaled) {
    throw std::invalid_argument("step_diffusive: expected raw or scaled frame, got " + to_string(s.frame));
  }
  if (!(d.diffusion >= 0)) throw std::invalid_argument("step_diffusive: negative diffusion");
  ClassicalState out = forward(s, coefficients(s.frame, d, MapKind::conservative));
  if (d.diffusion > 0) {
    const double variance = s.frame == Frame::scaled ? d.diffusion : 4.0 * d.eta * d.eta * d.diffusion;
    const double sigma = std::sqrt(variance);
    out.first += sigma * noise.normal();
    out.second += sigma * noise.normal();
  }
  return out;
}

std::array<double, 4> map_jacobian(const ClassicalState& s, const DimensionlessParams& d, MapKind kind) {
  if (kind == MapKind::diffusive) kind = MapKind::conservative;
  check_kind_frame(s.frame, kind, "map_jacobian");
  const MapCoefficients c = coefficients(s.frame, d, kind);
  const double shear = c.kick * std::cos(c.scale * s.first);
  return {c.contraction * (c.cos_a + c.sin_a * shear), c.contraction * c.sin_a,
          c.contraction * (-c.sin_a + c.cos_a * shear), c.contraction * c.cos_a};
}

double GaussianDensity::operator()(double first, double second) const {
  const double dv = first - mean_first;
  const double du = second - mean_second;
  return std::exp(-(dv * dv + du * du) / (2.0 * variance)) / (2.0 * M_PI * variance);
}

GaussianDensity vacuum_matched_density(Frame frame, const DimensionlessParams& d) {
  GaussianDensity g;
  g.frame = frame;
  // 1/4 in the scaled frame, (2 eta)^2 / 4 in physical frames
  g.variance = frame == Frame::scaled ? 0.25 : d.eta * d.eta;
  return g;
}

WeightedEnsemble::WeightedEnsemble(Frame frame, std::vector<ClassicalState> states, std::vector<double> weights)
    : frame_(frame), states_(std::move(states)), weights_(std::move(weights)), total_weight_(0.0) {
  if (states_.empty()) throw std::invalid_argument("ensemble is empty");
  if (states_.size() != weights_.size()) throw std::invalid_argument("ensemble states and weights differ in size");
  for (std::size_t i = 0; i < states_.size(); ++i) {
    if (states_[i].frame != frame_) throw std::invalid_argument("ensemble member has a foreign frame tag");
    if (!(weights_[i] >= 0) || !std::isfinite(weights_[i])) throw std::invalid_argument("ensemble weights must be >= 0");
    total_weight_ += weights_[i];
  }
  if (!(total_weight_ > 0)) throw std::invalid_argument("ensemble total weight must be positive");
}

WeightedEnsemble gaussian_grid_ensemble(const GaussianDensity& g, int points_per_axis, double half_width_sigmas) {
  if (points_per_axis < 1) throw std::invalid_argument("grid ensemble needs at least one point per axis");
  if (!(g.variance > 0)) throw std::invalid_argument("Gaussian variance must be positive");
  const double sigma = std::sqrt(g.variance);
  const double half = half_width_sigmas * sigma;
  const int n = points_per_axis;
  const double step = n > 1 ? 2.0 * half / (n - 1) : 0.0;
  const double area = n > 1 ? step * step : 1.0;
  std::vector<ClassicalState> states;
  std::vector<double> weights;
  states.reserve(static_cast<std::size_t>(n) * n);
  weights.reserve(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i) {
    const double v = n > 1 ? g.mean_first - half + i * step : g.mean_first;
    for (int j = 0; j < n; ++j) {
      const double u = n > 1 ? g.mean_second - half + j * step : g.mean_second;
      states.push_back({v, u, g.frame});
      weights.push_back(n > 1 ? g(v, u) * area : 1.0);
    }
  }
  return WeightedEnsemble(g.frame, std::move(states), std::move(weights));
}

WeightedEnsemble gaussian_sample_ensemble(const GaussianDensity& g, std::size_t samples, std::uint64_t seed,
                                          bool match_moments) {
  if (samples < 2) throw std::invalid_argument("sample ensemble needs at least two samples");
  if (!(g.variance > 0)) throw std::invalid_argument("Gaussian variance must be positive");
  CounterRng rng(seed, stream_id("classical-initial"));
  const double sigma = std::sqrt(g.variance);
  std::vector<ClassicalState> states(samples);
  for (auto& s : states) {
    s.first = g.mean_first + sigma * rng.normal();
    s.second = g.mean_second + sigma * rng.normal();
    s.frame = g.frame;
  }
  if (match_moments) {
    WeightedEnsemble raw(g.frame, states, std::vector<double>(samples, 1.0));
    const PhaseSpaceMoments m = ensemble_moments(raw, 0);
    const double sv = std::sqrt(g.variance / m.var_first);
    const double su = std::sqrt(g.variance / m.var_second);
    for (auto& s : states) {
      s.first = g.mean_first + (s.first - m.mean_first) * sv;
      s.second = g.mean_second + (s.second - m.mean_second) * su;
    }
  }
  return WeightedEnsemble(g.frame, std::move(states), std::vector<double>(samples, 1.0));
}

PhaseSpaceMoments ensemble_moments(const WeightedEnsemble& e, int kick) {
  const auto states = e.states();
  const auto w = e.weights();
  const double total = e.total_weight();
  double mv = 0.0, mu = 0.0;
  for (std::size_t i = 0; i < states.size(); ++i) {
    mv += w[i] * states[i].first;
    mu += w[i] * states[i].second;
  }
  mv /= total;
  mu /= total;
  double vv = 0.0, vu = 0.0;
  for (std::size_t i = 0; i < states.size(); ++i) {
    const double dv = states[i].first - mv;
    const double du = states[i].second - mu;
    vv += w[i] * dv * dv;
    vu += w[i] * du * du;
  }
  return {kick, mv, mu, vv / total, vu / total};
}

EnsembleEvolution evolve_weighted_ensemble(WeightedEnsemble e, const DimensionlessParams& d, int kicks,
                                           MapKind kind, std::uint64_t seed, const TrajectoryObserver& observer) {
  if (kicks < 0) throw std::invalid_argument("kick count must be >= 0");
  check_kind_frame(e.frame(), kind, "evolve_weighted_ensemble");
  const Frame frame = e.frame();
  const MapCoefficients c = coefficients(frame, d, kind);

  std::vector<CounterRng> noise;
  if (kind == MapKind::diffusive) {
    noise.reserve(e.size());
    for (std::size_t i = 0; i < e.size(); ++i) noise.emplace_back(seed, stream_id("classical-noise", i));
  }

  EnsembleEvolution out{e, {}, e.total_weight()};
  out.moments.reserve(static_cast<std::size_t>(kicks) + 1);
  out.moments.push_back(ensemble_moments(out.ensemble, 0));
  if (observer) observer(0, out.ensemble);

  auto states = out.ensemble.mutable_states();
  const auto n = static_cast<std::ptrdiff_t>(states.size());
  for (int k = 1; k <= kicks; ++k) {
    if (kind == MapKind::diffusive) {
#pragma omp parallel for schedule(static)
      for (std::ptrdiff_t i = 0; i < n; ++i) states[i] = step_diffusive(states[i], d, noise[i]);
    } else {
#pragma omp parallel for schedule(static)
      for (std::ptrdiff_t i = 0; i < n; ++i) states[i] = forward(states[i], c);
    }
    out.moments.push_back(ensemble_moments(out.ensemble, k));
    if (observer) observer(k, out.ensemble);
  }
  return out;
}

double GridSpec::first_at(int i) const {
  return n_first > 1 ? first_min + (first_max - first_min) * i / (n_first - 1) : first_min;
}

double GridSpec::second_at(int j) const {
  return n_second > 1 ? second_min + (second_max - second_min) * j / (n_second - 1) : second_min;
}

double GridSpec::cell_area() const {
  return (first_max - first_min) / (n_first - 1) * (second_max - second_min) / (n_second - 1);
}

void GridSpec::check() const {
  if (n_first < 2 || n_second < 2) throw std::invalid_argument("grid needs at least 2 nodes per axis");
  if (!(first_max > first_min) || !(second_max > second_min)) throw std::invalid_argument("grid extents are empty");
  if (!std::isfinite(first_min) || !std::isfinite(first_max) || !std::isfinite(second_min) ||
      !std::isfinite(second_max)) {
    throw std::invalid_argument("grid extents must be finite");
  }
}

double DensityGrid::integral() const {
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum * spec.cell_area();
}

DensityGrid render_density_backward(const GridSpec& spec, const DimensionlessParams& d, int kicks, MapKind kind,
                                    const GaussianDensity& initial) {
  spec.check();
  if (kind == MapKind::diffusive) throw std::invalid_argument("backward rendering needs a deterministic map");
  if (kicks < 0) throw std::invalid_argument("kick count must be >= 0");
  check_kind_frame(spec.frame, kind, "render_density_backward");
  if (initial.frame != spec.frame) throw std::invalid_argument("initial density and grid use different frames");

  const MapCoefficients c = coefficients(spec.frame, d, kind);
  double expansion = 1.0;
  double jacobian = 1.0;
  if (kind == MapKind::dissipative) {
    expansion = std::exp(d.half_damping);
    const double log_jacobian = 2.0 * d.half_damping * kicks;
    if (expansion > 1e300 || log_jacobian > 690.0) throw NumericalAbort("backward rendering: un-damping overflows");
    jacobian = std::exp(log_jacobian);
  }

  DensityGrid grid{spec, std::vector<double>(static_cast<std::size_t>(spec.n_first) * spec.n_second, 0.0)};
  const std::ptrdiff_t total = static_cast<std::ptrdiff_t>(grid.values.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t idx = 0; idx < total; ++idx) {
    const int i = static_cast<int>(idx / spec.n_second);
    const int j = static_cast<int>(idx % spec.n_second);
    ClassicalState s{spec.first_at(i), spec.second_at(j), spec.frame};
    bool escaped = false;
    for (int k = 0; k < kicks; ++k) {
      s = backward(s, c, expansion);
      if (!(std::abs(s.first) < 1e150 && std::abs(s.second) < 1e150)) {
        escaped = true;  // density there is zero to any precision
        break;
      }
    }
    grid.values[idx] = escaped ? 0.0 : jacobian * initial(s.first, s.second);
  }
  return grid;
}

DensityGrid histogram_density(const WeightedEnsemble& e, const GridSpec& spec) {
  spec.check();
  if (e.frame() != spec.frame) throw std::invalid_argument("histogram: ensemble and grid use different frames");
  DensityGrid grid{spec, std::vector<double>(static_cast<std::size_t>(spec.n_first) * spec.n_second, 0.0)};
  const double dv = (spec.first_max - spec.first_min) / (spec.n_first - 1);
  const double du = (spec.second_max - spec.second_min) / (spec.n_second - 1);
  const auto states = e.states();
  const auto w = e.weights();
  for (std::size_t k = 0; k < states.size(); ++k) {
    const double fi = std::floor((states[k].first - spec.first_min) / dv + 0.5);
    const double fj = std::floor((states[k].second - spec.second_min) / du + 0.5);
    if (fi < 0 || fj < 0 || fi >= spec.n_first || fj >= spec.n_second) continue;
    grid.values[static_cast<std::size_t>(fi) * spec.n_second + static_cast<std::size_t>(fj)] += w[k];
  }
  const double norm = 1.0 / (e.total_weight() * spec.cell_area());
  for (double& v : grid.values) v *= norm;
  return grid;
}

LyapunovResult lyapunov_exponent(const DimensionlessParams& d, const WeightedEnsemble& initial, std::size_t iterations) {
  if (iterations < 1000) throw std::invalid_argument("Lyapunov estimate needs at least 1000 iterations");
  if (initial.frame() != Frame::dissipative) throw std::invalid_argument("Lyapunov ensemble must be in the dissipative frame");
  const MapCoefficients c = coefficients(Frame::dissipative, d, MapKind::dissipative);
  const auto states = initial.states();
  const auto n = static_cast<std::ptrdiff_t>(states.size());

  LyapunovResult result;
  result.per_trajectory.assign(states.size(), 0.0);
  result.weights.assign(initial.weights().begin(), initial.weights().end());
  result.trajectories = states.size();
  result.iterations = iterations;
  bool failed = false;

#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t t = 0; t < n; ++t) {
    double v = states[t].first, u = states[t].second;
    double wv = M_SQRT1_2, wu = M_SQRT1_2;
    double log_sum = 0.0;
    double product = 1.0;  // norms are multiplied here and logged in batches
    for (std::size_t it = 0; it < iterations; ++it) {
      const double sv = std::sin(v);
      const double cv = std::cos(v);
      // tangent first, it uses the pre-kick position
      const double tw = wu + c.kick * cv * wv;
      const double nwv = c.contraction * (c.cos_a * wv + c.sin_a * tw);
      const double nwu = c.contraction * (-c.sin_a * wv + c.cos_a * tw);
      const double kicked = u + c.kick * sv;
      const double nv = c.contraction * (c.cos_a * v + c.sin_a * kicked);
      u = c.contraction * (-c.sin_a * v + c.cos_a * kicked);
      v = nv;
      const double norm = std::hypot(nwv, nwu);
      wv = nwv / norm;
      wu = nwu / norm;
      product *= norm;
      if (product > 1e200 || product < 1e-200) {
        log_sum += std::log(product);
        product = 1.0;
      }
    }
    log_sum += std::log(product);
    const double value = log_sum / static_cast<double>(iterations);
    if (!std::isfinite(value)) {
#pragma omp atomic write
      failed = true;
    }
    result.per_trajectory[t] = value;
  }
  if (failed) throw NumericalAbort("Lyapunov estimate: non-finite tangent growth");

  double num = 0.0;
  for (std::size_t t = 0; t < states.size(); ++t) num += result.weights[t] * result.per_trajectory[t];
  result.mean = num / initial.total_weight();
  return result;
}

std::vector<BifurcationSlice> bifurcation_scan(const DimensionlessParams& base, std::span<const double> half_dampings,
                                               std::size_t transient, std::size_t recorded, ClassicalState start) {
  if (transient < recorded) throw std::invalid_argument("bifurcation scan: transient must be >= recorded");
  if (start.frame != Frame::dissipative) throw std::invalid_argument("bifurcation scan starts in the dissipative frame");
  std::vector<BifurcationSlice> out(half_dampings.size());
  const auto n = static_cast<std::ptrdiff_t>(half_dampings.size());
  std::vector<DimensionlessParams> params;
  params.reserve(half_dampings.size());
  for (double h : half_dampings) params.push_back(with_half_damping(base, h));

#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t p = 0; p < n; ++p) {
    BifurcationSlice& slice = out[p];
    slice.half_damping = half_dampings[p];
    const MapCoefficients c = coefficients(Frame::dissipative, params[p], MapKind::dissipative);
    ClassicalState s = start;
    slice.u.reserve(recorded);
    for (std::size_t it = 0; it < transient; ++it) {
      s = forward(s, c);
      if (!(std::abs(s.first) <= 1e12 && std::abs(s.second) <= 1e12)) {
        slice.diverged = true;
        slice.u.clear();
        break;
      }
      if (it + recorded >= transient) slice.u.push_back(s.second);
    }
  }
  return out;
}

}  // namespace kho
