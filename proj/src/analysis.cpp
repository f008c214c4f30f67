#include "kho/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "kho/errors.hpp"

namespace kho {

double relative_distance(double var_classical, double var_quantum) {
  if (!(var_classical != 0.0) || !std::isfinite(var_classical)) {
    throw std::invalid_argument("relative distance needs a nonzero classical variance");
  }
  return std::abs(var_classical - var_quantum) / var_classical;
}

int automatic_fock_dim(double eta, double scale, int cap) {
  if (!(eta > 0) || !(scale > 0)) throw std::invalid_argument("automatic Fock size needs eta > 0 and scale > 0");
  const double n = std::ceil(scale / (eta * eta));
  return static_cast<int>(std::clamp(n, 64.0, static_cast<double>(cap)));
}

namespace {

MapKind classical_kind(EnvironmentKind env) {
  switch (env) {
    case EnvironmentKind::none: return MapKind::conservative;
    case EnvironmentKind::dissipative: return MapKind::dissipative;
    case EnvironmentKind::diffusive: return MapKind::diffusive;
  }
  throw std::invalid_argument("unknown environment kind");
}

// True when the reservoir leaves pure states pure for this parameter set.
bool reservoir_is_idle(const ComparisonConfig& c) {
  switch (c.env) {
    case EnvironmentKind::none: return true;
    case EnvironmentKind::dissipative: return c.params.half_damping == 0.0;
    case EnvironmentKind::diffusive: return c.params.diffusion == 0.0;
  }
  return false;
}

void run_quantum(ComparisonRun& run, int dim) {
  const ComparisonConfig& c = run.config;
  EvolveOptions options;
  options.tail_tolerance = c.tail_tolerance;
  options.abort_on_truncation = false;
  run.fock_dim = dim;
  run.pure_path = reservoir_is_idle(c);
  run.final_density.reset();
  run.final_pure.reset();
  if (run.pure_path) {
    // an idle reservoir reduces every kind to the bare map with (K, alpha) = (K', alpha-bar)
    DimensionlessParams p = c.params;
    if (c.env == EnvironmentKind::dissipative) {
      p.kick = p.damped_kick;
      p.angle = p.damped_angle;
      p.quantum_kick = p.quantum_damped_kick();
    }
    PureEvolution ev = evolve_kicked(PureState::vacuum(dim), p, c.budget, options);
    run.quantum = std::move(ev.moments);
    run.trace_drift = std::move(ev.trace_drift);
    run.truncated_at = ev.truncated_at;
    if (c.keep_states) run.final_pure = std::move(ev.state);
  } else {
    QuantumEvolution ev = evolve_kicked(DensityOperator::vacuum(dim), c.params, c.env, c.budget, options);
    run.quantum = std::move(ev.moments);
    run.trace_drift = std::move(ev.trace_drift);
    run.truncated_at = ev.truncated_at;
    if (c.keep_states) run.final_density = std::move(ev.state);
  }
}

// Crossing index within the quantum series, if any.
std::optional<int> first_crossing(const ComparisonRun& run, double epsilon) {
  const std::size_t n = std::min(run.classical.size(), run.quantum.size());
  for (std::size_t k = 1; k < n; ++k) {
    if (relative_distance(run.classical[k].var_first, run.quantum[k].var_v) > epsilon) return static_cast<int>(k);
  }
  return std::nullopt;
}

}  // namespace

ComparisonRun run_comparison(const ComparisonConfig& config) {
  validate(config.params);
  if (config.budget < 1) throw std::invalid_argument("kick budget must be >= 1");
  if (!(config.epsilon > 0 && config.epsilon < 1)) throw std::invalid_argument("epsilon must lie in (0, 1)");

  ComparisonRun run;
  run.config = config;

  const MapKind kind = classical_kind(config.env);
  const GaussianDensity initial = vacuum_matched_density(Frame::scaled, config.params);
  WeightedEnsemble ensemble = kind == MapKind::diffusive
                                  ? gaussian_sample_ensemble(initial, config.samples, config.seed, true)
                                  : gaussian_grid_ensemble(initial, config.grid_points, config.grid_half_width);
  EnsembleEvolution cl = evolve_weighted_ensemble(std::move(ensemble), config.params, config.budget, kind, config.seed);
  run.classical = std::move(cl.moments);
  run.initial_total_weight = cl.initial_total_weight;
  run.final_total_weight = cl.ensemble.total_weight();
  if (config.keep_states) run.final_ensemble = std::move(cl.ensemble);

  const bool adaptive = config.fock_dim <= 0;
  int dim = adaptive ? automatic_fock_dim(config.params.eta, config.fock_scale,
                                          std::min(config.fock_start_cap, config.fock_cap))
                     : config.fock_dim;
  for (;;) {
    run_quantum(run, dim);
    if (!adaptive || !run.truncated_at || dim >= config.fock_cap) break;
    // only the kicks up to the first crossing matter unless the state is kept
    if (!config.keep_states && first_crossing(run, config.epsilon)) break;
    dim = std::min(2 * dim, config.fock_cap);
  }
  return run;
}

BreakingTimeResult measure_breaking_time(const ComparisonRun& run) {
  return measure_breaking_time(run, run.config.epsilon);
}

BreakingTimeResult measure_breaking_time(const ComparisonRun& run, double epsilon) {
  if (!(epsilon > 0 && epsilon < 1)) throw std::invalid_argument("epsilon must lie in (0, 1)");
  BreakingTimeResult result;
  result.budget = run.config.budget;
  result.epsilon = epsilon;
  const std::size_t n = std::min(run.classical.size(), run.quantum.size());
  for (std::size_t k = 0; k < n; ++k) {
    const double vc = run.classical[k].var_first;
    if (!(std::abs(vc) > 1e-300)) throw NumericalAbort("classical variance underflow at kick " + std::to_string(k));
    const double vq = run.quantum[k].var_v;
    const double dr = relative_distance(vc, vq);
    result.trace.push_back({static_cast<int>(k), vc, vq, dr});
    result.max_distance = std::max(result.max_distance, dr);
    if (k > 0 && !result.tau && dr > epsilon) result.tau = static_cast<int>(k);
  }
  if (!result.tau && run.truncated_at) {
    throw TruncationError("Fock truncation became unsafe at kick " + std::to_string(*run.truncated_at) +
                              " before the distances separated",
                          *run.truncated_at - 1);
  }
  return result;
}

std::string to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::eta: return "eta";
    case SweepAxis::gamma_tau_half: return "gamma_tau_half";
    case SweepAxis::diffusion: return "D";
  }
  throw std::invalid_argument("unknown sweep axis");
}

SweepAxis parse_sweep_axis(std::string_view name) {
  if (name == "eta") return SweepAxis::eta;
  if (name == "gamma_tau_half") return SweepAxis::gamma_tau_half;
  if (name == "D" || name == "d") return SweepAxis::diffusion;
  throw std::invalid_argument("unknown sweep axis '" + std::string(name) + "' (expected eta, gamma_tau_half or D)");
}

ComparisonConfig apply_axis(const ComparisonConfig& base, SweepAxis axis, double value) {
  ComparisonConfig c = base;
  switch (axis) {
    case SweepAxis::eta: c.params = with_eta(base.params, value); break;
    case SweepAxis::gamma_tau_half: c.params = with_half_damping(base.params, value); break;
    case SweepAxis::diffusion: c.params = with_diffusion(base.params, value); break;
  }
  return c;
}

SweepTable sweep(SweepAxis axis, std::span<const double> values, const ComparisonConfig& base,
                 const std::function<void(const SweepRow&)>& on_point) {
  if (values.empty()) throw std::invalid_argument("sweep needs at least one value");
  bool ascending = true, descending = true;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) throw std::invalid_argument("sweep values must be finite");
    if (i > 0) {
      ascending = ascending && values[i] >= values[i - 1];
      descending = descending && values[i] <= values[i - 1];
    }
  }
  if (!ascending && !descending) throw std::invalid_argument("sweep values must be sorted");

  SweepTable table;
  table.axis = axis;
  table.rows.resize(values.size());
  // points are independent; run them one at a time so the inner loops own the threads
  for (std::size_t i = 0; i < values.size(); ++i) {
    SweepRow& row = table.rows[i];
    row.axis_value = values[i];
    row.budget = base.budget;
    row.epsilon = base.epsilon;
    row.seed = base.seed;
    try {
      const ComparisonRun run = run_comparison(apply_axis(base, axis, values[i]));
      row.fock_dim = run.fock_dim;
      row.detail = measure_breaking_time(run);
      row.tau = row.detail.tau;
      row.max_distance = row.detail.max_distance;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    if (on_point) on_point(row);
  }
  return table;
}

ScalingFit fit_scaling(std::span<const SweepRow> rows, ScalingModel model) {
  std::vector<double> etas, taus;
  for (const SweepRow& r : rows) {
    if (!r.tau || !r.error.empty()) continue;
    etas.push_back(r.axis_value);
    taus.push_back(static_cast<double>(*r.tau));
  }
  return fit_scaling(etas, taus, model);
}

ScalingFit fit_scaling(std::span<const double> etas, std::span<const double> taus, ScalingModel model) {
  if (model != ScalingModel::affine_in_log_inv_eta) throw std::invalid_argument("unknown scaling model");
  if (etas.size() != taus.size()) throw std::invalid_argument("scaling fit inputs differ in length");
  std::vector<double> x, y;
  for (std::size_t i = 0; i < etas.size(); ++i) {
    if (!std::isfinite(taus[i])) continue;
    if (!(etas[i] > 0)) throw std::invalid_argument("eta values must be positive");
    x.push_back(std::log(1.0 / etas[i]));
    y.push_back(taus[i]);
  }
  if (x.size() < 4) throw std::invalid_argument("scaling fit needs at least 4 finite breaking times");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0)) throw std::invalid_argument("scaling fit needs at least two distinct eta values");
  ScalingFit fit;
  fit.points = x.size();
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * x[i]);
    fit.residuals.push_back(r);
    ss_res += r * r;
  }
  fit.r_squared = syy > 0 ? 1.0 - ss_res / syy : 1.0;
  return fit;
}

}  // namespace kho
