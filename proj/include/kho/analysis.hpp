#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kho/classical.hpp"
#include "kho/params.hpp"
#include "kho/quantum.hpp"

namespace kho {

double relative_distance(double var_classical, double var_quantum);

struct ComparisonConfig {
  DimensionlessParams params;
  EnvironmentKind env = EnvironmentKind::none;
  int budget = 50;
  double epsilon = 0.1;
  int fock_dim = 0;           // 0 picks ceil(fock_scale / eta^2) and doubles on truncation
  double fock_scale = 64.0;
  int fock_start_cap = 1024;  // automatic sizing starts no larger than this and doubles on truncation
  int fock_cap = 8192;
  int grid_points = 400;      // classical grid ensemble, per axis
  double grid_half_width = 6.0;
  std::size_t samples = 100000;  // Monte Carlo size for the diffusive kind
  std::uint64_t seed = 0;
  double tail_tolerance = kDefaultTailTolerance;
  bool keep_states = false;   // retain the final quantum state and classical ensemble
};

int automatic_fock_dim(double eta, double scale, int cap);

struct ComparisonRun {
  ComparisonConfig config;
  int fock_dim = 0;
  bool pure_path = false;
  std::vector<PhaseSpaceMoments> classical;  // kicks 0..budget
  std::vector<MomentRecord> quantum;         // kicks 0..last safe kick
  std::vector<double> trace_drift;
  std::optional<int> truncated_at;
  double initial_total_weight = 0.0;
  double final_total_weight = 0.0;
  std::optional<DensityOperator> final_density;
  std::optional<PureState> final_pure;
  std::optional<WeightedEnsemble> final_ensemble;
};

/// Classical ensemble and quantum state evolved side by side from matched
/// initial conditions (vacuum and the Gaussian of variance 1/4).
ComparisonRun run_comparison(const ComparisonConfig& config);

struct DistanceSample {
  int kick = 0;
  double var_classical = 0.0;
  double var_quantum = 0.0;
  double distance = 0.0;
};

struct BreakingTimeResult {
  std::optional<int> tau;  // empty means no crossing within the budget
  int budget = 0;
  double epsilon = 0.0;
  double max_distance = 0.0;
  std::vector<DistanceSample> trace;

  bool finite() const { return tau.has_value(); }
};

BreakingTimeResult measure_breaking_time(const ComparisonRun& run);
BreakingTimeResult measure_breaking_time(const ComparisonRun& run, double epsilon);

enum class SweepAxis { eta, gamma_tau_half, diffusion };

std::string to_string(SweepAxis axis);
SweepAxis parse_sweep_axis(std::string_view name);

struct SweepRow {
  double axis_value = 0.0;
  std::optional<int> tau;
  double max_distance = 0.0;
  int budget = 0;
  double epsilon = 0.0;
  std::uint64_t seed = 0;
  int fock_dim = 0;
  std::string error;  // non-empty when the point failed
  BreakingTimeResult detail;
};

struct SweepTable {
  SweepAxis axis = SweepAxis::eta;
  std::vector<SweepRow> rows;
};

ComparisonConfig apply_axis(const ComparisonConfig& base, SweepAxis axis, double value);

SweepTable sweep(SweepAxis axis, std::span<const double> values, const ComparisonConfig& base,
                 const std::function<void(const SweepRow&)>& on_point = {});

enum class ScalingModel { affine_in_log_inv_eta };

struct ScalingFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::vector<double> residuals;
  std::size_t points = 0;
};

/// Least-squares fit of tau against ln(1/eta) over rows with a finite tau.
ScalingFit fit_scaling(std::span<const SweepRow> rows, ScalingModel model = ScalingModel::affine_in_log_inv_eta);
ScalingFit fit_scaling(std::span<const double> etas, std::span<const double> taus,
                       ScalingModel model = ScalingModel::affine_in_log_inv_eta);

}  // namespace kho
