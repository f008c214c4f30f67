#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "kho/params.hpp"
#include "kho/random.hpp"

namespace kho {

enum class MapKind { conservative, dissipative, diffusive };

std::string to_string(MapKind kind);
MapKind parse_map_kind(std::string_view name);

// Single-kick maps. Each checks the frame tag of its input.
ClassicalState step_conservative(const ClassicalState& s, const DimensionlessParams& d);
ClassicalState step_dissipative(const ClassicalState& s, const DimensionlessParams& d);
/// Scaled-frame map; `kind` selects (K, alpha) or (K', alpha-bar, damping).
ClassicalState step_scaled(const ClassicalState& s, const DimensionlessParams& d,
                           MapKind kind = MapKind::conservative);
/// Exact inverse of the deterministic map matching `kind` and the frame of `s`.
ClassicalState inverse_step(const ClassicalState& s, const DimensionlessParams& d, MapKind kind);
/// Kick, rotation, then an exact Gaussian increment for the inter-kick
/// diffusion: variance D per coordinate in the scaled frame, (2 eta)^2 D raw.
ClassicalState step_diffusive(const ClassicalState& s, const DimensionlessParams& d, CounterRng& noise);

/// 2x2 Jacobian of the deterministic map at `s`, row-major.
std::array<double, 4> map_jacobian(const ClassicalState& s, const DimensionlessParams& d, MapKind kind);

/// Isotropic Gaussian density in one frame.
struct GaussianDensity {
  double mean_first = 0.0;
  double mean_second = 0.0;
  double variance = 0.25;
  Frame frame = Frame::scaled;

  double operator()(double first, double second) const;
};

/// Gaussian matching the vacuum Wigner function, expressed in `frame`.
GaussianDensity vacuum_matched_density(Frame frame, const DimensionlessParams& d);

class WeightedEnsemble {
 public:
  WeightedEnsemble(Frame frame, std::vector<ClassicalState> states, std::vector<double> weights);

  Frame frame() const { return frame_; }
  std::size_t size() const { return states_.size(); }
  double total_weight() const { return total_weight_; }
  std::span<const ClassicalState> states() const { return states_; }
  std::span<const double> weights() const { return weights_; }
  std::span<ClassicalState> mutable_states() { return states_; }

 private:
  Frame frame_;
  std::vector<ClassicalState> states_;
  std::vector<double> weights_;
  double total_weight_;
};

/// Deterministic ensemble: a square grid of nodes weighted by the density.
WeightedEnsemble gaussian_grid_ensemble(const GaussianDensity& g, int points_per_axis,
                                        double half_width_sigmas = 6.0);
/// Equal-weight samples. With `match_moments` the samples are shifted and
/// rescaled so that their mean and variance equal the target exactly.
WeightedEnsemble gaussian_sample_ensemble(const GaussianDensity& g, std::size_t samples,
                                          std::uint64_t seed, bool match_moments = true);

struct PhaseSpaceMoments {
  int kick = 0;
  double mean_first = 0.0;
  double mean_second = 0.0;
  double var_first = 0.0;
  double var_second = 0.0;
};

PhaseSpaceMoments ensemble_moments(const WeightedEnsemble& e, int kick);

struct EnsembleEvolution {
  WeightedEnsemble ensemble;
  std::vector<PhaseSpaceMoments> moments;  // kicks 0..n
  double initial_total_weight = 0.0;
};

using TrajectoryObserver = std::function<void(int kick, const WeightedEnsemble&)>;

/// Advances every member `kicks` times. Diffusive noise for member i is drawn
/// from stream (seed, i), so results are independent of the thread count.
EnsembleEvolution evolve_weighted_ensemble(WeightedEnsemble e, const DimensionlessParams& d, int kicks,
                                           MapKind kind, std::uint64_t seed = 0,
                                           const TrajectoryObserver& observer = {});

struct GridSpec {
  double first_min = -3.0, first_max = 3.0;
  double second_min = -3.0, second_max = 3.0;
  int n_first = 101, n_second = 101;
  Frame frame = Frame::scaled;

  double first_at(int i) const;
  double second_at(int j) const;
  double cell_area() const;
  void check() const;
};

/// Row-major values, index i * n_second + j.
struct DensityGrid {
  GridSpec spec;
  std::vector<double> values;

  double at(int i, int j) const { return values[static_cast<std::size_t>(i) * spec.n_second + j]; }
  double integral() const;
};

/// Density at time n on grid nodes, P_n(x) = |det| * P_0(preimage of x).
/// The determinant factor is exp(n Gamma tau) for the dissipative map and 1 otherwise.
DensityGrid render_density_backward(const GridSpec& spec, const DimensionlessParams& d, int kicks,
                                    MapKind kind, const GaussianDensity& initial);

/// Forward histogram of an ensemble, normalized to unit integral.
DensityGrid histogram_density(const WeightedEnsemble& e, const GridSpec& spec);

struct LyapunovResult {
  double mean = 0.0;  // nats per kick
  std::vector<double> per_trajectory;
  std::vector<double> weights;
  std::size_t trajectories = 0;
  std::size_t iterations = 0;
};

/// Benettin estimate for the dissipative map; `initial` must be in the
/// dissipative frame. Weighted by the ensemble weights.
LyapunovResult lyapunov_exponent(const DimensionlessParams& d, const WeightedEnsemble& initial,
                                 std::size_t iterations);

struct BifurcationSlice {
  double half_damping = 0.0;
  std::vector<double> u;
  bool diverged = false;
};

/// For each damping value keeps K' and alpha-bar of `base`, iterates
/// `transient` times from `start` and records the last `recorded` u values.
std::vector<BifurcationSlice> bifurcation_scan(const DimensionlessParams& base,
                                               std::span<const double> half_dampings,
                                               std::size_t transient, std::size_t recorded,
                                               ClassicalState start = {1.0, 0.0, Frame::dissipative});

}  // namespace kho
