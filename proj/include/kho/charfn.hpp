#pragma once

#include <complex>
#include <cstdint>
#include <limits>

#include "kho/params.hpp"
#include "kho/phase_space.hpp"

namespace kho {

/// Multiplier of i m eta in the shifted argument of the recursion. Changing it
/// to 2 gives the alternative form for sensitivity checks.
inline constexpr double kRecoilShiftFactor = 1.0;

struct TruncationPolicy {
  double margin = 8.0;        // |m| <= |z| + margin (|z|^(1/3) + 1)
  double prune_below = 1e-14; // drop branches whose Bessel product is smaller
  std::uint64_t term_budget = 100'000'000;
};

struct CharFnQuery {
  cdouble lambda{0.0, 0.0};
  int kicks = 0;
  EnvironmentKind env = EnvironmentKind::none;
  TruncationPolicy policy;
};

/// Characteristic function of a Gaussian Wigner function with mean `mean`
/// (beta = v + i u) and variance `variance` per scaled coordinate.
struct GaussianCharFn {
  cdouble mean{0.0, 0.0};
  double variance = 0.25;

  cdouble operator()(cdouble lambda) const;
};

struct CharFnEstimate {
  CharFnValue value;
  double error_bound = 0.0;  // estimated size of everything truncated or pruned
  std::uint64_t terms = 0;
};

/// Nested Bessel sum for the kicked oscillator, exact apart from truncation.
CharFnEstimate bessel_sum_charfn(const CharFnQuery& q, const DimensionlessParams& d, const GaussianCharFn& initial);
/// Same recursion with sin(xi) replaced by xi, i.e. the classical map.
CharFnEstimate semiclassical_charfn(const CharFnQuery& q, const DimensionlessParams& d, const GaussianCharFn& initial);

/// ln(2 Kbar / eta) / ln(Kbar), in kicks.
double breaking_time_formula(double projected_kick, double eta);

enum class Region { a, b, c, d };

char to_char(Region r);

struct RegionVerdict {
  Region region = Region::a;
  double breaking_time = 1.0;  // infinity for region d
  bool indeterminate = false;  // an inequality held with equality to 1e-9
  double eta = 0.0;
  double projected_kick = 0.0;
  double half_damping = 0.0;
};

RegionVerdict classify_dissipative_region(double eta, double projected_damped_kick, double half_damping);

/// ln Kbar' / (ln Kbar' - Gamma tau / 2).
double breaking_time_ratio(double projected_damped_kick, double half_damping);

inline constexpr double kCriticalDiffusionCalibration = 1.0 / 16.0;

/// Nominal diffusion above which the quantum and classical second moments stay close.
double critical_diffusion(double eta, double calibration = kCriticalDiffusionCalibration);

}  // namespace kho
