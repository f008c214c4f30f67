#pragma once

#include <span>
#include <string>
#include <vector>

#include "kho/classical.hpp"
#include "kho/quantum.hpp"

namespace kho {

struct CharFnValue {
  cdouble lambda;
  cdouble value;
};

/// Band d of the displacement operator: h[m] = <m+d|D(beta)|m> / (beta/|beta|)^d,
/// which depends only on x = |beta|^2. Written for m = 0 .. out.size()-1.
void displacement_band(double x, int d, std::span<double> out);

/// Tr[rho D(lambda)] in the truncated basis.
CharFnValue char_fn_from_state(const DensityOperator& rho, cdouble lambda);
CharFnValue char_fn_from_state(const PureState& psi, cdouble lambda);

struct WignerGrid {
  GridSpec spec;               // scaled frame, beta = v + i u
  std::vector<double> values;  // row-major like DensityGrid
  bool coarse = false;         // a cell is wider than 0.5

  double at(int i, int j) const { return values[static_cast<std::size_t>(i) * spec.n_second + j]; }
  double integral() const;
  double min() const;
  double max() const;
};

/// W(beta) = (2/pi) Tr[rho D(beta) Pi D(beta)^dagger].
WignerGrid wigner(const DensityOperator& rho, const GridSpec& spec);
WignerGrid wigner(const PureState& psi, const GridSpec& spec);

/// Fraction of nodes whose value exceeds `fraction` of the grid maximum.
double support_fraction(std::span<const double> values, double fraction);

}  // namespace kho
