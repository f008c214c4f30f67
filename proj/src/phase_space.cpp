#include "kho/phase_space.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace kho {

namespace {

constexpr double kBig = 1e150;
constexpr double kSmall = 1e-150;

// r(d, m) = sqrt((m+1)(m+1+d)), the denominators of the normalized Laguerre
// recurrence. Tabulated when the basis is small enough.
class RecurrenceTable {
 public:
  explicit RecurrenceTable(int dim) : dim_(dim) {
    if (dim > 2048) return;
    offsets_.resize(dim + 1);
    std::size_t total = 0;
    for (int d = 0; d < dim; ++d) {
      offsets_[d] = total;
      total += static_cast<std::size_t>(dim - d);
    }
    offsets_[dim] = total;
    values_.resize(total);
    for (int d = 0; d < dim; ++d)
      for (int m = 0; m < dim - d; ++m) values_[offsets_[d] + m] = std::sqrt((m + 1.0) * (m + 1.0 + d));
  }

  double operator()(int d, int m) const {
    if (!values_.empty()) return values_[offsets_[d] + m];
    return std::sqrt((m + 1.0) * (m + 1.0 + d));
  }

  int dim() const { return dim_; }

 private:
  int dim_;
  std::vector<std::size_t> offsets_;
  std::vector<double> values_;
};

// Calls visit(m, g) for m in [0, count) where h_m = g * exp(log_scale) and
// returns the final log scale. `rescale(f)` is invoked whenever g values are
// multiplied by f so callers can keep running sums consistent.
template <class Visit, class Rescale>
double walk_band(double x, int d, int count, const RecurrenceTable& r, Visit&& visit, Rescale&& rescale) {
  double log_scale = -0.5 * x - 0.5 * std::lgamma(d + 1.0);
  if (d > 0) log_scale += 0.5 * d * std::log(x);
  double prev = 0.0;
  double cur = 1.0;
  for (int m = 0; m < count; ++m) {
    visit(m, cur);
    if (m + 1 == count) break;
    const double back = m > 0 ? r(d, m - 1) : 0.0;
    const double next = ((2.0 * m + d + 1.0 - x) * cur - back * prev) / r(d, m);
    prev = cur;
    cur = next;
    if (std::abs(cur) > kBig) {
      cur *= kSmall;
      prev *= kSmall;
      rescale(kSmall);
      log_scale -= std::log(kSmall);
    }
  }
  return log_scale;
}

// sum over m of coef(m) h_m for band d at x = |beta|^2
template <class Coef>
cdouble band_sum(double x, int d, int count, const RecurrenceTable& r, Coef&& coef) {
  if (count <= 0) return 0.0;
  if (x == 0.0) {
    if (d > 0) return 0.0;
    cdouble s = 0.0;
    for (int m = 0; m < count; ++m) s += coef(m);
    return s;
  }
  cdouble sum = 0.0;
  const double log_scale = walk_band(
      x, d, count, r, [&](int m, double g) { sum += coef(m) * g; }, [&](double f) { sum *= f; });
  if (sum == 0.0) return 0.0;
  return sum * std::exp(log_scale);
}

// Tr[rho D(lambda) P] where P is the identity or the parity, for any element accessor.
template <class Element>
cdouble displaced_trace(int dim, cdouble lambda, bool parity, const RecurrenceTable& table, Element&& rho) {
  const double x = std::norm(lambda);
  const cdouble unit = x > 0 ? lambda / std::sqrt(x) : cdouble(1.0, 0.0);
  cdouble total = 0.0;
  cdouble phase = 1.0;  // unit^d
  for (int d = 0; d < dim; ++d) {
    const int count = dim - d;
    const double d_sign = (d % 2 == 0) ? 1.0 : -1.0;
    if (d > 0 && x == 0.0) break;
    // rho_{m,m+d} <m+d|D|m> and rho_{m+d,m} <m|D|m+d>, parity taken on rho's row index
    const cdouble lower = band_sum(x, d, count, table, [&](int m) {
      const double s = parity && (m % 2) ? -1.0 : 1.0;
      return s * rho(m, m + d);
    });
    total += lower * phase;
    if (d > 0) {
      const cdouble upper = band_sum(x, d, count, table, [&](int m) {
        const double s = parity && ((m + d) % 2) ? -1.0 : 1.0;
        return s * rho(m + d, m);
      });
      total += upper * d_sign * std::conj(phase);
    }
    phase *= unit;
  }
  return total;
}

void check_lambda(int dim, cdouble lambda) {
  if (!std::isfinite(lambda.real()) || !std::isfinite(lambda.imag())) throw std::invalid_argument("lambda must be finite");
  if (std::norm(lambda) > 4.0 * dim) {
    throw std::domain_error("|lambda| too large for the truncated basis (|lambda|^2 must stay below 4N)");
  }
}

template <class Element>
WignerGrid wigner_impl(int dim, const GridSpec& spec, Element&& rho) {
  spec.check();
  if (spec.frame != Frame::scaled) throw std::invalid_argument("Wigner grids live in the scaled frame");
  WignerGrid grid{spec, std::vector<double>(static_cast<std::size_t>(spec.n_first) * spec.n_second, 0.0), false};
  const double dv = (spec.first_max - spec.first_min) / (spec.n_first - 1);
  const double du = (spec.second_max - spec.second_min) / (spec.n_second - 1);
  grid.coarse = dv > 0.5 || du > 0.5;
  const RecurrenceTable table(dim);
  const auto total = static_cast<std::ptrdiff_t>(grid.values.size());
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t idx = 0; idx < total; ++idx) {
    const int i = static_cast<int>(idx / spec.n_second);
    const int j = static_cast<int>(idx % spec.n_second);
    const cdouble beta(spec.first_at(i), spec.second_at(j));
    grid.values[idx] = 2.0 / std::numbers::pi * displaced_trace(dim, 2.0 * beta, true, table, rho).real();
  }
  return grid;
}

}  // namespace

void displacement_band(double x, int d, std::span<double> out) {
  if (d < 0 || !(x >= 0)) throw std::invalid_argument("displacement band needs d >= 0 and x >= 0");
  const int count = static_cast<int>(out.size());
  if (count == 0) return;
  if (x == 0.0) {
    std::fill(out.begin(), out.end(), d == 0 ? 1.0 : 0.0);
    return;
  }
  const RecurrenceTable table(0);
  std::vector<double> g(out.size());
  std::vector<double> scale_at(out.size());
  double applied = 0.0;  // total log growth of the scale so far
  const double base = walk_band(
      x, d, count, table,
      [&](int m, double v) {
        g[m] = v;
        scale_at[m] = applied;
      },
      [&](double f) { applied -= std::log(f); });
  // base includes every rescaling; keep only those made before m was visited
  for (int m = 0; m < count; ++m) {
    const double log_h = base - applied + scale_at[m];
    out[m] = g[m] == 0.0 ? 0.0 : g[m] * std::exp(log_h);
  }
}

CharFnValue char_fn_from_state(const DensityOperator& rho, cdouble lambda) {
  check_lambda(rho.dim(), lambda);
  if (lambda == cdouble(0.0, 0.0)) return {lambda, rho.trace()};
  const Eigen::MatrixXcd& m = rho.matrix();
  const RecurrenceTable table(0);
  return {lambda, displaced_trace(rho.dim(), lambda, false, table, [&](int r, int c) { return m(r, c); })};
}

CharFnValue char_fn_from_state(const PureState& psi, cdouble lambda) {
  check_lambda(psi.dim(), lambda);
  if (lambda == cdouble(0.0, 0.0)) return {lambda, psi.norm_squared()};
  const Eigen::VectorXcd& a = psi.amplitudes();
  const RecurrenceTable table(0);
  return {lambda,
          displaced_trace(psi.dim(), lambda, false, table, [&](int r, int c) { return a(r) * std::conj(a(c)); })};
}

double WignerGrid::integral() const {
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum * spec.cell_area();
}

double WignerGrid::min() const { return *std::min_element(values.begin(), values.end()); }
double WignerGrid::max() const { return *std::max_element(values.begin(), values.end()); }

WignerGrid wigner(const DensityOperator& rho, const GridSpec& spec) {
  const Eigen::MatrixXcd& m = rho.matrix();
  return wigner_impl(rho.dim(), spec, [&](int r, int c) { return m(r, c); });
}

WignerGrid wigner(const PureState& psi, const GridSpec& spec) {
  const Eigen::VectorXcd& a = psi.amplitudes();
  return wigner_impl(psi.dim(), spec, [&](int r, int c) { return a(r) * std::conj(a(c)); });
}

double support_fraction(std::span<const double> values, double fraction) {
  if (values.empty()) throw std::invalid_argument("support fraction of an empty grid");
  const double peak = *std::max_element(values.begin(), values.end());
  const double cut = fraction * peak;
  std::size_t above = 0;
  for (double v : values) above += v > cut ? 1 : 0;
  return static_cast<double>(above) / static_cast<double>(values.size());
}

}  // namespace kho
