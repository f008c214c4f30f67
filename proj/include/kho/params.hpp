#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace kho {

/// Raw physical parameters, hbar = 1.
struct PhysicalParams {
  double mass = 1.0;
  double trap_frequency = 1.0;      // nu
  double kick_wavevector = 1.0;     // k
  double kick_amplitude = 0.0;      // A
  double kick_period = 1.0;         // tau
  double dissipation_rate = 0.0;    // Gamma
  double diffusion_rate = 0.0;      // gamma, quantum reservoir
  double classical_diffusion = 0.0; // script D, momentum diffusion of the classical model
};

/// Which of the two kick/rotation pairs was specified by the user.
enum class KickFrame { conservative, dissipative };

enum class EnvironmentKind { none, dissipative, diffusive };

std::string to_string(EnvironmentKind env);
EnvironmentKind parse_environment(std::string_view name);

/// Dimensionless knobs shared by every model.
///
/// `kick`/`angle` are K and alpha = nu tau. `damped_kick`/`damped_angle` are
/// K' and alpha-bar = Omega tau, with Omega = sqrt(nu^2 - Gamma^2/4).
/// Without damping both pairs coincide.
struct DimensionlessParams {
  double kick = 0.0;
  double damped_kick = 0.0;
  double angle = 0.0;
  double damped_angle = 0.0;
  std::optional<int> symmetry;  // q, when an angle came from 2 pi / q
  double eta = 0.5;
  double quantum_kick = 0.0;  // K / (2 eta^2)
  double half_damping = 0.0;  // Gamma tau / 2
  double diffusion = 0.0;     // D = gamma tau / 2

  double damping_factor() const;        // exp(-Gamma tau / 2)
  double transmissivity() const;        // exp(-Gamma tau)
  double projected_kick() const;        // K sin(alpha)
  double projected_damped_kick() const; // K' sin(alpha-bar)
  double quantum_damped_kick() const;   // K' / (2 eta^2)
};

/// Input for building DimensionlessParams from knobs instead of physical units.
struct DimensionlessKnobs {
  double kick = 0.0;
  std::optional<double> angle;
  std::optional<int> symmetry;  // wins over `angle` if both are set
  double eta = 0.5;
  double half_damping = 0.0;
  double diffusion = 0.0;
  KickFrame frame = KickFrame::conservative;
};

double angle_for_symmetry(int q);

DimensionlessParams derive_dimensionless(const PhysicalParams& p);
DimensionlessParams make_dimensionless(const DimensionlessKnobs& knobs);

/// Same K', alpha-bar, eta and D with a different damping; K and alpha follow.
DimensionlessParams with_half_damping(const DimensionlessParams& d, double half_damping);
DimensionlessParams with_eta(const DimensionlessParams& d, double eta);
DimensionlessParams with_diffusion(const DimensionlessParams& d, double diffusion);

/// Throws std::invalid_argument when a field is out of its domain or the
/// derived fields disagree with the primary ones.
void validate(const DimensionlessParams& d);

enum class Frame { raw, dissipative, scaled };

std::string to_string(Frame f);

struct ClassicalState {
  double first = 0.0;   // v-type coordinate
  double second = 0.0;  // u-type coordinate
  Frame frame = Frame::raw;
};

/// Converts between a physical frame and the scaled frame (v, u) / (2 eta).
/// The scaled frame pairs with whichever physical frame the map runs in, so
/// raw <-> dissipative is rejected rather than guessed.
ClassicalState scale_state(const ClassicalState& s, const DimensionlessParams& d, Frame target);

}  // namespace kho
