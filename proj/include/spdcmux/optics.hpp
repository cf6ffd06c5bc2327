#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "spdcmux/fock.hpp"

namespace spdcmux::optics {

// Beamsplitter phase convention. `symmetric` gives reflection a factor i;
// `rotation` uses the real orthogonal form. All detection statistics computed
// downstream are identical under either choice (asserted by the test suite).
enum class BsConvention { symmetric, rotation };

struct PpbsSpec {
  double eta_h = 0.0;        // intensity reflectivity, horizontal
  double eta_v = 2.0 / 3.0;  // intensity reflectivity, vertical
};

struct WaveplateSpec {
  enum class Kind { half, quarter };
  Kind kind = Kind::half;
  double angle_rad = 0.0;  // fast-axis angle
};

// Two-photon wave-packet overlap gamma in [0, 1]. gamma = 1 means fully
// indistinguishable inputs; gamma = 0 means temporally resolved photons that
// route classically. The Gaussian delay profile is a modeling choice; only
// the endpoints are quantitatively constrained.
struct DistinguishabilityModel {
  double overlap = 1.0;

  static DistinguishabilityModel from_delay(double delay_s, double sigma_s);
};

struct LossChannel {
  std::string mode;
  double transmission = 1.0;
};

// Polarization sub-mode labels for a spatial path.
inline std::string pol_h(const std::string& spatial) { return spatial + ".H"; }
inline std::string pol_v(const std::string& spatial) { return spatial + ".V"; }

fock::ModeUnitary beamsplitter(double reflectivity, const std::string& mode0,
                               const std::string& mode1,
                               BsConvention conv = BsConvention::symmetric);

Eigen::Matrix2cd waveplate_jones(const WaveplateSpec& spec);
fock::ModeUnitary waveplate(const WaveplateSpec& spec, const std::string& spatial_mode);

// Unitary mapping the (H, V) pair of a spatial mode by an arbitrary Jones
// matrix; used for state preparation and analysis rotations.
fock::ModeUnitary polarization_unitary(const Eigen::Matrix2cd& jones,
                                       const std::string& spatial_mode);

// Partially polarizing beamsplitter: independent beamsplitters on the H pair
// and the V pair of two spatial modes.
struct PpbsElement {
  fock::ModeUnitary h_part;
  fock::ModeUnitary v_part;
};
PpbsElement ppbs(const PpbsSpec& spec, const std::string& spatial0, const std::string& spatial1,
                 const fock::ModeRegistry& registry,
                 BsConvention conv = BsConvention::symmetric);
fock::FockState apply_ppbs(const fock::FockState& state, const PpbsElement& element);

// Loss as a beamsplitter to a fresh vacuum ancilla followed by tracing the
// ancilla; returns a density operator.
fock::FockState loss(const fock::FockState& state, const LossChannel& channel,
                     BsConvention conv = BsConvention::symmetric);

// Pure-state variant: couples the mode to a named vacuum ancilla already in
// the registry and leaves the ancilla in place (detectors simply never look
// at it). Equivalent to `loss` for every diagonal click observable.
fock::FockState attach_loss(const fock::FockState& state, const std::string& mode,
                            double transmission, const std::string& ancilla,
                            BsConvention conv = BsConvention::symmetric);

// Post-selected controlled-Z composite: central PPBS plus 1/sqrt(3) amplitude
// compensation on the horizontal component of each arm, modeled as
// polarization-dependent loss. Conditioned on one photon per output arm, the
// single-pair action is diag(1,1,1,-1)/3.
struct CzGate {
  PpbsSpec spec;
  std::string arm0, arm1;
  BsConvention convention = BsConvention::symmetric;

  // Density path: compensation applied as loss channels (ancillas traced).
  fock::FockState apply(const fock::FockState& state) const;
  // Pure path: compensation couples into the two named vacuum ancilla modes.
  fock::FockState apply_keep_ancillas(const fock::FockState& state, const std::string& anc0,
                                      const std::string& anc1) const;
};
CzGate cz_gate(const PpbsSpec& spec, const std::string& arm0, const std::string& arm1,
               BsConvention conv = BsConvention::symmetric);

// ---- partial distinguishability ----------------------------------------
//
// Distinguishable photons are carried in a twin "temporal layer" of each
// interfering mode. Optical elements act identically on both layers and
// detectors are layer-blind, so mixing the layered configurations with
// weights (gamma, 1-gamma) reproduces gamma-interpolated statistics for
// every diagonal click observable.

std::string layer_twin(const std::string& label);  // label of the delayed layer

// Density operator on the layered registry:
//   gamma     * (all photons in layer 0)
// + (1-gamma) * (photons of every mode assigned layer 1 moved to its twin).
fock::FockState apply_distinguishability(const DistinguishabilityModel& model,
                                         const fock::FockState& state,
                                         const std::vector<std::pair<std::string, int>>& layer_of_mode);

// Spec-shaped overload: the second arm of the pair is delayed.
fock::FockState apply_distinguishability(const DistinguishabilityModel& model,
                                         const fock::FockState& state,
                                         const std::pair<std::string, std::string>& mode_pair);

// Applies a unitary to the base labels and, where twins exist in the
// registry, to the twin labels as well.
fock::FockState apply_layered(const fock::FockState& state, const fock::ModeUnitary& u);

// Labels covered by a layer-blind detector on `label` (the label plus its
// twin when registered).
std::vector<std::string> layer_labels(const fock::ModeRegistry& registry, const std::string& label);

}  // namespace spdcmux::optics
