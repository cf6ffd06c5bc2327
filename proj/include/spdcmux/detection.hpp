#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "spdcmux/fock.hpp"
#include "spdcmux/spdc.hpp"

namespace spdcmux::detect {

struct DetectorParams {
  double efficiency = 0.6;       // detector times optical efficiency
  bool number_resolving = false;
  int split_depth = 0;           // spatial multiplexing tree depth
};

// Diagonal bucket-detector effects over occupations 0..truncation.
struct BucketEffects {
  Eigen::VectorXd click;
  Eigen::VectorXd no_click;
};
BucketEffects bucket_povm(double eta, int truncation);

// A layer/polarization-blind bucket detector: it clicks unless every photon
// in every covered mode goes undetected. Covering several modes with one
// detector folds polarization-dependent transmission into per-mode
// efficiencies.
struct DetectorCover {
  std::string id;
  std::vector<std::pair<std::string, double>> mode_etas;
};

DetectorCover cover_mode(const std::string& id, const std::string& label, double eta);
DetectorCover cover_modes(const std::string& id,
                          const std::vector<std::string>& labels, double eta);

// Probability that every listed detector clicks.
double coincidence_probability(const fock::FockState& state,
                               const std::vector<DetectorCover>& detectors);
double coincidence_probability(const fock::FockState& state,
                               const std::map<std::string, DetectorParams>& detectors);

struct ClickOutcome {
  std::map<std::string, int> pattern;  // detector id -> 0/1
  double probability = 0.0;
};
// Full outcome distribution over the 2^d click patterns; sums to 1.
std::vector<ClickOutcome> click_pattern_probabilities(const fock::FockState& state,
                                                      const std::vector<DetectorCover>& detectors);

struct HeraldCondition {
  enum class Kind { bucket_click, bucket_no_click, resolved_count };
  Kind kind = Kind::bucket_click;
  double efficiency = 1.0;
  int count = 1;  // for resolved_count

  static HeraldCondition click(double eta) { return {Kind::bucket_click, eta, 1}; }
  static HeraldCondition no_click(double eta) { return {Kind::bucket_no_click, eta, 1}; }
  static HeraldCondition resolved(int n, double eta = 1.0) {
    return {Kind::resolved_count, eta, n};
  }
};

struct Conditional {
  std::optional<fock::FockState> state;  // normalized density on kept modes
  double probability = 0.0;
};

// Applies the herald POVM elements on the heralded modes, traces everything
// but `keep`, and renormalizes. Zero-probability heralds yield an empty state.
Conditional conditional_state(const fock::FockState& state,
                              const std::map<std::string, HeraldCondition>& herald,
                              const std::vector<std::string>& keep);

// Post-selects on exactly one photon in each arm's (H, V) pair and maps the
// surviving coherences to a two-qubit density matrix in the (HH, HV, VH, VV)
// basis with H = 0, V = 1. Ancilla and other modes are traced.
struct TwoQubitConditional {
  Eigen::Matrix4cd rho;  // normalized
  double probability = 0.0;
};
TwoQubitConditional two_qubit_conditional(const fock::FockState& state, const std::string& arm0,
                                          const std::string& arm1);

// Exact click-count distribution of n photons entering a balanced tree of
// 2^depth bucket detectors with per-photon efficiency eta.
double tree_click_probability(int clicks, int n, int depth, double eta);
std::vector<double> tree_click_distribution(const std::vector<double>& number_dist, int depth,
                                            double eta);
std::vector<double> multiplexed_count_probability(const fock::FockState& state,
                                                  const std::string& mode, int depth, double eta);

// Per-second-free ratio of (>= 2 clicks on each arm's tree) events to
// (exactly 1 click on each arm) events for the pair source. Linear in
// per-pulse pump power for small lambda.
double four_two_ratio(const spdc::SourceParams& p, const DetectorParams& det, int depth);
// Dual-pass overload: evaluated on the forward-pass arms (the backward pass
// is independent and traces out).
double four_two_ratio(const spdc::DualPassParams& p, const DetectorParams& det, int depth);

}  // namespace spdcmux::detect
