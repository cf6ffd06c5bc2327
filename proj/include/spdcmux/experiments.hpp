#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spdcmux/detection.hpp"
#include "spdcmux/optics.hpp"
#include "spdcmux/spdc.hpp"
#include "spdcmux/tomography.hpp"

namespace spdcmux::experiments {

enum class SourceKind { dependent, independent };

struct ScanGrid {
  std::string parameter = "pump_power_mw";
  double min = 1.0;
  double max = 700.0;
  int points = 8;
};

struct HeatmapGrid {
  double eta_min = 0.1;
  double eta_max = 1.0;
  int eta_points = 10;
  int m_max = 10;
  double pump_power_mw = 1530.0;  // "100% of the available pump power"
  int section_m = 2;
  double section_eta = 0.6;
};

struct ExperimentConfig {
  SourceKind source_type = SourceKind::dependent;
  double rep_rate_hz = 76e6;
  std::vector<int> multiplex_factors = {1, 2};
  double calib_k = spdc::default_calib_k();

  optics::PpbsSpec ppbs{0.0, 0.682};
  double detector_efficiency = 0.6;
  double herald_efficiency = 0.6;
  int split_depth = 1;
  double arm_transmission = 0.6;  // the fitted 40% optical loss
  double herald_transmission = 0.6;
  double window_s = 3e-9;
  double distinguishability_overlap = 1.0;

  ScanGrid scan;
  HeatmapGrid heatmap;

  tomo::ProcessFidelityMode pf_mode = tomo::ProcessFidelityMode::chi_overlap;
  int truncation = 6;  // maximum photon pairs per source in state pipelines
  std::uint64_t seed = 12345;
  int workers = 0;  // 0 = available parallelism
  bool svg = false;

  static ExperimentConfig defaults() { return {}; }
  static ExperimentConfig load(const std::string& path);
  static ExperimentConfig from_json_text(const std::string& text, const std::string& origin);

  std::string canonical_json() const;
  std::uint64_t hash() const;
  void validate() const;
};

// Gate-side parameters folded for the scan pipelines. Uniform per-arm optical
// loss commutes with the interferometer and the analysis optics, so it is
// folded into the detection efficiencies; the polarization-dependent gate
// compensation is applied as a real channel inside the pipelines.
struct GateSetup {
  optics::PpbsSpec ppbs{0.0, 2.0 / 3.0};
  double detector_eta = 0.6;
  double herald_eta = 0.6;
  optics::BsConvention convention = optics::BsConvention::symmetric;
};

GateSetup gate_setup(const ExperimentConfig& config);
GateSetup ideal_gate_setup();

// ---- pipeline primitives ------------------------------------------------

// Coincidence probability of the two gate-output bucket detectors for the
// branch with n_a V photons in arm a and n_b in arm b. `distinguishable`
// evolves arm-b photons in a delayed temporal layer.
double vv_branch_coincidence(int n_a, int n_b, const GateSetup& setup, bool distinguishable);

// c_indist is the dip-center rate at wave-packet overlap `overlap`
// (a convex mixture of the interfering and temporally resolved rates).
struct HomPoint {
  double c_dist = 0.0;
  double c_indist = 0.0;
  double visibility = 0.0;
};
HomPoint hom_point_dependent(double lambda_pulse, int pair_cutoff, const GateSetup& setup,
                             double overlap = 1.0);
HomPoint hom_point_independent(double lambda1, double lambda2, int pair_cutoff,
                               const GateSetup& setup, double overlap = 1.0);
double single_pair_vv_visibility(const GateSetup& setup);

// Post-selected single-pair gate action on a two-qubit preparation; trace
// carries the post-selection probability (1/9 for the ideal gate).
tomo::Mat4 single_pair_gate_output(const GateSetup& setup, const Eigen::Matrix2cd& prep0,
                                   const Eigen::Matrix2cd& prep1);
double single_pair_success_probability(const GateSetup& setup, const Eigen::Matrix2cd& prep0,
                                       const Eigen::Matrix2cd& prep1);

// Jones matrix sending |H> to the given preparation polarization.
Eigen::Matrix2cd preparation_jones(tomo::Pol target);

// Expected coincidence probabilities over the 36 analysis settings for a
// dependent source of per-pulse strength lambda prepared per arm.
std::vector<double> cz_setting_probabilities(double lambda_pulse, int pair_cutoff,
                                             const GateSetup& setup,
                                             const Eigen::Matrix2cd& prep0,
                                             const Eigen::Matrix2cd& prep1);

struct CzStatePoint {
  double fidelity = 0.0;
  double tangle = 0.0;
};
CzStatePoint cz_state_point(double lambda_pulse, int pair_cutoff, const GateSetup& setup);
double cz_process_point(double lambda_pulse, int pair_cutoff, const GateSetup& setup,
                        tomo::ProcessFidelityMode mode);

// Single-pair (lambda -> 0) limits used as the emitted small-lambda columns.
CzStatePoint single_pair_cz_state(const GateSetup& setup);
double single_pair_cz_process(const GateSetup& setup, tomo::ProcessFidelityMode mode);

// Smallest pair cutoff whose geometric tail is below `tail_budget`, clamped
// to the configured maximum; throws when the clamp leaks more than 1e-6.
int pair_cutoff_for(double lambda, int truncation_cap, double tail_budget = 1e-8);

// ---- runners ------------------------------------------------------------

struct RunResult {
  std::vector<std::string> files;
  std::string summary;
  bool ok = true;  // `validate` reports violations here
};

RunResult run_pn_ratio(const ExperimentConfig& config, const std::string& out_dir);
RunResult run_hom_scan(const ExperimentConfig& config, const std::string& out_dir);
RunResult run_hom_scan(const ExperimentConfig& config, SourceKind source_type,
                       const std::string& out_dir);
RunResult run_cz_state(const ExperimentConfig& config, const std::string& out_dir);
RunResult run_cz_process(const ExperimentConfig& config, const std::string& out_dir);
RunResult run_vis_heatmap(const ExperimentConfig& config, const std::string& out_dir);
RunResult run_validate(const ExperimentConfig& config, const std::string& out_dir);
RunResult run_tomo_fit(const ExperimentConfig& config, const std::string& counts_csv,
                       const std::string& out_dir);

// Dispatch by subcommand name (tomo-fit is separate: it takes a counts path).
RunResult run_experiment(const ExperimentConfig& config, const std::string& name,
                         const std::string& out_dir);

const char* version_string();

}  // namespace spdcmux::experiments
