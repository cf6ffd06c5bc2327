#pragma once

#include <cmath>
#include <optional>
#include <string>

#include "spdcmux/fock.hpp"

namespace spdcmux::spdc {

// Calibration constant k in lambda = k * sqrt(pump_power_mw / m), chosen so
// that lambda(700 mW, m = 2) = 0.1. The physical map from pump power to the
// squeezing parameter is setup-specific; this default is a plausible
// operating point, not a measured value.
inline double default_calib_k() { return 0.1 / std::sqrt(350.0); }

// Pulsed pair-source description. `lambda` is the per-pulse interaction
// parameter (the product of interaction strength and time); the multiplex
// factor m raises the effective repetition rate to m * rep_rate_hz while the
// calibration divides per-pulse pump energy by m. Analytic rate formulas are
// expressed in the m = 1 equivalent lambda (equal average power), which keeps
// the n = 1 term exactly invariant under multiplexing.
struct SourceParams {
  double lambda = 0.0;      // per-pulse value, in [0, 1)
  double rep_rate_hz = 76e6;
  int multiplex_factor = 1;
  std::optional<double> pump_power_mw;
  double calib_k = default_calib_k();
  double interaction_time_s = 1e-13;  // documentation only; lambda carries the physics

  static SourceParams from_lambda(double lambda, double rep_rate_hz = 76e6, int m = 1);
  static SourceParams from_power(double pump_power_mw, double rep_rate_hz = 76e6, int m = 1,
                                 double calib_k = default_calib_k());

  // lambda of the equal-average-power single-pulse (m = 1) source.
  double lambda_m1() const;
  void validate() const;
};

// Two passes through the same crystal (or two crystals) pumped by the same
// pulse train: forward and backward emission with independent strengths.
struct DualPassParams {
  SourceParams forward;
  SourceParams backward;

  static DualPassParams symmetric(double lambda, double rep_rate_hz = 76e6, int m = 1);
  void validate() const;  // also checks shared rep rate and multiplex factor
};

struct CoincidenceWindow {
  double window_s = 3e-9;
};

// P(n) = (1 - lambda^2) lambda^(2n), the per-pulse n-pair probability.
double pair_probability_lambda(double lambda, int n);
double pair_probability(const SourceParams& p, int n);

// Joint bucket-detection rate per second for the signal/idler pair,
// R * sum_n (1-(1-eta)^n)^2 P(n) / m^(n-1) with P(n) at the m = 1 lambda.
double coincidence_rate(const SourceParams& p, double eta);
double coincidence_rate(const SourceParams& p, double eta, int n_max);  // tail-checked
double coincidence_rate_term(const SourceParams& p, double eta, int n);

// Single- over double-pair emission, m * eta^2 / ((1-(1-eta)^2)^2 lambda^2).
double snr(const SourceParams& p, double eta);

// Rate of jointly heralding one photon from each pass,
// R * sum_{n1,n2>=1} (1-(1-eta)^n1)^2 (1-(1-eta)^n2)^2 P(n1,n2) / m^(n1+n2-1).
double heralded_joint_rate(const DualPassParams& p, double eta);
double heralded_joint_rate(const DualPassParams& p, double eta, int n_max);
double heralded_joint_rate_term(const DualPassParams& p, double eta, int n1, int n2);

// Truncated two-mode squeezed state sqrt(1-lambda^2) sum_n lambda^n |n,n>.
// Throws TruncationError when the missing tail mass exceeds max_leakage.
fock::FockState generate_spdc_state(const SourceParams& p, const std::string& signal,
                                    const std::string& idler, int truncation,
                                    double max_leakage = 1e-6);

fock::FockState generate_dual_pass_state(const DualPassParams& p, const std::string& a1,
                                         const std::string& b1, const std::string& a2,
                                         const std::string& b2, int truncation,
                                         double max_leakage = 1e-6);

enum class RepRateVerdict { ok, violation };

struct RepRateCheck {
  RepRateVerdict verdict;
  double effective_rate_hz;  // rep_rate_hz * multiplex_factor
  double max_rate_hz;        // 1 / window
};

// The effective repetition rate must not exceed 1 / (coincidence window).
RepRateCheck validate_rep_rate(const SourceParams& p, const CoincidenceWindow& w);

}  // namespace spdcmux::spdc
