#include "spdcmux/spdc.hpp"

#include <cmath>
#include <sstream>

namespace spdcmux::spdc {

namespace {

constexpr double kTailBound = 1e-12;
constexpr int kHardSeriesCap = 4000;

double click_factor(double eta, int n) {
  return 1.0 - std::pow(1.0 - eta, n);
}

void check_eta(double eta) {
  if (eta < 0.0 || eta > 1.0) throw std::invalid_argument("efficiency must be in [0, 1]");
}

}  // namespace

SourceParams SourceParams::from_lambda(double lambda, double rep_rate_hz, int m) {
  SourceParams p;
  p.lambda = lambda;
  p.rep_rate_hz = rep_rate_hz;
  p.multiplex_factor = m;
  p.validate();
  return p;
}

SourceParams SourceParams::from_power(double pump_power_mw, double rep_rate_hz, int m,
                                      double calib_k) {
  SourceParams p;
  p.pump_power_mw = pump_power_mw;
  p.calib_k = calib_k;
  p.rep_rate_hz = rep_rate_hz;
  p.multiplex_factor = m;
  p.lambda = calib_k * std::sqrt(pump_power_mw / static_cast<double>(m));
  p.validate();
  return p;
}

double SourceParams::lambda_m1() const {
  // Bit-stable with from_power calibration: k*sqrt(P) regardless of m.
  if (pump_power_mw.has_value()) return calib_k * std::sqrt(*pump_power_mw);
  return lambda * std::sqrt(static_cast<double>(multiplex_factor));
}

void SourceParams::validate() const {
  if (!(lambda >= 0.0 && lambda < 1.0)) {
    throw std::invalid_argument("lambda must lie in [0, 1)");
  }
  if (!(rep_rate_hz > 0.0)) throw std::invalid_argument("rep_rate_hz must be positive");
  if (multiplex_factor < 1) throw std::invalid_argument("multiplex_factor must be >= 1");
  if (calib_k <= 0.0) throw std::invalid_argument("calib_k must be positive");
  if (interaction_time_s <= 0.0) throw std::invalid_argument("interaction_time_s must be positive");
  if (pump_power_mw.has_value()) {
    if (*pump_power_mw < 0.0) throw std::invalid_argument("pump_power_mw must be >= 0");
    const double expected = calib_k * std::sqrt(*pump_power_mw / multiplex_factor);
    if (std::abs(expected - lambda) > 1e-12) {
      throw std::invalid_argument("lambda inconsistent with pump power calibration");
    }
  }
}

DualPassParams DualPassParams::symmetric(double lambda, double rep_rate_hz, int m) {
  DualPassParams p;
  p.forward = SourceParams::from_lambda(lambda, rep_rate_hz, m);
  p.backward = SourceParams::from_lambda(lambda, rep_rate_hz, m);
  return p;
}

void DualPassParams::validate() const {
  forward.validate();
  backward.validate();
  if (forward.rep_rate_hz != backward.rep_rate_hz) {
    throw std::invalid_argument("dual-pass passes must share the repetition rate");
  }
  if (forward.multiplex_factor != backward.multiplex_factor) {
    throw std::invalid_argument("dual-pass passes must share the multiplex factor");
  }
}

double pair_probability_lambda(double lambda, int n) {
  if (n < 0) throw std::invalid_argument("pair number must be >= 0");
  if (!(lambda >= 0.0 && lambda < 1.0)) throw std::invalid_argument("lambda must lie in [0, 1)");
  const double l2 = lambda * lambda;
  return (1.0 - l2) * std::pow(l2, n);
}

double pair_probability(const SourceParams& p, int n) {
  p.validate();
  return pair_probability_lambda(p.lambda, n);
}

double coincidence_rate_term(const SourceParams& p, double eta, int n) {
  p.validate();
  check_eta(eta);
  if (n < 1) throw std::invalid_argument("rate terms start at n = 1");
  const double f = click_factor(eta, n);
  const double term = f * f * pair_probability_lambda(p.lambda_m1(), n) /
                      std::pow(static_cast<double>(p.multiplex_factor), n - 1);
  return p.rep_rate_hz * term;
}

double coincidence_rate(const SourceParams& p, double eta, int n_max) {
  p.validate();
  check_eta(eta);
  if (n_max < 1) throw std::invalid_argument("n_max must be >= 1");
  const double lam = p.lambda_m1();
  if (lam >= 1.0) throw std::invalid_argument("m = 1 equivalent lambda must be < 1");
  double sum = 0.0;
  for (int n = 1; n <= n_max; ++n) sum += coincidence_rate_term(p, eta, n);
  // remaining mass is bounded by the bare geometric tail
  const double l2 = lam * lam;
  const double tail = p.rep_rate_hz * std::pow(l2, n_max + 1) / (1.0 - l2);
  if (sum > 0.0 && tail > kTailBound * sum) {
    std::ostringstream os;
    os << "coincidence_rate: series truncation insufficient (tail bound " << tail
       << " vs partial sum " << sum << ")";
    throw TruncationError(os.str());
  }
  return sum;
}

double coincidence_rate(const SourceParams& p, double eta) {
  p.validate();
  check_eta(eta);
  const double lam = p.lambda_m1();
  if (lam == 0.0 || eta == 0.0) return 0.0;
  const double l2 = lam * lam;
  int n_max = 1;
  // choose n_max so the geometric tail is negligible against the n=1 term
  const double lead = eta * eta * (1.0 - l2) * l2;
  while (std::pow(l2, n_max + 1) / (1.0 - l2) > kTailBound * lead && n_max < kHardSeriesCap) {
    ++n_max;
  }
  return coincidence_rate(p, eta, n_max);
}

double snr(const SourceParams& p, double eta) {
  p.validate();
  check_eta(eta);
  const double lam = p.lambda_m1();
  if (lam <= 0.0) throw std::invalid_argument("snr undefined at lambda = 0");
  const double pair2 = 1.0 - (1.0 - eta) * (1.0 - eta);
  return p.multiplex_factor * eta * eta / (pair2 * pair2 * lam * lam);
}

double heralded_joint_rate_term(const DualPassParams& p, double eta, int n1, int n2) {
  p.validate();
  check_eta(eta);
  if (n1 < 1 || n2 < 1) throw std::invalid_argument("joint rate terms start at n = 1");
  const double f1 = click_factor(eta, n1);
  const double f2 = click_factor(eta, n2);
  const double joint = pair_probability_lambda(p.forward.lambda_m1(), n1) *
                       pair_probability_lambda(p.backward.lambda_m1(), n2);
  const double m = static_cast<double>(p.forward.multiplex_factor);
  return p.forward.rep_rate_hz * f1 * f1 * f2 * f2 * joint / std::pow(m, n1 + n2 - 1);
}

double heralded_joint_rate(const DualPassParams& p, double eta, int n_max) {
  p.validate();
  check_eta(eta);
  if (n_max < 1) throw std::invalid_argument("n_max must be >= 1");
  double sum = 0.0;
  for (int n1 = 1; n1 <= n_max; ++n1) {
    for (int n2 = 1; n2 <= n_max; ++n2) {
      sum += heralded_joint_rate_term(p, eta, n1, n2);
    }
  }
  const double l1 = p.forward.lambda_m1();
  const double l2 = p.backward.lambda_m1();
  const double t1 = std::pow(l1 * l1, n_max + 1) / (1.0 - l1 * l1);
  const double t2 = std::pow(l2 * l2, n_max + 1) / (1.0 - l2 * l2);
  const double tail = p.forward.rep_rate_hz * (t1 + t2);
  if (sum > 0.0 && tail > kTailBound * sum) {
    throw TruncationError("heralded_joint_rate: series truncation insufficient");
  }
  return sum;
}

double heralded_joint_rate(const DualPassParams& p, double eta) {
  p.validate();
  check_eta(eta);
  if (p.forward.lambda == 0.0 || p.backward.lambda == 0.0 || eta == 0.0) return 0.0;
  const double lmax = std::max(p.forward.lambda_m1(), p.backward.lambda_m1());
  const double l2 = lmax * lmax;
  int n_max = 1;
  while (std::pow(l2, n_max + 1) / (1.0 - l2) > 1e-16 && n_max < kHardSeriesCap) ++n_max;
  return heralded_joint_rate(p, eta, n_max);
}

fock::FockState generate_spdc_state(const SourceParams& p, const std::string& signal,
                                    const std::string& idler, int truncation,
                                    double max_leakage) {
  p.validate();
  if (truncation < 2) throw std::invalid_argument("SPDC state truncation must be >= 2");
  const double lambda = p.lambda;
  const double l2 = lambda * lambda;
  // missing mass of the geometric series beyond the cutoff
  const double leak = std::pow(l2, truncation + 1);
  if (leak > max_leakage) {
    std::ostringstream os;
    os << "generate_spdc_state: lambda " << lambda << " leaks " << leak
       << " past truncation " << truncation << " (budget " << max_leakage << ")";
    throw TruncationError(os.str());
  }

  fock::ModeRegistry reg = fock::build_registry({{signal, truncation}, {idler, truncation}});
  fock::Vector v = fock::Vector::Zero(static_cast<Eigen::Index>(reg.dim()));
  const double prefactor = std::sqrt(1.0 - l2);
  for (int n = 0; n <= truncation; ++n) {
    const std::size_t idx = reg.basis_index({n, n});
    v[static_cast<Eigen::Index>(idx)] = prefactor * std::pow(lambda, n);
  }
  fock::FockState state = fock::FockState::from_amplitudes(std::move(reg), std::move(v));
  state.add_leakage(leak);
  return state;
}

fock::FockState generate_dual_pass_state(const DualPassParams& p, const std::string& a1,
                                         const std::string& b1, const std::string& a2,
                                         const std::string& b2, int truncation,
                                         double max_leakage) {
  p.validate();
  const fock::FockState pass1 = generate_spdc_state(p.forward, a1, b1, truncation, max_leakage);
  const fock::FockState pass2 = generate_spdc_state(p.backward, a2, b2, truncation, max_leakage);
  return fock::tensor(pass1, pass2);
}

RepRateCheck validate_rep_rate(const SourceParams& p, const CoincidenceWindow& w) {
  p.validate();
  if (!(w.window_s > 0.0)) throw std::invalid_argument("coincidence window must be positive");
  RepRateCheck check;
  check.effective_rate_hz = p.rep_rate_hz * p.multiplex_factor;
  check.max_rate_hz = 1.0 / w.window_s;
  check.verdict = check.effective_rate_hz <= check.max_rate_hz ? RepRateVerdict::ok
                                                               : RepRateVerdict::violation;
  return check;
}

}  // namespace spdcmux::spdc
