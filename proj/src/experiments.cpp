#include "spdcmux/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "spdcmux/io.hpp"

namespace spdcmux::experiments {

namespace {

using fock::FockState;
using fock::ModeRegistry;
using tomo::Mat4;

constexpr double kLeakageBudget = 1e-6;
constexpr double kCountScale = 1e6;

// ---- config -------------------------------------------------------------

SourceKind source_kind_from(const std::string& s, const std::string& key) {
  if (s == "dependent") return SourceKind::dependent;
  if (s == "independent") return SourceKind::independent;
  throw ConfigError(key + ": expected 'dependent' or 'independent', got '" + s + "'");
}

std::string source_kind_name(SourceKind k) {
  return k == SourceKind::dependent ? "dependent" : "independent";
}

tomo::ProcessFidelityMode pf_mode_from(const std::string& s, const std::string& key) {
  if (s == "chi-overlap") return tomo::ProcessFidelityMode::chi_overlap;
  if (s == "choi-uhlmann") return tomo::ProcessFidelityMode::choi_uhlmann;
  throw ConfigError(key + ": expected 'chi-overlap' or 'choi-uhlmann', got '" + s + "'");
}

std::string pf_mode_name(tomo::ProcessFidelityMode m) {
  return m == tomo::ProcessFidelityMode::chi_overlap ? "chi-overlap" : "choi-uhlmann";
}

template <class T>
T get_field(const nlohmann::json& j, const std::string& section, const std::string& key,
            const T& fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(section.empty() ? key + ": " + e.what()
                                      : section + "." + key + ": " + e.what());
  }
}

template <class T>
T require_field(const nlohmann::json& j, const std::string& section, const std::string& key) {
  if (!j.contains(key)) {
    throw ConfigError((section.empty() ? key : section + "." + key) +
                      ": missing required field");
  }
  return get_field<T>(j, section, key, T{});
}

void parallel_for(int count, int workers, const std::function<void(int)>& body) {
  if (workers <= 0) workers = static_cast<int>(std::thread::hardware_concurrency());
  if (workers < 1) workers = 1;
  workers = std::min(workers, count);
  if (workers <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      while (!failed.load()) {
        const int i = next.fetch_add(1);
        if (i >= count) break;
        try {
          body(i);
        } catch (...) {
          std::scoped_lock lock(error_mutex);
          if (!error) error = std::current_exception();
          failed.store(true);
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

int effective_cap(int n) { return std::max(1, n); }

}  // namespace

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return from_json_text(buffer.str(), path);
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text,
                                                  const std::string& origin) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    // report the line of the offending byte
    std::size_t line = 1;
    for (std::size_t i = 0; i < std::min(e.byte, text.size()); ++i) {
      if (text[i] == '\n') ++line;
    }
    throw ConfigError(origin + ":" + std::to_string(line) + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError(origin + ": config must be a JSON object");

  ExperimentConfig c;
  if (j.contains("source")) {
    const auto& s = j.at("source");
    c.source_type = source_kind_from(get_field<std::string>(s, "source", "type", "dependent"),
                                     "source.type");
    c.rep_rate_hz = get_field<double>(s, "source", "rep_rate_hz", c.rep_rate_hz);
    c.multiplex_factors =
        get_field<std::vector<int>>(s, "source", "multiplex_factors", c.multiplex_factors);
    c.calib_k = get_field<double>(s, "source", "calib_k", c.calib_k);
  }
  if (j.contains("ppbs")) {
    const auto& s = j.at("ppbs");
    c.ppbs.eta_h = get_field<double>(s, "ppbs", "eta_h", c.ppbs.eta_h);
    c.ppbs.eta_v = get_field<double>(s, "ppbs", "eta_v", c.ppbs.eta_v);
  }
  if (j.contains("detectors")) {
    const auto& s = j.at("detectors");
    c.detector_efficiency = get_field<double>(s, "detectors", "efficiency", c.detector_efficiency);
    c.herald_efficiency =
        get_field<double>(s, "detectors", "herald_efficiency", c.herald_efficiency);
    c.split_depth = get_field<int>(s, "detectors", "split_depth", c.split_depth);
  }
  if (j.contains("loss")) {
    const auto& s = j.at("loss");
    c.arm_transmission = get_field<double>(s, "loss", "arm_transmission", c.arm_transmission);
    c.herald_transmission =
        get_field<double>(s, "loss", "herald_transmission", c.herald_transmission);
  }
  c.window_s = get_field<double>(j, "", "window_s", c.window_s);
  if (j.contains("distinguishability")) {
    c.distinguishability_overlap = get_field<double>(j.at("distinguishability"),
                                                     "distinguishability", "overlap",
                                                     c.distinguishability_overlap);
  }
  if (j.contains("scan")) {
    const auto& s = j.at("scan");
    c.scan.parameter = require_field<std::string>(s, "scan", "parameter");
    c.scan.min = require_field<double>(s, "scan", "min");
    c.scan.max = require_field<double>(s, "scan", "max");
    c.scan.points = require_field<int>(s, "scan", "points");
  }
  if (j.contains("heatmap")) {
    const auto& s = j.at("heatmap");
    c.heatmap.eta_min = get_field<double>(s, "heatmap", "eta_min", c.heatmap.eta_min);
    c.heatmap.eta_max = get_field<double>(s, "heatmap", "eta_max", c.heatmap.eta_max);
    c.heatmap.eta_points = get_field<int>(s, "heatmap", "eta_points", c.heatmap.eta_points);
    c.heatmap.m_max = get_field<int>(s, "heatmap", "m_max", c.heatmap.m_max);
    c.heatmap.pump_power_mw =
        get_field<double>(s, "heatmap", "pump_power_mw", c.heatmap.pump_power_mw);
    c.heatmap.section_m = get_field<int>(s, "heatmap", "section_m", c.heatmap.section_m);
    c.heatmap.section_eta = get_field<double>(s, "heatmap", "section_eta", c.heatmap.section_eta);
  }
  c.pf_mode = pf_mode_from(
      get_field<std::string>(j, "", "process_fidelity_mode", pf_mode_name(c.pf_mode)),
      "process_fidelity_mode");
  c.truncation = get_field<int>(j, "", "truncation", c.truncation);
  c.seed = get_field<std::uint64_t>(j, "", "seed", c.seed);
  c.workers = get_field<int>(j, "", "workers", c.workers);
  c.svg = get_field<bool>(j, "", "svg", c.svg);

  c.validate();
  return c;
}

void ExperimentConfig::validate() const {
  if (scan.points < 2) throw ConfigError("scan.points: grid needs at least 2 points");
  if (!(scan.min >= 0.0) || !(scan.max > scan.min)) {
    throw ConfigError("scan: need 0 <= min < max");
  }
  if (scan.parameter != "pump_power_mw") {
    throw ConfigError("scan.parameter: only 'pump_power_mw' scans are defined");
  }
  if (multiplex_factors.empty()) throw ConfigError("source.multiplex_factors: must not be empty");
  for (const int m : multiplex_factors) {
    if (m < 1) throw ConfigError("source.multiplex_factors: factors must be >= 1");
  }
  if (!(rep_rate_hz > 0.0)) throw ConfigError("source.rep_rate_hz: must be positive");
  if (!(calib_k > 0.0)) throw ConfigError("source.calib_k: must be positive");
  auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!in01(ppbs.eta_h) || !in01(ppbs.eta_v)) throw ConfigError("ppbs: reflectivities in [0, 1]");
  if (!in01(detector_efficiency) || !in01(herald_efficiency)) {
    throw ConfigError("detectors: efficiencies in [0, 1]");
  }
  if (split_depth < 1) throw ConfigError("detectors.split_depth: must be >= 1");
  if (!in01(arm_transmission) || !in01(herald_transmission)) {
    throw ConfigError("loss: transmissions in [0, 1]");
  }
  if (!(window_s > 0.0)) throw ConfigError("window_s: must be positive");
  if (!in01(distinguishability_overlap)) {
    throw ConfigError("distinguishability.overlap: must be in [0, 1]");
  }
  if (heatmap.eta_points < 2 || !(heatmap.eta_max > heatmap.eta_min) ||
      !in01(heatmap.eta_min) || !in01(heatmap.eta_max)) {
    throw ConfigError("heatmap: need 2+ eta points with 0 <= eta_min < eta_max <= 1");
  }
  if (heatmap.m_max < 1 || heatmap.section_m < 1 || heatmap.section_m > heatmap.m_max) {
    throw ConfigError("heatmap: multiplex range invalid");
  }
  if (!(heatmap.pump_power_mw > 0.0)) throw ConfigError("heatmap.pump_power_mw: must be positive");
  if (truncation < 1) throw ConfigError("truncation: must be >= 1");
  if (workers < 0) throw ConfigError("workers: must be >= 0");
}

std::string ExperimentConfig::canonical_json() const {
  nlohmann::json j;
  j["source"]["type"] = source_kind_name(source_type);
  j["source"]["rep_rate_hz"] = rep_rate_hz;
  j["source"]["multiplex_factors"] = multiplex_factors;
  j["source"]["calib_k"] = calib_k;
  j["ppbs"]["eta_h"] = ppbs.eta_h;
  j["ppbs"]["eta_v"] = ppbs.eta_v;
  j["detectors"]["efficiency"] = detector_efficiency;
  j["detectors"]["herald_efficiency"] = herald_efficiency;
  j["detectors"]["split_depth"] = split_depth;
  j["loss"]["arm_transmission"] = arm_transmission;
  j["loss"]["herald_transmission"] = herald_transmission;
  j["window_s"] = window_s;
  j["distinguishability"]["overlap"] = distinguishability_overlap;
  j["scan"]["parameter"] = scan.parameter;
  j["scan"]["min"] = scan.min;
  j["scan"]["max"] = scan.max;
  j["scan"]["points"] = scan.points;
  j["heatmap"]["eta_min"] = heatmap.eta_min;
  j["heatmap"]["eta_max"] = heatmap.eta_max;
  j["heatmap"]["eta_points"] = heatmap.eta_points;
  j["heatmap"]["m_max"] = heatmap.m_max;
  j["heatmap"]["pump_power_mw"] = heatmap.pump_power_mw;
  j["heatmap"]["section_m"] = heatmap.section_m;
  j["heatmap"]["section_eta"] = heatmap.section_eta;
  j["process_fidelity_mode"] = pf_mode_name(pf_mode);
  j["truncation"] = truncation;
  j["seed"] = seed;
  // workers and svg steer execution, not results, and stay out of the hash
  return j.dump();
}

std::uint64_t ExperimentConfig::hash() const { return io::fnv1a64(canonical_json()); }

GateSetup gate_setup(const ExperimentConfig& config) {
  GateSetup s;
  s.ppbs = config.ppbs;
  s.detector_eta = config.detector_efficiency * config.arm_transmission;
  s.herald_eta = config.herald_efficiency * config.herald_transmission;
  return s;
}

GateSetup ideal_gate_setup() {
  GateSetup s;
  s.ppbs = {0.0, 2.0 / 3.0};
  s.detector_eta = 1.0;
  s.herald_eta = 1.0;
  return s;
}

int pair_cutoff_for(double lambda, int truncation_cap, double tail_budget) {
  if (lambda <= 0.0) return 1;
  const double l2 = lambda * lambda;
  // branch n + 1 contributes ~ lambda^(2n) relative to the single-pair
  // signal, which is what normalized observables resolve
  int n = 1;
  while (std::pow(l2, n) > tail_budget && n < truncation_cap) ++n;
  const double tail = std::pow(l2, n);
  if (tail > kLeakageBudget) {
    std::ostringstream os;
    os << "pair truncation " << truncation_cap << " leaves a relative tail of " << tail
       << " at lambda " << lambda;
    throw NumericalError(os.str());
  }
  return n;
}

// ---- pipeline primitives --------------------------------------------------

double vv_branch_coincidence(int n_a, int n_b, const GateSetup& setup, bool distinguishable) {
  const std::string a = "a.V";
  const std::string b = "b.V";
  if (!distinguishable) {
    const int cap = effective_cap(n_a + n_b);
    ModeRegistry reg = fock::build_registry({{a, cap}, {b, cap}});
    FockState state = FockState::basis(std::move(reg), {n_a, n_b});
    state = fock::apply_mode_unitary(
        state, optics::beamsplitter(setup.ppbs.eta_v, a, b, setup.convention));
    return detect::coincidence_probability(
        state, std::vector<detect::DetectorCover>{
                   detect::cover_mode("a", a, setup.detector_eta),
                   detect::cover_mode("b", b, setup.detector_eta)});
  }
  // arm-b photons ride in the delayed layer; the splitter acts per layer
  const std::string a1 = optics::layer_twin(a);
  const std::string b1 = optics::layer_twin(b);
  const int cap0 = effective_cap(n_a);
  const int cap1 = effective_cap(n_b);
  ModeRegistry reg = fock::build_registry({{a, cap0}, {b, cap0}, {a1, cap1}, {b1, cap1}});
  FockState state = FockState::basis(std::move(reg), {n_a, 0, 0, n_b});
  state = optics::apply_layered(
      state, optics::beamsplitter(setup.ppbs.eta_v, a, b, setup.convention));
  return detect::coincidence_probability(
      state, std::vector<detect::DetectorCover>{
                 detect::cover_modes("a", {a, a1}, setup.detector_eta),
                 detect::cover_modes("b", {b, b1}, setup.detector_eta)});
}

HomPoint hom_point_dependent(double lambda_pulse, int pair_cutoff, const GateSetup& setup,
                             double overlap) {
  HomPoint point;
  for (int n = 1; n <= pair_cutoff; ++n) {
    const double w = spdc::pair_probability_lambda(lambda_pulse, n);
    point.c_indist += w * vv_branch_coincidence(n, n, setup, false);
    point.c_dist += w * vv_branch_coincidence(n, n, setup, true);
  }
  point.c_indist = overlap * point.c_indist + (1.0 - overlap) * point.c_dist;
  point.visibility = tomo::hom_visibility(point.c_dist, point.c_indist).visibility;
  return point;
}

HomPoint hom_point_independent(double lambda1, double lambda2, int pair_cutoff,
                               const GateSetup& setup, double overlap) {
  HomPoint point;
  std::vector<double> w1(static_cast<std::size_t>(pair_cutoff) + 1, 0.0);
  std::vector<double> w2 = w1;
  for (int n = 1; n <= pair_cutoff; ++n) {
    const double herald1 = 1.0 - std::pow(1.0 - setup.herald_eta, n);
    const double herald2 = herald1;
    w1[static_cast<std::size_t>(n)] = spdc::pair_probability_lambda(lambda1, n) * herald1;
    w2[static_cast<std::size_t>(n)] = spdc::pair_probability_lambda(lambda2, n) * herald2;
  }
  for (int n1 = 1; n1 <= pair_cutoff; ++n1) {
    for (int n2 = 1; n2 <= pair_cutoff; ++n2) {
      const double w = w1[static_cast<std::size_t>(n1)] * w2[static_cast<std::size_t>(n2)];
      if (w == 0.0) continue;
      point.c_indist += w * vv_branch_coincidence(n1, n2, setup, false);
      point.c_dist += w * vv_branch_coincidence(n1, n2, setup, true);
    }
  }
  point.c_indist = overlap * point.c_indist + (1.0 - overlap) * point.c_dist;
  point.visibility = tomo::hom_visibility(point.c_dist, point.c_indist).visibility;
  return point;
}

double single_pair_vv_visibility(const GateSetup& setup) {
  const double c_i = vv_branch_coincidence(1, 1, setup, false);
  const double c_d = vv_branch_coincidence(1, 1, setup, true);
  return tomo::hom_visibility(c_d, c_i).visibility;
}

Eigen::Matrix2cd preparation_jones(tomo::Pol target) {
  const Eigen::Vector2cd k = tomo::pol_ket(target);
  Eigen::Vector2cd perp;
  perp << -std::conj(k(1)), std::conj(k(0));
  Eigen::Matrix2cd u;
  u.col(0) = k;
  u.col(1) = perp;
  return u;
}

namespace {

// analysis rotation sending the measured polarization to H
Eigen::Matrix2cd analysis_jones(tomo::Pol setting) {
  return preparation_jones(setting).adjoint();
}

struct GateBranch {
  FockState state;  // gate output with compensation ancillas attached
};

// n-pair dependent-source branch pushed through preparation, PPBS and
// H-arm compensation
GateBranch dependent_gate_branch(int n, const GateSetup& setup, const Eigen::Matrix2cd& prep0,
                                 const Eigen::Matrix2cd& prep1) {
  const int pol_cap = effective_cap(2 * n);
  const int h_cap = setup.ppbs.eta_h == 0.0 ? effective_cap(n) : pol_cap;
  ModeRegistry reg = fock::build_registry({{"a.H", pol_cap},
                                           {"a.V", pol_cap},
                                           {"b.H", pol_cap},
                                           {"b.V", pol_cap},
                                           {"a.cmp", h_cap},
                                           {"b.cmp", h_cap}});
  FockState state = FockState::basis(std::move(reg), {n, 0, n, 0, 0, 0});
  state = fock::apply_mode_unitary(state, optics::polarization_unitary(prep0, "a"));
  state = fock::apply_mode_unitary(state, optics::polarization_unitary(prep1, "b"));
  const optics::CzGate gate = optics::cz_gate(setup.ppbs, "a", "b", setup.convention);
  state = gate.apply_keep_ancillas(state, "a.cmp", "b.cmp");
  if (state.leakage() > kLeakageBudget) {
    throw NumericalError("gate pipeline leaked probability mass past the truncation");
  }
  return {std::move(state)};
}

std::vector<double> branch_setting_probabilities(const GateBranch& branch,
                                                 const GateSetup& setup) {
  std::vector<double> probs;
  probs.reserve(36);
  for (const tomo::Pol s1 : tomo::all_pols()) {
    const FockState rotated_a =
        fock::apply_mode_unitary(branch.state, optics::polarization_unitary(analysis_jones(s1), "a"));
    for (const tomo::Pol s2 : tomo::all_pols()) {
      const FockState rotated =
          fock::apply_mode_unitary(rotated_a, optics::polarization_unitary(analysis_jones(s2), "b"));
      probs.push_back(detect::coincidence_probability(
          rotated, std::vector<detect::DetectorCover>{
                       detect::cover_mode("a", "a.H", setup.detector_eta),
                       detect::cover_mode("b", "b.H", setup.detector_eta)}));
    }
  }
  return probs;
}

}  // namespace

std::vector<double> cz_setting_probabilities(double lambda_pulse, int pair_cutoff,
                                             const GateSetup& setup,
                                             const Eigen::Matrix2cd& prep0,
                                             const Eigen::Matrix2cd& prep1) {
  std::vector<double> total(36, 0.0);
  for (int n = 1; n <= pair_cutoff; ++n) {
    const double w = spdc::pair_probability_lambda(lambda_pulse, n);
    const GateBranch branch = dependent_gate_branch(n, setup, prep0, prep1);
    const std::vector<double> probs = branch_setting_probabilities(branch, setup);
    for (std::size_t k = 0; k < total.size(); ++k) total[k] += w * probs[k];
  }
  return total;
}

tomo::Mat4 single_pair_gate_output(const GateSetup& setup, const Eigen::Matrix2cd& prep0,
                                   const Eigen::Matrix2cd& prep1) {
  const GateBranch branch = dependent_gate_branch(1, setup, prep0, prep1);
  const detect::TwoQubitConditional cond = detect::two_qubit_conditional(branch.state, "a", "b");
  return cond.probability * cond.rho;
}

double single_pair_success_probability(const GateSetup& setup, const Eigen::Matrix2cd& prep0,
                                       const Eigen::Matrix2cd& prep1) {
  const GateBranch branch = dependent_gate_branch(1, setup, prep0, prep1);
  return detect::two_qubit_conditional(branch.state, "a", "b").probability;
}

namespace {

tomo::TomographyResult reconstruct_from_probabilities(const std::vector<double>& probs,
                                                      const std::optional<Mat4>& target) {
  tomo::MeasurementSet set = tomo::MeasurementSet::overcomplete36();
  set.counts.resize(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) set.counts[i] = probs[i] * kCountScale;
  return tomo::mle_reconstruct(set, target);
}

}  // namespace

CzStatePoint cz_state_point(double lambda_pulse, int pair_cutoff, const GateSetup& setup) {
  const Eigen::Matrix2cd prep_d = preparation_jones(tomo::Pol::D);
  const std::vector<double> probs =
      cz_setting_probabilities(lambda_pulse, pair_cutoff, setup, prep_d, prep_d);
  const tomo::TomographyResult fit =
      reconstruct_from_probabilities(probs, tomo::density(tomo::bell_hd_va_ket()));
  return {fit.fidelity, fit.tangle};
}

CzStatePoint single_pair_cz_state(const GateSetup& setup) {
  const Eigen::Matrix2cd prep_d = preparation_jones(tomo::Pol::D);
  Mat4 out = single_pair_gate_output(setup, prep_d, prep_d);
  const double trace = out.trace().real();
  if (trace <= 0.0) throw NumericalError("single-pair gate output has zero success probability");
  out /= trace;
  return {tomo::fidelity(out, tomo::density(tomo::bell_hd_va_ket())), tomo::tangle(out)};
}

double cz_process_point(double lambda_pulse, int pair_cutoff, const GateSetup& setup,
                        tomo::ProcessFidelityMode mode) {
  std::vector<Mat4> preparations;
  std::vector<Mat4> outputs;
  preparations.reserve(16);
  outputs.reserve(16);
  for (const tomo::Pol p1 : tomo::preparation_pols()) {
    for (const tomo::Pol p2 : tomo::preparation_pols()) {
      const Eigen::Matrix2cd u1 = preparation_jones(p1);
      const Eigen::Matrix2cd u2 = preparation_jones(p2);
      const Eigen::Vector2cd k1 = tomo::pol_ket(p1);
      const Eigen::Vector2cd k2 = tomo::pol_ket(p2);
      tomo::Vec4 joint;
      joint << k1(0) * k2(0), k1(0) * k2(1), k1(1) * k2(0), k1(1) * k2(1);
      preparations.push_back(tomo::density(joint));

      const std::vector<double> probs =
          cz_setting_probabilities(lambda_pulse, pair_cutoff, setup, u1, u2);
      const tomo::TomographyResult fit = reconstruct_from_probabilities(probs, std::nullopt);
      double weight = 0.0;
      for (const double p : probs) weight += p;
      outputs.push_back(weight / 9.0 * fit.rho);
    }
  }
  std::size_t k = 0;
  const tomo::GateChannel channel = [&](const Mat4&) { return outputs[k++]; };
  return tomo::process_tomography(channel, preparations, mode).process_fidelity;
}

double single_pair_cz_process(const GateSetup& setup, tomo::ProcessFidelityMode mode) {
  std::vector<Mat4> preparations;
  std::vector<Mat4> outputs;
  preparations.reserve(16);
  outputs.reserve(16);
  for (const tomo::Pol p1 : tomo::preparation_pols()) {
    for (const tomo::Pol p2 : tomo::preparation_pols()) {
      const Eigen::Vector2cd k1 = tomo::pol_ket(p1);
      const Eigen::Vector2cd k2 = tomo::pol_ket(p2);
      tomo::Vec4 joint;
      joint << k1(0) * k2(0), k1(0) * k2(1), k1(1) * k2(0), k1(1) * k2(1);
      preparations.push_back(tomo::density(joint));
      outputs.push_back(
          single_pair_gate_output(setup, preparation_jones(p1), preparation_jones(p2)));
    }
  }
  std::size_t k = 0;
  const tomo::GateChannel channel = [&](const Mat4&) { return outputs[k++]; };
  return tomo::process_tomography(channel, preparations, mode).process_fidelity;
}

// ---- runners --------------------------------------------------------------

namespace {

std::vector<double> grid_values(const ScanGrid& grid) {
  std::vector<double> values(static_cast<std::size_t>(grid.points));
  for (int i = 0; i < grid.points; ++i) {
    values[static_cast<std::size_t>(i)] =
        grid.min + (grid.max - grid.min) * i / static_cast<double>(grid.points - 1);
  }
  return values;
}

std::vector<std::pair<std::string, std::string>> base_metadata(const ExperimentConfig& config) {
  std::ostringstream hash;
  hash << std::hex << config.hash();
  return {{"tool_version", version_string()}, {"config_hash", hash.str()}};
}

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 1.0;
};

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  LinearFit fit;
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) throw NumericalError("degenerate grid for linear fit");
  fit.slope = (n * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / n;
  double ss_res = 0, ss_tot = 0;
  const double mean = sy / n;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double model = fit.intercept + fit.slope * x[i];
    ss_res += (y[i] - model) * (y[i] - model);
    ss_tot += (y[i] - mean) * (y[i] - mean);
  }
  fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

double lambda_at_power(const ExperimentConfig& config, double power_mw, int m) {
  return config.calib_k * std::sqrt(power_mw / static_cast<double>(m));
}

void check_grid_leakage(const ExperimentConfig& config) {
  for (const int m : config.multiplex_factors) {
    const double lambda = lambda_at_power(config, config.scan.max, m);
    if (lambda >= 1.0) throw NumericalError("lambda >= 1 at the grid maximum");
    pair_cutoff_for(lambda, config.truncation);  // throws when the cap leaks
  }
}

std::string join_files(const std::vector<std::string>& files) {
  std::string s;
  for (const auto& f : files) {
    if (!s.empty()) s += ", ";
    s += f;
  }
  return s;
}

void maybe_svg(const ExperimentConfig& config, RunResult& result, const std::string& path,
               const std::string& title, const std::string& xlab, const std::string& ylab,
               const std::vector<io::SvgSeries>& series) {
  if (!config.svg) return;
  io::write_svg_chart(path, title, xlab, ylab, series);
  result.files.push_back(path);
}

}  // namespace

const char* version_string() { return "spdcmux 0.1.0"; }

RunResult run_pn_ratio(const ExperimentConfig& config, const std::string& out_dir) {
  config.validate();
  check_grid_leakage(config);
  io::ensure_dir(out_dir);

  const std::vector<double> powers = grid_values(config.scan);
  const detect::DetectorParams det{config.detector_efficiency * config.arm_transmission, false,
                                   config.split_depth};
  const int boxes = 1 << config.split_depth;

  struct Row {
    double power, rate, m, lambda, ratio, approx;
  };
  std::vector<Row> rows(powers.size() * config.multiplex_factors.size());
  const int count = static_cast<int>(rows.size());
  parallel_for(count, config.workers, [&](int idx) {
    const std::size_t pi = static_cast<std::size_t>(idx) % powers.size();
    const std::size_t mi = static_cast<std::size_t>(idx) / powers.size();
    const int m = config.multiplex_factors[mi];
    const double power = powers[pi];
    const double lambda = lambda_at_power(config, power, m);
    const spdc::SourceParams src =
        power > 0.0 ? spdc::SourceParams::from_power(power, config.rep_rate_hz, m, config.calib_k)
                    : spdc::SourceParams::from_lambda(0.0, config.rep_rate_hz, m);
    const double ratio = detect::four_two_ratio(src, det, config.split_depth);
    const double eta = det.efficiency;
    const double split = 1.0 - 1.0 / boxes;
    const double approx = lambda * lambda * eta * eta * split * split;
    rows[static_cast<std::size_t>(idx)] = {power, config.rep_rate_hz * m,
                                           static_cast<double>(m), lambda, ratio, approx};
  });

  io::Table table;
  table.metadata = base_metadata(config);
  table.columns = {"power_mw", "rep_rate_hz", "multiplex_factor", "lambda_pulse", "ratio",
                   "ratio_small_lambda"};
  double max_dev = 0.0;
  for (const Row& r : rows) {
    if (r.lambda > 0.0 && r.lambda <= 0.05 && r.ratio > 0.0) {
      max_dev = std::max(max_dev, std::abs(r.ratio - r.approx) / r.ratio);
    }
    table.rows.push_back({r.power, r.rate, r.m, r.lambda, r.ratio, r.approx});
  }
  table.metadata.emplace_back("max_rel_dev_vs_small_lambda_below_0p05",
                              io::format_double(max_dev));

  // per-m linear fits of ratio vs average power
  io::Table fit_table;
  fit_table.metadata = base_metadata(config);
  fit_table.columns = {"multiplex_factor", "slope_per_mw", "intercept", "r_squared"};
  std::vector<double> slopes;
  for (std::size_t mi = 0; mi < config.multiplex_factors.size(); ++mi) {
    std::vector<double> x, y;
    for (std::size_t pi = 0; pi < powers.size(); ++pi) {
      const Row& r = rows[mi * powers.size() + pi];
      x.push_back(r.power);
      y.push_back(r.ratio);
    }
    const LinearFit fit = fit_line(x, y);
    slopes.push_back(fit.slope);
    fit_table.rows.push_back({static_cast<double>(config.multiplex_factors[mi]), fit.slope,
                              fit.intercept, fit.r_squared});
  }
  std::string slope_ratio = "n/a";
  if (slopes.size() >= 2 && slopes[1] != 0.0) {
    slope_ratio = io::format_double(slopes[0] / slopes[1]);
    fit_table.metadata.emplace_back("slope_ratio_first_over_second", slope_ratio);
  }

  RunResult result;
  const std::string csv = out_dir + "/pn_ratio.csv";
  const std::string fit_csv = out_dir + "/pn_ratio_fit.csv";
  io::write_csv(csv, table);
  io::write_csv(fit_csv, fit_table);
  result.files = {csv, fit_csv};

  std::vector<io::SvgSeries> series;
  for (std::size_t mi = 0; mi < config.multiplex_factors.size(); ++mi) {
    io::SvgSeries s;
    s.name = "m=" + std::to_string(config.multiplex_factors[mi]);
    for (std::size_t pi = 0; pi < powers.size(); ++pi) {
      const Row& r = rows[mi * powers.size() + pi];
      s.points.emplace_back(r.power, r.ratio);
    }
    series.push_back(std::move(s));
  }
  maybe_svg(config, result, out_dir + "/pn_ratio.svg", "4-photon / 2-photon event ratio",
            "average pump power (mW)", "ratio", series);

  result.summary = "pn-ratio: " + std::to_string(rows.size()) + " points, slope ratio " +
                   slope_ratio + "; wrote " + join_files(result.files);
  return result;
}

RunResult run_hom_scan(const ExperimentConfig& config, const std::string& out_dir) {
  return run_hom_scan(config, config.source_type, out_dir);
}

RunResult run_hom_scan(const ExperimentConfig& config, SourceKind source_type,
                       const std::string& out_dir) {
  config.validate();
  if (config.scan.min <= 0.0) {
    throw ConfigError("scan.min: hom-scan needs a strictly positive power grid");
  }
  check_grid_leakage(config);
  io::ensure_dir(out_dir);

  const GateSetup setup = gate_setup(config);
  const double v0 = single_pair_vv_visibility(setup);
  const std::vector<double> powers = grid_values(config.scan);

  struct Row {
    double power, m, lambda, c_dist, c_indist, visibility;
  };
  std::vector<Row> rows(powers.size() * config.multiplex_factors.size());
  parallel_for(static_cast<int>(rows.size()), config.workers, [&](int idx) {
    const std::size_t pi = static_cast<std::size_t>(idx) % powers.size();
    const std::size_t mi = static_cast<std::size_t>(idx) / powers.size();
    const int m = config.multiplex_factors[mi];
    const double power = powers[pi];
    const double lambda = lambda_at_power(config, power, m);
    const int cutoff = pair_cutoff_for(lambda, config.truncation);
    const HomPoint point =
        source_type == SourceKind::dependent
            ? hom_point_dependent(lambda, cutoff, setup, config.distinguishability_overlap)
            : hom_point_independent(lambda, lambda, cutoff, setup,
                                    config.distinguishability_overlap);
    rows[static_cast<std::size_t>(idx)] = {power,        static_cast<double>(m), lambda,
                                           point.c_dist, point.c_indist,         point.visibility};
  });

  io::Table table;
  table.metadata = base_metadata(config);
  table.metadata.emplace_back("source_type", source_kind_name(source_type));
  table.metadata.emplace_back("single_pair_visibility", io::format_double(v0));
  table.columns = {"power_mw",       "multiplex_factor", "lambda_pulse", "c_dist",
                   "c_indist",       "visibility",       "visibility_small_lambda"};
  double max_dev = 0.0;
  for (const Row& r : rows) {
    if (r.lambda <= 0.05) max_dev = std::max(max_dev, std::abs(r.visibility - v0) / v0);
    table.rows.push_back({r.power, r.m, r.lambda, r.c_dist, r.c_indist, r.visibility, v0});
  }
  table.metadata.emplace_back("max_rel_dev_vs_small_lambda_below_0p05",
                              io::format_double(max_dev));

  RunResult result;
  const std::string csv = out_dir + "/hom_scan.csv";
  io::write_csv(csv, table);
  result.files = {csv};

  std::vector<io::SvgSeries> series;
  for (std::size_t mi = 0; mi < config.multiplex_factors.size(); ++mi) {
    io::SvgSeries s;
    s.name = "m=" + std::to_string(config.multiplex_factors[mi]);
    for (std::size_t pi = 0; pi < powers.size(); ++pi) {
      const Row& r = rows[mi * powers.size() + pi];
      s.points.emplace_back(r.power, r.visibility);
    }
    series.push_back(std::move(s));
  }
  maybe_svg(config, result, out_dir + "/hom_scan.svg", "HOM visibility vs pump power",
            "average pump power (mW)", "visibility", series);

  result.summary = "hom-scan(" + source_kind_name(source_type) + "): " +
                   std::to_string(rows.size()) + " points, single-pair visibility " +
                   io::format_double(v0) + "; wrote " + join_files(result.files);
  return result;
}

RunResult run_cz_state(const ExperimentConfig& config, const std::string& out_dir) {
  config.validate();
  if (config.scan.min <= 0.0) {
    throw ConfigError("scan.min: cz-state needs a strictly positive power grid");
  }
  check_grid_leakage(config);
  io::ensure_dir(out_dir);

  const GateSetup setup = gate_setup(config);
  const CzStatePoint limit = single_pair_cz_state(setup);
  const std::vector<double> powers = grid_values(config.scan);

  struct Row {
    double power, m, lambda, fidelity, tangle;
  };
  std::vector<Row> rows(powers.size() * config.multiplex_factors.size());
  parallel_for(static_cast<int>(rows.size()), config.workers, [&](int idx) {
    const std::size_t pi = static_cast<std::size_t>(idx) % powers.size();
    const std::size_t mi = static_cast<std::size_t>(idx) / powers.size();
    const int m = config.multiplex_factors[mi];
    const double power = powers[pi];
    const double lambda = lambda_at_power(config, power, m);
    const int cutoff = pair_cutoff_for(lambda, config.truncation);
    const CzStatePoint point = cz_state_point(lambda, cutoff, setup);
    rows[static_cast<std::size_t>(idx)] = {power, static_cast<double>(m), lambda, point.fidelity,
                                           point.tangle};
  });

  io::Table table;
  table.metadata = base_metadata(config);
  table.columns = {"power_mw", "multiplex_factor",      "lambda_pulse",
                   "fidelity", "tangle",                "fidelity_small_lambda",
                   "tangle_small_lambda"};
  double max_dev = 0.0;
  for (const Row& r : rows) {
    if (r.lambda <= 0.05) {
      max_dev = std::max(max_dev, std::abs(r.fidelity - limit.fidelity) / limit.fidelity);
      max_dev = std::max(max_dev, std::abs(r.tangle - limit.tangle) / limit.tangle);
    }
    table.rows.push_back(
        {r.power, r.m, r.lambda, r.fidelity, r.tangle, limit.fidelity, limit.tangle});
  }
  table.metadata.emplace_back("max_rel_dev_vs_small_lambda_below_0p05",
                              io::format_double(max_dev));

  RunResult result;
  const std::string csv = out_dir + "/cz_state.csv";
  io::write_csv(csv, table);
  result.files = {csv};

  std::vector<io::SvgSeries> series;
  for (std::size_t mi = 0; mi < config.multiplex_factors.size(); ++mi) {
    io::SvgSeries fs, ts;
    fs.name = "fidelity m=" + std::to_string(config.multiplex_factors[mi]);
    ts.name = "tangle m=" + std::to_string(config.multiplex_factors[mi]);
    for (std::size_t pi = 0; pi < powers.size(); ++pi) {
      const Row& r = rows[mi * powers.size() + pi];
      fs.points.emplace_back(r.power, r.fidelity);
      ts.points.emplace_back(r.power, r.tangle);
    }
    series.push_back(std::move(fs));
    series.push_back(std::move(ts));
  }
  maybe_svg(config, result, out_dir + "/cz_state.svg", "post-selected state quality",
            "average pump power (mW)", "fidelity / tangle", series);

  result.summary = "cz-state: " + std::to_string(rows.size()) + " points; wrote " +
                   join_files(result.files);
  return result;
}

RunResult run_cz_process(const ExperimentConfig& config, const std::string& out_dir) {
  config.validate();
  if (config.scan.min <= 0.0) {
    throw ConfigError("scan.min: cz-process needs a strictly positive power grid");
  }
  check_grid_leakage(config);
  io::ensure_dir(out_dir);

  const GateSetup setup = gate_setup(config);
  const double limit = single_pair_cz_process(setup, config.pf_mode);
  const std::vector<double> powers = grid_values(config.scan);

  struct Row {
    double power, m, lambda, pf;
  };
  std::vector<Row> rows(powers.size() * config.multiplex_factors.size());
  parallel_for(static_cast<int>(rows.size()), config.workers, [&](int idx) {
    const std::size_t pi = static_cast<std::size_t>(idx) % powers.size();
    const std::size_t mi = static_cast<std::size_t>(idx) / powers.size();
    const int m = config.multiplex_factors[mi];
    const double power = powers[pi];
    const double lambda = lambda_at_power(config, power, m);
    const int cutoff = pair_cutoff_for(lambda, config.truncation);
    rows[static_cast<std::size_t>(idx)] = {power, static_cast<double>(m), lambda,
                                           cz_process_point(lambda, cutoff, setup, config.pf_mode)};
  });

  io::Table table;
  table.metadata = base_metadata(config);
  table.columns = {"power_mw", "multiplex_factor", "lambda_pulse", "process_fidelity",
                   "process_fidelity_small_lambda"};
  double max_dev = 0.0;
  for (const Row& r : rows) {
    if (r.lambda <= 0.05) max_dev = std::max(max_dev, std::abs(r.pf - limit) / limit);
    table.rows.push_back({r.power, r.m, r.lambda, r.pf, limit});
  }
  table.metadata.emplace_back("max_rel_dev_vs_small_lambda_below_0p05",
                              io::format_double(max_dev));

  RunResult result;
  const std::string csv = out_dir + "/cz_process.csv";
  io::write_csv(csv, table);
  result.files = {csv};

  std::vector<io::SvgSeries> series;
  for (std::size_t mi = 0; mi < config.multiplex_factors.size(); ++mi) {
    io::SvgSeries s;
    s.name = "m=" + std::to_string(config.multiplex_factors[mi]);
    for (std::size_t pi = 0; pi < powers.size(); ++pi) {
      const Row& r = rows[mi * powers.size() + pi];
      s.points.emplace_back(r.power, r.pf);
    }
    series.push_back(std::move(s));
  }
  maybe_svg(config, result, out_dir + "/cz_process.svg", "process fidelity vs pump power",
            "average pump power (mW)", "process fidelity", series);

  result.summary = "cz-process: " + std::to_string(rows.size()) + " points; wrote " +
                   join_files(result.files);
  return result;
}

RunResult run_vis_heatmap(const ExperimentConfig& config, const std::string& out_dir) {
  config.validate();
  io::ensure_dir(out_dir);

  const HeatmapGrid& grid = config.heatmap;
  // leakage check at the strongest per-pulse point (m = 1)
  const double lambda_top = config.calib_k * std::sqrt(grid.pump_power_mw);
  if (lambda_top >= 1.0) throw NumericalError("heatmap power puts lambda past 1");
  pair_cutoff_for(lambda_top, config.truncation);

  std::vector<double> etas(static_cast<std::size_t>(grid.eta_points));
  for (int i = 0; i < grid.eta_points; ++i) {
    etas[static_cast<std::size_t>(i)] =
        grid.eta_min + (grid.eta_max - grid.eta_min) * i / static_cast<double>(grid.eta_points - 1);
  }

  struct Cell {
    double eta, m, visibility, single_pair;
  };
  std::vector<Cell> cells(etas.size() * static_cast<std::size_t>(grid.m_max));
  parallel_for(static_cast<int>(cells.size()), config.workers, [&](int idx) {
    const std::size_t ei = static_cast<std::size_t>(idx) % etas.size();
    const int m = static_cast<int>(static_cast<std::size_t>(idx) / etas.size()) + 1;
    const double eta = etas[ei];
    GateSetup setup = gate_setup(config);
    setup.detector_eta = eta * config.arm_transmission;
    setup.herald_eta = eta * config.herald_transmission;
    const double lambda = config.calib_k * std::sqrt(grid.pump_power_mw / m);
    const int cutoff = pair_cutoff_for(lambda, config.truncation);
    const HomPoint point = hom_point_independent(lambda, lambda, cutoff, setup);
    cells[static_cast<std::size_t>(idx)] = {eta, static_cast<double>(m), point.visibility,
                                            single_pair_vv_visibility(setup)};
  });

  io::Table table;
  table.metadata = base_metadata(config);
  table.columns = {"detector_efficiency", "multiplex_factor", "visibility",
                   "visibility_single_pair"};
  double max_dev = 0.0;
  for (const Cell& c : cells) {
    max_dev = std::max(max_dev, std::abs(c.visibility - c.single_pair) / c.single_pair);
    table.rows.push_back({c.eta, c.m, c.visibility, c.single_pair});
  }
  table.metadata.emplace_back("max_rel_dev_vs_single_pair", io::format_double(max_dev));

  // large-m limit at the section efficiency, for comparison with the
  // single-pair value
  {
    GateSetup setup = gate_setup(config);
    setup.detector_eta = grid.section_eta * config.arm_transmission;
    setup.herald_eta = grid.section_eta * config.herald_transmission;
    const double big_m = 1e6;
    const double lambda = config.calib_k * std::sqrt(grid.pump_power_mw / big_m);
    const HomPoint limit = hom_point_independent(lambda, lambda, 2, setup);
    table.metadata.emplace_back("large_m_limit_visibility", io::format_double(limit.visibility));
    table.metadata.emplace_back("large_m_limit_single_pair",
                                io::format_double(single_pair_vv_visibility(setup)));
  }

  RunResult result;
  const std::string csv = out_dir + "/vis_heatmap.csv";
  io::write_csv(csv, table);
  result.files = {csv};

  // cross sections
  io::Table eta_section;
  eta_section.metadata = base_metadata(config);
  eta_section.metadata.emplace_back("multiplex_factor", std::to_string(grid.section_m));
  eta_section.columns = {"detector_efficiency", "visibility"};
  for (const Cell& c : cells) {
    if (static_cast<int>(c.m) == grid.section_m) eta_section.rows.push_back({c.eta, c.visibility});
  }
  const std::string eta_csv = out_dir + "/vis_heatmap_eta_section.csv";
  io::write_csv(eta_csv, eta_section);
  result.files.push_back(eta_csv);

  io::Table m_section;
  m_section.metadata = base_metadata(config);
  m_section.metadata.emplace_back("detector_efficiency", io::format_double(grid.section_eta));
  m_section.columns = {"multiplex_factor", "visibility"};
  {
    GateSetup setup = gate_setup(config);
    setup.detector_eta = grid.section_eta * config.arm_transmission;
    setup.herald_eta = grid.section_eta * config.herald_transmission;
    for (int m = 1; m <= grid.m_max; ++m) {
      const double lambda = config.calib_k * std::sqrt(grid.pump_power_mw / m);
      const int cutoff = pair_cutoff_for(lambda, config.truncation);
      m_section.rows.push_back(
          {static_cast<double>(m),
           hom_point_independent(lambda, lambda, cutoff, setup).visibility});
    }
  }
  const std::string m_csv = out_dir + "/vis_heatmap_m_section.csv";
  io::write_csv(m_csv, m_section);
  result.files.push_back(m_csv);

  if (config.svg) {
    std::vector<io::SvgSeries> series;
    io::SvgSeries s1;
    s1.name = "m=" + std::to_string(grid.section_m);
    for (const auto& row : eta_section.rows) s1.points.emplace_back(row[0], row[1]);
    series.push_back(std::move(s1));
    io::write_svg_chart(out_dir + "/vis_heatmap_eta_section.svg",
                        "visibility vs detector efficiency", "detector efficiency", "visibility",
                        series);
    result.files.push_back(out_dir + "/vis_heatmap_eta_section.svg");
  }

  result.summary = "vis-heatmap: " + std::to_string(cells.size()) + " cells; wrote " +
                   join_files(result.files);
  return result;
}

RunResult run_validate(const ExperimentConfig& config, const std::string& out_dir) {
  config.validate();
  io::ensure_dir(out_dir);

  RunResult result;
  std::ostringstream report;
  bool ok = true;

  for (const int m : config.multiplex_factors) {
    const spdc::SourceParams src = spdc::SourceParams::from_lambda(0.0, config.rep_rate_hz, m);
    const spdc::RepRateCheck check = spdc::validate_rep_rate(src, {config.window_s});
    const bool pass = check.verdict == spdc::RepRateVerdict::ok;
    ok = ok && pass;
    report << "rep_rate m=" << m << ": " << io::format_double(check.effective_rate_hz)
           << " Hz vs ceiling " << io::format_double(check.max_rate_hz) << " Hz -> "
           << (pass ? "ok" : "violation") << "\n";
  }
  for (const int m : config.multiplex_factors) {
    const double lambda = lambda_at_power(config, config.scan.max, m);
    bool pass = lambda < 1.0;
    double tail = 1.0;
    if (pass) {
      tail = std::pow(lambda * lambda, config.truncation);
      pass = tail <= kLeakageBudget;
    }
    ok = ok && pass;
    report << "truncation m=" << m << ": lambda " << io::format_double(lambda)
           << ", relative tail " << io::format_double(tail) << " -> "
           << (pass ? "ok" : "leakage") << "\n";
  }

  const std::string path = out_dir + "/validate.txt";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write file: " + path);
  for (const auto& [k, v] : base_metadata(config)) out << "# " << k << "=" << v << "\n";
  out << report.str();
  out << "verdict: " << (ok ? "ok" : "violation") << "\n";

  result.files = {path};
  result.ok = ok;
  result.summary = "validate: " + std::string(ok ? "ok" : "violation") + "; wrote " + path;
  return result;
}

RunResult run_tomo_fit(const ExperimentConfig& config, const std::string& counts_csv,
                       const std::string& out_dir) {
  config.validate();
  io::ensure_dir(out_dir);

  const tomo::MeasurementSet set = tomo::load_counts_csv(counts_csv);
  const tomo::TomographyResult fit =
      tomo::mle_reconstruct(set, tomo::density(tomo::bell_hd_va_ket()));

  RunResult result;
  const std::string path = out_dir + "/tomo_rho.json";
  std::ostringstream hash;
  hash << std::hex << config.hash();
  io::write_matrix_json(path, fit.rho,
                        {{"fidelity_vs_bell_hd_va", io::format_double(fit.fidelity)},
                         {"tangle", io::format_double(fit.tangle)},
                         {"log_likelihood", io::format_double(fit.log_likelihood)},
                         {"iterations", std::to_string(fit.iterations)},
                         {"config_hash", hash.str()},
                         {"tool_version", version_string()}});
  result.files = {path};
  result.summary = "tomo-fit: fidelity(bell) " + io::format_double(fit.fidelity) + ", tangle " +
                   io::format_double(fit.tangle) + "; wrote " + path;
  return result;
}

RunResult run_experiment(const ExperimentConfig& config, const std::string& name,
                         const std::string& out_dir) {
  if (name == "pn-ratio") return run_pn_ratio(config, out_dir);
  if (name == "hom-scan") return run_hom_scan(config, out_dir);
  if (name == "cz-state") return run_cz_state(config, out_dir);
  if (name == "cz-process") return run_cz_process(config, out_dir);
  if (name == "vis-heatmap") return run_vis_heatmap(config, out_dir);
  if (name == "validate") return run_validate(config, out_dir);
  throw std::invalid_argument("unknown experiment: " + name);
}

}  // namespace spdcmux::experiments
