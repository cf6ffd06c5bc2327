#include "spdcmux/detection.hpp"

#include <algorithm>
#include <cmath>

namespace spdcmux::detect {

namespace {

using fock::Complex;
using fock::FockState;
using fock::ModeRegistry;

void check_eta(double eta) {
  if (eta < 0.0 || eta > 1.0) throw std::invalid_argument("efficiency must be in [0, 1]");
}

// probability that all photons covered by the detector escape detection
double miss_probability(const ModeRegistry& reg,
                        const std::vector<std::pair<std::size_t, double>>& cover,
                        std::size_t basis_index) {
  double p = 1.0;
  for (const auto& [mode, eta] : cover) {
    const int n = reg.occupation(basis_index, mode);
    if (n > 0) p *= std::pow(1.0 - eta, n);
  }
  return p;
}

std::vector<std::vector<std::pair<std::size_t, double>>> resolve_covers(
    const ModeRegistry& reg, const std::vector<DetectorCover>& detectors) {
  std::vector<std::vector<std::pair<std::size_t, double>>> resolved;
  resolved.reserve(detectors.size());
  for (const auto& det : detectors) {
    std::vector<std::pair<std::size_t, double>> c;
    for (const auto& [label, eta] : det.mode_etas) {
      check_eta(eta);
      c.emplace_back(reg.index_of(label), eta);
    }
    resolved.push_back(std::move(c));
  }
  return resolved;
}

}  // namespace

BucketEffects bucket_povm(double eta, int truncation) {
  check_eta(eta);
  if (truncation < 0) throw std::invalid_argument("truncation must be >= 0");
  BucketEffects e;
  e.no_click.resize(truncation + 1);
  e.click.resize(truncation + 1);
  for (int n = 0; n <= truncation; ++n) {
    e.no_click[n] = std::pow(1.0 - eta, n);
    e.click[n] = 1.0 - e.no_click[n];
  }
  return e;
}

DetectorCover cover_mode(const std::string& id, const std::string& label, double eta) {
  return DetectorCover{id, {{label, eta}}};
}

DetectorCover cover_modes(const std::string& id, const std::vector<std::string>& labels,
                          double eta) {
  DetectorCover c{id, {}};
  for (const auto& l : labels) c.mode_etas.emplace_back(l, eta);
  return c;
}

double coincidence_probability(const fock::FockState& state,
                               const std::vector<DetectorCover>& detectors) {
  const ModeRegistry& reg = state.registry();
  const auto covers = resolve_covers(reg, detectors);
  double total = 0.0;
  for (std::size_t i = 0; i < reg.dim(); ++i) {
    const double w = state.basis_probability(i);
    if (w == 0.0) continue;
    double f = 1.0;
    for (const auto& c : covers) f *= 1.0 - miss_probability(reg, c, i);
    total += w * f;
  }
  return total;
}

double coincidence_probability(const fock::FockState& state,
                               const std::map<std::string, DetectorParams>& detectors) {
  std::vector<DetectorCover> covers;
  covers.reserve(detectors.size());
  for (const auto& [label, params] : detectors) {
    covers.push_back(cover_mode(label, label, params.efficiency));
  }
  return coincidence_probability(state, covers);
}

std::vector<ClickOutcome> click_pattern_probabilities(const fock::FockState& state,
                                                      const std::vector<DetectorCover>& detectors) {
  const ModeRegistry& reg = state.registry();
  const auto covers = resolve_covers(reg, detectors);
  const std::size_t n_det = detectors.size();
  const std::size_t n_patterns = std::size_t{1} << n_det;

  std::vector<double> probs(n_patterns, 0.0);
  std::vector<double> miss(n_det);
  for (std::size_t i = 0; i < reg.dim(); ++i) {
    const double w = state.basis_probability(i);
    if (w == 0.0) continue;
    for (std::size_t d = 0; d < n_det; ++d) miss[d] = miss_probability(reg, covers[d], i);
    for (std::size_t pat = 0; pat < n_patterns; ++pat) {
      double f = 1.0;
      for (std::size_t d = 0; d < n_det; ++d) {
        f *= (pat >> d) & 1 ? 1.0 - miss[d] : miss[d];
      }
      probs[pat] += w * f;
    }
  }

  std::vector<ClickOutcome> outcomes(n_patterns);
  for (std::size_t pat = 0; pat < n_patterns; ++pat) {
    outcomes[pat].probability = probs[pat];
    for (std::size_t d = 0; d < n_det; ++d) {
      outcomes[pat].pattern[detectors[d].id] = static_cast<int>((pat >> d) & 1);
    }
  }
  return outcomes;
}

Conditional conditional_state(const fock::FockState& state,
                              const std::map<std::string, HeraldCondition>& herald,
                              const std::vector<std::string>& keep) {
  const ModeRegistry& reg = state.registry();
  for (const auto& label : keep) {
    if (herald.count(label) > 0) {
      throw std::invalid_argument("herald and keep modes must be disjoint: " + label);
    }
  }

  // diagonal weight of the herald POVM element on each basis configuration
  std::vector<std::pair<std::size_t, HeraldCondition>> conds;
  for (const auto& [label, cond] : herald) conds.emplace_back(reg.index_of(label), cond);

  auto weight = [&](std::size_t idx) {
    double w = 1.0;
    for (const auto& [mode, cond] : conds) {
      const int n = reg.occupation(idx, mode);
      const double miss = std::pow(1.0 - cond.efficiency, n);
      switch (cond.kind) {
        case HeraldCondition::Kind::bucket_click:
          w *= 1.0 - miss;
          break;
        case HeraldCondition::Kind::bucket_no_click:
          w *= miss;
          break;
        case HeraldCondition::Kind::resolved_count: {
          // binomial thinning: detect exactly `count` of n photons
          const int k = cond.count;
          if (k > n) return 0.0;
          double binom = 1.0;
          for (int i = 0; i < k; ++i) binom *= static_cast<double>(n - i) / (i + 1);
          w *= binom * std::pow(cond.efficiency, k) * std::pow(1.0 - cond.efficiency, n - k);
          break;
        }
      }
      if (w == 0.0) return 0.0;
    }
    return w;
  };

  const fock::Matrix rho = state.is_density() ? state.density() : state.to_density().density();
  fock::Matrix weighted = rho;
  double probability = 0.0;
  for (std::size_t i = 0; i < reg.dim(); ++i) {
    const double wi = weight(i);
    probability += wi * rho(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)).real();
    const double si = std::sqrt(wi);
    for (std::size_t j = 0; j < reg.dim(); ++j) {
      const double sj = std::sqrt(weight(j));
      weighted(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) *= si * sj;
    }
  }

  Conditional result;
  result.probability = probability;
  if (probability <= 0.0) return result;

  fock::FockState joint = fock::FockState::from_density(reg, std::move(weighted));
  fock::FockState reduced = fock::partial_trace(joint, keep);
  reduced.normalize();
  reduced.add_leakage(state.leakage());
  result.state = std::move(reduced);
  return result;
}

TwoQubitConditional two_qubit_conditional(const fock::FockState& state, const std::string& arm0,
                                          const std::string& arm1) {
  const ModeRegistry& reg = state.registry();
  const std::size_t a_h = reg.index_of(arm0 + ".H");
  const std::size_t a_v = reg.index_of(arm0 + ".V");
  const std::size_t b_h = reg.index_of(arm1 + ".H");
  const std::size_t b_v = reg.index_of(arm1 + ".V");

  // qubit index of a basis configuration, or -1 outside the subspace
  auto qubit_of = [&](std::size_t idx) -> int {
    const int nah = reg.occupation(idx, a_h);
    const int nav = reg.occupation(idx, a_v);
    const int nbh = reg.occupation(idx, b_h);
    const int nbv = reg.occupation(idx, b_v);
    if (nah + nav != 1 || nbh + nbv != 1) return -1;
    return 2 * nav + nbv;
  };

  // "rest" signature: occupations of every other mode, used to trace them
  std::vector<std::size_t> rest_modes;
  for (std::size_t m = 0; m < reg.mode_count(); ++m) {
    if (m != a_h && m != a_v && m != b_h && m != b_v) rest_modes.push_back(m);
  }
  auto rest_key = [&](std::size_t idx) {
    std::size_t key = 0;
    for (const std::size_t m : rest_modes) {
      key = key * (static_cast<std::size_t>(reg.mode(m).truncation) + 1) +
            static_cast<std::size_t>(reg.occupation(idx, m));
    }
    return key;
  };

  std::vector<int> qubit(reg.dim());
  std::vector<std::size_t> rkey(reg.dim());
  for (std::size_t i = 0; i < reg.dim(); ++i) {
    qubit[i] = qubit_of(i);
    rkey[i] = rest_key(i);
  }

  Eigen::Matrix4cd rho = Eigen::Matrix4cd::Zero();
  double probability = 0.0;

  if (!state.is_density()) {
    // group amplitudes by rest signature; coherence survives within a group
    std::map<std::size_t, std::array<Complex, 4>> groups;
    const fock::Vector& v = state.amplitudes();
    for (std::size_t i = 0; i < reg.dim(); ++i) {
      if (qubit[i] < 0) continue;
      const Complex a = v[static_cast<Eigen::Index>(i)];
      if (a == Complex(0.0, 0.0)) continue;
      auto& g = groups[rkey[i]];
      g[static_cast<std::size_t>(qubit[i])] += a;
    }
    for (const auto& [key, g] : groups) {
      (void)key;
      for (int p = 0; p < 4; ++p) {
        for (int q = 0; q < 4; ++q) rho(p, q) += g[p] * std::conj(g[q]);
      }
    }
    probability = rho.trace().real();
  } else {
    const fock::Matrix& d = state.density();
    for (std::size_t i = 0; i < reg.dim(); ++i) {
      if (qubit[i] < 0) continue;
      for (std::size_t j = 0; j < reg.dim(); ++j) {
        if (qubit[j] < 0 || rkey[i] != rkey[j]) continue;
        rho(qubit[i], qubit[j]) += d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      }
    }
    probability = rho.trace().real();
  }

  TwoQubitConditional result;
  result.probability = probability;
  if (probability > 0.0) {
    result.rho = rho / probability;
  } else {
    result.rho = Eigen::Matrix4cd::Zero();
  }
  return result;
}

double tree_click_probability(int clicks, int n, int depth, double eta) {
  check_eta(eta);
  if (depth < 1) throw std::invalid_argument("tree depth must be >= 1");
  if (clicks < 0 || n < 0) throw std::invalid_argument("counts must be >= 0");
  const int boxes = 1 << depth;
  if (clicks > boxes || clicks > n) return 0.0;

  // thin by detection efficiency, then count occupied boxes among d detected
  double total = 0.0;
  for (int d = clicks; d <= n; ++d) {
    double binom = 1.0;
    for (int i = 0; i < d; ++i) binom *= static_cast<double>(n - i) / (i + 1);
    const double p_detect = binom * std::pow(eta, d) * std::pow(1.0 - eta, n - d);
    // P(exactly `clicks` occupied boxes | d balls in `boxes` boxes), by
    // inclusion-exclusion over which of the chosen boxes stay empty
    double choose_boxes = 1.0;
    for (int i = 0; i < clicks; ++i) choose_boxes *= static_cast<double>(boxes - i) / (i + 1);
    double surj = 0.0;
    for (int i = 0; i <= clicks; ++i) {
      double c = 1.0;
      for (int t = 0; t < i; ++t) c *= static_cast<double>(clicks - t) / (t + 1);
      const double sign = i % 2 == 0 ? 1.0 : -1.0;
      surj += sign * c * std::pow(static_cast<double>(clicks - i) / boxes, d);
    }
    total += p_detect * choose_boxes * surj;
  }
  return total;
}

std::vector<double> tree_click_distribution(const std::vector<double>& number_dist, int depth,
                                            double eta) {
  const int boxes = 1 << depth;
  std::vector<double> dist(static_cast<std::size_t>(boxes) + 1, 0.0);
  for (std::size_t n = 0; n < number_dist.size(); ++n) {
    if (number_dist[n] == 0.0) continue;
    const int cmax = std::min<int>(boxes, static_cast<int>(n));
    for (int c = 0; c <= cmax; ++c) {
      dist[static_cast<std::size_t>(c)] +=
          number_dist[n] * tree_click_probability(c, static_cast<int>(n), depth, eta);
    }
  }
  return dist;
}

std::vector<double> multiplexed_count_probability(const fock::FockState& state,
                                                  const std::string& mode, int depth,
                                                  double eta) {
  return tree_click_distribution(state.number_distribution(mode), depth, eta);
}

namespace {

double four_two_ratio_lambda(double lambda, const DetectorParams& det, int depth) {
  check_eta(det.efficiency);
  if (depth < 1) throw std::invalid_argument("tree depth must be >= 1");
  if (lambda == 0.0) return 0.0;  // no-pairs limit

  const double l2 = lambda * lambda;
  double p_single = 0.0;  // exactly one click on each arm
  double p_multi = 0.0;   // at least two clicks on each arm
  const int boxes = 1 << depth;
  int n = 1;
  while (true) {
    const double pn = (1.0 - l2) * std::pow(l2, n);
    const double one = tree_click_probability(1, n, depth, det.efficiency);
    double two_plus = 0.0;
    for (int c = 2; c <= std::min(boxes, n); ++c) {
      two_plus += tree_click_probability(c, n, depth, det.efficiency);
    }
    p_single += pn * one * one;
    p_multi += pn * two_plus * two_plus;
    const double tail = std::pow(l2, n + 1) / (1.0 - l2);
    if (tail < 1e-14 * (p_single + p_multi)) break;
    if (++n > 2000) throw TruncationError("four_two_ratio: series does not close");
  }
  if (p_single <= 0.0) throw NumericalError("four_two_ratio: no single-click events");
  return p_multi / p_single;
}

}  // namespace

double four_two_ratio(const spdc::SourceParams& p, const DetectorParams& det, int depth) {
  p.validate();
  return four_two_ratio_lambda(p.lambda, det, depth);
}

double four_two_ratio(const spdc::DualPassParams& p, const DetectorParams& det, int depth) {
  p.validate();
  return four_two_ratio_lambda(p.forward.lambda, det, depth);
}

}  // namespace spdcmux::detect
