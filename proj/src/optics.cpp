#include "spdcmux/optics.hpp"

#include <algorithm>
#include <cmath>

namespace spdcmux::optics {

namespace {

using fock::Complex;
using fock::FockState;
using fock::Matrix;
using fock::ModeRegistry;
using fock::ModeSpec;
using fock::ModeUnitary;
using fock::Vector;

Eigen::Matrix2cd bs_matrix(double reflectivity, BsConvention conv) {
  if (reflectivity < 0.0 || reflectivity > 1.0) {
    throw std::invalid_argument("beamsplitter reflectivity must be in [0, 1]");
  }
  const double t = std::sqrt(1.0 - reflectivity);
  const double r = std::sqrt(reflectivity);
  Eigen::Matrix2cd m;
  if (conv == BsConvention::symmetric) {
    m << Complex(t, 0), Complex(0, r), Complex(0, r), Complex(t, 0);
  } else {
    m << Complex(t, 0), Complex(-r, 0), Complex(r, 0), Complex(t, 0);
  }
  return m;
}

}  // namespace

DistinguishabilityModel DistinguishabilityModel::from_delay(double delay_s, double sigma_s) {
  if (sigma_s <= 0.0) throw std::invalid_argument("delay profile width must be positive");
  DistinguishabilityModel m;
  const double x = delay_s / sigma_s;
  m.overlap = std::exp(-x * x);
  return m;
}

fock::ModeUnitary beamsplitter(double reflectivity, const std::string& mode0,
                               const std::string& mode1, BsConvention conv) {
  return fock::make_mode_unitary({mode0, mode1}, bs_matrix(reflectivity, conv));
}

Eigen::Matrix2cd waveplate_jones(const WaveplateSpec& spec) {
  const double c = std::cos(spec.angle_rad);
  const double s = std::sin(spec.angle_rad);
  Eigen::Matrix2cd rot;
  rot << c, -s, s, c;
  Eigen::Matrix2cd retard = Eigen::Matrix2cd::Zero();
  retard(0, 0) = 1.0;
  // frozen retardance convention: HWP flips the slow axis, QWP retards it by
  // -pi/2 so that QWP(45 deg)|H> = (|H> + i|V>)/sqrt(2) up to global phase
  retard(1, 1) = spec.kind == WaveplateSpec::Kind::half ? Complex(-1.0, 0.0) : Complex(0.0, -1.0);
  return rot * retard * rot.adjoint();
}

fock::ModeUnitary waveplate(const WaveplateSpec& spec, const std::string& spatial_mode) {
  return polarization_unitary(waveplate_jones(spec), spatial_mode);
}

fock::ModeUnitary polarization_unitary(const Eigen::Matrix2cd& jones,
                                       const std::string& spatial_mode) {
  return fock::make_mode_unitary({pol_h(spatial_mode), pol_v(spatial_mode)}, jones);
}

PpbsElement ppbs(const PpbsSpec& spec, const std::string& spatial0, const std::string& spatial1,
                 const fock::ModeRegistry& registry, BsConvention conv) {
  for (const auto& spatial : {spatial0, spatial1}) {
    if (!registry.has(pol_h(spatial)) || !registry.has(pol_v(spatial))) {
      throw std::invalid_argument("ppbs: spatial mode '" + spatial +
                                  "' is missing a polarization sub-mode");
    }
  }
  PpbsElement element;
  element.h_part = beamsplitter(spec.eta_h, pol_h(spatial0), pol_h(spatial1), conv);
  element.v_part = beamsplitter(spec.eta_v, pol_v(spatial0), pol_v(spatial1), conv);
  return element;
}

fock::FockState apply_ppbs(const fock::FockState& state, const PpbsElement& element) {
  return fock::apply_mode_unitary(fock::apply_mode_unitary(state, element.h_part),
                                  element.v_part);
}

fock::FockState loss(const fock::FockState& state, const LossChannel& channel,
                     BsConvention conv) {
  if (channel.transmission < 0.0 || channel.transmission > 1.0) {
    throw std::invalid_argument("loss transmission must be in [0, 1]");
  }
  const ModeRegistry& reg = state.registry();
  const int cap = reg.mode(reg.index_of(channel.mode)).truncation;
  const std::string ancilla = channel.mode + ".loss";
  FockState anc = FockState::vacuum(fock::build_registry({{ancilla, cap}}));
  FockState joint = fock::tensor(state, anc);
  joint = fock::apply_mode_unitary(
      joint, beamsplitter(1.0 - channel.transmission, channel.mode, ancilla, conv));
  std::vector<std::string> keep;
  for (const auto& m : reg.modes()) keep.push_back(m.label);
  return fock::partial_trace(joint, keep);
}

fock::FockState attach_loss(const fock::FockState& state, const std::string& mode,
                            double transmission, const std::string& ancilla,
                            BsConvention conv) {
  if (transmission < 0.0 || transmission > 1.0) {
    throw std::invalid_argument("loss transmission must be in [0, 1]");
  }
  return fock::apply_mode_unitary(state, beamsplitter(1.0 - transmission, mode, ancilla, conv));
}

CzGate cz_gate(const PpbsSpec& spec, const std::string& arm0, const std::string& arm1,
               BsConvention conv) {
  if (spec.eta_h < 0.0 || spec.eta_h > 1.0 || spec.eta_v < 0.0 || spec.eta_v > 1.0) {
    throw std::invalid_argument("PPBS reflectivities must be in [0, 1]");
  }
  return CzGate{spec, arm0, arm1, conv};
}

namespace {
constexpr double kCompensationTransmission = 1.0 / 3.0;
}

fock::FockState CzGate::apply(const fock::FockState& state) const {
  PpbsElement central = ppbs(spec, arm0, arm1, state.registry(), convention);
  fock::FockState out = apply_ppbs(state, central);
  out = loss(out, {pol_h(arm0), kCompensationTransmission}, convention);
  out = loss(out, {pol_h(arm1), kCompensationTransmission}, convention);
  return out;
}

fock::FockState CzGate::apply_keep_ancillas(const fock::FockState& state,
                                            const std::string& anc0,
                                            const std::string& anc1) const {
  PpbsElement central = ppbs(spec, arm0, arm1, state.registry(), convention);
  fock::FockState out = apply_ppbs(state, central);
  out = attach_loss(out, pol_h(arm0), kCompensationTransmission, anc0, convention);
  out = attach_loss(out, pol_h(arm1), kCompensationTransmission, anc1, convention);
  return out;
}

std::string layer_twin(const std::string& label) { return label + "#1"; }

fock::FockState apply_distinguishability(const DistinguishabilityModel& model,
                                         const fock::FockState& state,
                                         const std::vector<std::pair<std::string, int>>& layer_of_mode) {
  const double gamma = model.overlap;
  if (gamma < 0.0 || gamma > 1.0) throw std::invalid_argument("overlap must be in [0, 1]");
  const ModeRegistry& reg = state.registry();

  // layered registry: every listed mode gains a twin right after it
  std::vector<ModeSpec> layered;
  std::vector<int> layer(reg.mode_count(), 0);
  for (const auto& [label, lay] : layer_of_mode) {
    if (lay != 0 && lay != 1) throw std::invalid_argument("layer assignment must be 0 or 1");
    layer[reg.index_of(label)] = lay;
  }
  std::vector<bool> doubled(reg.mode_count(), false);
  for (const auto& [label, lay] : layer_of_mode) doubled[reg.index_of(label)] = true;

  for (std::size_t m = 0; m < reg.mode_count(); ++m) {
    layered.push_back(reg.mode(m));
    if (doubled[m]) layered.push_back({layer_twin(reg.mode(m).label), reg.mode(m).truncation});
  }
  ModeRegistry lreg(layered);

  // base-layer embedding and the delayed embedding of the input configuration
  const Matrix rho = state.is_density() ? state.density() : state.to_density().density();
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(lreg.dim()),
                            static_cast<Eigen::Index>(lreg.dim()));

  std::vector<int> occ;
  std::vector<int> mapped(lreg.mode_count());
  auto embed_index = [&](std::size_t idx, bool delayed) {
    state.registry().decode(idx, occ);
    std::fill(mapped.begin(), mapped.end(), 0);
    std::size_t pos = 0;
    for (std::size_t m = 0; m < reg.mode_count(); ++m) {
      const bool to_twin = delayed && doubled[m] && layer[m] == 1;
      if (doubled[m]) {
        mapped[pos] = to_twin ? 0 : occ[m];
        mapped[pos + 1] = to_twin ? occ[m] : 0;
        pos += 2;
      } else {
        mapped[pos] = occ[m];
        pos += 1;
      }
    }
    return lreg.basis_index(mapped);
  };

  for (std::size_t i = 0; i < reg.dim(); ++i) {
    for (std::size_t j = 0; j < reg.dim(); ++j) {
      const Complex v = rho(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (v == Complex(0.0, 0.0)) continue;
      const std::size_t i0 = embed_index(i, false);
      const std::size_t j0 = embed_index(j, false);
      out(static_cast<Eigen::Index>(i0), static_cast<Eigen::Index>(j0)) += gamma * v;
      const std::size_t i1 = embed_index(i, true);
      const std::size_t j1 = embed_index(j, true);
      out(static_cast<Eigen::Index>(i1), static_cast<Eigen::Index>(j1)) += (1.0 - gamma) * v;
    }
  }
  FockState result = FockState::from_density(std::move(lreg), std::move(out));
  result.add_leakage(state.leakage());
  return result;
}

fock::FockState apply_distinguishability(const DistinguishabilityModel& model,
                                         const fock::FockState& state,
                                         const std::pair<std::string, std::string>& mode_pair) {
  const std::vector<std::pair<std::string, int>> layers{{mode_pair.first, 0},
                                                        {mode_pair.second, 1}};
  return apply_distinguishability(model, state, layers);
}

fock::FockState apply_layered(const fock::FockState& state, const fock::ModeUnitary& u) {
  fock::FockState out = fock::apply_mode_unitary(state, u);
  std::vector<std::string> twins;
  twins.reserve(u.modes.size());
  bool any_twin = false;
  for (const auto& label : u.modes) {
    const std::string t = layer_twin(label);
    twins.push_back(t);
    if (state.registry().has(t)) any_twin = true;
  }
  if (!any_twin) return out;
  for (const auto& t : twins) {
    if (!state.registry().has(t)) {
      throw std::invalid_argument("apply_layered: twin mode missing for " + t);
    }
  }
  return fock::apply_mode_unitary(out, fock::ModeUnitary{twins, u.matrix});
}

std::vector<std::string> layer_labels(const fock::ModeRegistry& registry,
                                      const std::string& label) {
  std::vector<std::string> labels{label};
  const std::string t = layer_twin(label);
  if (registry.has(t)) labels.push_back(t);
  return labels;
}

}  // namespace spdcmux::optics
