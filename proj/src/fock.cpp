#include "spdcmux/fock.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

namespace spdcmux::fock {

namespace {

constexpr double kUnitaryTol = 1e-12;

[[noreturn]] void throw_unknown_label(const std::string& label) {
  throw std::invalid_argument("unknown mode label: " + label);
}

}  // namespace

ModeRegistry::ModeRegistry(std::vector<ModeSpec> modes) : modes_(std::move(modes)) {
  std::set<std::string> seen;
  strides_.reserve(modes_.size());
  for (const auto& m : modes_) {
    if (m.truncation < 1) {
      throw std::invalid_argument("mode '" + m.label + "': truncation must be >= 1");
    }
    if (!seen.insert(m.label).second) {
      throw std::invalid_argument("duplicate mode label: " + m.label);
    }
    strides_.push_back(dim_);
    dim_ *= static_cast<std::size_t>(m.truncation) + 1;
  }
}

bool ModeRegistry::has(const std::string& label) const {
  return std::any_of(modes_.begin(), modes_.end(),
                     [&](const ModeSpec& m) { return m.label == label; });
}

std::size_t ModeRegistry::index_of(const std::string& label) const {
  for (std::size_t i = 0; i < modes_.size(); ++i) {
    if (modes_[i].label == label) return i;
  }
  throw_unknown_label(label);
}

int ModeRegistry::occupation(std::size_t basis_index, std::size_t mode_index) const {
  const auto base = static_cast<std::size_t>(modes_[mode_index].truncation) + 1;
  return static_cast<int>((basis_index / strides_[mode_index]) % base);
}

std::size_t ModeRegistry::basis_index(const std::vector<int>& occupations) const {
  if (occupations.size() != modes_.size()) {
    throw std::invalid_argument("occupation vector size mismatch");
  }
  std::size_t idx = 0;
  for (std::size_t i = 0; i < modes_.size(); ++i) {
    if (occupations[i] < 0 || occupations[i] > modes_[i].truncation) {
      throw std::invalid_argument("occupation out of range for mode '" + modes_[i].label + "'");
    }
    idx += static_cast<std::size_t>(occupations[i]) * strides_[i];
  }
  return idx;
}

void ModeRegistry::decode(std::size_t basis_index, std::vector<int>& occupations) const {
  occupations.resize(modes_.size());
  for (std::size_t i = 0; i < modes_.size(); ++i) {
    occupations[i] = occupation(basis_index, i);
  }
}

bool ModeRegistry::same_modes(const ModeRegistry& other) const {
  if (modes_.size() != other.modes_.size()) return false;
  for (std::size_t i = 0; i < modes_.size(); ++i) {
    if (modes_[i].label != other.modes_[i].label ||
        modes_[i].truncation != other.modes_[i].truncation) {
      return false;
    }
  }
  return true;
}

ModeRegistry build_registry(const std::vector<std::pair<std::string, int>>& specs) {
  std::vector<ModeSpec> modes;
  modes.reserve(specs.size());
  for (const auto& [label, truncation] : specs) modes.push_back({label, truncation});
  return ModeRegistry(std::move(modes));
}

ModeUnitary make_mode_unitary(std::vector<std::string> modes, Matrix matrix) {
  const auto k = static_cast<Eigen::Index>(modes.size());
  if (matrix.rows() != k || matrix.cols() != k) {
    throw std::invalid_argument("mode unitary shape does not match mode count");
  }
  const double dev = (matrix.adjoint() * matrix - Matrix::Identity(k, k)).cwiseAbs().maxCoeff();
  if (dev > kUnitaryTol) {
    std::ostringstream os;
    os << "matrix is not unitary (max |U^dag U - I| = " << dev << ")";
    throw std::invalid_argument(os.str());
  }
  return ModeUnitary{std::move(modes), std::move(matrix)};
}

FockState FockState::vacuum(ModeRegistry registry) {
  FockState s;
  s.registry_ = std::move(registry);
  s.amplitudes_ = Vector::Zero(static_cast<Eigen::Index>(s.registry_.dim()));
  s.amplitudes_[0] = 1.0;
  return s;
}

FockState FockState::basis(ModeRegistry registry, const std::vector<int>& occupations) {
  FockState s;
  s.registry_ = std::move(registry);
  s.amplitudes_ = Vector::Zero(static_cast<Eigen::Index>(s.registry_.dim()));
  s.amplitudes_[static_cast<Eigen::Index>(s.registry_.basis_index(occupations))] = 1.0;
  return s;
}

FockState FockState::from_amplitudes(ModeRegistry registry, Vector amplitudes) {
  if (static_cast<std::size_t>(amplitudes.size()) != registry.dim()) {
    throw std::invalid_argument("amplitude vector size does not match registry dimension");
  }
  FockState s;
  s.registry_ = std::move(registry);
  s.amplitudes_ = std::move(amplitudes);
  return s;
}

FockState FockState::from_density(ModeRegistry registry, Matrix density) {
  if (static_cast<std::size_t>(density.rows()) != registry.dim() ||
      static_cast<std::size_t>(density.cols()) != registry.dim()) {
    throw std::invalid_argument("density matrix size does not match registry dimension");
  }
  const double herm_dev = (density - density.adjoint()).cwiseAbs().maxCoeff();
  if (herm_dev > 1e-10) {
    throw std::invalid_argument("density matrix is not Hermitian");
  }
  FockState s;
  s.registry_ = std::move(registry);
  s.is_density_ = true;
  s.density_ = std::move(density);
  return s;
}

const Vector& FockState::amplitudes() const {
  if (is_density_) throw std::logic_error("state is a density operator, not a pure vector");
  return amplitudes_;
}

const Matrix& FockState::density() const {
  if (!is_density_) throw std::logic_error("state is pure; call to_density() first");
  return density_;
}

FockState FockState::to_density() const {
  if (is_density_) return *this;
  FockState s;
  s.registry_ = registry_;
  s.is_density_ = true;
  s.density_ = amplitudes_ * amplitudes_.adjoint();
  s.leakage_ = leakage_;
  return s;
}

double FockState::norm() const {
  if (is_density_) return density_.trace().real();
  return amplitudes_.norm();
}

void FockState::normalize() {
  if (is_density_) {
    const double tr = density_.trace().real();
    if (tr <= 0.0) throw NumericalError("cannot normalize density operator with trace <= 0");
    density_ /= tr;
  } else {
    const double n = amplitudes_.norm();
    if (n <= 0.0) throw NumericalError("cannot normalize zero state");
    amplitudes_ /= n;
  }
}

Complex FockState::amplitude(const std::vector<int>& occupations) const {
  const auto idx = static_cast<Eigen::Index>(registry_.basis_index(occupations));
  if (is_density_) throw std::logic_error("amplitude() requires a pure state");
  return amplitudes_[idx];
}

double FockState::basis_probability(std::size_t basis_index) const {
  const auto i = static_cast<Eigen::Index>(basis_index);
  if (is_density_) return density_(i, i).real();
  return std::norm(amplitudes_[i]);
}

std::vector<double> FockState::number_distribution(const std::string& label) const {
  const std::size_t m = registry_.index_of(label);
  std::vector<double> dist(static_cast<std::size_t>(registry_.mode(m).truncation) + 1, 0.0);
  for (std::size_t i = 0; i < registry_.dim(); ++i) {
    dist[static_cast<std::size_t>(registry_.occupation(i, m))] += basis_probability(i);
  }
  return dist;
}

std::map<std::vector<int>, double> FockState::joint_number_distribution(
    const std::vector<std::string>& labels) const {
  std::vector<std::size_t> idx;
  idx.reserve(labels.size());
  for (const auto& l : labels) idx.push_back(registry_.index_of(l));
  std::map<std::vector<int>, double> dist;
  std::vector<int> key(labels.size());
  for (std::size_t i = 0; i < registry_.dim(); ++i) {
    for (std::size_t k = 0; k < idx.size(); ++k) key[k] = registry_.occupation(i, idx[k]);
    dist[key] += basis_probability(i);
  }
  return dist;
}

namespace {

// Induced action of a k-mode unitary on the truncated k-mode Fock block,
// together with the probability mass each input column pushes past the caps.
struct InducedOperator {
  Matrix op;                      // caps-truncated matrix, acted-block basis
  std::vector<double> column_leak;
};

// Expands prod_i (sum_j U(j,i) a_j^dag)^{n_i} |0> exactly in a workspace whose
// per-mode cap is the total photon number, then folds entries back into the
// truncated block. Entries past a cap are leak.
InducedOperator build_induced(const Matrix& u, const std::vector<int>& caps) {
  const std::size_t k = caps.size();
  std::size_t block_dim = 1;
  std::vector<std::size_t> block_stride(k);
  for (std::size_t i = 0; i < k; ++i) {
    block_stride[i] = block_dim;
    block_dim *= static_cast<std::size_t>(caps[i]) + 1;
  }

  InducedOperator result;
  result.op = Matrix::Zero(static_cast<Eigen::Index>(block_dim), static_cast<Eigen::Index>(block_dim));
  result.column_leak.assign(block_dim, 0.0);

  std::vector<int> occ(k);
  std::vector<int> ws_occ(k);
  for (std::size_t col = 0; col < block_dim; ++col) {
    // decode column occupations in the truncated block
    {
      std::size_t rem = col;
      for (std::size_t i = 0; i < k; ++i) {
        const std::size_t base = static_cast<std::size_t>(caps[i]) + 1;
        occ[i] = static_cast<int>(rem % base);
        rem /= base;
      }
    }
    const int total = std::accumulate(occ.begin(), occ.end(), 0);
    if (total == 0) {
      result.op(0, static_cast<Eigen::Index>(col)) = 1.0;
      continue;
    }

    // workspace: every mode capped at the total photon number
    const std::size_t ws_base = static_cast<std::size_t>(total) + 1;
    std::size_t ws_dim = 1;
    std::vector<std::size_t> ws_stride(k);
    for (std::size_t i = 0; i < k; ++i) {
      ws_stride[i] = ws_dim;
      ws_dim *= ws_base;
    }
    Vector work = Vector::Zero(static_cast<Eigen::Index>(ws_dim));
    work[0] = 1.0;
    Vector next(static_cast<Eigen::Index>(ws_dim));

    for (std::size_t i = 0; i < k; ++i) {
      for (int rep = 0; rep < occ[i]; ++rep) {
        next.setZero();
        for (std::size_t idx = 0; idx < ws_dim; ++idx) {
          const Complex amp = work[static_cast<Eigen::Index>(idx)];
          if (amp == Complex(0.0, 0.0)) continue;
          for (std::size_t j = 0; j < k; ++j) {
            const Complex uji = u(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i));
            if (uji == Complex(0.0, 0.0)) continue;
            const int mj = static_cast<int>((idx / ws_stride[j]) % ws_base);
            // photon count per mode can never exceed the total, so mj+1 fits
            next[static_cast<Eigen::Index>(idx + ws_stride[j])] +=
                amp * uji * std::sqrt(static_cast<double>(mj) + 1.0);
          }
        }
        work.swap(next);
      }
    }

    double norm_factor = 1.0;
    for (std::size_t i = 0; i < k; ++i) {
      for (int n = 2; n <= occ[i]; ++n) norm_factor *= static_cast<double>(n);
    }
    const double scale = 1.0 / std::sqrt(norm_factor);

    for (std::size_t idx = 0; idx < ws_dim; ++idx) {
      const Complex amp = work[static_cast<Eigen::Index>(idx)] * scale;
      if (amp == Complex(0.0, 0.0)) continue;
      bool fits = true;
      std::size_t row = 0;
      for (std::size_t i = 0; i < k; ++i) {
        ws_occ[i] = static_cast<int>((idx / ws_stride[i]) % ws_base);
        if (ws_occ[i] > caps[i]) {
          fits = false;
          break;
        }
        row += static_cast<std::size_t>(ws_occ[i]) * block_stride[i];
      }
      if (fits) {
        result.op(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) = amp;
      } else {
        result.column_leak[col] += std::norm(amp);
      }
    }
  }
  return result;
}

// Applies the induced block operator to every acted-block slice of a full
// state vector in place.
void apply_block_to_vector(Vector& v, const Matrix& block,
                           const std::vector<std::size_t>& block_offsets,
                           const std::vector<std::size_t>& rest_offsets) {
  const auto block_dim = static_cast<std::size_t>(block.rows());
  Vector sub(static_cast<Eigen::Index>(block_dim));
  for (const std::size_t base : rest_offsets) {
    for (std::size_t c = 0; c < block_dim; ++c) {
      sub[static_cast<Eigen::Index>(c)] = v[static_cast<Eigen::Index>(base + block_offsets[c])];
    }
    Vector out = block * sub;
    for (std::size_t c = 0; c < block_dim; ++c) {
      v[static_cast<Eigen::Index>(base + block_offsets[c])] = out[static_cast<Eigen::Index>(c)];
    }
  }
}

}  // namespace

FockState apply_mode_unitary(const FockState& state, const ModeUnitary& u) {
  const ModeRegistry& reg = state.registry();
  const std::size_t k = u.modes.size();
  if (k == 0) return state;

  make_mode_unitary(u.modes, u.matrix);  // re-validate shape and unitarity

  std::vector<std::size_t> mode_idx(k);
  std::vector<int> caps(k);
  for (std::size_t i = 0; i < k; ++i) {
    mode_idx[i] = reg.index_of(u.modes[i]);
    caps[i] = reg.mode(mode_idx[i]).truncation;
  }

  const InducedOperator induced = build_induced(u.matrix, caps);
  const auto block_dim = static_cast<std::size_t>(induced.op.rows());

  // Offset of each acted-block basis element within the full index space.
  std::vector<std::size_t> block_offsets(block_dim);
  {
    std::vector<std::size_t> block_stride(k);
    std::size_t d = 1;
    for (std::size_t i = 0; i < k; ++i) {
      block_stride[i] = d;
      d *= static_cast<std::size_t>(caps[i]) + 1;
    }
    for (std::size_t c = 0; c < block_dim; ++c) {
      std::size_t off = 0;
      for (std::size_t i = 0; i < k; ++i) {
        const std::size_t base = static_cast<std::size_t>(caps[i]) + 1;
        const std::size_t n = (c / block_stride[i]) % base;
        off += n * reg.stride(mode_idx[i]);
      }
      block_offsets[c] = off;
    }
  }

  // Base offsets of every configuration of the non-acted modes.
  std::vector<std::size_t> rest_offsets;
  rest_offsets.reserve(reg.dim() / block_dim);
  {
    std::vector<bool> acted(reg.mode_count(), false);
    for (const std::size_t m : mode_idx) acted[m] = true;
    std::vector<std::size_t> rest_modes;
    for (std::size_t m = 0; m < reg.mode_count(); ++m) {
      if (!acted[m]) rest_modes.push_back(m);
    }
    std::vector<int> counter(rest_modes.size(), 0);
    while (true) {
      std::size_t off = 0;
      for (std::size_t i = 0; i < rest_modes.size(); ++i) {
        off += static_cast<std::size_t>(counter[i]) * reg.stride(rest_modes[i]);
      }
      rest_offsets.push_back(off);
      std::size_t pos = 0;
      while (pos < rest_modes.size()) {
        if (++counter[pos] <= reg.mode(rest_modes[pos]).truncation) break;
        counter[pos] = 0;
        ++pos;
      }
      if (pos == rest_modes.size()) break;
      if (rest_modes.empty()) break;
    }
    if (rest_modes.empty()) rest_offsets.assign(1, 0);
  }

  FockState out = state;
  if (!state.is_density()) {
    Vector v = state.amplitudes();
    const double before = v.squaredNorm();
    apply_block_to_vector(v, induced.op, block_offsets, rest_offsets);
    const double after = v.squaredNorm();
    out = FockState::from_amplitudes(reg, std::move(v));
    out.add_leakage(state.leakage() + std::max(0.0, before - after));
  } else {
    Matrix rho = state.density();
    const double before = rho.trace().real();
    const auto dim = rho.rows();
    // left multiply by the induced operator
    for (Eigen::Index col = 0; col < dim; ++col) {
      Vector v = rho.col(col);
      apply_block_to_vector(v, induced.op, block_offsets, rest_offsets);
      rho.col(col) = v;
    }
    // right multiply by its adjoint
    for (Eigen::Index row = 0; row < dim; ++row) {
      Vector v = rho.row(row).conjugate().transpose();
      apply_block_to_vector(v, induced.op, block_offsets, rest_offsets);
      rho.row(row) = v.conjugate().transpose();
    }
    const double after = rho.trace().real();
    out = FockState::from_density(reg, std::move(rho));
    out.add_leakage(state.leakage() + std::max(0.0, before - after));
  }
  return out;
}

FockState tensor(const FockState& a, const FockState& b) {
  std::vector<ModeSpec> joint = a.registry().modes();
  for (const auto& m : b.registry().modes()) {
    if (a.registry().has(m.label)) {
      throw std::invalid_argument("tensor: mode label collision: " + m.label);
    }
    joint.push_back(m);
  }
  ModeRegistry reg(std::move(joint));
  const std::size_t da = a.registry().dim();
  const std::size_t db = b.registry().dim();

  if (!a.is_density() && !b.is_density()) {
    Vector v(static_cast<Eigen::Index>(da * db));
    for (std::size_t ib = 0; ib < db; ++ib) {
      for (std::size_t ia = 0; ia < da; ++ia) {
        v[static_cast<Eigen::Index>(ia + da * ib)] =
            a.amplitudes()[static_cast<Eigen::Index>(ia)] *
            b.amplitudes()[static_cast<Eigen::Index>(ib)];
      }
    }
    FockState out = FockState::from_amplitudes(std::move(reg), std::move(v));
    out.add_leakage(a.leakage() + b.leakage());
    return out;
  }

  const Matrix ra = a.is_density() ? a.density() : a.to_density().density();
  const Matrix rb = b.is_density() ? b.density() : b.to_density().density();
  Matrix rho(static_cast<Eigen::Index>(da * db), static_cast<Eigen::Index>(da * db));
  for (std::size_t ib = 0; ib < db; ++ib) {
    for (std::size_t jb = 0; jb < db; ++jb) {
      for (std::size_t ia = 0; ia < da; ++ia) {
        for (std::size_t ja = 0; ja < da; ++ja) {
          rho(static_cast<Eigen::Index>(ia + da * ib), static_cast<Eigen::Index>(ja + da * jb)) =
              ra(static_cast<Eigen::Index>(ia), static_cast<Eigen::Index>(ja)) *
              rb(static_cast<Eigen::Index>(ib), static_cast<Eigen::Index>(jb));
        }
      }
    }
  }
  FockState out = FockState::from_density(std::move(reg), std::move(rho));
  out.add_leakage(a.leakage() + b.leakage());
  return out;
}

FockState partial_trace(const FockState& state, const std::vector<std::string>& keep) {
  const ModeRegistry& reg = state.registry();
  std::vector<bool> keep_mask(reg.mode_count(), false);
  for (const auto& label : keep) keep_mask[reg.index_of(label)] = true;

  std::vector<ModeSpec> kept_modes;
  std::vector<std::size_t> kept_idx;
  std::vector<std::size_t> traced_idx;
  for (std::size_t m = 0; m < reg.mode_count(); ++m) {
    if (keep_mask[m]) {
      kept_modes.push_back(reg.mode(m));
      kept_idx.push_back(m);
    } else {
      traced_idx.push_back(m);
    }
  }
  ModeRegistry out_reg(kept_modes);

  const Matrix rho = state.is_density() ? state.density() : state.to_density().density();

  // enumerate kept and traced configurations via offsets in the full space
  auto enumerate_offsets = [&](const std::vector<std::size_t>& mode_set) {
    std::vector<std::size_t> offsets;
    std::vector<int> counter(mode_set.size(), 0);
    while (true) {
      std::size_t off = 0;
      for (std::size_t i = 0; i < mode_set.size(); ++i) {
        off += static_cast<std::size_t>(counter[i]) * reg.stride(mode_set[i]);
      }
      offsets.push_back(off);
      std::size_t pos = 0;
      while (pos < mode_set.size()) {
        if (++counter[pos] <= reg.mode(mode_set[pos]).truncation) break;
        counter[pos] = 0;
        ++pos;
      }
      if (mode_set.empty() || pos == mode_set.size()) break;
    }
    return offsets;
  };

  const std::vector<std::size_t> kept_offsets = enumerate_offsets(kept_idx);
  const std::vector<std::size_t> traced_offsets = enumerate_offsets(traced_idx);

  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(out_reg.dim()),
                            static_cast<Eigen::Index>(out_reg.dim()));
  for (std::size_t i = 0; i < kept_offsets.size(); ++i) {
    for (std::size_t j = 0; j < kept_offsets.size(); ++j) {
      Complex sum = 0.0;
      for (const std::size_t t : traced_offsets) {
        sum += rho(static_cast<Eigen::Index>(kept_offsets[i] + t),
                   static_cast<Eigen::Index>(kept_offsets[j] + t));
      }
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = sum;
    }
  }
  FockState result = FockState::from_density(std::move(out_reg), std::move(out));
  result.add_leakage(state.leakage());
  return result;
}

bool ModeCondition::matches(int n) const {
  switch (kind) {
    case Kind::exact:
      return n == count;
    case Kind::at_least:
      return n >= count;
    case Kind::any:
      return true;
  }
  return false;
}

Projection project(const FockState& state, const std::map<std::string, ModeCondition>& pattern) {
  const ModeRegistry& reg = state.registry();
  std::vector<std::pair<std::size_t, ModeCondition>> checks;
  checks.reserve(pattern.size());
  for (const auto& [label, cond] : pattern) checks.emplace_back(reg.index_of(label), cond);

  std::vector<bool> mask(reg.dim());
  double probability = 0.0;
  for (std::size_t i = 0; i < reg.dim(); ++i) {
    bool ok = true;
    for (const auto& [m, cond] : checks) {
      if (!cond.matches(reg.occupation(i, m))) {
        ok = false;
        break;
      }
    }
    mask[i] = ok;
    if (ok) probability += state.basis_probability(i);
  }

  Projection result;
  result.probability = probability;
  if (probability <= 0.0) return result;

  if (!state.is_density()) {
    Vector v = state.amplitudes();
    for (std::size_t i = 0; i < reg.dim(); ++i) {
      if (!mask[i]) v[static_cast<Eigen::Index>(i)] = 0.0;
    }
    FockState s = FockState::from_amplitudes(reg, std::move(v));
    s.normalize();
    s.add_leakage(state.leakage());
    result.state = std::move(s);
  } else {
    Matrix rho = state.density();
    for (std::size_t i = 0; i < reg.dim(); ++i) {
      for (std::size_t j = 0; j < reg.dim(); ++j) {
        if (!mask[i] || !mask[j]) rho(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 0.0;
      }
    }
    FockState s = FockState::from_density(reg, std::move(rho));
    s.normalize();
    s.add_leakage(state.leakage());
    result.state = std::move(s);
  }
  return result;
}

double truncation_shift(const std::function<double(int)>& observable, int t_low, int t_high) {
  return std::abs(observable(t_high) - observable(t_low));
}

}  // namespace spdcmux::fock
