#pragma once

#include <complex>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "spdcmux/errors.hpp"

namespace spdcmux::fock {

using Complex = std::complex<double>;
using Vector = Eigen::VectorXcd;
using Matrix = Eigen::MatrixXcd;

struct ModeSpec {
  std::string label;  // spatial path plus polarization, e.g. "a1.H"
  int truncation;     // occupations 0..truncation are representable
};

// Ordered collection of labeled modes. Basis ordering is little-endian over
// the mode order: the first mode varies fastest. This ordering is frozen;
// all serialized matrices use it.
class ModeRegistry {
 public:
  ModeRegistry() = default;
  explicit ModeRegistry(std::vector<ModeSpec> modes);

  std::size_t dim() const { return dim_; }
  std::size_t mode_count() const { return modes_.size(); }
  const std::vector<ModeSpec>& modes() const { return modes_; }
  const ModeSpec& mode(std::size_t i) const { return modes_[i]; }

  bool has(const std::string& label) const;
  std::size_t index_of(const std::string& label) const;  // throws on unknown label

  std::size_t stride(std::size_t mode_index) const { return strides_[mode_index]; }
  int occupation(std::size_t basis_index, std::size_t mode_index) const;
  std::size_t basis_index(const std::vector<int>& occupations) const;
  void decode(std::size_t basis_index, std::vector<int>& occupations) const;

  bool same_modes(const ModeRegistry& other) const;

 private:
  std::vector<ModeSpec> modes_;
  std::vector<std::size_t> strides_;
  std::size_t dim_ = 1;
};

ModeRegistry build_registry(const std::vector<std::pair<std::string, int>>& specs);

// A unitary on the span of the listed modes' creation operators. Column j of
// `matrix` is the single-photon image of mode j. Multi-photon action is the
// induced homomorphic representation.
struct ModeUnitary {
  std::vector<std::string> modes;
  Matrix matrix;
};

// Validates unitarity (U^dag U = I within 1e-12) and shape.
ModeUnitary make_mode_unitary(std::vector<std::string> modes, Matrix matrix);

// Truncated multimode state: pure amplitude vector or Hermitian density
// operator over the registry basis. States accumulate `leakage`, the
// probability mass pushed past the truncation by operations applied so far.
class FockState {
 public:
  static FockState vacuum(ModeRegistry registry);
  static FockState basis(ModeRegistry registry, const std::vector<int>& occupations);
  static FockState from_amplitudes(ModeRegistry registry, Vector amplitudes);
  static FockState from_density(ModeRegistry registry, Matrix density);

  const ModeRegistry& registry() const { return registry_; }
  bool is_density() const { return is_density_; }
  const Vector& amplitudes() const;
  const Matrix& density() const;
  FockState to_density() const;

  // Vector norm (pure) or trace (density).
  double norm() const;
  void normalize();

  double leakage() const { return leakage_; }
  void add_leakage(double mass) { leakage_ += mass; }

  Complex amplitude(const std::vector<int>& occupations) const;
  // Diagonal probability weight of one basis configuration.
  double basis_probability(std::size_t basis_index) const;
  // Marginal photon-number distribution of one mode.
  std::vector<double> number_distribution(const std::string& label) const;
  // Joint photon-number distribution over a set of modes (diagonal marginal).
  std::map<std::vector<int>, double> joint_number_distribution(
      const std::vector<std::string>& labels) const;

 private:
  ModeRegistry registry_;
  bool is_density_ = false;
  Vector amplitudes_;
  Matrix density_;
  double leakage_ = 0.0;
};

// Applies the induced Fock-space image of a mode unitary. Components pushed
// beyond a mode truncation are removed from the state and added to its
// leakage record.
FockState apply_mode_unitary(const FockState& state, const ModeUnitary& u);

// Joint state on the concatenated registries (labels must be disjoint).
FockState tensor(const FockState& a, const FockState& b);

// Density operator on the kept modes, in their original registry order.
FockState partial_trace(const FockState& state, const std::vector<std::string>& keep);

struct ModeCondition {
  enum class Kind { exact, at_least, any };
  Kind kind = Kind::any;
  int count = 0;

  static ModeCondition exactly(int n) { return {Kind::exact, n}; }
  static ModeCondition at_least(int n) { return {Kind::at_least, n}; }
  static ModeCondition any() { return {Kind::any, 0}; }
  bool matches(int n) const;
};

struct Projection {
  std::optional<FockState> state;  // renormalized; empty when probability == 0
  double probability = 0.0;
};

// Projects onto the subspace where every listed mode satisfies its condition.
Projection project(const FockState& state, const std::map<std::string, ModeCondition>& pattern);

// Convergence utility: absolute change of an observable when a truncation
// parameter is raised from t_low to t_high.
double truncation_shift(const std::function<double(int)>& observable, int t_low, int t_high);

}  // namespace spdcmux::fock
