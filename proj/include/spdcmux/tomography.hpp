#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spdcmux/errors.hpp"

namespace spdcmux::tomo {

using Mat4 = Eigen::Matrix4cd;
using Vec4 = Eigen::Vector4cd;
using Complex = std::complex<double>;

// Polarization analysis bases. Two-qubit basis order is (HH, HV, VH, VV)
// with qubit 1 the first arm and H = 0, V = 1.
enum class Pol { H, V, D, A, R, L };

Eigen::Vector2cd pol_ket(Pol p);
char pol_name(Pol p);
Pol pol_from_name(char c);
const std::vector<Pol>& all_pols();          // H V D A R L
const std::vector<Pol>& preparation_pols();  // H V D R

Mat4 cz_unitary();
Vec4 bell_hd_va_ket();  // (|HD> + |VA>)/sqrt(2)
Mat4 density(const Vec4& ket);

// The overcomplete 36-setting two-qubit measurement set.
struct MeasurementSet {
  struct Setting {
    Pol q1, q2;
    Mat4 projector;  // rank-1
  };
  std::vector<Setting> settings;
  std::vector<double> counts;  // empty until filled

  static MeasurementSet overcomplete36();
  std::vector<double> probabilities(const Mat4& rho) const;
  void set_counts_exact(const Mat4& rho, double scale);
  void set_counts_poisson(const Mat4& rho, double scale, std::uint64_t seed);
};

MeasurementSet load_counts_csv(const std::string& path);
void save_counts_csv(const std::string& path, const MeasurementSet& set);

struct VisibilityResult {
  double c_dist = 0.0;
  double c_indist = 0.0;
  double visibility = 0.0;
  bool pathological = false;  // negative visibility
};
// V = (C_dist - C_indist) / C_dist; throws on C_dist <= 0.
VisibilityResult hom_visibility(double c_dist, double c_indist);

// Uhlmann fidelity in the squared-trace convention,
// F = (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2.
double fidelity(const Eigen::MatrixXcd& rho, const Eigen::MatrixXcd& sigma);

// Concurrence squared via the spin-flip eigenvalue construction.
double tangle(const Mat4& rho);
double concurrence(const Mat4& rho);

struct MleOptions {
  double tolerance = 1e-10;       // stop when the log-likelihood gain drops below this
  int max_iterations = 100000;
  bool linear_inversion_init = true;
};

struct TomographyResult {
  Mat4 rho;
  double fidelity = 0.0;  // against the requested target (1 when none given)
  double tangle = 0.0;
  double log_likelihood = 0.0;
  int iterations = 0;
  double final_step = 0.0;  // norm of the last fixed-point residual
};

// Maximum-likelihood state reconstruction from the 36-setting counts using
// the diluted R-rho-R fixed point; the accepted objective never decreases.
// Throws on all-zero counts and on non-convergence.
TomographyResult mle_reconstruct(const MeasurementSet& set,
                                 const std::optional<Mat4>& fidelity_target = std::nullopt,
                                 const MleOptions& options = {});

// Physical density matrix closest (least squares over the setting
// probabilities) to the given normalized frequencies; also the MLE seed.
Mat4 linear_inversion(const MeasurementSet& set, const std::vector<double>& frequencies);

enum class ProcessFidelityMode { chi_overlap, choi_uhlmann };

struct ProcessResult {
  Eigen::MatrixXcd chi;  // 16x16, two-qubit Pauli basis, trace-normalized
  double process_fidelity = 0.0;
  double tp_residual = 0.0;  // || sum_mn chi_mn P_n P_m - I ||_max
};

// The channel may be trace-decreasing; output traces carry the relative
// post-selection weight of each preparation.
using GateChannel = std::function<Mat4(const Mat4&)>;

ProcessResult process_tomography(const GateChannel& channel,
                                 ProcessFidelityMode mode = ProcessFidelityMode::chi_overlap);
ProcessResult process_tomography(const GateChannel& channel,
                                 const std::vector<Mat4>& preparations,
                                 ProcessFidelityMode mode);

const std::vector<Mat4>& pauli_basis16();
Eigen::MatrixXcd ideal_cz_chi();

// Seeded Poisson resampler for synthetic counting statistics.
std::vector<double> poisson_sample(const std::vector<double>& means, std::uint64_t seed);

}  // namespace spdcmux::tomo
