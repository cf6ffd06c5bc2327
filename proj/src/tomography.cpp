#include "spdcmux/tomography.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace spdcmux::tomo {

namespace {

constexpr double kPsdTol = 1e-8;

// aliasing-safe (A + A^dag)/2
template <class M>
M hermitized(const M& m) {
  M adj = m.adjoint();
  return (m + adj) / 2.0;
}

Eigen::Vector2cd ket2(Complex a, Complex b) {
  Eigen::Vector2cd v;
  v << a, b;
  return v;
}

// sqrt of a PSD matrix; clips round-off negatives, throws on genuinely
// negative spectrum
Eigen::MatrixXcd psd_sqrt(const Eigen::MatrixXcd& m, const char* what) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m);
  if (es.eigenvalues().minCoeff() < -kPsdTol) {
    std::ostringstream os;
    os << what << ": matrix is not positive semidefinite (min eigenvalue "
       << es.eigenvalues().minCoeff() << ")";
    throw std::invalid_argument(os.str());
  }
  Eigen::VectorXd clipped = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().adjoint();
}

void check_density(const Eigen::MatrixXcd& rho, const char* what) {
  if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > kPsdTol) {
    throw std::invalid_argument(std::string(what) + ": matrix is not Hermitian");
  }
  if (std::abs(rho.trace().real() - 1.0) > 1e-6) {
    throw std::invalid_argument(std::string(what) + ": trace is not 1");
  }
}

Mat4 spin_flip() {
  Mat4 s = Mat4::Zero();
  s(0, 3) = -1;
  s(1, 2) = 1;
  s(2, 1) = 1;
  s(3, 0) = -1;
  return s;
}

}  // namespace

Eigen::Vector2cd pol_ket(Pol p) {
  const double rs = 1.0 / std::sqrt(2.0);
  switch (p) {
    case Pol::H:
      return ket2(1, 0);
    case Pol::V:
      return ket2(0, 1);
    case Pol::D:
      return ket2(rs, rs);
    case Pol::A:
      return ket2(rs, -rs);
    case Pol::R:
      return ket2(rs, Complex(0, rs));
    case Pol::L:
      return ket2(rs, Complex(0, -rs));
  }
  throw std::invalid_argument("unknown polarization");
}

char pol_name(Pol p) {
  switch (p) {
    case Pol::H: return 'H';
    case Pol::V: return 'V';
    case Pol::D: return 'D';
    case Pol::A: return 'A';
    case Pol::R: return 'R';
    case Pol::L: return 'L';
  }
  return '?';
}

Pol pol_from_name(char c) {
  switch (c) {
    case 'H': return Pol::H;
    case 'V': return Pol::V;
    case 'D': return Pol::D;
    case 'A': return Pol::A;
    case 'R': return Pol::R;
    case 'L': return Pol::L;
    default:
      throw std::invalid_argument(std::string("unknown polarization setting '") + c + "'");
  }
}

const std::vector<Pol>& all_pols() {
  static const std::vector<Pol> pols{Pol::H, Pol::V, Pol::D, Pol::A, Pol::R, Pol::L};
  return pols;
}

const std::vector<Pol>& preparation_pols() {
  static const std::vector<Pol> pols{Pol::H, Pol::V, Pol::D, Pol::R};
  return pols;
}

Mat4 cz_unitary() {
  Mat4 u = Mat4::Identity();
  u(3, 3) = -1;
  return u;
}

Vec4 bell_hd_va_ket() {
  // (|HD> + |VA>)/sqrt(2) = (|HH> + |HV> + |VH> - |VV>)/2
  Vec4 v;
  v << 0.5, 0.5, 0.5, -0.5;
  return v;
}

Mat4 density(const Vec4& ket) { return ket * ket.adjoint(); }

MeasurementSet MeasurementSet::overcomplete36() {
  MeasurementSet set;
  set.settings.reserve(36);
  for (const Pol p1 : all_pols()) {
    for (const Pol p2 : all_pols()) {
      const Eigen::Vector2cd k1 = pol_ket(p1);
      const Eigen::Vector2cd k2 = pol_ket(p2);
      Vec4 joint;
      joint << k1(0) * k2(0), k1(0) * k2(1), k1(1) * k2(0), k1(1) * k2(1);
      set.settings.push_back({p1, p2, density(joint)});
    }
  }
  return set;
}

std::vector<double> MeasurementSet::probabilities(const Mat4& rho) const {
  std::vector<double> p;
  p.reserve(settings.size());
  for (const auto& s : settings) p.push_back((s.projector * rho).trace().real());
  return p;
}

void MeasurementSet::set_counts_exact(const Mat4& rho, double scale) {
  counts = probabilities(rho);
  for (double& c : counts) c *= scale;
}

void MeasurementSet::set_counts_poisson(const Mat4& rho, double scale, std::uint64_t seed) {
  std::vector<double> means = probabilities(rho);
  for (double& m : means) m *= scale;
  counts = poisson_sample(means, seed);
}

MeasurementSet load_counts_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open counts file: " + path);
  MeasurementSet set = MeasurementSet::overcomplete36();
  std::vector<bool> seen(set.settings.size(), false);
  set.counts.assign(set.settings.size(), 0.0);

  std::string line;
  int line_no = 0;
  bool header_checked = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    std::string q1, q2, count_str;
    if (!std::getline(row, q1, ',') || !std::getline(row, q2, ',') ||
        !std::getline(row, count_str, ',')) {
      throw ConfigError(path + ":" + std::to_string(line_no) + ": expected 3 columns");
    }
    auto trim = [](std::string& s) {
      while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.erase(s.begin());
      while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
    };
    trim(q1);
    trim(q2);
    trim(count_str);
    if (!header_checked) {
      header_checked = true;
      if (q1 == "setting_qubit1") continue;  // header row
    }
    if (q1.size() != 1 || q2.size() != 1) {
      throw ConfigError(path + ":" + std::to_string(line_no) + ": settings must be single letters");
    }
    Pol p1, p2;
    try {
      p1 = pol_from_name(q1[0]);
      p2 = pol_from_name(q2[0]);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    double value = 0.0;
    try {
      value = std::stod(count_str);
    } catch (...) {
      throw ConfigError(path + ":" + std::to_string(line_no) + ": bad count '" + count_str + "'");
    }
    if (value < 0.0) {
      throw ConfigError(path + ":" + std::to_string(line_no) + ": counts must be >= 0");
    }
    bool matched = false;
    for (std::size_t i = 0; i < set.settings.size(); ++i) {
      if (set.settings[i].q1 == p1 && set.settings[i].q2 == p2) {
        if (seen[i]) {
          throw ConfigError(path + ":" + std::to_string(line_no) + ": duplicate setting " + q1 +
                            "," + q2);
        }
        seen[i] = true;
        set.counts[i] = value;
        matched = true;
        break;
      }
    }
    if (!matched) {
      throw ConfigError(path + ":" + std::to_string(line_no) + ": unknown setting");
    }
  }
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (!seen[i]) {
      throw ConfigError(path + ": missing setting " +
                        std::string(1, pol_name(set.settings[i].q1)) + "," +
                        std::string(1, pol_name(set.settings[i].q2)));
    }
  }
  return set;
}

void save_counts_csv(const std::string& path, const MeasurementSet& set) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write counts file: " + path);
  out << "setting_qubit1,setting_qubit2,counts\n";
  for (std::size_t i = 0; i < set.settings.size(); ++i) {
    out << pol_name(set.settings[i].q1) << ',' << pol_name(set.settings[i].q2) << ','
        << (i < set.counts.size() ? set.counts[i] : 0.0) << '\n';
  }
}

VisibilityResult hom_visibility(double c_dist, double c_indist) {
  if (!(c_dist > 0.0)) throw std::invalid_argument("distinguishable rate must be positive");
  VisibilityResult r;
  r.c_dist = c_dist;
  r.c_indist = c_indist;
  r.visibility = (c_dist - c_indist) / c_dist;
  r.pathological = r.visibility < 0.0;
  return r;
}

double fidelity(const Eigen::MatrixXcd& rho, const Eigen::MatrixXcd& sigma) {
  if (rho.rows() != sigma.rows() || rho.cols() != sigma.cols() || rho.rows() != rho.cols()) {
    throw std::invalid_argument("fidelity: shape mismatch");
  }
  check_density(rho, "fidelity");
  check_density(sigma, "fidelity");
  const Eigen::MatrixXcd root = psd_sqrt(rho, "fidelity");
  const Eigen::MatrixXcd inner = hermitized(Eigen::MatrixXcd(root * sigma * root));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(inner);
  // eigenvalues at round-off scale would inflate the trace through the
  // square root; drop anything 14 orders below the top
  const double floor = 1e-14 * std::max(0.0, es.eigenvalues().maxCoeff());
  double tr = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const double ev = es.eigenvalues()[i];
    if (ev > floor) tr += std::sqrt(ev);
  }
  return std::min(1.0, tr * tr);
}

double concurrence(const Mat4& rho) {
  check_density(rho, "concurrence");
  const Mat4 root = psd_sqrt(rho, "concurrence");
  const Mat4 s = spin_flip();
  const Mat4 inner = hermitized(Mat4(root * (s * rho.conjugate() * s) * root));
  Eigen::SelfAdjointEigenSolver<Mat4> es(inner);
  const double floor = 1e-14 * std::max(0.0, es.eigenvalues().maxCoeff());
  std::array<double, 4> lams{};
  for (int i = 0; i < 4; ++i) {
    const double ev = es.eigenvalues()[i];
    lams[i] = ev > floor ? std::sqrt(ev) : 0.0;
  }
  std::sort(lams.begin(), lams.end(), std::greater<>());
  return std::max(0.0, lams[0] - lams[1] - lams[2] - lams[3]);
}

double tangle(const Mat4& rho) {
  const double c = concurrence(rho);
  return std::clamp(c * c, 0.0, 1.0);
}

Mat4 linear_inversion(const MeasurementSet& set, const std::vector<double>& frequencies) {
  const auto& paulis = pauli_basis16();
  const auto n = static_cast<Eigen::Index>(set.settings.size());
  Eigen::MatrixXd a(n, 16);
  Eigen::VectorXd b(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (int m = 0; m < 16; ++m) {
      a(j, m) = (set.settings[static_cast<std::size_t>(j)].projector * paulis[m]).trace().real() / 4.0;
    }
    b(j) = frequencies[static_cast<std::size_t>(j)];
  }
  const Eigen::VectorXd c = a.colPivHouseholderQr().solve(b);
  Mat4 rho = Mat4::Zero();
  for (int m = 0; m < 16; ++m) rho += c(m) / 4.0 * paulis[m];
  rho = hermitized(rho);

  // project to the physical cone
  Eigen::SelfAdjointEigenSolver<Mat4> es(rho);
  Eigen::Vector4d ev = es.eigenvalues().cwiseMax(0.0);
  const double tr = ev.sum();
  if (tr <= 0.0) return Mat4::Identity() / 4.0;
  ev /= tr;
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

namespace {

double log_likelihood(const std::vector<double>& counts, const std::vector<double>& probs) {
  double ll = 0.0;
  for (std::size_t j = 0; j < counts.size(); ++j) {
    if (counts[j] <= 0.0) continue;
    ll += counts[j] * std::log(std::max(probs[j], 1e-300));
  }
  return ll;
}

}  // namespace

TomographyResult mle_reconstruct(const MeasurementSet& set,
                                 const std::optional<Mat4>& fidelity_target,
                                 const MleOptions& options) {
  if (set.counts.size() != set.settings.size()) {
    throw std::invalid_argument("mle_reconstruct: counts missing");
  }
  double total = 0.0;
  for (const double c : set.counts) {
    if (c < 0.0) throw std::invalid_argument("mle_reconstruct: negative count");
    total += c;
  }
  if (total <= 0.0) throw NumericalError("mle_reconstruct: all counts are zero");

  Mat4 rho = Mat4::Identity() / 4.0;
  if (options.linear_inversion_init) {
    std::vector<double> freq(set.counts.size());
    // sum of the 36 projectors is 9 I, so probabilities sum to 9
    for (std::size_t j = 0; j < freq.size(); ++j) freq[j] = set.counts[j] * 9.0 / total;
    rho = linear_inversion(set, freq);
    // keep strictly positive for the fixed-point iteration
    rho = (1.0 - 1e-9) * rho + 1e-9 * Mat4::Identity() / 4.0;
  }

  auto probabilities_of = [&set](const Mat4& r) {
    std::vector<double> p(set.settings.size());
    for (std::size_t j = 0; j < set.settings.size(); ++j) {
      p[j] = (set.settings[j].projector * r).trace().real();
    }
    return p;
  };

  std::vector<double> probs = probabilities_of(rho);
  double ll = log_likelihood(set.counts, probs);
  double final_step = 0.0;
  int iter = 0;
  bool converged = false;

  for (; iter < options.max_iterations; ++iter) {
    // R operator of the fixed point, normalized so R(rho*) rho* = rho*
    Mat4 r_op = Mat4::Zero();
    for (std::size_t j = 0; j < set.settings.size(); ++j) {
      if (set.counts[j] <= 0.0) continue;
      r_op += set.counts[j] / std::max(probs[j], 1e-300) * set.settings[j].projector;
    }
    r_op /= total;

    final_step = (r_op * rho - rho).norm();

    bool accepted = false;
    double best_ll = ll;
    Mat4 best_rho = rho;
    for (double eps = 1.0; eps >= 1e-7; eps /= 2.0) {
      const Mat4 step = (1.0 - eps) * Mat4::Identity() + eps * r_op;
      Mat4 cand = step * rho * step.adjoint();
      cand /= cand.trace().real();
      const std::vector<double> cand_probs = probabilities_of(cand);
      const double cand_ll = log_likelihood(set.counts, cand_probs);
      if (cand_ll >= ll) {
        best_ll = cand_ll;
        best_rho = cand;
        probs = cand_probs;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      converged = true;  // no ascent direction left at the dilution floor
      break;
    }
    const double gain = best_ll - ll;
    rho = best_rho;
    ll = best_ll;
    if (gain < options.tolerance) {
      converged = true;
      ++iter;
      break;
    }
  }

  if (!converged) {
    std::ostringstream os;
    os << "mle_reconstruct: no convergence after " << options.max_iterations
       << " iterations (final fixed-point residual " << final_step << ")";
    throw NumericalError(os.str());
  }

  rho = hermitized(rho);
  rho /= rho.trace().real();

  TomographyResult result;
  result.rho = rho;
  result.log_likelihood = ll;
  result.iterations = iter;
  result.final_step = final_step;
  result.tangle = tangle(rho);
  result.fidelity = fidelity_target ? fidelity(rho, *fidelity_target) : 1.0;
  return result;
}

const std::vector<Mat4>& pauli_basis16() {
  static const std::vector<Mat4> basis = [] {
    std::array<Eigen::Matrix2cd, 4> p;
    p[0] = Eigen::Matrix2cd::Identity();
    p[1] << 0, 1, 1, 0;
    p[2] << 0, Complex(0, -1), Complex(0, 1), 0;
    p[3] << 1, 0, 0, -1;
    std::vector<Mat4> out;
    out.reserve(16);
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) {
        Mat4 m;
        for (int a = 0; a < 2; ++a) {
          for (int b = 0; b < 2; ++b) {
            for (int c = 0; c < 2; ++c) {
              for (int d = 0; d < 2; ++d) {
                m(2 * a + c, 2 * b + d) = p[i](a, b) * p[j](c, d);
              }
            }
          }
        }
        out.push_back(m);
      }
    }
    return out;
  }();
  return basis;
}

Eigen::MatrixXcd ideal_cz_chi() {
  const auto& paulis = pauli_basis16();
  const Mat4 u = cz_unitary();
  Eigen::VectorXcd c(16);
  for (int m = 0; m < 16; ++m) c(m) = (paulis[m] * u).trace() / 4.0;
  return c * c.adjoint();
}

namespace {

std::vector<Mat4> default_preparations() {
  std::vector<Mat4> preps;
  preps.reserve(16);
  for (const Pol p1 : preparation_pols()) {
    for (const Pol p2 : preparation_pols()) {
      const Eigen::Vector2cd k1 = pol_ket(p1);
      const Eigen::Vector2cd k2 = pol_ket(p2);
      Vec4 joint;
      joint << k1(0) * k2(0), k1(0) * k2(1), k1(1) * k2(0), k1(1) * k2(1);
      preps.push_back(density(joint));
    }
  }
  return preps;
}

Eigen::MatrixXcd choi_from_chi(const Eigen::MatrixXcd& chi) {
  const auto& paulis = pauli_basis16();
  // maximally entangled reference ket sum_i |ii>/2 on a 16-dim space
  Eigen::VectorXcd omega = Eigen::VectorXcd::Zero(16);
  for (int i = 0; i < 4; ++i) omega(4 * i + i) = 0.5;
  Eigen::MatrixXcd choi = Eigen::MatrixXcd::Zero(16, 16);
  for (int m = 0; m < 16; ++m) {
    Eigen::MatrixXcd pm_i = Eigen::MatrixXcd::Zero(16, 16);
    for (int a = 0; a < 4; ++a) {
      for (int b = 0; b < 4; ++b) {
        for (int c = 0; c < 4; ++c) {
          pm_i(4 * a + c, 4 * b + c) = paulis[m](a, b);
        }
      }
    }
    const Eigen::VectorXcd vm = pm_i * omega;
    for (int n = 0; n < 16; ++n) {
      Eigen::MatrixXcd pn_i = Eigen::MatrixXcd::Zero(16, 16);
      for (int a = 0; a < 4; ++a) {
        for (int b = 0; b < 4; ++b) {
          for (int c = 0; c < 4; ++c) {
            pn_i(4 * a + c, 4 * b + c) = paulis[n](a, b);
          }
        }
      }
      const Eigen::VectorXcd vn = pn_i * omega;
      choi += chi(m, n) * vm * vn.adjoint();
    }
  }
  return choi;
}

}  // namespace

ProcessResult process_tomography(const GateChannel& channel, ProcessFidelityMode mode) {
  return process_tomography(channel, default_preparations(), mode);
}

ProcessResult process_tomography(const GateChannel& channel,
                                 const std::vector<Mat4>& preparations,
                                 ProcessFidelityMode mode) {
  const auto n_prep = preparations.size();
  if (n_prep < 16) throw std::invalid_argument("need at least 16 preparations");

  // the preparations must span the two-qubit operator space
  Eigen::MatrixXcd span(static_cast<Eigen::Index>(n_prep), 16);
  for (std::size_t k = 0; k < n_prep; ++k) {
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) {
        span(static_cast<Eigen::Index>(k), 4 * i + j) = preparations[k](i, j);
      }
    }
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> span_qr(span);
  if (span_qr.rank() < 16) {
    throw std::invalid_argument("rank-deficient preparation set");
  }

  const auto& paulis = pauli_basis16();
  const auto rows = static_cast<Eigen::Index>(n_prep) * 16;
  Eigen::MatrixXcd a(rows, 256);
  Eigen::VectorXcd b(rows);
  for (std::size_t k = 0; k < n_prep; ++k) {
    const Mat4 out = channel(preparations[k]);
    for (int m = 0; m < 16; ++m) {
      for (int n = 0; n < 16; ++n) {
        const Mat4 term = paulis[m] * preparations[k] * paulis[n];
        for (int i = 0; i < 4; ++i) {
          for (int j = 0; j < 4; ++j) {
            a(static_cast<Eigen::Index>(k) * 16 + 4 * i + j, 16 * m + n) = term(i, j);
          }
        }
      }
    }
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) {
        b(static_cast<Eigen::Index>(k) * 16 + 4 * i + j) = out(i, j);
      }
    }
  }
  const Eigen::VectorXcd x = a.colPivHouseholderQr().solve(b);

  Eigen::MatrixXcd chi(16, 16);
  for (int m = 0; m < 16; ++m) {
    for (int n = 0; n < 16; ++n) chi(m, n) = x(16 * m + n);
  }
  chi = hermitized(chi);

  // maximum-likelihood style projection onto the PSD cone, then normalize
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(chi);
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
  const double tr = ev.sum();
  if (tr <= 0.0) throw NumericalError("process_tomography: reconstructed process is null");
  ev /= tr;
  chi = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();

  ProcessResult result;
  result.chi = chi;

  Eigen::MatrixXcd tp = Eigen::MatrixXcd::Zero(4, 4);
  for (int m = 0; m < 16; ++m) {
    for (int n = 0; n < 16; ++n) {
      tp += chi(m, n) * (paulis[n] * paulis[m]);
    }
  }
  result.tp_residual = (tp - Mat4::Identity()).cwiseAbs().maxCoeff();

  const Eigen::MatrixXcd chi_ideal = ideal_cz_chi();
  if (mode == ProcessFidelityMode::chi_overlap) {
    result.process_fidelity = (chi * chi_ideal).trace().real();
  } else {
    result.process_fidelity = fidelity(choi_from_chi(chi), choi_from_chi(chi_ideal));
  }
  return result;
}

std::vector<double> poisson_sample(const std::vector<double>& means, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<double> out(means.size());
  for (std::size_t i = 0; i < means.size(); ++i) {
    if (means[i] < 0.0) throw std::invalid_argument("poisson mean must be >= 0");
    if (means[i] == 0.0) {
      out[i] = 0.0;
      continue;
    }
    std::poisson_distribution<long long> dist(means[i]);
    out[i] = static_cast<double>(dist(rng));
  }
  return out;
}

}  // namespace spdcmux::tomo
