#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "spdcmux/tomography.hpp"

using namespace spdcmux;
using tomo::Mat4;
using tomo::Vec4;

namespace {

Mat4 random_density(std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Mat4 g;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) g(i, j) = std::complex<double>(gauss(rng), gauss(rng));
  }
  Mat4 rho = g * g.adjoint();
  return rho / rho.trace().real();
}

Eigen::Matrix2cd random_unitary2(std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::Matrix2cd g;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) g(i, j) = std::complex<double>(gauss(rng), gauss(rng));
  }
  const Eigen::HouseholderQR<Eigen::Matrix2cd> qr(g);
  Eigen::Matrix2cd q = qr.householderQ();
  const Eigen::Matrix2cd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < 2; ++i) q.col(i) *= r(i, i) / std::abs(r(i, i));
  return q;
}

Mat4 kron2(const Eigen::Matrix2cd& a, const Eigen::Matrix2cd& b) {
  Mat4 m;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      for (int k = 0; k < 2; ++k) {
        for (int l = 0; l < 2; ++l) m(2 * i + k, 2 * j + l) = a(i, j) * b(k, l);
      }
    }
  }
  return m;
}

}  // namespace

TEST_CASE("hom visibility") {
  CHECK(tomo::hom_visibility(5.0 / 9.0, 1.0 / 9.0).visibility ==
        doctest::Approx(0.8).epsilon(1e-12));
  CHECK(tomo::hom_visibility(0.123, 0.123).visibility == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(tomo::hom_visibility(0.5, 0.0).visibility == doctest::Approx(1.0));
  CHECK(tomo::hom_visibility(0.1, 0.2).pathological);
  CHECK_THROWS_AS(tomo::hom_visibility(0.0, 0.1), std::invalid_argument);
}

TEST_CASE("fidelity") {
  std::mt19937_64 rng(1);
  const Mat4 rho = random_density(rng);
  CHECK(tomo::fidelity(rho, rho) == doctest::Approx(1.0).epsilon(1e-9));

  Vec4 hh = Vec4::Zero(), vv = Vec4::Zero();
  hh(0) = 1;
  vv(3) = 1;
  CHECK(tomo::fidelity(tomo::density(hh), tomo::density(vv)) ==
        doctest::Approx(0.0).epsilon(1e-12));

  // any pure state against the maximally mixed state gives 1/4
  const Mat4 pure = tomo::density(tomo::bell_hd_va_ket());
  CHECK(tomo::fidelity(pure, Mat4::Identity() / 4.0) == doctest::Approx(0.25).epsilon(1e-10));

  SUBCASE("symmetric in its arguments") {
    const Mat4 sigma = random_density(rng);
    CHECK(tomo::fidelity(rho, sigma) == doctest::Approx(tomo::fidelity(sigma, rho)).epsilon(1e-9));
  }

  SUBCASE("rejects non-density input") {
    Mat4 bad = Mat4::Identity();
    CHECK_THROWS_AS(tomo::fidelity(bad, bad), std::invalid_argument);
  }
}

TEST_CASE("tangle") {
  CHECK(tomo::tangle(tomo::density(tomo::bell_hd_va_ket())) ==
        doctest::Approx(1.0).epsilon(1e-10));

  // product states carry no entanglement
  Vec4 hd;
  const double rs = 1.0 / std::sqrt(2.0);
  hd << rs, rs, 0, 0;
  CHECK(tomo::tangle(tomo::density(hd)) == doctest::Approx(0.0).epsilon(1e-10));

  // Werner state closed form: concurrence max(0, (3p-1)/2)
  Vec4 phi;
  phi << rs, 0, 0, rs;
  const double p = 0.5;
  const Mat4 werner = p * tomo::density(phi) + (1 - p) * Mat4::Identity() / 4.0;
  CHECK(tomo::concurrence(werner) == doctest::Approx(0.25).epsilon(1e-10));
  CHECK(tomo::tangle(werner) == doctest::Approx(0.0625).epsilon(1e-10));
}

TEST_CASE("fidelity and tangle are invariant under local unitaries") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    const Mat4 rho = random_density(rng);
    const Mat4 sigma = random_density(rng);
    const Mat4 local = kron2(random_unitary2(rng), random_unitary2(rng));
    const Mat4 rho2 = local * rho * local.adjoint();
    const Mat4 sigma2 = local * sigma * local.adjoint();
    CHECK(tomo::fidelity(rho2, sigma2) == doctest::Approx(tomo::fidelity(rho, sigma)).epsilon(1e-9));
    CHECK(tomo::tangle(rho2) == doctest::Approx(tomo::tangle(rho)).epsilon(1e-9));
  }
}

TEST_CASE("measurement set") {
  const auto set = tomo::MeasurementSet::overcomplete36();
  REQUIRE(set.settings.size() == 36);
  // projectors are rank-1 and normalized; the full set sums to 9 I
  Mat4 sum = Mat4::Zero();
  for (const auto& s : set.settings) {
    CHECK(s.projector.trace().real() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((s.projector * s.projector - s.projector).cwiseAbs().maxCoeff() < 1e-12);
    sum += s.projector;
  }
  CHECK((sum - 9.0 * Mat4::Identity()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("counts csv round trip and errors") {
  auto set = tomo::MeasurementSet::overcomplete36();
  set.set_counts_exact(tomo::density(tomo::bell_hd_va_ket()), 1e4);
  const std::string path = "tomo_counts_test.csv";
  tomo::save_counts_csv(path, set);
  const auto loaded = tomo::load_counts_csv(path);
  for (std::size_t i = 0; i < 36; ++i) {
    CHECK(loaded.counts[i] == doctest::Approx(set.counts[i]).epsilon(1e-9));
  }

  std::ofstream bad("tomo_counts_bad.csv");
  bad << "setting_qubit1,setting_qubit2,counts\nH,X,12\n";
  bad.close();
  CHECK_THROWS_AS(tomo::load_counts_csv("tomo_counts_bad.csv"), ConfigError);
  CHECK_THROWS_AS(tomo::load_counts_csv("no_such_file.csv"), ConfigError);
}

TEST_CASE("maximum-likelihood reconstruction") {
  const Mat4 bell = tomo::density(tomo::bell_hd_va_ket());

  SUBCASE("noiseless Bell counts reproduce the state") {
    auto set = tomo::MeasurementSet::overcomplete36();
    set.set_counts_exact(bell, 1e6);
    const auto fit = tomo::mle_reconstruct(set, bell);
    CHECK(fit.fidelity >= 0.9999);
    CHECK(fit.tangle >= 0.999);
  }

  SUBCASE("noiseless Bell counts converge from the maximally mixed seed") {
    auto set = tomo::MeasurementSet::overcomplete36();
    set.set_counts_exact(bell, 1e6);
    tomo::MleOptions options;
    options.linear_inversion_init = false;
    const auto fit = tomo::mle_reconstruct(set, bell, options);
    CHECK(fit.fidelity >= 0.9999);
  }

  SUBCASE("maximally mixed counts give flat eigenvalues") {
    auto set = tomo::MeasurementSet::overcomplete36();
    set.set_counts_exact(Mat4::Identity() / 4.0, 1e6);
    const auto fit = tomo::mle_reconstruct(set, std::nullopt);
    Eigen::SelfAdjointEigenSolver<Mat4> es(fit.rho);
    for (int i = 0; i < 4; ++i) {
      CHECK(es.eigenvalues()[i] == doctest::Approx(0.25).epsilon(0.04));
    }
  }

  SUBCASE("Poisson counts at N = 1e4 stay close to the source") {
    auto set = tomo::MeasurementSet::overcomplete36();
    set.set_counts_poisson(bell, 1e4, 424242);
    const auto fit = tomo::mle_reconstruct(set, bell);
    CHECK(fit.fidelity >= 0.99);
    // physicality under noise
    CHECK((fit.rho - fit.rho.adjoint()).cwiseAbs().maxCoeff() < 1e-10);
    Eigen::SelfAdjointEigenSolver<Mat4> es(fit.rho);
    CHECK(es.eigenvalues().minCoeff() >= -1e-10);
    CHECK(fit.rho.trace().real() == doctest::Approx(1.0).epsilon(1e-10));
  }

  SUBCASE("exact probabilities reproduce random states") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 5; ++trial) {
      const Mat4 rho = random_density(rng);
      auto set = tomo::MeasurementSet::overcomplete36();
      set.set_counts_exact(rho, 1e6);
      const auto fit = tomo::mle_reconstruct(set, rho);
      CHECK(fit.fidelity >= 1.0 - 1e-6);
    }
  }

  SUBCASE("all-zero counts are rejected") {
    auto set = tomo::MeasurementSet::overcomplete36();
    set.counts.assign(36, 0.0);
    CHECK_THROWS_AS(tomo::mle_reconstruct(set, std::nullopt), NumericalError);
  }
}

TEST_CASE("process tomography") {
  SUBCASE("ideal CZ channel scores process fidelity 1") {
    const tomo::GateChannel cz = [](const Mat4& rho) {
      const Mat4 u = tomo::cz_unitary();
      return Mat4(u * rho * u.adjoint());
    };
    const auto result = tomo::process_tomography(cz);
    CHECK(result.process_fidelity == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(result.tp_residual < 1e-8);
  }

  SUBCASE("identity against CZ gives 0.25") {
    const tomo::GateChannel id = [](const Mat4& rho) { return rho; };
    const auto result = tomo::process_tomography(id);
    CHECK(result.process_fidelity == doctest::Approx(0.25).epsilon(1e-9));
  }

  SUBCASE("fully depolarizing channel gives 1/16") {
    const tomo::GateChannel dep = [](const Mat4& rho) {
      return Mat4(Mat4::Identity() * (rho.trace() / 4.0));
    };
    const auto result = tomo::process_tomography(dep);
    CHECK(result.process_fidelity == doctest::Approx(1.0 / 16.0).epsilon(1e-9));
  }

  SUBCASE("choi-uhlmann mode agrees on the closed-form cases") {
    const tomo::GateChannel cz = [](const Mat4& rho) {
      const Mat4 u = tomo::cz_unitary();
      return Mat4(u * rho * u.adjoint());
    };
    const tomo::GateChannel id = [](const Mat4& rho) { return rho; };
    CHECK(tomo::process_tomography(cz, tomo::ProcessFidelityMode::choi_uhlmann)
              .process_fidelity == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(tomo::process_tomography(id, tomo::ProcessFidelityMode::choi_uhlmann)
              .process_fidelity == doctest::Approx(0.25).epsilon(1e-8));
  }

  SUBCASE("rank-deficient preparations are rejected") {
    std::vector<Mat4> preps(16, tomo::density(tomo::bell_hd_va_ket()));
    const tomo::GateChannel id = [](const Mat4& rho) { return rho; };
    CHECK_THROWS_AS(
        tomo::process_tomography(id, preps, tomo::ProcessFidelityMode::chi_overlap),
        std::invalid_argument);
  }
}

TEST_CASE("seeded poisson sampler is reproducible") {
  const std::vector<double> means{10.0, 1000.0, 0.0, 3.5};
  const auto a = tomo::poisson_sample(means, 7);
  const auto b = tomo::poisson_sample(means, 7);
  const auto c = tomo::poisson_sample(means, 8);
  CHECK(a == b);
  CHECK(a[2] == 0.0);
  bool any_diff = false;
  for (std::size_t i = 0; i < a.size(); ++i) any_diff = any_diff || a[i] != c[i];
  CHECK(any_diff);
}
