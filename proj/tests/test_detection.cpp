#include <doctest.h>

#include <cmath>

#include "spdcmux/detection.hpp"
#include "spdcmux/optics.hpp"
#include "spdcmux/spdc.hpp"

using namespace spdcmux;

TEST_CASE("bucket povm") {
  const auto perfect = detect::bucket_povm(1.0, 4);
  CHECK(perfect.click[0] == doctest::Approx(0.0));
  for (int n = 1; n <= 4; ++n) CHECK(perfect.click[n] == doctest::Approx(1.0));

  const auto e = detect::bucket_povm(0.6, 4);
  CHECK(e.click[2] == doctest::Approx(0.84).epsilon(1e-12));
  for (int n = 0; n <= 4; ++n) {
    CHECK(e.click[n] + e.no_click[n] == doctest::Approx(1.0).epsilon(1e-15));
  }
}

TEST_CASE("coincidence probability") {
  SUBCASE("squeezed state with bucket detectors matches the series oracle") {
    const double lambda = 0.1, eta = 0.6;
    const auto state =
        spdc::generate_spdc_state(spdc::SourceParams::from_lambda(lambda), "s", "i", 12, 1e-3);
    const double p = detect::coincidence_probability(
        state, std::vector<detect::DetectorCover>{detect::cover_mode("s", "s", eta), detect::cover_mode("i", "i", eta)});
    double oracle = 0.0;
    for (int n = 1; n <= 12; ++n) {
      const double f = 1.0 - std::pow(1.0 - eta, n);
      oracle += f * f * (1 - lambda * lambda) * std::pow(lambda * lambda, n);
    }
    CHECK(p == doctest::Approx(oracle).epsilon(1e-12));
    CHECK(p == doctest::Approx(3.6347e-3).epsilon(1e-4));
  }

  SUBCASE("vacuum never clicks") {
    const auto vac = fock::FockState::vacuum(fock::build_registry({{"s", 2}, {"i", 2}}));
    CHECK(detect::coincidence_probability(vac, std::vector<detect::DetectorCover>{detect::cover_mode("s", "s", 1.0),
                                                detect::cover_mode("i", "i", 1.0)}) ==
          doctest::Approx(0.0));
  }

  SUBCASE("perfect detectors on |1,1> always coincide") {
    const auto s = fock::FockState::basis(fock::build_registry({{"s", 2}, {"i", 2}}), {1, 1});
    const std::map<std::string, detect::DetectorParams> detectors = {
        {"s", {1.0, false, 0}}, {"i", {1.0, false, 0}}};
    CHECK(detect::coincidence_probability(s, detectors) == doctest::Approx(1.0));
  }
}

TEST_CASE("click pattern completeness") {
  const auto state =
      spdc::generate_spdc_state(spdc::SourceParams::from_lambda(0.25), "s", "i", 8, 1e-4);
  const auto outcomes = detect::click_pattern_probabilities(
      state, std::vector<detect::DetectorCover>{detect::cover_mode("s", "s", 0.55), detect::cover_mode("i", "i", 0.7)});
  CHECK(outcomes.size() == 4);
  double total = 0.0;
  for (const auto& o : outcomes) total += o.probability;
  // the truncated tail is the only missing mass
  CHECK(total == doctest::Approx(state.norm() * state.norm()).epsilon(1e-10));
}

TEST_CASE("conditional states") {
  SUBCASE("perfect number-resolved herald gives an exact single photon") {
    const auto state =
        spdc::generate_spdc_state(spdc::SourceParams::from_lambda(0.3), "s", "i", 6, 1e-3);
    const auto cond = detect::conditional_state(
        state, {{"i", detect::HeraldCondition::resolved(1, 1.0)}}, {"s"});
    REQUIRE(cond.state.has_value());
    CHECK(cond.state->density()(1, 1).real() == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("bucket herald keeps higher-order contamination") {
    const double lambda = 0.3, eta = 0.6;
    const auto state =
        spdc::generate_spdc_state(spdc::SourceParams::from_lambda(lambda), "s", "i", 6, 1e-3);
    const auto cond =
        detect::conditional_state(state, {{"i", detect::HeraldCondition::click(eta)}}, {"s"});
    REQUIRE(cond.state.has_value());
    // series oracle: weight of |2><2| proportional to P(2)(1-(1-eta)^2)
    double norm = 0.0;
    for (int n = 1; n <= 6; ++n) {
      norm += spdc::pair_probability_lambda(lambda, n) * (1.0 - std::pow(1.0 - eta, n));
    }
    const double expected2 =
        spdc::pair_probability_lambda(lambda, 2) * (1.0 - std::pow(1.0 - eta, 2)) / norm;
    CHECK(cond.state->density()(2, 2).real() == doctest::Approx(expected2).epsilon(1e-10));
    CHECK(cond.state->density()(2, 2).real() > 0.0);
    // herald probability equals the single-detector bucket sum
    CHECK(cond.probability == doctest::Approx(norm).epsilon(1e-12));
  }

  SUBCASE("heralding on vacuum is flagged null") {
    const auto vac = fock::FockState::vacuum(fock::build_registry({{"s", 2}, {"i", 2}}));
    const auto cond =
        detect::conditional_state(vac, {{"i", detect::HeraldCondition::click(1.0)}}, {"s"});
    CHECK_FALSE(cond.state.has_value());
    CHECK(cond.probability == doctest::Approx(0.0));
  }

  SUBCASE("herald and keep must be disjoint") {
    const auto vac = fock::FockState::vacuum(fock::build_registry({{"s", 2}}));
    CHECK_THROWS_AS(detect::conditional_state(
                        vac, {{"s", detect::HeraldCondition::click(1.0)}}, {"s"}),
                    std::invalid_argument);
  }
}

TEST_CASE("loss commutes into the detector efficiency") {
  // loss(t) then bucket(eta) equals bucket(t*eta) for all click statistics
  const auto state =
      spdc::generate_spdc_state(spdc::SourceParams::from_lambda(0.3), "s", "i", 6, 1e-3);
  const double t = 0.7, eta = 0.6;
  const auto lossy = optics::loss(state, {"s", t});
  const double with_loss = detect::coincidence_probability(
      lossy, std::vector<detect::DetectorCover>{detect::cover_mode("s", "s", eta), detect::cover_mode("i", "i", eta)});
  const double folded = detect::coincidence_probability(
      state, std::vector<detect::DetectorCover>{detect::cover_mode("s", "s", t * eta), detect::cover_mode("i", "i", eta)});
  CHECK(with_loss == doctest::Approx(folded).epsilon(1e-12));
}

TEST_CASE("multiplexed click counting") {
  SUBCASE("single photon, perfect detection") {
    const auto s = fock::FockState::basis(fock::build_registry({{"m", 2}}), {1});
    const auto dist = detect::multiplexed_count_probability(s, "m", 1, 1.0);
    CHECK(dist[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(dist[1] == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("two photons split across two detectors half the time") {
    const auto s = fock::FockState::basis(fock::build_registry({{"m", 2}}), {2});
    const auto dist = detect::multiplexed_count_probability(s, "m", 1, 1.0);
    CHECK(dist[1] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(dist[2] == doctest::Approx(0.5).epsilon(1e-12));
  }

  SUBCASE("vacuum never clicks") {
    const auto s = fock::FockState::vacuum(fock::build_registry({{"m", 2}}));
    const auto dist = detect::multiplexed_count_probability(s, "m", 2, 0.9);
    CHECK(dist[0] == doctest::Approx(1.0));
  }

  SUBCASE("distributions are normalized") {
    for (int n = 0; n <= 5; ++n) {
      for (int depth = 1; depth <= 3; ++depth) {
        double total = 0.0;
        for (int c = 0; c <= (1 << depth); ++c) {
          total += detect::tree_click_probability(c, n, depth, 0.45);
        }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("four-two ratio") {
  const detect::DetectorParams det{0.6, false, 1};

  SUBCASE("vanishes with the pump") {
    CHECK(detect::four_two_ratio(spdc::SourceParams::from_lambda(0.0), det, 1) ==
          doctest::Approx(0.0));
    CHECK(detect::four_two_ratio(spdc::SourceParams::from_lambda(1e-4), det, 1) ==
          doctest::Approx(0.0).epsilon(1e-6));
  }

  SUBCASE("independent of the repetition rate") {
    const auto a = spdc::SourceParams::from_lambda(0.1, 76e6, 1);
    const auto b = spdc::SourceParams::from_lambda(0.1, 152e6, 1);
    CHECK(detect::four_two_ratio(a, det, 1) ==
          doctest::Approx(detect::four_two_ratio(b, det, 1)).epsilon(1e-15));
  }

  SUBCASE("halving pulse power halves the ratio, at leading order") {
    const double power = 100.0;
    const auto m1 = spdc::SourceParams::from_power(power, 76e6, 1);
    const auto m2 = spdc::SourceParams::from_power(power, 76e6, 2);
    const double r1 = detect::four_two_ratio(m1, det, 1);
    const double r2 = detect::four_two_ratio(m2, det, 1);
    CHECK(r1 / r2 == doctest::Approx(2.0).epsilon(0.01));
  }

  SUBCASE("dual-pass evaluates the forward pass") {
    const auto dual = spdc::DualPassParams::symmetric(0.1);
    CHECK(detect::four_two_ratio(dual, det, 1) ==
          doctest::Approx(detect::four_two_ratio(dual.forward, det, 1)).epsilon(1e-15));
  }

  SUBCASE("matches a direct Fock-space evaluation at truncation 6") {
    const double lambda = 0.15, eta = 0.6;
    const auto state =
        spdc::generate_spdc_state(spdc::SourceParams::from_lambda(lambda), "s", "i", 6, 1e-2);
    const auto joint = state.joint_number_distribution({"s", "i"});
    double p_single = 0.0, p_multi = 0.0;
    for (const auto& [occ, w] : joint) {
      const double s1 = detect::tree_click_probability(1, occ[0], 1, eta);
      const double i1 = detect::tree_click_probability(1, occ[1], 1, eta);
      double s2 = 0.0, i2 = 0.0;
      for (int c = 2; c <= 2; ++c) {
        s2 += detect::tree_click_probability(c, occ[0], 1, eta);
        i2 += detect::tree_click_probability(c, occ[1], 1, eta);
      }
      p_single += w * s1 * i1;
      p_multi += w * s2 * i2;
    }
    const double direct = p_multi / p_single;
    const double analytic = detect::four_two_ratio(spdc::SourceParams::from_lambda(lambda), det, 1);
    // the state route is truncated at 6 pairs; agreement is at that level
    CHECK(direct == doctest::Approx(analytic).epsilon(1e-6));
  }
}

TEST_CASE("four-two ratio is linear in per-pulse power") {
  // least-squares fit of ratio against lambda^2 over the working pump range
  const detect::DetectorParams det{0.6, false, 1};
  std::vector<double> x, y;
  for (int i = 0; i < 9; ++i) {
    const double lambda = 0.02 + (0.1 - 0.02) * i / 8.0;
    x.push_back(lambda * lambda);
    y.push_back(detect::four_two_ratio(spdc::SourceParams::from_lambda(lambda), det, 1));
  }
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double intercept = (sy - slope * sx) / n;
  double ss_res = 0, ss_tot = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    ss_res += std::pow(y[i] - intercept - slope * x[i], 2);
    ss_tot += std::pow(y[i] - sy / n, 2);
  }
  CHECK(1.0 - ss_res / ss_tot >= 0.9999);
}
