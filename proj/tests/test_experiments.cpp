#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "spdcmux/experiments.hpp"
#include "spdcmux/io.hpp"

using namespace spdcmux;
using experiments::ExperimentConfig;
using experiments::GateSetup;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig small_grid_config() {
  ExperimentConfig c = ExperimentConfig::defaults();
  c.scan.min = 10.0;
  c.scan.max = 500.0;
  c.scan.points = 4;
  c.workers = 2;
  return c;
}

}  // namespace

TEST_CASE("config parsing") {
  SUBCASE("missing scan field is a named error") {
    const std::string text = R"({"scan": {"parameter": "pump_power_mw", "min": 0, "max": 700}})";
    try {
      ExperimentConfig::from_json_text(text, "inline");
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("scan.points") != std::string::npos);
    }
  }

  SUBCASE("single-point grids are rejected") {
    const std::string text =
        R"({"scan": {"parameter": "pump_power_mw", "min": 0, "max": 700, "points": 1}})";
    CHECK_THROWS_AS(ExperimentConfig::from_json_text(text, "inline"), ConfigError);
  }

  SUBCASE("parse errors carry the line number") {
    try {
      ExperimentConfig::from_json_text("{\n  \"truncation\": 6,\n  oops\n}", "broken.json");
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("broken.json:3") != std::string::npos);
    }
  }

  SUBCASE("defaults survive a round trip") {
    const ExperimentConfig c = ExperimentConfig::defaults();
    const ExperimentConfig r = ExperimentConfig::from_json_text(c.canonical_json(), "inline");
    CHECK(c.hash() == r.hash());
    CHECK(r.ppbs.eta_v == doctest::Approx(0.682));
    CHECK(r.detector_efficiency == doctest::Approx(0.6));
    CHECK(r.arm_transmission == doctest::Approx(0.6));
    CHECK(r.rep_rate_hz == doctest::Approx(76e6));
  }
}

TEST_CASE("single-pair gate limits") {
  const GateSetup ideal = experiments::ideal_gate_setup();

  SUBCASE("ideal visibility is 80%") {
    CHECK(experiments::single_pair_vv_visibility(ideal) == doctest::Approx(0.8).epsilon(1e-12));
  }

  SUBCASE("measured splitter visibility follows the closed form") {
    GateSetup measured = ideal;
    measured.ppbs.eta_v = 0.682;
    const double c_i = std::pow(1.0 - 2.0 * 0.682, 2);
    const double c_d = 0.682 * 0.682 + 0.318 * 0.318;
    CHECK(experiments::single_pair_vv_visibility(measured) ==
          doctest::Approx(1.0 - c_i / c_d).epsilon(1e-12));
  }

  SUBCASE("detection efficiency cancels in the visibility") {
    GateSetup lossy = ideal;
    lossy.detector_eta = 0.21;
    CHECK(experiments::single_pair_vv_visibility(lossy) == doctest::Approx(0.8).epsilon(1e-12));
  }

  SUBCASE("ideal state limits") {
    const auto point = experiments::single_pair_cz_state(ideal);
    CHECK(point.fidelity == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(point.tangle == doctest::Approx(1.0).epsilon(1e-9));
  }

  SUBCASE("ideal process limit") {
    CHECK(experiments::single_pair_cz_process(ideal, tomo::ProcessFidelityMode::chi_overlap) ==
          doctest::Approx(1.0).epsilon(1e-8));
  }

  SUBCASE("gate success probability is 1/9 for every basis preparation") {
    for (const tomo::Pol p : {tomo::Pol::H, tomo::Pol::V}) {
      for (const tomo::Pol q : {tomo::Pol::H, tomo::Pol::V}) {
        const double prob = experiments::single_pair_success_probability(
            ideal, experiments::preparation_jones(p), experiments::preparation_jones(q));
        CHECK(prob == doctest::Approx(1.0 / 9.0).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("visibility is convention independent") {
  for (const auto conv : {optics::BsConvention::symmetric, optics::BsConvention::rotation}) {
    GateSetup setup = experiments::ideal_gate_setup();
    setup.convention = conv;
    setup.detector_eta = 0.36;
    setup.herald_eta = 0.36;
    CHECK(experiments::single_pair_vv_visibility(setup) == doctest::Approx(0.8).epsilon(1e-12));
    const auto dep = experiments::hom_point_dependent(0.2, 4, setup);
    GateSetup other = setup;
    other.convention = conv == optics::BsConvention::symmetric
                           ? optics::BsConvention::rotation
                           : optics::BsConvention::symmetric;
    const auto dep2 = experiments::hom_point_dependent(0.2, 4, other);
    CHECK(dep.visibility == doctest::Approx(dep2.visibility).epsilon(1e-12));
  }
}

TEST_CASE("hom scan trends") {
  GateSetup setup = experiments::ideal_gate_setup();
  setup.detector_eta = 0.36;
  setup.herald_eta = 0.36;

  SUBCASE("dependent visibility decreases with pump strength") {
    double previous = 1.0;
    for (const double lambda : {0.02, 0.08, 0.16, 0.24}) {
      const auto point =
          experiments::hom_point_dependent(lambda, experiments::pair_cutoff_for(lambda, 8), setup);
      CHECK(point.visibility < previous);
      previous = point.visibility;
    }
  }

  SUBCASE("independent visibility decreases with pump strength") {
    double previous = 1.0;
    for (const double lambda : {0.02, 0.1, 0.2}) {
      const auto point = experiments::hom_point_independent(
          lambda, lambda, experiments::pair_cutoff_for(lambda, 8), setup);
      CHECK(point.visibility < previous);
      previous = point.visibility;
    }
  }

  SUBCASE("the weak-pump limit approaches the single-pair value") {
    const auto point = experiments::hom_point_dependent(1e-4, 2, setup);
    CHECK(point.visibility == doctest::Approx(0.8).epsilon(1e-6));
  }
}

TEST_CASE("pn-ratio runner") {
  // ideal counting (lossless, depth-3 trees) over lambda(m=1) in [0.02, 0.1]
  ExperimentConfig config = small_grid_config();
  config.scan.min = std::pow(0.02 / config.calib_k, 2);
  config.scan.max = std::pow(0.10 / config.calib_k, 2);
  config.scan.points = 6;
  config.detector_efficiency = 1.0;
  config.arm_transmission = 1.0;
  config.split_depth = 3;
  const auto result = experiments::run_pn_ratio(config, "test_out_pn");
  REQUIRE(result.files.size() >= 2);

  const std::string fit_text = slurp("test_out_pn/pn_ratio_fit.csv");
  const auto pos = fit_text.find("slope_ratio_first_over_second=");
  REQUIRE(pos != std::string::npos);
  const double ratio = std::stod(fit_text.substr(pos + 30));
  CHECK(std::abs(ratio - 2.0) <= 0.02);

  SUBCASE("lossy counting biases the slope ratio upward, but mildly") {
    ExperimentConfig lossy = small_grid_config();
    lossy.scan.min = 10.0;
    lossy.scan.max = 500.0;
    lossy.scan.points = 6;
    experiments::run_pn_ratio(lossy, "test_out_pn_lossy");
    const std::string text = slurp("test_out_pn_lossy/pn_ratio_fit.csv");
    const auto p = text.find("slope_ratio_first_over_second=");
    REQUIRE(p != std::string::npos);
    const double lossy_ratio = std::stod(text.substr(p + 30));
    CHECK(lossy_ratio > 2.0);
    CHECK(lossy_ratio < 2.1);
  }

  SUBCASE("small-lambda companion stays within 5% below lambda 0.05") {
    ExperimentConfig small = small_grid_config();
    small.scan.min = 5.0;
    small.scan.max = 85.0;
    small.scan.points = 4;
    experiments::run_pn_ratio(small, "test_out_pn_small");
    const std::string text = slurp("test_out_pn_small/pn_ratio.csv");
    const auto p = text.find("max_rel_dev_vs_small_lambda_below_0p05=");
    REQUIRE(p != std::string::npos);
    CHECK(std::stod(text.substr(p + 39)) < 0.05);
  }

  SUBCASE("zero-power row reports ratio zero") {
    ExperimentConfig zero = config;
    zero.scan.min = 0.0;
    zero.scan.points = 3;
    experiments::run_pn_ratio(zero, "test_out_pn_zero");
    const std::string text = slurp("test_out_pn_zero/pn_ratio.csv");
    // first data row is the zero-power one: ratio column is 0
    std::istringstream lines(text);
    std::string line;
    bool found = false;
    while (std::getline(lines, line)) {
      if (line.empty() || line[0] == '#' || line.rfind("power_mw", 0) == 0) continue;
      CHECK(line.rfind("0,", 0) == 0);
      CHECK(line.find(",0,0") != std::string::npos);
      found = true;
      break;
    }
    CHECK(found);
  }
}

TEST_CASE("hom scan runner output and byte determinism") {
  ExperimentConfig config = small_grid_config();
  config.scan.points = 3;
  const auto first = experiments::run_hom_scan(config, "test_out_hom1");
  const auto second = experiments::run_hom_scan(config, "test_out_hom2");
  REQUIRE(first.files.size() == 1);
  CHECK(slurp(first.files[0]) == slurp(second.files[0]));

  // m = 2 visibility dominates m = 1 at equal average power
  const std::string text = slurp(first.files[0]);
  std::istringstream lines(text);
  std::string line;
  std::vector<double> m1_vis, m2_vis;
  while (std::getline(lines, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("power_mw", 0) == 0) continue;
    std::istringstream row(line);
    std::string cell;
    std::vector<double> cells;
    while (std::getline(row, cell, ',')) cells.push_back(std::stod(cell));
    REQUIRE(cells.size() == 7);
    (cells[1] == 1.0 ? m1_vis : m2_vis).push_back(cells[5]);
  }
  REQUIRE(m1_vis.size() == 3);
  REQUIRE(m2_vis.size() == 3);
  for (std::size_t i = 0; i < m1_vis.size(); ++i) CHECK(m2_vis[i] >= m1_vis[i]);
  // monotone in power
  CHECK(m1_vis[0] > m1_vis[1]);
  CHECK(m1_vis[1] > m1_vis[2]);
}

TEST_CASE("hom scan small-lambda deviation stays below 5%") {
  ExperimentConfig config = small_grid_config();
  // keep the whole grid under lambda 0.05: power <= (0.05/k)^2 = 87.5 mW
  config.scan.min = 5.0;
  config.scan.max = 85.0;
  config.scan.points = 4;
  experiments::run_hom_scan(config, "test_out_hom_small");
  const std::string text = slurp("test_out_hom_small/hom_scan.csv");
  const auto pos = text.find("max_rel_dev_vs_small_lambda_below_0p05=");
  REQUIRE(pos != std::string::npos);
  CHECK(std::stod(text.substr(pos + 39)) < 0.05);
}

TEST_CASE("cz-state runner trends") {
  ExperimentConfig config = small_grid_config();
  config.scan.min = 50.0;
  config.scan.max = 600.0;
  config.scan.points = 3;
  experiments::run_cz_state(config, "test_out_cz");
  const std::string text = slurp("test_out_cz/cz_state.csv");
  std::istringstream lines(text);
  std::string line;
  std::vector<std::vector<double>> m1, m2;
  while (std::getline(lines, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("power_mw", 0) == 0) continue;
    std::istringstream row(line);
    std::string cell;
    std::vector<double> cells;
    while (std::getline(row, cell, ',')) cells.push_back(std::stod(cell));
    REQUIRE(cells.size() == 7);
    (cells[1] == 1.0 ? m1 : m2).push_back(cells);
  }
  REQUIRE(m1.size() == 3);
  REQUIRE(m2.size() == 3);
  for (std::size_t i = 0; i + 1 < m1.size(); ++i) {
    CHECK(m1[i][3] >= m1[i + 1][3]);  // fidelity non-increasing in power
    CHECK(m1[i][4] >= m1[i + 1][4]);  // tangle non-increasing in power
  }
  for (std::size_t i = 0; i < m1.size(); ++i) {
    CHECK(m2[i][3] >= m1[i][3]);  // doubling suppresses the degradation
    CHECK(m2[i][4] >= m1[i][4]);
  }
}

TEST_CASE("cz-process runner trends") {
  ExperimentConfig config = small_grid_config();
  config.scan.min = 50.0;
  config.scan.max = 600.0;
  config.scan.points = 3;
  experiments::run_cz_process(config, "test_out_czp");
  const std::string text = slurp("test_out_czp/cz_process.csv");
  std::istringstream lines(text);
  std::string line;
  std::vector<std::vector<double>> m1, m2;
  while (std::getline(lines, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("power_mw", 0) == 0) continue;
    std::istringstream row(line);
    std::string cell;
    std::vector<double> cells;
    while (std::getline(row, cell, ',')) cells.push_back(std::stod(cell));
    REQUIRE(cells.size() == 5);
    (cells[1] == 1.0 ? m1 : m2).push_back(cells);
  }
  REQUIRE(m1.size() == 3);
  REQUIRE(m2.size() == 3);
  for (std::size_t i = 0; i + 1 < m1.size(); ++i) {
    CHECK(m1[i][3] >= m1[i + 1][3]);  // process fidelity non-increasing in power
    CHECK(m2[i][3] >= m2[i + 1][3]);
  }
  for (std::size_t i = 0; i < m1.size(); ++i) CHECK(m2[i][3] >= m1[i][3]);
}

TEST_CASE("heatmap runner trends on a small grid") {
  ExperimentConfig config = ExperimentConfig::defaults();
  config.source_type = experiments::SourceKind::independent;
  config.heatmap.eta_points = 3;
  config.heatmap.m_max = 3;
  config.heatmap.eta_min = 0.3;
  config.heatmap.eta_max = 0.9;
  config.workers = 2;
  experiments::run_vis_heatmap(config, "test_out_heat");
  const std::string text = slurp("test_out_heat/vis_heatmap.csv");
  std::istringstream lines(text);
  std::string line;
  // cells[eta][m]
  std::map<std::pair<long long, int>, double> vis;
  while (std::getline(lines, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("detector", 0) == 0) continue;
    std::istringstream row(line);
    std::string cell;
    std::vector<double> cells;
    while (std::getline(row, cell, ',')) cells.push_back(std::stod(cell));
    REQUIRE(cells.size() == 4);
    vis[{std::llround(cells[0] * 1000), static_cast<int>(cells[1])}] = cells[2];
  }
  for (const long long eta : {300, 600, 900}) {
    CHECK(vis.at({eta, 2}) > vis.at({eta, 1}));
    CHECK(vis.at({eta, 3}) > vis.at({eta, 2}));
  }
  for (const int m : {1, 2, 3}) {
    CHECK(vis.at({600, m}) > vis.at({300, m}));
    CHECK(vis.at({900, m}) > vis.at({600, m}));
  }
}

TEST_CASE("hom scan runner, independent sources") {
  ExperimentConfig config = small_grid_config();
  config.source_type = experiments::SourceKind::independent;
  config.scan.points = 2;
  const auto result = experiments::run_hom_scan(config, "test_out_hom_indep");
  const std::string text = slurp(result.files[0]);
  CHECK(text.find("source_type=independent") != std::string::npos);
  std::istringstream lines(text);
  std::string line;
  int rows = 0;
  while (std::getline(lines, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("power_mw", 0) == 0) continue;
    std::istringstream row(line);
    std::string cell;
    std::vector<double> cells;
    while (std::getline(row, cell, ',')) cells.push_back(std::stod(cell));
    const double visibility = cells[5];
    CHECK(visibility > 0.0);
    CHECK(visibility < 1.0);
    ++rows;
  }
  CHECK(rows == 4);
}

TEST_CASE("svg emission") {
  ExperimentConfig config = small_grid_config();
  config.scan.points = 2;
  config.multiplex_factors = {1};
  config.svg = true;
  const auto result = experiments::run_hom_scan(config, "test_out_svg");
  bool has_svg = false;
  for (const auto& f : result.files) has_svg = has_svg || f.find(".svg") != std::string::npos;
  CHECK(has_svg);
  CHECK(slurp("test_out_svg/hom_scan.svg").rfind("<svg", 0) == 0);
}

TEST_CASE("validate runner") {
  ExperimentConfig config = ExperimentConfig::defaults();
  const auto ok = experiments::run_validate(config, "test_out_validate");
  CHECK(ok.ok);

  config.rep_rate_hz = 1e9;
  config.multiplex_factors = {2};
  const auto bad = experiments::run_validate(config, "test_out_validate_bad");
  CHECK_FALSE(bad.ok);
}

TEST_CASE("tomo-fit runner") {
  auto set = tomo::MeasurementSet::overcomplete36();
  set.set_counts_exact(tomo::density(tomo::bell_hd_va_ket()), 1e6);
  tomo::save_counts_csv("test_tomo_counts.csv", set);
  const auto result = experiments::run_tomo_fit(ExperimentConfig::defaults(),
                                                "test_tomo_counts.csv", "test_out_tomo");
  REQUIRE(result.files.size() == 1);
  const std::string text = slurp(result.files[0]);
  CHECK(text.find("fidelity_vs_bell_hd_va") != std::string::npos);
  const auto m = io::matrix_from_json_text(text);
  CHECK(m.rows() == 4);
  CHECK(std::abs(m(0, 0).real() - 0.25) < 0.01);
}

TEST_CASE("unknown experiment name is rejected") {
  CHECK_THROWS_AS(
      experiments::run_experiment(ExperimentConfig::defaults(), "nope", "test_out_nope"),
      std::invalid_argument);
}

TEST_CASE("partial overlap scales the measured visibility") {
  GateSetup setup = experiments::ideal_gate_setup();
  const auto full = experiments::hom_point_dependent(0.1, 3, setup, 1.0);
  const auto half = experiments::hom_point_dependent(0.1, 3, setup, 0.5);
  const auto none = experiments::hom_point_dependent(0.1, 3, setup, 0.0);
  CHECK(half.visibility == doctest::Approx(0.5 * full.visibility).epsilon(1e-12));
  CHECK(none.visibility == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(half.c_dist == doctest::Approx(full.c_dist).epsilon(1e-12));
}

TEST_CASE("worker count does not change the output bytes") {
  ExperimentConfig config = small_grid_config();
  config.scan.points = 3;
  config.workers = 1;
  experiments::run_hom_scan(config, "test_out_w1");
  config.workers = 4;
  experiments::run_hom_scan(config, "test_out_w4");
  CHECK(slurp("test_out_w1/hom_scan.csv") == slurp("test_out_w4/hom_scan.csv"));
}

TEST_CASE("branch pipeline agrees with the layered-density route") {
  // same dip, computed through the distinguishability operator on the
  // squeezed state instead of per-branch pure evolution
  const double lambda = 0.25;
  const GateSetup setup = experiments::ideal_gate_setup();
  const auto branch = experiments::hom_point_dependent(lambda, 2, setup);

  auto reg = fock::build_registry({{"a.V", 4}, {"b.V", 4}});
  fock::Vector amps = fock::Vector::Zero(static_cast<Eigen::Index>(reg.dim()));
  for (int n = 0; n <= 2; ++n) {
    amps[static_cast<Eigen::Index>(reg.basis_index({n, n}))] =
        std::sqrt(1 - lambda * lambda) * std::pow(lambda, n);
  }
  const auto tmsv = fock::FockState::from_amplitudes(reg, std::move(amps));
  auto rate_at = [&](double gamma) {
    const std::pair<std::string, std::string> arms{"a.V", "b.V"};
    const auto mixed = optics::apply_distinguishability({gamma}, tmsv, arms);
    const auto evolved =
        optics::apply_layered(mixed, optics::beamsplitter(setup.ppbs.eta_v, "a.V", "b.V"));
    return detect::coincidence_probability(
        evolved,
        std::vector<detect::DetectorCover>{
            detect::cover_modes("a", optics::layer_labels(evolved.registry(), "a.V"), 1.0),
            detect::cover_modes("b", optics::layer_labels(evolved.registry(), "b.V"), 1.0)});
  };
  CHECK(rate_at(1.0) == doctest::Approx(branch.c_indist).epsilon(1e-12));
  CHECK(rate_at(0.0) == doctest::Approx(branch.c_dist).epsilon(1e-12));
}
