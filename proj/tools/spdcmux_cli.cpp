// Command-line front end for the spdcmux shared library. Parses flags,
// forwards everything to the C API, and maps statuses to exit codes:
// 0 success, 2 config error, 3 numerical failure or validation violation.

#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "spdcmux.h"

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_dir;
  long long seed = -1;
  long long truncation = -1;
  long long workers = -1;
  bool svg = false;
};

int status_to_exit(spdcmux_status status) {
  switch (status) {
    case SPDCMUX_OK:
      return 0;
    case SPDCMUX_ERR_CONFIG:
    case SPDCMUX_ERR_INVALID_ARGUMENT:
    case SPDCMUX_ERR_IO:
      return 2;
    case SPDCMUX_ERR_NUMERICAL:
    case SPDCMUX_ERR_VALIDATION_FAILED:
    default:
      return 3;
  }
}

int report_failure(spdcmux_status status, const char* what) {
  std::fprintf(stderr, "spdcmux: %s: %s\n", what, spdcmux_last_error());
  return status_to_exit(status);
}

std::string resolve_out_dir(const CommonOpts& opts) {
  if (!opts.out_dir.empty()) return opts.out_dir;
  // output directory is the only environment override
  if (const char* env = std::getenv("SPDCMUX_OUT_DIR"); env && *env) return env;
  return "out";
}

spdcmux_status load_config(const CommonOpts& opts, spdcmux_config** config) {
  spdcmux_status status = opts.config_path.empty()
                              ? spdcmux_config_default(config)
                              : spdcmux_config_load(opts.config_path.c_str(), config);
  if (status != SPDCMUX_OK) return status;
  struct {
    const char* key;
    long long value;
  } overrides[] = {{"seed", opts.seed}, {"truncation", opts.truncation}, {"workers", opts.workers}};
  for (const auto& o : overrides) {
    if (o.value < 0) continue;
    status = spdcmux_config_set_int(*config, o.key, o.value);
    if (status != SPDCMUX_OK) return status;
  }
  if (opts.svg) {
    status = spdcmux_config_set_int(*config, "svg", 1);
    if (status != SPDCMUX_OK) return status;
  }
  return SPDCMUX_OK;
}

void add_common_flags(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "experiment config (JSON)");
  cmd->add_option("--out", opts.out_dir, "output directory (default: $SPDCMUX_OUT_DIR or ./out)");
  cmd->add_option("--seed", opts.seed, "override the RNG seed");
  cmd->add_option("--truncation", opts.truncation, "override the pair-number truncation");
  cmd->add_option("--workers", opts.workers, "scan worker threads (0 = all cores)");
  cmd->add_flag("--svg", opts.svg, "also emit SVG charts");
}

int run_named_experiment(const CommonOpts& opts, const std::string& name) {
  spdcmux_config* config = nullptr;
  spdcmux_status status = load_config(opts, &config);
  if (status != SPDCMUX_OK) return report_failure(status, name.c_str());

  char* summary = nullptr;
  status = spdcmux_run_experiment(config, name.c_str(), resolve_out_dir(opts).c_str(), &summary);
  if (summary) {
    std::printf("%s\n", summary);
    spdcmux_string_free(summary);
  }
  spdcmux_config_free(config);
  if (status != SPDCMUX_OK && status != SPDCMUX_ERR_VALIDATION_FAILED) {
    return report_failure(status, name.c_str());
  }
  return status_to_exit(status);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string("spdcmux, a pulsed SPDC multiplexing simulator (") +
               spdcmux_version() + ")"};
  app.require_subcommand(1);

  struct Cmd {
    const char* name;
    const char* help;
  };
  const std::vector<Cmd> scans = {
      {"pn-ratio", "4-photon/2-photon event ratio vs pump power"},
      {"hom-scan", "HOM visibility vs pump power through the CZ gate"},
      {"cz-state", "post-selected state fidelity and tangle vs pump power"},
      {"cz-process", "process fidelity of the gate vs pump power"},
      {"vis-heatmap", "visibility over detector efficiency and repetition-rate multiple"},
      {"validate", "repetition-rate ceiling and truncation leakage checks"},
  };

  std::vector<CommonOpts> opts(scans.size());
  std::vector<std::string> names;
  for (std::size_t i = 0; i < scans.size(); ++i) {
    CLI::App* cmd = app.add_subcommand(scans[i].name, scans[i].help);
    add_common_flags(cmd, opts[i]);
    names.emplace_back(scans[i].name);
  }

  CommonOpts tomo_opts;
  std::string counts_path;
  CLI::App* tomo = app.add_subcommand("tomo-fit", "maximum-likelihood fit of a counts CSV");
  tomo->add_option("counts", counts_path, "counts CSV (setting_qubit1,setting_qubit2,counts)")
      ->required();
  add_common_flags(tomo, tomo_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  for (std::size_t i = 0; i < scans.size(); ++i) {
    if (app.get_subcommand(names[i])->parsed()) {
      return run_named_experiment(opts[i], names[i]);
    }
  }

  if (tomo->parsed()) {
    spdcmux_config* config = nullptr;
    spdcmux_status status = load_config(tomo_opts, &config);
    if (status != SPDCMUX_OK) return report_failure(status, "tomo-fit");
    char* summary = nullptr;
    status = spdcmux_run_tomo_fit(config, counts_path.c_str(),
                                  resolve_out_dir(tomo_opts).c_str(), &summary);
    if (summary) {
      std::printf("%s\n", summary);
      spdcmux_string_free(summary);
    }
    spdcmux_config_free(config);
    if (status != SPDCMUX_OK) return report_failure(status, "tomo-fit");
    return 0;
  }

  return 2;
}
