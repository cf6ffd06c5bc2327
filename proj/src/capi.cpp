#include "spdcmux.h"

#include <cstring>
#include <new>
#include <string>

#include "spdcmux/experiments.hpp"
#include "spdcmux/spdc.hpp"
#include "spdcmux/tomography.hpp"

namespace {

thread_local std::string g_last_error = "";

spdcmux_status fail(spdcmux_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

// exceptions never cross the C boundary
template <class F>
spdcmux_status guarded(F&& body) {
  try {
    return body();
  } catch (const spdcmux::ConfigError& e) {
    return fail(SPDCMUX_ERR_CONFIG, e.what());
  } catch (const spdcmux::NumericalError& e) {
    return fail(SPDCMUX_ERR_NUMERICAL, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(SPDCMUX_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::exception& e) {
    return fail(SPDCMUX_ERR_NUMERICAL, e.what());
  } catch (...) {
    return fail(SPDCMUX_ERR_NUMERICAL, "unknown error");
  }
}

Eigen::Matrix4cd matrix_from_interleaved(const double* data) {
  Eigen::Matrix4cd m;
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      const int k = 2 * (4 * r + c);
      m(r, c) = std::complex<double>(data[k], data[k + 1]);
    }
  }
  return m;
}

void matrix_to_interleaved(const Eigen::Matrix4cd& m, double* data) {
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      const int k = 2 * (4 * r + c);
      data[k] = m(r, c).real();
      data[k + 1] = m(r, c).imag();
    }
  }
}

char* dup_string(const std::string& s) {
  char* out = new (std::nothrow) char[s.size() + 1];
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

struct spdcmux_source {
  spdcmux::spdc::SourceParams params;
};

struct spdcmux_config {
  spdcmux::experiments::ExperimentConfig config;
};

extern "C" {

const char* spdcmux_version(void) { return spdcmux::experiments::version_string(); }

const char* spdcmux_last_error(void) { return g_last_error.c_str(); }

spdcmux_status spdcmux_source_create(double lambda_per_pulse, double rep_rate_hz,
                                     int multiplex_factor, spdcmux_source** out) {
  if (!out) return fail(SPDCMUX_ERR_INVALID_ARGUMENT, "out pointer is null");
  return guarded([&] {
    auto* handle = new spdcmux_source{
        spdcmux::spdc::SourceParams::from_lambda(lambda_per_pulse, rep_rate_hz, multiplex_factor)};
    *out = handle;
    return SPDCMUX_OK;
  });
}

spdcmux_status spdcmux_source_from_power(double pump_power_mw, double calib_k,
                                         double rep_rate_hz, int multiplex_factor,
                                         spdcmux_source** out) {
  if (!out) return fail(SPDCMUX_ERR_INVALID_ARGUMENT, "out pointer is null");
  return guarded([&] {
    auto* handle = new spdcmux_source{spdcmux::spdc::SourceParams::from_power(
        pump_power_mw, rep_rate_hz, multiplex_factor, calib_k)};
    *out = handle;
    return SPDCMUX_OK;
  });
}

void spdcmux_source_free(spdcmux_source* source) { delete source; }

double spdcmux_source_lambda(const spdcmux_source* source) {
  return source ? source->params.lambda : 0.0;
}

double spdcmux_default_calib_k(void) { return spdcmux::spdc::default_calib_k(); }

spdcmux_status spdcmux_pair_probability(const spdcmux_source* source, int n, double* out) {
  if (!source || !out) return fail(SPDCMUX_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    *out = spdcmux::spdc::pair_probability(source->params, n);
    return SPDCMUX_OK;
  });
}

spdcmux_status spdcmux_coincidence_rate(const spdcmux_source* source, double eta, double* out) {
  if (!source || !out) return fail(SPDCMUX_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    *out = spdcmux::spdc::coincidence_rate(source->params, eta);
    return SPDCMUX_OK;
  });
}

spdcmux_status spdcmux_snr(const spdcmux_source* source, double eta, double* out) {
  if (!source || !out) return fail(SPDCMUX_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    *out = spdcmux::spdc::snr(source->params, eta);
    return SPDCMUX_OK;
  });
}

spdcmux_status spdcmux_heralded_joint_rate(const spdcmux_source* forward,
                                           const spdcmux_source* backward, double eta,
                                           double* out) {
  if (!forward || !backward || !out) return fail(SPDCMUX_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    spdcmux::spdc::DualPassParams params{forward->params, backward->params};
    *out = spdcmux::spdc::heralded_joint_rate(params, eta);
    return SPDCMUX_OK;
  });
}

spdcmux_status spdcmux_validate_rep_rate(const spdcmux_source* source, double window_s,
                                         int* ok) {
  if (!source || !ok) return fail(SPDCMUX_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    const auto check = spdcmux::spdc::validate_rep_rate(source->params, {window_s});
    *ok = check.verdict == spdcmux::spdc::RepRateVerdict::ok ? 1 : 0;
    return SPDCMUX_OK;
  });
}

spdcmux_status spdcmux_hom_visibility(double c_dist, double c_indist, double* out) {
  if (!out) return fail(SPDCMUX_ERR_INVALID_ARGUMENT, "out pointer is null");
  return guarded([&] {
    *out = spdcmux::tomo::hom_visibility(c_dist, c_indist).visibility;
    return SPDCMUX_OK;
  });
}

spdcmux_status spdcmux_state_fidelity(const double rho[32], const double sigma[32],
                                      double* out) {
  if (!rho || !sigma || !out) return fail(SPDCMUX_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    *out = spdcmux::tomo::fidelity(matrix_from_interleaved(rho), matrix_from_interleaved(sigma));
    return SPDCMUX_OK;
  });
}

spdcmux_status spdcmux_tangle(const double rho[32], double* out) {
  if (!rho || !out) return fail(SPDCMUX_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    *out = spdcmux::tomo::tangle(matrix_from_interleaved(rho));
    return SPDCMUX_OK;
  });
}

spdcmux_status spdcmux_tomo_fit_csv(const char* csv_path, const double* target_or_null,
                                    double rho_out[32], double* fidelity_out,
                                    double* tangle_out, double* log_likelihood_out) {
  if (!csv_path || !rho_out) return fail(SPDCMUX_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    const auto set = spdcmux::tomo::load_counts_csv(csv_path);
    const Eigen::Matrix4cd target = target_or_null
                                        ? matrix_from_interleaved(target_or_null)
                                        : spdcmux::tomo::density(spdcmux::tomo::bell_hd_va_ket());
    const auto fit = spdcmux::tomo::mle_reconstruct(set, target);
    matrix_to_interleaved(fit.rho, rho_out);
    if (fidelity_out) *fidelity_out = fit.fidelity;
    if (tangle_out) *tangle_out = fit.tangle;
    if (log_likelihood_out) *log_likelihood_out = fit.log_likelihood;
    return SPDCMUX_OK;
  });
}

spdcmux_status spdcmux_config_default(spdcmux_config** out) {
  if (!out) return fail(SPDCMUX_ERR_INVALID_ARGUMENT, "out pointer is null");
  return guarded([&] {
    *out = new spdcmux_config{spdcmux::experiments::ExperimentConfig::defaults()};
    return SPDCMUX_OK;
  });
}

spdcmux_status spdcmux_config_load(const char* path, spdcmux_config** out) {
  if (!path || !out) return fail(SPDCMUX_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    *out = new spdcmux_config{spdcmux::experiments::ExperimentConfig::load(path)};
    return SPDCMUX_OK;
  });
}

void spdcmux_config_free(spdcmux_config* config) { delete config; }

spdcmux_status spdcmux_config_set_int(spdcmux_config* config, const char* key, long long value) {
  if (!config || !key) return fail(SPDCMUX_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    const std::string k = key;
    if (k == "truncation") {
      config->config.truncation = static_cast<int>(value);
    } else if (k == "seed") {
      config->config.seed = static_cast<std::uint64_t>(value);
    } else if (k == "workers") {
      config->config.workers = static_cast<int>(value);
    } else if (k == "svg") {
      config->config.svg = value != 0;
    } else {
      return fail(SPDCMUX_ERR_INVALID_ARGUMENT, "unknown config key: " + k);
    }
    config->config.validate();
    return SPDCMUX_OK;
  });
}

spdcmux_status spdcmux_config_hash(const spdcmux_config* config, uint64_t* out) {
  if (!config || !out) return fail(SPDCMUX_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    *out = config->config.hash();
    return SPDCMUX_OK;
  });
}

spdcmux_status spdcmux_run_experiment(const spdcmux_config* config, const char* name,
                                      const char* out_dir, char** summary_out) {
  if (!config || !name || !out_dir) return fail(SPDCMUX_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    const auto result = spdcmux::experiments::run_experiment(config->config, name, out_dir);
    if (summary_out) *summary_out = dup_string(result.summary);
    if (!result.ok) return fail(SPDCMUX_ERR_VALIDATION_FAILED, result.summary);
    return SPDCMUX_OK;
  });
}

spdcmux_status spdcmux_run_tomo_fit(const spdcmux_config* config, const char* counts_csv,
                                    const char* out_dir, char** summary_out) {
  if (!config || !counts_csv || !out_dir) {
    return fail(SPDCMUX_ERR_INVALID_ARGUMENT, "null argument");
  }
  return guarded([&] {
    const auto result = spdcmux::experiments::run_tomo_fit(config->config, counts_csv, out_dir);
    if (summary_out) *summary_out = dup_string(result.summary);
    return SPDCMUX_OK;
  });
}

void spdcmux_string_free(char* s) { delete[] s; }

}  // extern "C"
