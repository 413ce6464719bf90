#include "interceptsim.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <string>
#include <vector>

#include "interceptsim/config.hpp"
#include "interceptsim/cost_model.hpp"
#include "interceptsim/engine.hpp"
#include "interceptsim/metrics.hpp"
#include "interceptsim/trace_io.hpp"
#include "interceptsim/workload.hpp"

struct isim_trace {
  std::vector<icept::Request> requests;
};

struct isim_model {
  icept::CostModel model;
};

struct isim_result {
  icept::MetricsLedger ledger;
};

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& msg) { g_last_error = msg; }

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

// Translate a thrown error into a status code, capturing the message.
template <typename Fn>
isim_status guarded(Fn&& fn) {
  try {
    fn();
    return ISIM_OK;
  } catch (const icept::ConfigError& e) {
    set_error(e.what());
    return ISIM_ERR_CONFIG;
  } catch (const icept::ParseError& e) {
    set_error(e.what());
    return ISIM_ERR_PARSE;
  } catch (const icept::ValidationError& e) {
    set_error(e.what());
    return ISIM_ERR_VALIDATION;
  } catch (const icept::FitError& e) {
    set_error(e.what());
    return ISIM_ERR_FIT;
  } catch (const icept::IoError& e) {
    set_error(e.what());
    return ISIM_ERR_IO;
  } catch (const icept::UndefinedMetric& e) {
    set_error(e.what());
    return ISIM_ERR_UNDEFINED_METRIC;
  } catch (const icept::SimError& e) {
    set_error(e.what());
    return ISIM_ERR_SIM;
  } catch (const std::exception& e) {
    set_error(e.what());
    return ISIM_ERR_INTERNAL;
  } catch (...) {
    set_error("unknown error");
    return ISIM_ERR_INTERNAL;
  }
}

}  // namespace

extern "C" {

uint32_t isim_abi_version(void) { return 1; }

const char* isim_status_name(isim_status status) {
  switch (status) {
    case ISIM_OK: return "ok";
    case ISIM_ERR_INVALID_ARG: return "invalid-argument";
    case ISIM_ERR_CONFIG: return "config-error";
    case ISIM_ERR_IO: return "io-error";
    case ISIM_ERR_PARSE: return "parse-error";
    case ISIM_ERR_VALIDATION: return "validation-error";
    case ISIM_ERR_FIT: return "fit-error";
    case ISIM_ERR_SIM: return "simulation-error";
    case ISIM_ERR_UNDEFINED_METRIC: return "undefined-metric";
    case ISIM_ERR_INTERNAL: return "internal-error";
  }
  return "unknown";
}

const char* isim_last_error(void) { return g_last_error.c_str(); }

void isim_string_free(char* s) { std::free(s); }

isim_status isim_trace_generate(const char* workload_json, isim_trace** out) {
  if (!workload_json || !out) {
    set_error("null argument");
    return ISIM_ERR_INVALID_ARG;
  }
  return guarded([&] {
    auto spec = icept::workload_spec_from_json(workload_json);
    auto t = std::make_unique<isim_trace>();
    t->requests = icept::generate_trace(spec);
    *out = t.release();
  });
}

isim_status isim_trace_load(const char* path, isim_trace** out) {
  if (!path || !out) {
    set_error("null argument");
    return ISIM_ERR_INVALID_ARG;
  }
  return guarded([&] {
    auto t = std::make_unique<isim_trace>();
    t->requests = icept::load_trace(path);
    *out = t.release();
  });
}

isim_status isim_trace_save(const isim_trace* trace, const char* path) {
  if (!trace || !path) {
    set_error("null argument");
    return ISIM_ERR_INVALID_ARG;
  }
  return guarded([&] { icept::save_trace(trace->requests, path); });
}

int64_t isim_trace_request_count(const isim_trace* trace) {
  return trace ? static_cast<int64_t>(trace->requests.size()) : 0;
}

isim_status isim_trace_stats_json(const isim_trace* trace, char** out_json) {
  if (!trace || !out_json) {
    set_error("null argument");
    return ISIM_ERR_INVALID_ARG;
  }
  return guarded([&] {
    *out_json = dup_string(icept::class_stats_to_json(icept::trace_stats(trace->requests)));
  });
}

void isim_trace_free(isim_trace* trace) { delete trace; }

isim_status isim_model_default(isim_model** out) {
  if (!out) {
    set_error("null argument");
    return ISIM_ERR_INVALID_ARG;
  }
  return guarded([&] { *out = new isim_model{icept::CostModel{}}; });
}

isim_status isim_model_from_json(const char* json_text, isim_model** out) {
  if (!json_text || !out) {
    set_error("null argument");
    return ISIM_ERR_INVALID_ARG;
  }
  return guarded([&] { *out = new isim_model{icept::cost_model_from_json(json_text)}; });
}

isim_status isim_model_load(const char* path, isim_model** out) {
  if (!path || !out) {
    set_error("null argument");
    return ISIM_ERR_INVALID_ARG;
  }
  return guarded([&] { *out = new isim_model{icept::load_cost_model(path)}; });
}

isim_status isim_model_fit_csv(const char* csv_path, const char* base_json, isim_model** out) {
  if (!csv_path || !out) {
    set_error("null argument");
    return ISIM_ERR_INVALID_ARG;
  }
  return guarded([&] {
    icept::CostModel base =
        base_json ? icept::cost_model_from_json(base_json) : icept::CostModel{};
    const auto fit = icept::fit_profile(icept::load_profile_csv(csv_path));
    base.t0 = fit.t0;
    base.slope_below = fit.slope_below;
    base.slope_above = std::max(fit.slope_above, fit.slope_below);
    base.saturation_point = fit.saturation_point;
    base.validate();
    *out = new isim_model{base};
  });
}

isim_status isim_model_to_json(const isim_model* model, char** out_json) {
  if (!model || !out_json) {
    set_error("null argument");
    return ISIM_ERR_INVALID_ARG;
  }
  return guarded([&] { *out_json = dup_string(icept::cost_model_to_json(model->model)); });
}

isim_status isim_model_save(const isim_model* model, const char* path) {
  if (!model || !path) {
    set_error("null argument");
    return ISIM_ERR_INVALID_ARG;
  }
  return guarded([&] { icept::save_cost_model(model->model, path); });
}

double isim_model_t_fwd(const isim_model* model, double batch_tokens) {
  return model ? model->model.t_fwd(batch_tokens) : 0.0;
}

double isim_model_t_swap(const isim_model* model, double tokens) {
  return model ? model->model.t_swap(tokens) : 0.0;
}

void isim_model_free(isim_model* model) { delete model; }

isim_status isim_run(const isim_trace* trace, const isim_model* model, const char* run_json,
                     isim_result** out) {
  if (!trace || !model || !out) {
    set_error("null argument");
    return ISIM_ERR_INVALID_ARG;
  }
  return guarded([&] {
    icept::RunOptions opts =
        run_json ? icept::run_options_from_json(run_json) : icept::RunOptions{};
    auto r = std::make_unique<isim_result>();
    r->ledger = icept::run(trace->requests, model->model, opts);
    *out = r.release();
  });
}

isim_status isim_result_summary_json(const isim_result* result, char** out_json) {
  if (!result || !out_json) {
    set_error("null argument");
    return ISIM_ERR_INVALID_ARG;
  }
  return guarded([&] { *out_json = dup_string(icept::summary_json(result->ledger)); });
}

isim_status isim_result_write_requests_csv(const isim_result* result, const char* path) {
  if (!result || !path) {
    set_error("null argument");
    return ISIM_ERR_INVALID_ARG;
  }
  return guarded([&] { icept::write_requests_csv(result->ledger, path); });
}

isim_status isim_result_metric(const isim_result* result, const char* name, double* out_value) {
  if (!result || !name || !out_value) {
    set_error("null argument");
    return ISIM_ERR_INVALID_ARG;
  }
  return guarded([&] {
    const std::string key = name;
    const auto& ledger = result->ledger;
    const auto wr = icept::waste_report(ledger);
    if (key == "norm_latency") *out_value = icept::normalized_latency(ledger);
    else if (key == "throughput") *out_value = icept::throughput(ledger);
    else if (key == "ttft") *out_value = icept::ttft(ledger);
    else if (key == "waste_pct") *out_value = wr.pct_of_capacity_time;
    else if (key == "recompute_fraction") *out_value = wr.recompute_fraction;
    else if (key == "waste_preserve_gb_min") *out_value = wr.preserve_gb_min;
    else if (key == "waste_recompute_gb_min") *out_value = wr.recompute_gb_min;
    else if (key == "waste_stall_gb_min") *out_value = wr.stall_gb_min;
    else if (key == "waste_total_gb_min") *out_value = wr.total_gb_min;
    else if (key == "completed") *out_value = static_cast<double>(icept::completed_count(ledger));
    else if (key == "requests") *out_value = static_cast<double>(ledger.requests.size());
    else if (key == "incomplete")
      *out_value = static_cast<double>(ledger.requests.size()) -
                   static_cast<double>(icept::completed_count(ledger));
    else if (key == "sim_wall") *out_value = ledger.sim_wall;
    else if (key == "iterations") *out_value = static_cast<double>(ledger.iterations);
    else throw icept::ConfigError("unknown metric: " + key);
  });
}

void isim_result_free(isim_result* result) { delete result; }

}  // extern "C"
