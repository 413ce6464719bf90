// Command-line front end. Links only the C API so it doubles as a smoke test
// of the shared-library surface.
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "interceptsim.h"

using nlohmann::json;

namespace {

constexpr const char* kPolicies[] = {"vanilla-discard", "improved-discard", "preserve", "swap",
                                     "infercept"};

[[noreturn]] void fail(isim_status status) {
  std::cerr << "error (" << isim_status_name(status) << "): " << isim_last_error() << '\n';
  const bool usage = status == ISIM_ERR_CONFIG || status == ISIM_ERR_INVALID_ARG;
  std::exit(usage ? 2 : 1);
}

void check(isim_status status) {
  if (status != ISIM_OK) fail(status);
}

std::string take_string(char* s) {
  std::string out = s ? s : "";
  isim_string_free(s);
  return out;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    std::cerr << "error: cannot open " << path << '\n';
    std::exit(1);
  }
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    std::cerr << "error: " << path << ": " << e.what() << '\n';
    std::exit(2);
  }
  return j;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) {
    std::cerr << "error: cannot open " << path << " for writing\n";
    std::exit(1);
  }
  out << text;
  if (!text.empty() && text.back() != '\n') out << '\n';
}

struct CommonOpts {
  std::string config_path;
  std::string trace_path;
  std::string model_path;
  std::string workload_classes;  // "Chatbot:0.5,Math:0.5" or "mixed"
  int request_count = 0;
  double arrival_rate = 0.0;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

json classes_from_spec(const std::string& spec) {
  json classes = json::array();
  if (spec.empty() || spec == "mixed") {
    for (const char* name : {"Math", "QA", "VE", "Chatbot", "Image", "TTS"})
      classes.push_back({{"name", name}});
    return classes;
  }
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    json c;
    if (colon == std::string::npos) {
      c["name"] = item;
    } else {
      c["name"] = item.substr(0, colon);
      c["weight"] = std::stod(item.substr(colon + 1));
    }
    classes.push_back(std::move(c));
  }
  return classes;
}

// Resolve the workload JSON from --config / flags.
json workload_json(const CommonOpts& opts) {
  json w;
  if (!opts.config_path.empty()) {
    json cfg = load_json_file(opts.config_path);
    if (cfg.contains("workload")) w = cfg["workload"];
  }
  if (!w.contains("classes")) w["classes"] = classes_from_spec(opts.workload_classes);
  if (opts.request_count > 0) w["request_count"] = opts.request_count;
  if (opts.arrival_rate > 0.0) w["arrival_rate"] = opts.arrival_rate;
  if (opts.seed_set || !w.contains("seed")) w["seed"] = opts.seed;
  if (!w.contains("request_count")) w["request_count"] = 1000;
  if (!w.contains("arrival_rate")) w["arrival_rate"] = 1.0;
  return w;
}

isim_model* resolve_model(const CommonOpts& opts) {
  isim_model* model = nullptr;
  if (!opts.model_path.empty()) {
    check(isim_model_load(opts.model_path.c_str(), &model));
    return model;
  }
  if (!opts.config_path.empty()) {
    json cfg = load_json_file(opts.config_path);
    if (cfg.contains("model")) {
      check(isim_model_from_json(cfg["model"].dump().c_str(), &model));
      return model;
    }
    if (cfg.contains("model_path")) {
      check(isim_model_load(cfg["model_path"].get<std::string>().c_str(), &model));
      return model;
    }
  }
  check(isim_model_default(&model));
  return model;
}

isim_trace* resolve_trace(const CommonOpts& opts) {
  isim_trace* trace = nullptr;
  if (!opts.trace_path.empty()) {
    check(isim_trace_load(opts.trace_path.c_str(), &trace));
    return trace;
  }
  if (!opts.config_path.empty()) {
    json cfg = load_json_file(opts.config_path);
    if (cfg.contains("trace")) {
      check(isim_trace_load(cfg["trace"].get<std::string>().c_str(), &trace));
      return trace;
    }
  }
  check(isim_trace_generate(workload_json(opts).dump().c_str(), &trace));
  return trace;
}

double metric(const isim_result* r, const char* name) {
  double v = 0.0;
  const isim_status st = isim_result_metric(r, name, &v);
  if (st == ISIM_ERR_UNDEFINED_METRIC) return -1.0;
  check(st);
  return v;
}

int sweep_threads() {
  if (const char* env = std::getenv("INTERCEPT_SIM_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 4;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"interceptsim: discrete-event simulator of interception handling policies for "
               "augmented-LLM serving"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::string out_path, out_dir = ".";
  std::string policy = "infercept", estimator = "oracle";
  std::string event_log;
  int dump_ledger_every = 0;
  double max_sim_seconds = 86400.0;
  std::string rates_csv, policies_csv = "all";
  std::vector<std::string> report_files;

  auto add_common = [&](CLI::App* cmd, bool with_trace) {
    cmd->add_option("--config", opts.config_path, "JSON config file");
    if (with_trace) cmd->add_option("--trace", opts.trace_path, "trace file (JSONL)");
    cmd->add_option("--model", opts.model_path, "cost model JSON file");
    cmd->add_option("--classes", opts.workload_classes,
                    "class mixture, e.g. 'Chatbot:0.5,Math:0.5' or 'mixed'");
    cmd->add_option("--count", opts.request_count, "number of requests to generate");
    cmd->add_option("--rate", opts.arrival_rate, "arrival rate (requests/s)");
    cmd->add_option("--seed", opts.seed, "PRNG seed")->each([&](const std::string&) {
      opts.seed_set = true;
    });
  };

  auto* gen = app.add_subcommand("gen", "generate a synthetic trace");
  add_common(gen, false);
  gen->add_option("--out", out_path, "output trace path (JSONL)")->required();

  auto* profile = app.add_subcommand("profile", "fit a forward-time curve from profiling points");
  std::string points_csv;
  profile->add_option("points", points_csv, "CSV of batch_tokens,seconds")->required();
  profile->add_option("--base", opts.model_path, "base model JSON for non-fitted fields");
  profile->add_option("--out", out_path, "output model JSON path")->required();

  auto* runc = app.add_subcommand("run", "simulate one policy over a trace");
  add_common(runc, true);
  runc->add_option("--policy", policy, "vanilla-discard|improved-discard|preserve|swap|infercept");
  runc->add_option("--duration-estimator", estimator, "oracle|profiled|dynamic");
  runc->add_option("--out-dir", out_dir, "directory for requests.csv and summary.json");
  runc->add_option("--event-log", event_log, "per-iteration JSONL log path");
  runc->add_option("--dump-ledger-every", dump_ledger_every, "ledger snapshot cadence (iterations)");
  runc->add_option("--max-sim-seconds", max_sim_seconds, "virtual-time horizon");

  auto* sweep = app.add_subcommand("sweep", "rate x policy grid, aggregated CSV");
  add_common(sweep, false);
  sweep->add_option("--rates", rates_csv, "comma-separated arrival rates")->required();
  sweep->add_option("--policies", policies_csv, "comma-separated policies or 'all'");
  sweep->add_option("--duration-estimator", estimator, "oracle|profiled|dynamic");
  sweep->add_option("--out", out_path, "output CSV path")->required();
  sweep->add_option("--max-sim-seconds", max_sim_seconds, "virtual-time horizon");

  auto* report = app.add_subcommand("report", "summarize sweep CSVs / run summaries");
  report->add_option("files", report_files, "sweep .csv or summary .json files")->required();

  CLI11_PARSE(app, argc, argv);

  if (gen->parsed()) {
    const json w = workload_json(opts);
    isim_trace* trace = nullptr;
    check(isim_trace_generate(w.dump().c_str(), &trace));
    check(isim_trace_save(trace, out_path.c_str()));
    char* stats = nullptr;
    check(isim_trace_stats_json(trace, &stats));
    write_file(out_path + ".stats.json", take_string(stats));
    std::cout << "wrote " << isim_trace_request_count(trace) << " requests to " << out_path << '\n';
    isim_trace_free(trace);
    return 0;
  }

  if (profile->parsed()) {
    isim_model* model = nullptr;
    json base;
    if (!opts.model_path.empty()) base = load_json_file(opts.model_path);
    check(isim_model_fit_csv(points_csv.c_str(), base.is_null() ? nullptr : base.dump().c_str(),
                             &model));
    check(isim_model_save(model, out_path.c_str()));
    char* js = nullptr;
    check(isim_model_to_json(model, &js));
    const json fitted = json::parse(take_string(js));
    std::cout << "saturation_point=" << fmt(fitted["saturation_point"].get<double>())
              << " t0=" << fmt(fitted["t0"].get<double>())
              << " slope_below=" << fmt(fitted["slope_below"].get<double>())
              << " slope_above=" << fmt(fitted["slope_above"].get<double>()) << '\n';
    isim_model_free(model);
    return 0;
  }

  if (runc->parsed()) {
    isim_trace* trace = resolve_trace(opts);
    isim_model* model = resolve_model(opts);
    json run_cfg;
    if (!opts.config_path.empty()) {
      json cfg = load_json_file(opts.config_path);
      if (cfg.contains("run")) run_cfg = cfg["run"];
    }
    run_cfg["policy"] = policy;
    run_cfg["estimator"] = estimator;
    run_cfg["max_sim_seconds"] = max_sim_seconds;
    if (!event_log.empty()) run_cfg["event_log"] = event_log;
    if (dump_ledger_every > 0) run_cfg["dump_ledger_every"] = dump_ledger_every;

    isim_result* result = nullptr;
    check(isim_run(trace, model, run_cfg.dump().c_str(), &result));
    check(isim_result_write_requests_csv(result, (out_dir + "/requests.csv").c_str()));
    char* summary = nullptr;
    check(isim_result_summary_json(result, &summary));
    const std::string text = take_string(summary);
    write_file(out_dir + "/summary.json", text);
    std::cout << text << '\n';
    isim_result_free(result);
    isim_model_free(model);
    isim_trace_free(trace);
    return 0;
  }

  if (sweep->parsed()) {
    std::vector<double> rates;
    {
      std::stringstream ss(rates_csv);
      std::string item;
      while (std::getline(ss, item, ',')) rates.push_back(std::stod(item));
      if (rates.empty()) {
        std::cerr << "error: --rates is empty\n";
        return 2;
      }
    }
    std::vector<std::string> policies;
    if (policies_csv == "all") {
      policies.assign(std::begin(kPolicies), std::end(kPolicies));
    } else {
      std::stringstream ss(policies_csv);
      std::string item;
      while (std::getline(ss, item, ',')) policies.push_back(item);
    }

    isim_model* model = resolve_model(opts);
    const json base_workload = workload_json(opts);

    struct Cell {
      double rate;
      std::string policy;
      std::string row;
    };
    std::vector<Cell> cells;
    for (double rate : rates)
      for (const auto& pol : policies) cells.push_back({rate, pol, {}});

    std::atomic<std::size_t> cursor{0};
    std::mutex fail_mutex;
    std::string failure;
    auto worker = [&] {
      for (;;) {
        const std::size_t i = cursor.fetch_add(1);
        if (i >= cells.size()) return;
        Cell& cell = cells[i];
        json w = base_workload;
        w["arrival_rate"] = cell.rate;
        isim_trace* trace = nullptr;
        isim_result* result = nullptr;
        json run_cfg = {{"policy", cell.policy},
                        {"estimator", estimator},
                        {"max_sim_seconds", max_sim_seconds}};
        isim_status st = isim_trace_generate(w.dump().c_str(), &trace);
        if (st == ISIM_OK) st = isim_run(trace, model, run_cfg.dump().c_str(), &result);
        if (st != ISIM_OK) {
          std::lock_guard<std::mutex> lock(fail_mutex);
          if (failure.empty())
            failure = std::string(isim_status_name(st)) + ": " + isim_last_error();
        } else {
          cell.row = fmt(cell.rate) + "," + cell.policy + "," + fmt(metric(result, "norm_latency")) +
                     "," + fmt(metric(result, "throughput")) + "," + fmt(metric(result, "ttft")) +
                     "," + fmt(metric(result, "waste_pct"));
        }
        isim_result_free(result);
        isim_trace_free(trace);
      }
    };

    const int nthreads = std::min<int>(sweep_threads(), static_cast<int>(cells.size()));
    std::vector<std::thread> pool;
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    isim_model_free(model);

    if (!failure.empty()) {
      std::cerr << "error: " << failure << '\n';
      return 1;
    }

    std::ostringstream csv;
    csv << "rate,policy,norm_latency,throughput,ttft,waste_pct\n";
    for (const auto& cell : cells) csv << cell.row << '\n';
    write_file(out_path, csv.str());
    std::cout << "wrote " << cells.size() << " rows to " << out_path << '\n';
    return 0;
  }

  if (report->parsed()) {
    for (const auto& file : report_files) {
      if (file.size() > 4 && file.substr(file.size() - 4) == ".csv") {
        std::ifstream in(file);
        if (!in) {
          std::cerr << "error: cannot open " << file << '\n';
          return 1;
        }
        std::cout << "== " << file << '\n' << in.rdbuf() << '\n';
      } else {
        const json j = load_json_file(file);
        std::cout << "== " << file << '\n';
        std::cout << "completed=" << j.value("completed", 0)
                  << " norm_latency=" << (j["normalized_latency"].is_null()
                                              ? std::string("n/a")
                                              : fmt(j["normalized_latency"].get<double>()))
                  << " throughput=" << fmt(j.value("throughput", 0.0))
                  << " waste_pct=" << fmt(j["waste"].value("pct_of_capacity_time", 0.0)) << '\n';
      }
    }
    return 0;
  }

  return 0;
}
