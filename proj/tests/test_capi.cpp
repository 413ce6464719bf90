// Exercises the shared-library surface the way an external client would.
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>
#include <json.hpp>

#include "interceptsim.h"

using nlohmann::json;

namespace {

std::string take(char* s) {
  std::string out = s ? s : "";
  isim_string_free(s);
  return out;
}

const char* kWorkload = R"({
  "classes": [{"name":"Chatbot","weight":0.5},{"name":"Math","weight":0.5}],
  "request_count": 60, "arrival_rate": 2.0, "seed": 21
})";

}  // namespace

TEST_CASE("generate, save, load, run, inspect") {
  isim_trace* trace = nullptr;
  REQUIRE(isim_trace_generate(kWorkload, &trace) == ISIM_OK);
  CHECK(isim_trace_request_count(trace) == 60);

  const std::string path = "/tmp/interceptsim_capi_trace.jsonl";
  REQUIRE(isim_trace_save(trace, path.c_str()) == ISIM_OK);
  isim_trace* loaded = nullptr;
  REQUIRE(isim_trace_load(path.c_str(), &loaded) == ISIM_OK);
  CHECK(isim_trace_request_count(loaded) == 60);
  std::remove(path.c_str());

  char* stats_raw = nullptr;
  REQUIRE(isim_trace_stats_json(trace, &stats_raw) == ISIM_OK);
  const json stats = json::parse(take(stats_raw));
  CHECK(stats.contains("Chatbot"));
  CHECK(stats.contains("Math"));

  isim_model* model = nullptr;
  REQUIRE(isim_model_default(&model) == ISIM_OK);
  CHECK(isim_model_t_swap(model, 0) == 0.0);
  CHECK(isim_model_t_fwd(model, 10) > isim_model_t_fwd(model, 0));

  isim_result* result = nullptr;
  const char* run_cfg = R"({"policy":"infercept","estimator":"oracle"})";
  REQUIRE(isim_run(trace, model, run_cfg, &result) == ISIM_OK);

  double completed = 0.0;
  REQUIRE(isim_result_metric(result, "completed", &completed) == ISIM_OK);
  CHECK(completed == 60.0);
  double norm = 0.0;
  REQUIRE(isim_result_metric(result, "norm_latency", &norm) == ISIM_OK);
  CHECK(norm > 0.0);

  char* summary_raw = nullptr;
  REQUIRE(isim_result_summary_json(result, &summary_raw) == ISIM_OK);
  const json summary = json::parse(take(summary_raw));
  CHECK(summary["completed"] == 60);
  CHECK(summary["waste"].contains("pct_of_capacity_time"));

  const std::string csv_path = "/tmp/interceptsim_capi_requests.csv";
  REQUIRE(isim_result_write_requests_csv(result, csv_path.c_str()) == ISIM_OK);
  std::ifstream csv(csv_path);
  std::string header;
  std::getline(csv, header);
  CHECK(header == "id,class,arrival,ttft,completion,output_tokens,interception_time,norm_latency");
  std::remove(csv_path.c_str());

  isim_result_free(result);
  isim_model_free(model);
  isim_trace_free(loaded);
  isim_trace_free(trace);
}

TEST_CASE("fit through the C surface") {
  const std::string csv_path = "/tmp/interceptsim_capi_profile.csv";
  {
    std::ofstream out(csv_path);
    out << "batch_tokens,seconds\n";
    for (double x : {256.0, 1024.0, 2048.0, 3072.0, 4096.0}) {
      const double y = 0.02 + 1e-5 * std::min(x, 2048.0) + 3e-5 * std::max(x - 2048.0, 0.0);
      out << x << ',' << y << '\n';
    }
  }
  isim_model* model = nullptr;
  REQUIRE(isim_model_fit_csv(csv_path.c_str(), nullptr, &model) == ISIM_OK);
  char* js = nullptr;
  REQUIRE(isim_model_to_json(model, &js) == ISIM_OK);
  const json fitted = json::parse(take(js));
  CHECK(fitted["saturation_point"].get<double>() == doctest::Approx(2048.0).epsilon(1e-9));
  CHECK(fitted["t0"].get<double>() == doctest::Approx(0.02).epsilon(1e-9));
  isim_model_free(model);
  std::remove(csv_path.c_str());
}

TEST_CASE("error reporting") {
  isim_trace* trace = nullptr;
  CHECK(isim_trace_generate(nullptr, &trace) == ISIM_ERR_INVALID_ARG);
  CHECK(isim_trace_generate("{\"classes\":[],\"request_count\":1,\"arrival_rate\":1}", &trace) ==
        ISIM_ERR_CONFIG);
  CHECK(std::strlen(isim_last_error()) > 0);

  CHECK(isim_trace_load("/tmp/no_such_interceptsim_trace.jsonl", &trace) == ISIM_ERR_IO);

  isim_model* model = nullptr;
  CHECK(isim_model_from_json("{\"block_size\":0}", &model) == ISIM_ERR_CONFIG);

  REQUIRE(isim_trace_generate(kWorkload, &trace) == ISIM_OK);
  REQUIRE(isim_model_default(&model) == ISIM_OK);
  isim_result* result = nullptr;
  CHECK(isim_run(trace, model, "{\"policy\":\"nope\"}", &result) == ISIM_ERR_CONFIG);

  REQUIRE(isim_run(trace, model, "{\"policy\":\"preserve\",\"max_sim_seconds\":0.0}", &result) ==
          ISIM_OK);
  double v = 0.0;
  CHECK(isim_result_metric(result, "norm_latency", &v) == ISIM_ERR_UNDEFINED_METRIC);
  CHECK(isim_result_metric(result, "no_such_metric", &v) == ISIM_ERR_CONFIG);
  isim_result_free(result);
  isim_model_free(model);
  isim_trace_free(trace);
}

TEST_CASE("abi and status names") {
  CHECK(isim_abi_version() == 1);
  CHECK(std::string(isim_status_name(ISIM_OK)) == "ok");
  CHECK(std::string(isim_status_name(ISIM_ERR_PARSE)) == "parse-error");
}
