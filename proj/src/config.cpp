#include "interceptsim/config.hpp"

#include <json.hpp>

#include "interceptsim/trace_io.hpp"

namespace icept {

using nlohmann::json;

WorkloadSpec workload_spec_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("workload JSON: ") + e.what());
  }

  WorkloadSpec spec;
  try {
    spec.request_count = j.at("request_count").get<int>();
    spec.arrival_rate = j.at("arrival_rate").get<double>();
    if (j.contains("seed")) spec.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("max_seq_len")) spec.max_seq_len = j["max_seq_len"].get<int>();
    if (j.contains("final_decode_mean")) spec.final_decode_mean = j["final_decode_mean"].get<double>();

    if (!j.contains("classes") || !j["classes"].is_array() || j["classes"].empty())
      throw ConfigError("workload JSON: classes must be a non-empty array");

    double assigned = 0.0;
    int unweighted = 0;
    for (const auto& jc : j["classes"]) {
      InterceptionClass cls;
      const std::string name = jc.at("name").get<std::string>();
      if (const InterceptionClass* base = find_builtin_class(name)) cls = *base;
      cls.name = name;
      if (jc.contains("duration_mean")) cls.duration_mean = jc["duration_mean"].get<double>();
      if (jc.contains("duration_var")) cls.duration_var = jc["duration_var"].get<double>();
      if (jc.contains("count_mean")) cls.count_mean = jc["count_mean"].get<double>();
      if (jc.contains("count_var")) cls.count_var = jc["count_var"].get<double>();
      if (jc.contains("context_mean")) cls.context_mean = jc["context_mean"].get<double>();
      if (jc.contains("context_var")) cls.context_var = jc["context_var"].get<double>();
      if (jc.contains("return_tokens")) cls.return_tokens = jc["return_tokens"].get<int>();
      if (jc.contains("weight")) {
        cls.weight = jc["weight"].get<double>();
        assigned += cls.weight;
      } else {
        cls.weight = -1.0;
        unweighted += 1;
      }
      spec.classes.push_back(std::move(cls));
    }
    if (unweighted > 0) {
      const double rest = 1.0 - assigned;
      if (rest <= 0.0) throw ConfigError("workload JSON: explicit weights leave no room for the rest");
      for (auto& c : spec.classes)
        if (c.weight < 0.0) c.weight = rest / unweighted;
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("workload JSON: ") + e.what());
  }
  return spec;
}

std::string workload_spec_to_json(const WorkloadSpec& spec) {
  json j;
  j["request_count"] = spec.request_count;
  j["arrival_rate"] = spec.arrival_rate;
  j["seed"] = spec.seed;
  j["max_seq_len"] = spec.max_seq_len;
  j["final_decode_mean"] = spec.final_decode_mean;
  json classes = json::array();
  for (const auto& c : spec.classes) {
    classes.push_back({{"name", c.name},
                       {"weight", c.weight},
                       {"duration_mean", c.duration_mean},
                       {"duration_var", c.duration_var},
                       {"count_mean", c.count_mean},
                       {"count_var", c.count_var},
                       {"context_mean", c.context_mean},
                       {"context_var", c.context_var},
                       {"return_tokens", c.return_tokens}});
  }
  j["classes"] = std::move(classes);
  return j.dump(2);
}

RunOptions run_options_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("run JSON: ") + e.what());
  }

  RunOptions opts;
  try {
    const std::string policy = j.contains("policy") ? j["policy"].get<std::string>() : "infercept";
    opts.policy = PolicyConfig::for_kind(parse_policy(policy));
    if (j.contains("estimator")) opts.estimator = parse_estimator(j["estimator"].get<std::string>());
    if (j.contains("max_sim_seconds")) opts.max_sim_seconds = j["max_sim_seconds"].get<double>();
    if (j.contains("event_log")) opts.event_log_path = j["event_log"].get<std::string>();
    if (j.contains("dump_ledger_every")) opts.dump_ledger_every = j["dump_ledger_every"].get<int>();
    if (j.contains("collect_iterations")) opts.collect_iteration_log = j["collect_iterations"].get<bool>();
    if (j.contains("check_invariants")) opts.check_invariants = j["check_invariants"].get<bool>();
    if (j.contains("chunked_recompute")) opts.policy.chunked_recompute = j["chunked_recompute"].get<bool>();
    if (j.contains("budgeted_swap")) opts.policy.budgeted_swap = j["budgeted_swap"].get<bool>();
    if (j.contains("preserve_mode")) {
      const std::string mode = j["preserve_mode"].get<std::string>();
      if (mode == "never") opts.policy.preserve_mode = PreserveMode::Never;
      else if (mode == "heuristic") opts.policy.preserve_mode = PreserveMode::Heuristic;
      else if (mode == "min-waste") opts.policy.preserve_mode = PreserveMode::MinWaste;
      else throw ConfigError("run JSON: unknown preserve_mode " + mode);
    }
    if (j.contains("heuristic_threshold"))
      opts.policy.heuristic_threshold = j["heuristic_threshold"].get<double>();
    if (j.contains("profiled_means")) {
      for (const auto& [kind, v] : j["profiled_means"].items())
        opts.profiled_means[kind] = v.get<double>();
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("run JSON: ") + e.what());
  }
  return opts;
}

std::string class_stats_to_json(const std::vector<ClassStats>& stats) {
  json j = json::object();
  for (const auto& st : stats) {
    j[st.name] = {{"requests", st.requests},
                  {"interceptions", st.interceptions},
                  {"duration_mean", st.duration_mean},
                  {"duration_var", st.duration_var},
                  {"count_mean", st.count_mean},
                  {"count_var", st.count_var},
                  {"context_mean", st.context_mean},
                  {"context_var", st.context_var}};
  }
  return j.dump(2);
}

}  // namespace icept
