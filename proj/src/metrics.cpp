#include "interceptsim/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "interceptsim/trace_io.hpp"

namespace icept {

namespace {

double median(std::vector<double> xs) {
  if (xs.empty()) throw UndefinedMetric("median of empty set");
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

double normalized_latency(const MetricsLedger& ledger) {
  std::vector<double> per_request;
  for (const auto& r : ledger.requests) {
    if (r.incomplete || r.output_tokens <= 0) continue;
    per_request.push_back((r.completion - r.arrival - r.interception_time) /
                          static_cast<double>(r.output_tokens));
  }
  if (per_request.empty()) throw UndefinedMetric("no completed requests");
  return median(std::move(per_request));
}

double throughput(const MetricsLedger& ledger, double horizon) {
  const std::int64_t done = completed_count(ledger);
  if (horizon <= 0.0) {
    horizon = 0.0;
    for (const auto& r : ledger.requests)
      if (!r.incomplete) horizon = std::max(horizon, r.completion);
  }
  if (horizon <= 0.0) return 0.0;
  return static_cast<double>(done) / horizon;
}

double ttft(const MetricsLedger& ledger) {
  std::vector<double> xs;
  for (const auto& r : ledger.requests) {
    if (r.incomplete || r.first_token_time < 0.0) continue;
    xs.push_back(r.first_token_time - r.arrival);
  }
  if (xs.empty()) throw UndefinedMetric("no completed requests");
  return median(std::move(xs));
}

WasteReport waste_report(const MetricsLedger& ledger) {
  constexpr double kGbMin = 1e9 * 60.0;  // byte*seconds per GB*minute
  WasteReport r;
  r.preserve_gb_min = ledger.waste.preserve / kGbMin;
  r.recompute_gb_min = ledger.waste.recompute / kGbMin;
  r.stall_gb_min = ledger.waste.stall / kGbMin;
  r.total_gb_min = ledger.waste.total() / kGbMin;
  const double denom = ledger.gpu_kv_capacity * ledger.sim_wall;
  r.pct_of_capacity_time = denom > 0.0 ? 100.0 * ledger.waste.total() / denom : 0.0;
  r.recompute_fraction =
      ledger.forwarding_time > 0.0 ? ledger.recompute_time / ledger.forwarding_time : 0.0;
  return r;
}

std::int64_t completed_count(const MetricsLedger& ledger) {
  std::int64_t done = 0;
  for (const auto& r : ledger.requests) done += r.incomplete ? 0 : 1;
  return done;
}

void write_requests_csv(const MetricsLedger& ledger, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "id,class,arrival,ttft,completion,output_tokens,interception_time,norm_latency\n";
  for (const auto& r : ledger.requests) {
    const bool has_latency = !r.incomplete && r.output_tokens > 0;
    const double norm =
        has_latency ? (r.completion - r.arrival - r.interception_time) / r.output_tokens : -1.0;
    out << r.id << ',' << r.klass << ',' << fmt(r.arrival) << ','
        << fmt(r.first_token_time >= 0.0 ? r.first_token_time - r.arrival : -1.0) << ','
        << fmt(r.incomplete ? -1.0 : r.completion) << ',' << r.output_tokens << ','
        << fmt(r.interception_time) << ',' << fmt(norm) << '\n';
  }
  if (!out) throw IoError("write to " + path + " failed");
}

std::string summary_json(const MetricsLedger& ledger) {
  nlohmann::json j;
  const auto wr = waste_report(ledger);
  j["requests"] = ledger.requests.size();
  j["completed"] = completed_count(ledger);
  j["incomplete"] = static_cast<std::int64_t>(ledger.requests.size()) - completed_count(ledger);
  try {
    j["normalized_latency"] = normalized_latency(ledger);
  } catch (const UndefinedMetric&) {
    j["normalized_latency"] = nullptr;
  }
  try {
    j["ttft_median"] = ttft(ledger);
  } catch (const UndefinedMetric&) {
    j["ttft_median"] = nullptr;
  }
  j["throughput"] = throughput(ledger);
  j["sim_wall"] = ledger.sim_wall;
  j["iterations"] = ledger.iterations;
  j["forwarding_time"] = ledger.forwarding_time;
  j["waste"] = {{"preserve_gb_min", wr.preserve_gb_min},
                {"recompute_gb_min", wr.recompute_gb_min},
                {"stall_gb_min", wr.stall_gb_min},
                {"total_gb_min", wr.total_gb_min},
                {"pct_of_capacity_time", wr.pct_of_capacity_time},
                {"recompute_fraction", wr.recompute_fraction}};
  return j.dump(2);
}

}  // namespace icept
