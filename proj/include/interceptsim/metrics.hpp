#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace icept {

class UndefinedMetric : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RequestMetrics {
  std::int64_t id = 0;
  std::string klass;
  double arrival = 0.0;
  double first_token_time = -1.0;  // < 0 when no token was generated
  double completion = -1.0;        // < 0 when incomplete at the horizon
  std::int64_t output_tokens = 0;
  double interception_time = 0.0;  // sum of this request's interception durations
  bool incomplete = false;
};

// One simulated forward pass, enough to audit batch composition, swap budgets
// and stalls after the fact.
struct IterationRecord {
  std::int64_t index = 0;
  double t = 0.0;  // clock at iteration end
  std::int64_t batch_tokens = 0;
  double duration = 0.0;  // includes stall
  std::int64_t swap_in = 0;
  std::int64_t swap_out = 0;
  std::int64_t recompute_tokens = 0;
  double stall = 0.0;
};

struct WasteBuckets {
  double preserve = 0.0;   // byte*seconds of paused contexts held in GPU
  double recompute = 0.0;  // byte*seconds of restored-discarded context until restoration completes
  double stall = 0.0;      // byte*seconds of running contexts idled by synchronous swaps
  double total() const { return preserve + recompute + stall; }
};

struct MetricsLedger {
  std::vector<RequestMetrics> requests;
  WasteBuckets waste;
  double sim_wall = 0.0;         // final simulated clock
  double forwarding_time = 0.0;  // sum of t_fwd over iterations (stall excluded)
  double recompute_time = 0.0;   // forwarding time attributed to recompute tokens
  double gpu_kv_capacity = 0.0;  // echoed for waste percentages
  std::int64_t iterations = 0;
  std::vector<IterationRecord> iteration_log;  // filled when requested
};

// Median over completed requests of (latency - interception time) / output
// tokens; requests with zero output are excluded. Throws UndefinedMetric when
// nothing completed.
double normalized_latency(const MetricsLedger& ledger);

// Completed requests per second; horizon defaults to the last completion time.
double throughput(const MetricsLedger& ledger, double horizon = -1.0);

// Median time from arrival to first generated token over completed requests.
double ttft(const MetricsLedger& ledger);

struct WasteReport {
  double preserve_gb_min = 0.0;
  double recompute_gb_min = 0.0;
  double stall_gb_min = 0.0;
  double total_gb_min = 0.0;
  double pct_of_capacity_time = 0.0;  // waste / (gpu capacity * sim wall)
  double recompute_fraction = 0.0;    // share of forwarding time spent recomputing
};

WasteReport waste_report(const MetricsLedger& ledger);

std::int64_t completed_count(const MetricsLedger& ledger);

void write_requests_csv(const MetricsLedger& ledger, const std::string& path);
std::string summary_json(const MetricsLedger& ledger);

}  // namespace icept
