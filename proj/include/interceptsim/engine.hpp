#pragma once

#include <cstdint>
#include <fstream>
#include <memory>
#include <queue>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "interceptsim/cost_model.hpp"
#include "interceptsim/memory.hpp"
#include "interceptsim/metrics.hpp"
#include "interceptsim/policy.hpp"
#include "interceptsim/workload.hpp"

namespace icept {

class SimError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunOptions {
  PolicyConfig policy = PolicyConfig::for_kind(PolicyKind::InferCept);
  EstimatorMode estimator = EstimatorMode::Oracle;
  double max_sim_seconds = 86400.0;
  bool collect_iteration_log = false;
  std::string event_log_path;  // per-iteration JSONL when non-empty
  int dump_ledger_every = 0;   // ledger snapshot into the event log every N iterations
  bool check_invariants = false;
  // Per-kind mean durations for the profiled estimator; kinds not listed fall
  // back to the built-in class table, then to the trace's empirical mean.
  std::unordered_map<std::string, double> profiled_means;
};

// Iteration-level simulation: each step forms one batch (decode tokens plus
// prefill/recompute chunks plus swap traffic), advances the clock by the
// batch's forward time, applies token effects, and fires or resolves
// interceptions at iteration boundaries. When nothing is runnable the clock
// jumps to the next arrival or interception end.
class Engine {
 public:
  Engine(const std::vector<Request>& trace, const CostModel& model, const RunOptions& opts);
  ~Engine();

  // One iteration (or one idle jump). False once every request completed or
  // the horizon passed.
  bool step();
  MetricsLedger finish();

  double now() const { return now_; }
  std::int64_t iterations() const { return iteration_; }
  const KvLedger& kv() const { return ledger_; }

 private:
  enum class Loc { NotArrived, Waiting, Running, Paused, SwapQueue, Completed };

  struct ReqState {
    const Request* req = nullptr;
    Loc loc = Loc::NotArrived;
    int seg = 0;
    int decoded_in_seg = 0;
    std::int64_t fresh_pending = 0;
    std::int64_t recompute_pending = 0;
    std::int64_t swap_in_pending = 0;
    std::int64_t recompute_restored = 0;
    double queue_key = 0.0;
    bool preserved = false;  // paused with (part of) its context held in GPU
    double t_call = 0.0;
    double int_end = 0.0;
    double estimate = 0.0;
    std::int64_t materialized = 0;  // tokens whose KV has ever been computed and not released
    double first_token = -1.0;
    double completion = -1.0;
    std::int64_t output_tokens = 0;
    bool blocked_note = false;
  };

  void admit_arrivals();
  void resolve_resumes();
  void reevaluate_dynamic();
  bool idle_jump();
  void detach(std::int64_t idx);
  void evict(std::int64_t idx, std::vector<std::string>* events);
  void fire_interception(std::int64_t idx, std::vector<std::size_t>& intercepted);
  void complete_request(std::int64_t idx);
  void dispose_intercepted(const std::vector<std::size_t>& intercepted, std::int64_t decode_tokens,
                           std::int64_t out_budget, std::int64_t* used_out, double* naive_stall);
  double running_context_tokens() const;
  double estimate_for(const ReqState& st) const;
  void move_to_waiting(std::int64_t idx, double key);
  void check_invariants() const;
  void write_event_record(const IterationRecord& rec, const std::vector<std::string>& events);

  const std::vector<Request>& trace_;
  const CostModel& model_;
  RunOptions opts_;

  std::vector<ReqState> states_;
  std::unordered_map<std::int64_t, std::size_t> index_of_;
  KvLedger ledger_;

  // Queue order: (key, state index). Waiting and swap queues order by original
  // arrival (or resume time under the vanilla requeue rule); running orders by
  // original arrival so the eviction victim is always the newest.
  std::set<std::pair<double, std::int64_t>> waiting_;
  std::set<std::pair<double, std::int64_t>> running_;
  std::set<std::pair<double, std::int64_t>> swap_queue_;
  std::set<std::int64_t> paused_;
  std::set<std::int64_t> recompute_phase_;  // requests with restored-but-unfinished recomputation
  std::int64_t swap_in_demand_ = 0;         // total tokens waiting in swap_queue_
  std::priority_queue<std::pair<double, std::int64_t>, std::vector<std::pair<double, std::int64_t>>,
                      std::greater<>> resume_heap_;

  std::size_t next_arrival_ = 0;
  std::size_t completed_ = 0;
  double now_ = 0.0;
  std::int64_t iteration_ = 0;

  MetricsLedger metrics_;
  std::unordered_map<std::string, double> kind_means_;
  std::unique_ptr<std::ofstream> event_log_;
};

MetricsLedger run(const std::vector<Request>& trace, const CostModel& model, const RunOptions& opts);

}  // namespace icept
