#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "interceptsim/cost_model.hpp"
#include "interceptsim/waste.hpp"

namespace icept {

enum class PolicyKind { VanillaDiscard, ImprovedDiscard, Preserve, NaiveSwap, InferCept };

enum class EstimatorMode { Oracle, Profiled, Dynamic };

enum class PreserveMode { Never, Heuristic, MinWaste };

// Knobs behind the named policies. The ablation ladder re-enables InferCept's
// techniques one at a time on top of ImprovedDiscard, so each one is a flag.
struct PolicyConfig {
  PolicyKind kind = PolicyKind::InferCept;
  bool chunked_recompute = false;   // split recomputation at the saturation point
  bool budgeted_swap = false;       // overlap swaps within the per-iteration limit
  PreserveMode preserve_mode = PreserveMode::Never;
  double heuristic_threshold = 1.0;  // seconds; Heuristic preserves shorter estimates
  // Vanilla puts a resumed request at the tail of the waiting queue (its queue
  // key becomes the resume time); every other policy keeps original arrival.
  bool requeue_at_tail = false;

  static PolicyConfig for_kind(PolicyKind kind);
};

PolicyKind parse_policy(const std::string& name);  // throws ConfigError
std::string policy_name(PolicyKind kind);
EstimatorMode parse_estimator(const std::string& name);
std::string estimator_name(EstimatorMode mode);

// Context disposition of one paused request plus the duration estimate that
// produced it.
struct PausedRecord {
  std::int64_t request_id = 0;
  double t_call = 0.0;
  double end_time = 0.0;          // oracle-known resolution time (from the trace)
  double estimate = 0.0;          // t-hat used for the decision
  std::int64_t preserved_tokens = 0;
  std::int64_t swapped_tokens = 0;
  std::int64_t discarded_tokens = 0;
  double original_arrival = 0.0;
};

struct SwapBudget {
  std::int64_t limit = 0;  // N_i, tokens swappable under the iteration's forward time
  std::int64_t alloc_in = 0;
  std::int64_t alloc_out = 0;
};

// N_i from t_swap(N_i) = t_fwd(B_i).
std::int64_t compute_swap_limit(const CostModel& m, double batch_tokens);

// Split the per-iteration swap limit between swap-in and swap-out. Swap-in is
// favored first (it resumes already-admitted requests), then swap-out, under:
//   alloc_in <= pending_in, alloc_out <= pending_out,
//   alloc_in + alloc_out <= limit,
//   alloc_out <= free_cpu + alloc_in  (swap-in frees CPU space),
//   alloc_in  <= alloc_out + free_gpu (swap-out frees GPU space).
// All quantities in tokens. waiting_demand is accepted for symmetry with the
// schedulable-token bound but does not change the split.
SwapBudget allocate_swap_budget(std::int64_t limit, std::int64_t pending_in, std::int64_t pending_out,
                                std::int64_t free_gpu, std::int64_t free_cpu,
                                std::int64_t waiting_demand);

struct InterceptedRequest {
  std::int64_t id = 0;
  std::int64_t context_tokens = 0;
  double t_hat = 0.0;  // duration estimate
};

struct Disposition {
  std::int64_t id = 0;
  std::int64_t swap_out_tokens = 0;
  bool preserve_rest = false;  // remainder preserved (else discarded)
  waste::WasteEstimate estimate;
};

// Waste-sorted greedy over the intercepted set: assign swap-out budget to the
// highest-waste contexts first (splitting the boundary request), then settle
// each remainder by its preserve/discard decision. cpu_free caps total
// swap-out. Returns one disposition per input, input order preserved.
std::vector<Disposition> plan_interceptions(const PolicyConfig& cfg, const CostModel& m,
                                            const std::vector<InterceptedRequest>& intercepted,
                                            double other_context, double chunk,
                                            std::int64_t swap_out_budget, std::int64_t cpu_free);

}  // namespace icept
