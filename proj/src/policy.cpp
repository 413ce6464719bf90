#include "interceptsim/policy.hpp"

#include <algorithm>
#include <cmath>

#include "interceptsim/workload.hpp"

namespace icept {

PolicyConfig PolicyConfig::for_kind(PolicyKind kind) {
  PolicyConfig cfg;
  cfg.kind = kind;
  switch (kind) {
    case PolicyKind::VanillaDiscard:
      cfg.requeue_at_tail = true;
      break;
    case PolicyKind::ImprovedDiscard:
      break;
    case PolicyKind::Preserve:
      cfg.preserve_mode = PreserveMode::MinWaste;  // unused; Preserve never discards
      break;
    case PolicyKind::NaiveSwap:
      break;
    case PolicyKind::InferCept:
      cfg.chunked_recompute = true;
      cfg.budgeted_swap = true;
      cfg.preserve_mode = PreserveMode::MinWaste;
      break;
  }
  return cfg;
}

PolicyKind parse_policy(const std::string& name) {
  if (name == "vanilla-discard") return PolicyKind::VanillaDiscard;
  if (name == "improved-discard") return PolicyKind::ImprovedDiscard;
  if (name == "preserve") return PolicyKind::Preserve;
  if (name == "swap") return PolicyKind::NaiveSwap;
  if (name == "infercept") return PolicyKind::InferCept;
  throw ConfigError("unknown policy: " + name);
}

std::string policy_name(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::VanillaDiscard: return "vanilla-discard";
    case PolicyKind::ImprovedDiscard: return "improved-discard";
    case PolicyKind::Preserve: return "preserve";
    case PolicyKind::NaiveSwap: return "swap";
    case PolicyKind::InferCept: return "infercept";
  }
  return "?";
}

EstimatorMode parse_estimator(const std::string& name) {
  if (name == "oracle") return EstimatorMode::Oracle;
  if (name == "profiled") return EstimatorMode::Profiled;
  if (name == "dynamic") return EstimatorMode::Dynamic;
  throw ConfigError("unknown duration estimator: " + name);
}

std::string estimator_name(EstimatorMode mode) {
  switch (mode) {
    case EstimatorMode::Oracle: return "oracle";
    case EstimatorMode::Profiled: return "profiled";
    case EstimatorMode::Dynamic: return "dynamic";
  }
  return "?";
}

std::int64_t compute_swap_limit(const CostModel& m, double batch_tokens) {
  return static_cast<std::int64_t>(std::floor(m.t_fwd(batch_tokens) / m.swap_per_token));
}

SwapBudget allocate_swap_budget(std::int64_t limit, std::int64_t pending_in, std::int64_t pending_out,
                                std::int64_t free_gpu, std::int64_t free_cpu,
                                std::int64_t /*waiting_demand*/) {
  SwapBudget b;
  b.limit = std::max<std::int64_t>(0, limit);
  pending_in = std::max<std::int64_t>(0, pending_in);
  pending_out = std::max<std::int64_t>(0, pending_out);
  free_gpu = std::max<std::int64_t>(0, free_gpu);
  free_cpu = std::max<std::int64_t>(0, free_cpu);

  // alloc_in first; shrinking it only loosens the swap-out bounds, so the
  // fixed point is reached in a couple of rounds.
  std::int64_t in = std::min(pending_in, b.limit);
  while (true) {
    const std::int64_t out_max = std::min({pending_out, b.limit - in, free_cpu + in});
    const std::int64_t in_ok = std::min(in, std::max<std::int64_t>(0, out_max) + free_gpu);
    if (in_ok == in) break;
    in = in_ok;
  }
  b.alloc_in = in;
  b.alloc_out = std::max<std::int64_t>(0, std::min({pending_out, b.limit - in, free_cpu + in}));
  return b;
}

std::vector<Disposition> plan_interceptions(const PolicyConfig& cfg, const CostModel& m,
                                            const std::vector<InterceptedRequest>& intercepted,
                                            double other_context, double chunk,
                                            std::int64_t swap_out_budget, std::int64_t cpu_free) {
  std::vector<Disposition> out(intercepted.size());
  std::vector<std::size_t> order(intercepted.size());
  for (std::size_t i = 0; i < intercepted.size(); ++i) {
    const auto& r = intercepted[i];
    out[i].id = r.id;
    out[i].estimate = waste::decide(m, r.t_hat, static_cast<double>(r.context_tokens), other_context, chunk);
    switch (cfg.preserve_mode) {
      case PreserveMode::Never:
        out[i].preserve_rest = false;
        // With preserve off, the waste a non-swapped request incurs is its
        // recomputation waste; rank by that.
        out[i].estimate.key = cfg.chunked_recompute ? out[i].estimate.chunk_discard
                                                    : out[i].estimate.discard_oneshot;
        break;
      case PreserveMode::Heuristic:
        out[i].preserve_rest = r.t_hat < cfg.heuristic_threshold;
        out[i].estimate.key =
            out[i].preserve_rest ? out[i].estimate.preserve : out[i].estimate.chunk_discard;
        break;
      case PreserveMode::MinWaste:
        out[i].preserve_rest = out[i].estimate.decision == waste::Decision::Preserve;
        break;
    }
    order[i] = i;
  }

  if (cfg.budgeted_swap) {
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (out[a].estimate.key != out[b].estimate.key) return out[a].estimate.key > out[b].estimate.key;
      if (intercepted[a].context_tokens != intercepted[b].context_tokens)
        return intercepted[a].context_tokens > intercepted[b].context_tokens;
      return intercepted[a].id < intercepted[b].id;
    });
    std::int64_t budget = std::min(swap_out_budget, cpu_free);
    for (std::size_t idx : order) {
      if (budget <= 0) break;
      const std::int64_t take = std::min(budget, intercepted[idx].context_tokens);
      out[idx].swap_out_tokens = take;
      budget -= take;
    }
  }
  return out;
}

}  // namespace icept
