#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>

#include "interceptsim/cost_model.hpp"

namespace icept {

enum class MemResult { Ok, InsufficientGpu, InsufficientCpu, InvalidArgument };

// Tracks where every request's computed context lives: GPU KV cache, CPU swap
// space, or discarded (freed, pending recomputation). Byte totals are
// block-granular and capacity checks reject any operation that would overflow;
// a rejected operation leaves the ledger untouched.
class KvLedger {
 public:
  struct Entry {
    std::int64_t gpu_tokens = 0;
    std::int64_t cpu_tokens = 0;
    std::int64_t discarded_tokens = 0;
    std::int64_t computed_context() const { return gpu_tokens + cpu_tokens + discarded_tokens; }
  };

  explicit KvLedger(const CostModel& model) : model_(&model) {}

  // Grow a request's GPU-resident context by `tokens` freshly computed tokens.
  MemResult allocate(std::int64_t id, std::int64_t tokens);
  MemResult swap_out(std::int64_t id, std::int64_t tokens);
  MemResult swap_in(std::int64_t id, std::int64_t tokens);
  MemResult discard(std::int64_t id, std::int64_t tokens);
  // Restore previously discarded tokens into GPU memory (recomputation).
  MemResult recompute_commit(std::int64_t id, std::int64_t tokens);
  // Forget a finished request, freeing everything it held.
  void release(std::int64_t id);

  bool fits_gpu(std::int64_t extra_tokens_for, std::int64_t id) const;

  const Entry& entry(std::int64_t id) const;
  bool has(std::int64_t id) const { return entries_.count(id) != 0; }
  double gpu_used() const { return gpu_used_; }
  double cpu_used() const { return cpu_used_; }
  double free_gpu_bytes() const { return model_->gpu_kv_capacity - gpu_used_; }
  double free_cpu_bytes() const { return model_->cpu_kv_capacity - cpu_used_; }
  std::int64_t free_gpu_tokens() const {
    return static_cast<std::int64_t>(free_gpu_bytes() / model_->mem_per_token);
  }
  std::int64_t free_cpu_tokens() const {
    return static_cast<std::int64_t>(free_cpu_bytes() / model_->mem_per_token);
  }

  const std::unordered_map<std::int64_t, Entry>& entries() const { return entries_; }
  std::string snapshot_json() const;

 private:
  const CostModel* model_;
  std::unordered_map<std::int64_t, Entry> entries_;
  double gpu_used_ = 0.0;
  double cpu_used_ = 0.0;
};

}  // namespace icept
