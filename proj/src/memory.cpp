#include "interceptsim/memory.hpp"

#include <json.hpp>

namespace icept {

namespace {
// Byte totals are sums of block-rounded products; give capacity checks a hair
// of slack against accumulated floating-point drift.
constexpr double kByteSlack = 0.5;
}  // namespace

MemResult KvLedger::allocate(std::int64_t id, std::int64_t tokens) {
  if (tokens < 0) return MemResult::InvalidArgument;
  if (tokens == 0) return MemResult::Ok;
  const Entry cur = has(id) ? entries_.at(id) : Entry{};
  const double delta = model_->tokens_to_bytes(cur.gpu_tokens + tokens) - model_->tokens_to_bytes(cur.gpu_tokens);
  if (gpu_used_ + delta > model_->gpu_kv_capacity + kByteSlack) return MemResult::InsufficientGpu;
  entries_[id].gpu_tokens += tokens;
  gpu_used_ += delta;
  return MemResult::Ok;
}

MemResult KvLedger::swap_out(std::int64_t id, std::int64_t tokens) {
  if (tokens < 0 || !has(id) || tokens > entries_.at(id).gpu_tokens) return MemResult::InvalidArgument;
  if (tokens == 0) return MemResult::Ok;
  Entry& e = entries_.at(id);
  const double cpu_delta = model_->tokens_to_bytes(e.cpu_tokens + tokens) - model_->tokens_to_bytes(e.cpu_tokens);
  if (cpu_used_ + cpu_delta > model_->cpu_kv_capacity + kByteSlack) return MemResult::InsufficientCpu;
  const double gpu_delta = model_->tokens_to_bytes(e.gpu_tokens) - model_->tokens_to_bytes(e.gpu_tokens - tokens);
  e.gpu_tokens -= tokens;
  e.cpu_tokens += tokens;
  gpu_used_ -= gpu_delta;
  cpu_used_ += cpu_delta;
  return MemResult::Ok;
}

MemResult KvLedger::swap_in(std::int64_t id, std::int64_t tokens) {
  if (tokens < 0 || !has(id) || tokens > entries_.at(id).cpu_tokens) return MemResult::InvalidArgument;
  if (tokens == 0) return MemResult::Ok;
  Entry& e = entries_.at(id);
  const double gpu_delta = model_->tokens_to_bytes(e.gpu_tokens + tokens) - model_->tokens_to_bytes(e.gpu_tokens);
  if (gpu_used_ + gpu_delta > model_->gpu_kv_capacity + kByteSlack) return MemResult::InsufficientGpu;
  const double cpu_delta = model_->tokens_to_bytes(e.cpu_tokens) - model_->tokens_to_bytes(e.cpu_tokens - tokens);
  e.cpu_tokens -= tokens;
  e.gpu_tokens += tokens;
  cpu_used_ -= cpu_delta;
  gpu_used_ += gpu_delta;
  return MemResult::Ok;
}

MemResult KvLedger::discard(std::int64_t id, std::int64_t tokens) {
  if (tokens < 0 || !has(id) || tokens > entries_.at(id).gpu_tokens) return MemResult::InvalidArgument;
  if (tokens == 0) return MemResult::Ok;
  Entry& e = entries_.at(id);
  const double gpu_delta = model_->tokens_to_bytes(e.gpu_tokens) - model_->tokens_to_bytes(e.gpu_tokens - tokens);
  e.gpu_tokens -= tokens;
  e.discarded_tokens += tokens;
  gpu_used_ -= gpu_delta;
  return MemResult::Ok;
}

MemResult KvLedger::recompute_commit(std::int64_t id, std::int64_t tokens) {
  if (tokens < 0 || !has(id) || tokens > entries_.at(id).discarded_tokens) return MemResult::InvalidArgument;
  if (tokens == 0) return MemResult::Ok;
  Entry& e = entries_.at(id);
  const double gpu_delta = model_->tokens_to_bytes(e.gpu_tokens + tokens) - model_->tokens_to_bytes(e.gpu_tokens);
  if (gpu_used_ + gpu_delta > model_->gpu_kv_capacity + kByteSlack) return MemResult::InsufficientGpu;
  e.discarded_tokens -= tokens;
  e.gpu_tokens += tokens;
  gpu_used_ += gpu_delta;
  return MemResult::Ok;
}

void KvLedger::release(std::int64_t id) {
  auto it = entries_.find(id);
  if (it == entries_.end()) return;
  gpu_used_ -= model_->tokens_to_bytes(it->second.gpu_tokens);
  cpu_used_ -= model_->tokens_to_bytes(it->second.cpu_tokens);
  entries_.erase(it);
}

bool KvLedger::fits_gpu(std::int64_t extra_tokens, std::int64_t id) const {
  const Entry cur = has(id) ? entries_.at(id) : Entry{};
  const double delta =
      model_->tokens_to_bytes(cur.gpu_tokens + extra_tokens) - model_->tokens_to_bytes(cur.gpu_tokens);
  return gpu_used_ + delta <= model_->gpu_kv_capacity + kByteSlack;
}

const KvLedger::Entry& KvLedger::entry(std::int64_t id) const {
  static const Entry kEmpty{};
  auto it = entries_.find(id);
  return it == entries_.end() ? kEmpty : it->second;
}

std::string KvLedger::snapshot_json() const {
  nlohmann::json j;
  j["gpu_used"] = gpu_used_;
  j["cpu_used"] = cpu_used_;
  j["gpu_capacity"] = model_->gpu_kv_capacity;
  j["cpu_capacity"] = model_->cpu_kv_capacity;
  nlohmann::json reqs = nlohmann::json::object();
  for (const auto& [id, e] : entries_) {
    reqs[std::to_string(id)] = {{"gpu", e.gpu_tokens},
                                {"cpu", e.cpu_tokens},
                                {"discarded", e.discarded_tokens}};
  }
  j["requests"] = std::move(reqs);
  return j.dump();
}

}  // namespace icept
