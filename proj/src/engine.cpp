#include "interceptsim/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "interceptsim/trace_io.hpp"

namespace icept {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

Engine::Engine(const std::vector<Request>& trace, const CostModel& model, const RunOptions& opts)
    : trace_(trace), model_(model), opts_(opts), ledger_(model) {
  model_.validate();
  validate_trace(trace_);

  states_.resize(trace_.size());
  for (std::size_t i = 0; i < trace_.size(); ++i) {
    states_[i].req = &trace_[i];
    index_of_[trace_[i].id] = i;
  }

  // Profiled estimator table: explicit entries, then built-in class means,
  // then the trace's own empirical mean per kind.
  kind_means_ = opts_.profiled_means;
  for (const auto& c : builtin_classes()) kind_means_.emplace(c.name, c.duration_mean);
  std::unordered_map<std::string, std::pair<double, std::int64_t>> acc;
  for (const auto& r : trace_) {
    for (const auto& s : r.segments) {
      if (!s.interception) continue;
      auto& a = acc[s.interception->kind];
      a.first += s.interception->duration;
      a.second += 1;
    }
  }
  for (const auto& [kind, a] : acc) {
    if (a.second > 0) kind_means_.emplace(kind, a.first / static_cast<double>(a.second));
  }

  metrics_.gpu_kv_capacity = model_.gpu_kv_capacity;
  if (!opts_.event_log_path.empty()) {
    event_log_ = std::make_unique<std::ofstream>(opts_.event_log_path);
    if (!*event_log_) throw IoError("cannot open " + opts_.event_log_path + " for writing");
  }
}

Engine::~Engine() = default;

double Engine::estimate_for(const ReqState& st) const {
  const auto& seg = st.req->segments[st.seg];
  switch (opts_.estimator) {
    case EstimatorMode::Oracle:
      return seg.interception->duration;
    case EstimatorMode::Profiled: {
      auto it = kind_means_.find(seg.interception->kind);
      return it != kind_means_.end() ? it->second : seg.interception->duration;
    }
    case EstimatorMode::Dynamic:
      return 0.0;  // t_now - t_call at call time; grows while paused
  }
  return 0.0;
}

void Engine::admit_arrivals() {
  while (next_arrival_ < trace_.size() && trace_[next_arrival_].arrival <= now_) {
    const std::size_t idx = next_arrival_++;
    ReqState& st = states_[idx];
    st.fresh_pending = st.req->prompt_tokens;
    move_to_waiting(static_cast<std::int64_t>(idx), st.req->arrival);
  }
}

void Engine::resolve_resumes() {
  while (!resume_heap_.empty() && resume_heap_.top().first <= now_) {
    const std::int64_t idx = resume_heap_.top().second;
    resume_heap_.pop();
    ReqState& st = states_[idx];
    paused_.erase(idx);
    const Interception& in = *st.req->segments[st.seg].interception;
    st.seg += 1;
    st.decoded_in_seg = 0;
    st.fresh_pending += in.return_tokens;
    st.preserved = false;
    st.t_call = 0.0;
    st.int_end = 0.0;

    const double key = opts_.policy.requeue_at_tail ? now_ : st.req->arrival;
    const auto& entry = ledger_.entry(st.req->id);
    if (entry.cpu_tokens > 0) {
      st.swap_in_pending = entry.cpu_tokens;
      st.queue_key = key;
      st.loc = Loc::SwapQueue;
      swap_queue_.insert({st.req->arrival, idx});
      swap_in_demand_ += st.swap_in_pending;
    } else if (st.recompute_pending > 0) {
      move_to_waiting(idx, key);
    } else {
      // Preserved context is already resident; the returned tokens are a
      // pending chunk processed from the running set.
      st.loc = Loc::Running;
      running_.insert({st.req->arrival, idx});
    }
  }
}

void Engine::reevaluate_dynamic() {
  if (opts_.estimator != EstimatorMode::Dynamic) return;
  if (opts_.policy.preserve_mode != PreserveMode::MinWaste) return;
  const double c_other = running_context_tokens();
  const double chunk = std::max(1.0, model_.saturation_point - static_cast<double>(running_.size()));
  for (auto it = paused_.begin(); it != paused_.end(); ++it) {
    ReqState& st = states_[*it];
    if (!st.preserved) continue;
    const std::int64_t gpu = ledger_.entry(st.req->id).gpu_tokens;
    if (gpu <= 0) continue;
    const double t_hat = now_ - st.t_call;
    const auto est = waste::decide(model_, t_hat, static_cast<double>(gpu), c_other, chunk);
    if (est.decision == waste::Decision::Discard) {
      ledger_.discard(st.req->id, gpu);
      st.recompute_pending += gpu;
      st.preserved = false;
    }
  }
}

double Engine::running_context_tokens() const {
  double total = 0.0;
  for (const auto& [key, idx] : running_)
    total += static_cast<double>(ledger_.entry(states_[idx].req->id).gpu_tokens);
  return total;
}

void Engine::move_to_waiting(std::int64_t idx, double key) {
  ReqState& st = states_[idx];
  st.queue_key = key;
  st.loc = Loc::Waiting;
  waiting_.insert({key, idx});
}

bool Engine::idle_jump() {
  double next = kInf;
  if (next_arrival_ < trace_.size()) next = std::min(next, trace_[next_arrival_].arrival);
  if (!resume_heap_.empty()) next = std::min(next, resume_heap_.top().first);
  if (!std::isfinite(next)) {
    std::string who = "?";
    if (!waiting_.empty()) who = std::to_string(states_[waiting_.begin()->second].req->id);
    else if (!swap_queue_.empty()) who = std::to_string(states_[swap_queue_.begin()->second].req->id);
    throw SimError("no runnable work and no pending events; request " + who +
                   " cannot fit in GPU KV capacity");
  }
  // Preserved contexts keep their memory across the gap.
  double preserved_bytes = 0.0;
  for (std::int64_t idx : paused_)
    preserved_bytes += model_.tokens_to_bytes(ledger_.entry(states_[idx].req->id).gpu_tokens);
  metrics_.waste.preserve += preserved_bytes * (next - now_);
  now_ = next;
  return true;
}

void Engine::detach(std::int64_t idx) {
  ReqState& st = states_[idx];
  switch (st.loc) {
    case Loc::Running:
      running_.erase({st.req->arrival, idx});
      break;
    case Loc::Waiting:
      waiting_.erase({st.queue_key, idx});
      break;
    default:
      throw SimError("detach from unexpected state for request " + std::to_string(st.req->id));
  }
}

void Engine::evict(std::int64_t idx, std::vector<std::string>* events) {
  ReqState& vic = states_[idx];
  const std::int64_t ctx = ledger_.entry(vic.req->id).gpu_tokens;
  ledger_.discard(vic.req->id, ctx);
  vic.recompute_pending += ctx;
  vic.preserved = false;
  running_.erase({vic.req->arrival, idx});
  move_to_waiting(idx, vic.req->arrival);
  if (events) events->push_back("evict:" + std::to_string(vic.req->id));
}

void Engine::fire_interception(std::int64_t idx, std::vector<std::size_t>& intercepted) {
  ReqState& st = states_[idx];
  const auto& seg = st.req->segments[st.seg];
  detach(idx);
  st.loc = Loc::Paused;
  paused_.insert(idx);
  st.t_call = now_;
  st.int_end = now_ + seg.interception->duration;
  st.estimate = estimate_for(st);
  st.preserved = true;  // provisional; the disposition below may change it
  resume_heap_.push({st.int_end, idx});
  intercepted.push_back(static_cast<std::size_t>(idx));
}

void Engine::complete_request(std::int64_t idx) {
  ReqState& st = states_[idx];
  detach(idx);
  st.loc = Loc::Completed;
  st.completion = now_;
  st.materialized = 0;
  st.fresh_pending = 0;
  st.recompute_pending = 0;
  recompute_phase_.erase(idx);
  st.recompute_restored = 0;
  ledger_.release(st.req->id);
  completed_ += 1;
}

void Engine::dispose_intercepted(const std::vector<std::size_t>& intercepted, std::int64_t decode_tokens,
                                 std::int64_t out_budget, std::int64_t* used_out, double* naive_stall) {
  if (intercepted.empty()) return;

  if (opts_.policy.kind == PolicyKind::Preserve) {
    return;  // contexts stay resident and non-evictable
  }

  if (opts_.policy.kind == PolicyKind::NaiveSwap) {
    for (std::size_t i : intercepted) {
      ReqState& st = states_[i];
      const std::int64_t ctx = ledger_.entry(st.req->id).gpu_tokens;
      if (ctx <= 0) continue;
      if (ledger_.swap_out(st.req->id, ctx) == MemResult::Ok) {
        *naive_stall += model_.t_swap(static_cast<double>(ctx)) + model_.swap_launch_overhead;
        *used_out += ctx;
      } else {
        ledger_.discard(st.req->id, ctx);
        st.recompute_pending += ctx;
      }
      st.preserved = false;
    }
    return;
  }

  std::vector<InterceptedRequest> list;
  list.reserve(intercepted.size());
  for (std::size_t i : intercepted) {
    const ReqState& st = states_[i];
    list.push_back({st.req->id, ledger_.entry(st.req->id).gpu_tokens, st.estimate});
  }
  const double c_other = running_context_tokens();
  const double chunk = std::max(1.0, model_.saturation_point - static_cast<double>(decode_tokens));

  std::int64_t budget = 0;
  if (opts_.policy.budgeted_swap) {
    std::int64_t total_ctx = 0;
    for (const auto& r : list) total_ctx += r.context_tokens;
    budget = allocate_swap_budget(out_budget, 0, total_ctx, ledger_.free_gpu_tokens(),
                                  ledger_.free_cpu_tokens(), 0)
                 .alloc_out;
  }

  const auto plans =
      plan_interceptions(opts_.policy, model_, list, c_other, chunk, budget, ledger_.free_cpu_tokens());
  for (std::size_t k = 0; k < plans.size(); ++k) {
    ReqState& st = states_[intercepted[k]];
    const auto& plan = plans[k];
    std::int64_t take = plan.swap_out_tokens;
    if (take > 0 && ledger_.swap_out(st.req->id, take) != MemResult::Ok) take = 0;
    *used_out += take;
    const std::int64_t rest = ledger_.entry(st.req->id).gpu_tokens;
    if (plan.preserve_rest && rest > 0) {
      st.preserved = true;
    } else {
      if (rest > 0) {
        ledger_.discard(st.req->id, rest);
        st.recompute_pending += rest;
      }
      st.preserved = false;
    }
  }
}

bool Engine::step() {
  admit_arrivals();
  resolve_resumes();
  if (completed_ == trace_.size()) return false;
  if (now_ >= opts_.max_sim_seconds) return false;
  reevaluate_dynamic();

  std::vector<std::string> events;
  const bool log = event_log_ != nullptr;

  // Paused contexts resident while this iteration runs (for preserve waste).
  double preserved_paused_bytes = 0.0;
  for (std::int64_t idx : paused_)
    preserved_paused_bytes += model_.tokens_to_bytes(ledger_.entry(states_[idx].req->id).gpu_tokens);

  std::int64_t used_in = 0, used_out = 0;
  std::int64_t chunk_tokens = 0, recompute_tokens = 0;
  double stall = 0.0;

  // NaiveSwap restores resumed contexts synchronously, ahead of the waiting
  // queue, whole context at a time.
  if (opts_.policy.kind == PolicyKind::NaiveSwap) {
    while (!swap_queue_.empty()) {
      const std::int64_t idx = swap_queue_.begin()->second;
      ReqState& st = states_[idx];
      const std::int64_t need = st.swap_in_pending;
      if (ledger_.swap_in(st.req->id, need) != MemResult::Ok) break;
      stall += model_.t_swap(static_cast<double>(need)) + model_.swap_launch_overhead;
      used_in += need;
      swap_in_demand_ -= need;
      st.swap_in_pending = 0;
      swap_queue_.erase(swap_queue_.begin());
      if (st.recompute_pending > 0) {
        move_to_waiting(idx, st.queue_key);
      } else {
        st.loc = Loc::Running;
        running_.insert({st.req->arrival, idx});
      }
      if (log) events.push_back("swapin:" + std::to_string(st.req->id));
    }
  }

  // Decode tokens: every running request without pending prefill generates
  // one token; allocation failures evict the newest running context.
  std::vector<std::int64_t> decodes;
  {
    std::vector<std::pair<double, std::int64_t>> snapshot(running_.begin(), running_.end());
    for (const auto& [key, idx] : snapshot) {
      ReqState& st = states_[idx];
      if (st.loc != Loc::Running) continue;  // evicted earlier this round
      if (st.fresh_pending + st.recompute_pending > 0) continue;
      bool self_evicted = false;
      while (ledger_.allocate(st.req->id, 1) != MemResult::Ok) {
        auto victim_it = running_.rbegin();
        if (victim_it == running_.rend()) {
          throw SimError("request " + std::to_string(st.req->id) +
                         " cannot obtain a decode token slot: GPU KV capacity too small");
        }
        const std::int64_t vidx = victim_it->second;
        evict(vidx, log ? &events : nullptr);
        if (vidx == idx) {
          self_evicted = true;
          break;
        }
      }
      if (!self_evicted) {
        st.materialized += 1;
        decodes.push_back(idx);
      }
    }
  }

  std::int64_t total_query = static_cast<std::int64_t>(decodes.size());
  const std::int64_t sat = static_cast<std::int64_t>(model_.saturation_point);

  // Returned-token chunks of already-resident (resumed) requests go ahead of
  // new admissions; they may evict newer running contexts to grow.
  {
    std::vector<std::pair<double, std::int64_t>> snapshot(running_.begin(), running_.end());
    for (const auto& [key, idx] : snapshot) {
      ReqState& st = states_[idx];
      if (st.loc != Loc::Running) continue;
      if (st.fresh_pending <= 0) continue;
      const std::int64_t take =
          opts_.policy.chunked_recompute ? std::min(st.fresh_pending, sat - total_query)
                                         : st.fresh_pending;
      if (take <= 0) continue;  // batch saturated this iteration
      bool blocked = false;
      while (!ledger_.fits_gpu(take, st.req->id)) {
        auto victim_it = running_.rbegin();
        while (victim_it != running_.rend() && victim_it->second == idx) ++victim_it;
        if (victim_it == running_.rend()) {
          blocked = true;  // nothing left to evict; retry next iteration
          break;
        }
        evict(victim_it->second, log ? &events : nullptr);
      }
      if (blocked) continue;
      ledger_.allocate(st.req->id, take);
      st.fresh_pending -= take;
      st.materialized += take;
      total_query += take;
      chunk_tokens += take;
    }
  }

  // Prefill / recomputation chunks from the waiting queue, FCFS with
  // head-of-line blocking. Chunking policies stop at the saturation point;
  // one-shot policies admit whole contexts until the batch reaches it.
  std::vector<std::int64_t> recompute_ids;
  while (!waiting_.empty() && total_query < sat) {
    const std::int64_t idx = waiting_.begin()->second;
    ReqState& st = states_[idx];
    const std::int64_t pending = st.recompute_pending + st.fresh_pending;
    const std::int64_t take =
        opts_.policy.chunked_recompute ? std::min(pending, sat - total_query) : pending;
    if (take <= 0) break;
    if (!ledger_.fits_gpu(take, st.req->id)) break;
    const std::int64_t rec = std::min(take, st.recompute_pending);
    const std::int64_t fresh = take - rec;
    if (rec > 0) {
      ledger_.recompute_commit(st.req->id, rec);
      if (st.recompute_restored == 0) recompute_phase_.insert(idx);
      st.recompute_restored += rec;
      st.recompute_pending -= rec;
      recompute_ids.push_back(idx);
    }
    if (fresh > 0) {
      ledger_.allocate(st.req->id, fresh);
      st.fresh_pending -= fresh;
      st.materialized += fresh;
    }
    total_query += take;
    chunk_tokens += take;
    recompute_tokens += rec;
    if (st.recompute_pending + st.fresh_pending == 0) {
      waiting_.erase(waiting_.begin());
      st.loc = Loc::Running;
      running_.insert({st.req->arrival, idx});  // decodes from the next iteration
    } else {
      break;  // partially processed head keeps its place
    }
  }

  // Budgeted swap-in, FCFS over the swap queue.
  const std::int64_t batch_tokens = total_query;
  std::int64_t swap_limit = 0;
  if (opts_.policy.budgeted_swap) {
    swap_limit = compute_swap_limit(model_, static_cast<double>(batch_tokens));
    if (!swap_queue_.empty()) {
      const auto budget = allocate_swap_budget(swap_limit, swap_in_demand_, 0,
                                               ledger_.free_gpu_tokens(), ledger_.free_cpu_tokens(), 0);
      std::int64_t room = budget.alloc_in;
      while (room > 0 && !swap_queue_.empty()) {
        const std::int64_t idx = swap_queue_.begin()->second;
        ReqState& st = states_[idx];
        const std::int64_t take = std::min(room, st.swap_in_pending);
        if (ledger_.swap_in(st.req->id, take) != MemResult::Ok) break;
        st.swap_in_pending -= take;
        swap_in_demand_ -= take;
        room -= take;
        used_in += take;
        if (st.swap_in_pending == 0) {
          swap_queue_.erase(swap_queue_.begin());
          if (st.recompute_pending + st.fresh_pending > 0) {
            move_to_waiting(idx, st.queue_key);
          } else {
            st.loc = Loc::Running;
            running_.insert({st.req->arrival, idx});
          }
        }
      }
    }
  }

  const bool any_work = !decodes.empty() || chunk_tokens > 0 || used_in > 0 || stall > 0.0;
  if (!any_work) return idle_jump();

  const double d_fwd = model_.t_fwd(static_cast<double>(batch_tokens));
  now_ += d_fwd + stall;

  // Token effects; interception fires and completions happen at the boundary,
  // after the token that triggers them is counted.
  std::vector<std::size_t> intercepted;
  for (std::int64_t idx : decodes) {
    ReqState& st = states_[idx];
    st.output_tokens += 1;
    if (st.first_token < 0.0) st.first_token = now_;
    st.decoded_in_seg += 1;
    const auto& seg = st.req->segments[st.seg];
    if (st.decoded_in_seg == seg.decode_tokens) {
      if (seg.interception) {
        fire_interception(idx, intercepted);
        if (log) events.push_back("fire:" + std::to_string(st.req->id));
      } else {
        complete_request(idx);
        if (log) events.push_back("done:" + std::to_string(st.req->id));
      }
    }
  }

  double fire_stall = 0.0;
  dispose_intercepted(intercepted, static_cast<std::int64_t>(decodes.size()),
                      swap_limit - used_in, &used_out, &fire_stall);
  now_ += fire_stall;
  const double d_total = d_fwd + stall + fire_stall;

  // Realized waste accrual.
  metrics_.waste.preserve += preserved_paused_bytes * d_total;
  for (auto it = recompute_phase_.begin(); it != recompute_phase_.end();) {
    ReqState& st = states_[*it];
    metrics_.waste.recompute += model_.tokens_to_bytes(st.recompute_restored) * d_total;
    if (st.recompute_pending == 0) {
      st.recompute_restored = 0;
      it = recompute_phase_.erase(it);
    } else {
      ++it;
    }
  }
  // Recomputation also holds up everyone else for the marginal time its
  // tokens add to the iteration.
  if (recompute_tokens > 0) {
    const double added =
        d_fwd - model_.t_fwd(static_cast<double>(batch_tokens - recompute_tokens));
    double other_bytes = 0.0;
    for (const auto& [key, idx] : running_) {
      bool is_recomputing = false;
      for (std::int64_t rid : recompute_ids) {
        if (rid == idx) {
          is_recomputing = true;
          break;
        }
      }
      if (!is_recomputing)
        other_bytes += model_.tokens_to_bytes(ledger_.entry(states_[idx].req->id).gpu_tokens);
    }
    metrics_.waste.recompute += added * other_bytes;
  }
  const double total_stall = stall + fire_stall;
  if (total_stall > 0.0) {
    double paused_bytes_now = 0.0;
    for (std::int64_t idx : paused_)
      paused_bytes_now += model_.tokens_to_bytes(ledger_.entry(states_[idx].req->id).gpu_tokens);
    metrics_.waste.stall += total_stall * std::max(0.0, ledger_.gpu_used() - paused_bytes_now);
  }

  metrics_.forwarding_time += d_fwd;
  if (batch_tokens > 0)
    metrics_.recompute_time +=
        d_fwd * static_cast<double>(recompute_tokens) / static_cast<double>(batch_tokens);

  iteration_ += 1;
  IterationRecord rec;
  rec.index = iteration_;
  rec.t = now_;
  rec.batch_tokens = batch_tokens;
  rec.duration = d_total;
  rec.swap_in = used_in;
  rec.swap_out = used_out;
  rec.recompute_tokens = recompute_tokens;
  rec.stall = total_stall;
  if (opts_.collect_iteration_log) metrics_.iteration_log.push_back(rec);
  if (event_log_) write_event_record(rec, events);

  if (opts_.check_invariants) check_invariants();
  return true;
}

void Engine::check_invariants() const {
  if (ledger_.gpu_used() > model_.gpu_kv_capacity + 1.0)
    throw SimError("GPU capacity invariant violated");
  if (ledger_.cpu_used() > model_.cpu_kv_capacity + 1.0)
    throw SimError("CPU capacity invariant violated");
  for (const auto& st : states_) {
    if (st.loc == Loc::NotArrived || st.loc == Loc::Completed) continue;
    const auto& e = ledger_.entry(st.req->id);
    if (e.gpu_tokens < 0 || e.cpu_tokens < 0 || e.discarded_tokens < 0)
      throw SimError("negative ledger counter for request " + std::to_string(st.req->id));
    if (e.computed_context() != st.materialized)
      throw SimError("context conservation violated for request " + std::to_string(st.req->id));
    if (e.discarded_tokens != st.recompute_pending)
      throw SimError("recompute bookkeeping mismatch for request " + std::to_string(st.req->id));
  }
}

void Engine::write_event_record(const IterationRecord& rec, const std::vector<std::string>& events) {
  nlohmann::json j;
  j["it"] = rec.index;
  j["t"] = rec.t;
  j["B"] = rec.batch_tokens;
  j["d"] = rec.duration;
  j["swap_in"] = rec.swap_in;
  j["swap_out"] = rec.swap_out;
  j["recompute"] = rec.recompute_tokens;
  j["stall"] = rec.stall;
  j["events"] = events;
  if (opts_.dump_ledger_every > 0 && rec.index % opts_.dump_ledger_every == 0)
    j["ledger"] = nlohmann::json::parse(ledger_.snapshot_json());
  (*event_log_) << j.dump() << '\n';
}

MetricsLedger Engine::finish() {
  metrics_.sim_wall = now_;
  metrics_.iterations = iteration_;
  metrics_.requests.clear();
  metrics_.requests.reserve(states_.size());
  for (const auto& st : states_) {
    RequestMetrics rm;
    rm.id = st.req->id;
    rm.klass = st.req->class_label();
    rm.arrival = st.req->arrival;
    rm.first_token_time = st.first_token;
    rm.completion = st.completion;
    rm.output_tokens = st.output_tokens;
    rm.interception_time = st.req->total_interception_time();
    rm.incomplete = st.loc != Loc::Completed;
    metrics_.requests.push_back(std::move(rm));
  }
  return std::move(metrics_);
}

MetricsLedger run(const std::vector<Request>& trace, const CostModel& model, const RunOptions& opts) {
  Engine engine(trace, model, opts);
  while (engine.step()) {
  }
  return engine.finish();
}

}  // namespace icept
