#include "interceptsim/workload.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "interceptsim/rng.hpp"

namespace icept {

const std::vector<InterceptionClass>& builtin_classes() {
  static const std::vector<InterceptionClass> kClasses = {
      {"Math", 9e-5, 6e-5, 3.75, 1.3, 1422.0, 738.0, 20, 1.0},
      {"QA", 0.69, 0.17, 2.52, 1.73, 1846.0, 428.0, 54, 1.0},
      {"VE", 0.09, 0.014, 28.18, 15.2, 2185.0, 115.0, 11, 1.0},
      {"Chatbot", 28.6, 15.6, 4.45, 1.96, 753.0, 703.0, 65, 1.0},
      {"Image", 20.03, 7.8, 6.91, 3.93, 1247.0, 792.0, 36, 1.0},
      {"TTS", 17.24, 7.6, 6.91, 3.93, 1251.0, 792.0, 36, 1.0},
  };
  return kClasses;
}

const InterceptionClass* find_builtin_class(const std::string& name) {
  for (const auto& c : builtin_classes()) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

int Request::output_tokens() const {
  int total = 0;
  for (const auto& s : segments) total += s.decode_tokens;
  return total;
}

int Request::context_at_interception(std::size_t j) const {
  int ctx = prompt_tokens;
  for (std::size_t k = 0; k <= j && k < segments.size(); ++k) {
    ctx += segments[k].decode_tokens;
    if (k < j && segments[k].interception) ctx += segments[k].interception->return_tokens;
  }
  return ctx;
}

double Request::total_interception_time() const {
  double t = 0.0;
  for (const auto& s : segments) {
    if (s.interception) t += s.interception->duration;
  }
  return t;
}

int Request::interception_count() const {
  int n = 0;
  for (const auto& s : segments) n += s.interception ? 1 : 0;
  return n;
}

std::string Request::class_label() const {
  for (const auto& s : segments) {
    if (s.interception) return s.interception->kind;
  }
  return "plain";
}

void validate_request(const Request& r) {
  if (r.segments.empty()) throw ValidationError("request " + std::to_string(r.id) + ": segments empty");
  if (r.prompt_tokens < 1)
    throw ValidationError("request " + std::to_string(r.id) + ": prompt_tokens must be >= 1");
  if (r.arrival < 0.0) throw ValidationError("request " + std::to_string(r.id) + ": negative arrival");
  for (std::size_t i = 0; i < r.segments.size(); ++i) {
    const auto& s = r.segments[i];
    if (s.decode_tokens < 1)
      throw ValidationError("request " + std::to_string(r.id) + ": segment " + std::to_string(i) +
                            " has decode_tokens < 1");
    const bool last = (i + 1 == r.segments.size());
    if (last && s.interception)
      throw ValidationError("request " + std::to_string(r.id) + ": final segment carries an interception");
    if (!last && !s.interception)
      throw ValidationError("request " + std::to_string(r.id) + ": non-final segment " + std::to_string(i) +
                            " lacks an interception");
    if (s.interception) {
      if (s.interception->duration < 0.0)
        throw ValidationError("request " + std::to_string(r.id) + ": negative interception duration");
      if (s.interception->return_tokens < 0)
        throw ValidationError("request " + std::to_string(r.id) + ": negative return_tokens");
    }
  }
}

void validate_trace(const std::vector<Request>& trace) {
  std::unordered_set<std::int64_t> ids;
  double prev_arrival = -1.0;
  for (const auto& r : trace) {
    validate_request(r);
    if (!ids.insert(r.id).second)
      throw ValidationError("duplicate request id " + std::to_string(r.id));
    if (r.arrival < prev_arrival) throw ValidationError("trace not sorted by arrival");
    prev_arrival = r.arrival;
  }
}

namespace {

void validate_spec(const WorkloadSpec& spec) {
  if (spec.request_count < 1) throw ConfigError("request_count must be >= 1");
  if (!(spec.arrival_rate > 0.0)) throw ConfigError("arrival_rate must be > 0");
  if (spec.classes.empty()) throw ConfigError("class mixture is empty");
  if (spec.max_seq_len < 4) throw ConfigError("max_seq_len too small");
  double wsum = 0.0;
  for (const auto& c : spec.classes) {
    if (!(c.weight > 0.0)) throw ConfigError("class " + c.name + ": weight must be > 0");
    if (c.duration_var < 0.0 || c.count_var < 0.0 || c.context_var < 0.0)
      throw ConfigError("class " + c.name + ": variances must be >= 0");
    if (!(c.context_mean > 0.0)) throw ConfigError("class " + c.name + ": context_mean must be > 0");
    if (c.count_mean > 0.0 && !(c.duration_mean > 0.0))
      throw ConfigError("class " + c.name + ": duration_mean must be > 0");
    if (c.return_tokens < 0) throw ConfigError("class " + c.name + ": return_tokens must be >= 0");
    wsum += c.weight;
  }
  if (std::abs(wsum - 1.0) > 1e-6) throw ConfigError("class weights must sum to 1");
}

int pick_class(const std::vector<InterceptionClass>& classes, double u) {
  double acc = 0.0;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    acc += classes[i].weight;
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(classes.size()) - 1;
}

}  // namespace

std::vector<Request> generate_trace(const WorkloadSpec& spec) {
  validate_spec(spec);

  // Stream 0 drives arrivals with unit-rate gaps; dividing by the rate lets a
  // sweep rescale load while every request body stays byte-identical.
  Rng arrivals = Rng::stream(spec.seed, 0);
  std::vector<Request> trace;
  trace.reserve(spec.request_count);

  double unit_clock = 0.0;
  for (int i = 0; i < spec.request_count; ++i) {
    unit_clock += arrivals.exponential(1.0);
    Rng rng = Rng::stream(spec.seed, 1 + static_cast<std::uint64_t>(i));

    const InterceptionClass& cls = spec.classes[pick_class(spec.classes, rng.next_double())];

    int n_int = 0;
    if (cls.count_mean > 0.0) {
      n_int = static_cast<int>(std::llround(rng.lognormal_mean_var(cls.count_mean, cls.count_var)));
      n_int = std::max(1, n_int);
    }

    std::vector<double> durations(n_int);
    for (auto& d : durations) d = rng.lognormal_mean_var(cls.duration_mean, cls.duration_var);

    std::vector<int> contexts(n_int);
    for (auto& c : contexts)
      c = static_cast<int>(std::llround(rng.lognormal_mean_var(cls.context_mean, cls.context_var)));
    std::sort(contexts.begin(), contexts.end());

    const double prompt_frac = 0.5 + 0.4 * rng.next_double();
    int final_decode =
        std::max<int>(1, static_cast<int>(std::llround(rng.lognormal_mean_var(
                             spec.final_decode_mean, spec.final_decode_mean * spec.final_decode_mean))));

    Request req;
    req.id = i;
    req.arrival = unit_clock / spec.arrival_rate;

    // Walk the sorted context targets and derive per-segment decode lengths so
    // that the context at interception j replays to exactly contexts[j].
    // Targets are clamped so every decode stays >= 1 and nothing exceeds the
    // model's sequence limit; interceptions that no longer fit are dropped.
    int after_prev = 0;  // context immediately after the previous interception returned
    std::vector<Segment> segments;
    for (int j = 0; j < n_int; ++j) {
      const int cap = spec.max_seq_len - cls.return_tokens - 1;
      int target = std::min(contexts[j], cap);
      const int min_target = (j == 0) ? 2 : after_prev + 1;
      if (min_target > cap) break;  // no room for another interception
      target = std::max(target, min_target);
      Segment seg;
      if (j == 0) {
        req.prompt_tokens = std::max(1, std::min(target - 1, static_cast<int>(std::llround(target * prompt_frac))));
        seg.decode_tokens = target - req.prompt_tokens;
      } else {
        seg.decode_tokens = target - after_prev;
      }
      seg.interception = Interception{cls.name, durations[j], cls.return_tokens};
      segments.push_back(std::move(seg));
      after_prev = target + cls.return_tokens;
    }

    Segment last;
    if (segments.empty()) {
      // Plain request (or all interceptions dropped): split one context draw
      // into prompt and decode.
      int target = static_cast<int>(std::llround(rng.lognormal_mean_var(cls.context_mean, cls.context_var)));
      target = std::min(std::max(target, 2), spec.max_seq_len);
      req.prompt_tokens = std::max(1, std::min(target - 1, static_cast<int>(std::llround(target * prompt_frac))));
      last.decode_tokens = target - req.prompt_tokens;
    } else {
      last.decode_tokens = std::max(1, std::min(final_decode, spec.max_seq_len - after_prev));
    }
    segments.push_back(std::move(last));
    req.segments = std::move(segments);

    validate_request(req);
    trace.push_back(std::move(req));
  }
  return trace;
}

std::vector<ClassStats> trace_stats(const std::vector<Request>& trace) {
  struct Acc {
    std::int64_t requests = 0;
    std::vector<double> durations, counts, contexts;
  };
  std::unordered_map<std::string, Acc> by_class;
  for (const auto& r : trace) {
    Acc& acc = by_class[r.class_label()];
    acc.requests++;
    acc.counts.push_back(static_cast<double>(r.interception_count()));
    std::size_t j = 0;
    for (const auto& s : r.segments) {
      if (!s.interception) continue;
      acc.durations.push_back(s.interception->duration);
      acc.contexts.push_back(static_cast<double>(r.context_at_interception(j)));
      ++j;
    }
  }

  auto mean_var = [](const std::vector<double>& xs, double& mean, double& var) {
    mean = var = 0.0;
    if (xs.empty()) return;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= static_cast<double>(xs.size());
  };

  std::vector<ClassStats> out;
  for (auto& [name, acc] : by_class) {
    ClassStats st;
    st.name = name;
    st.requests = acc.requests;
    st.interceptions = static_cast<std::int64_t>(acc.durations.size());
    mean_var(acc.durations, st.duration_mean, st.duration_var);
    mean_var(acc.counts, st.count_mean, st.count_var);
    mean_var(acc.contexts, st.context_mean, st.context_var);
    out.push_back(std::move(st));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
  return out;
}

}  // namespace icept
