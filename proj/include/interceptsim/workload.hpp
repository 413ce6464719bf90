#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace icept {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Statistics of one interception class: (mean, variance) of interception
// duration, per-request interception count, and context length at the moment
// an interception fires, plus the typical token count an interception returns.
struct InterceptionClass {
  std::string name;
  double duration_mean = 0.0;  // seconds
  double duration_var = 0.0;   // seconds^2
  double count_mean = 0.0;
  double count_var = 0.0;
  double context_mean = 0.0;  // tokens
  double context_var = 0.0;   // tokens^2
  int return_tokens = 0;
  double weight = 1.0;  // mixture weight when generating
};

// The six built-in classes. A "plain" class (count_mean == 0) produces
// requests without interceptions and can be added by callers.
const std::vector<InterceptionClass>& builtin_classes();
const InterceptionClass* find_builtin_class(const std::string& name);

struct Interception {
  std::string kind;
  double duration = 0.0;  // seconds the request stays paused
  int return_tokens = 0;  // tokens appended when it resumes
};

struct Segment {
  int decode_tokens = 0;  // >= 1
  std::optional<Interception> interception;  // absent only on the final segment
};

struct Request {
  std::int64_t id = 0;
  double arrival = 0.0;  // seconds
  int prompt_tokens = 0;
  std::vector<Segment> segments;

  int output_tokens() const;
  // Context length (prompt + generated + returned tokens) at the moment the
  // j-th interception fires, i.e. after segment j's decode completes.
  int context_at_interception(std::size_t j) const;
  double total_interception_time() const;
  int interception_count() const;
  // Class label for reporting: kind of the first interception, else "plain".
  std::string class_label() const;
};

// Throws ValidationError when a request breaks the segment invariants.
void validate_request(const Request& r);
void validate_trace(const std::vector<Request>& trace);

struct WorkloadSpec {
  std::vector<InterceptionClass> classes;
  int request_count = 0;
  double arrival_rate = 0.0;  // requests / second (Poisson)
  std::uint64_t seed = 0;
  int max_seq_len = 4096;
  double final_decode_mean = 32.0;  // tokens decoded after the last interception
};

// Deterministic synthetic trace: Poisson arrivals at arrival_rate, request
// bodies drawn from the class mixture with lognormals moment-matched to each
// class's (mean, variance). Request bodies depend only on (seed, index), so
// regenerating at a different rate rescales arrivals without touching bodies.
std::vector<Request> generate_trace(const WorkloadSpec& spec);

struct ClassStats {
  std::string name;
  std::int64_t requests = 0;
  std::int64_t interceptions = 0;
  double duration_mean = 0.0, duration_var = 0.0;
  double count_mean = 0.0, count_var = 0.0;
  double context_mean = 0.0, context_var = 0.0;
};

// Empirical per-class statistics of a trace (for eyeballing against the
// configured targets).
std::vector<ClassStats> trace_stats(const std::vector<Request>& trace);

}  // namespace icept
