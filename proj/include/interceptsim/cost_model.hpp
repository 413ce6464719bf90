#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace icept {

class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Offline-profiled performance model of one deployment: a two-segment linear
// forward-pass time with a knee at the GPU saturation point, a linear
// GPU<->CPU transfer time, and per-token KV memory.
struct CostModel {
  double t0 = 0.02;               // seconds, fixed per-iteration overhead
  double slope_below = 3.0e-6;    // seconds/token for batches <= saturation_point
  double slope_above = 5.0e-5;    // seconds/token beyond the saturation point
  double saturation_point = 2048; // tokens
  double swap_per_token = 6.25e-5;   // seconds/token over the GPU-CPU link
  double mem_per_token = 1.0e6;      // bytes of KV cache per token
  double gpu_kv_capacity = 80.0e9;   // bytes
  double cpu_kv_capacity = 320.0e9;  // bytes
  int block_size = 16;               // tokens per allocation block
  double swap_launch_overhead = 0.002;  // seconds per unpipelined swap operation

  // Forward-pass time for a batch of query tokens. Continuous at the knee and
  // monotone nondecreasing.
  double t_fwd(double batch_tokens) const {
    const double below = batch_tokens < saturation_point ? batch_tokens : saturation_point;
    const double above = batch_tokens > saturation_point ? batch_tokens - saturation_point : 0.0;
    return t0 + slope_below * below + slope_above * above;
  }

  double t_swap(double tokens) const { return swap_per_token * tokens; }

  // Block-granular footprint, mirroring paged allocation.
  double tokens_to_bytes(std::int64_t tokens) const {
    const std::int64_t blocks = (tokens + block_size - 1) / block_size;
    return static_cast<double>(blocks) * block_size * mem_per_token;
  }

  std::int64_t gpu_capacity_tokens() const {
    return static_cast<std::int64_t>(gpu_kv_capacity / mem_per_token);
  }

  void validate() const;
};

struct FwdFit {
  double t0 = 0.0;
  double slope_below = 0.0;
  double slope_above = 0.0;
  double saturation_point = 0.0;
  double sse = 0.0;
};

// Two-segment continuous least-squares fit of (batch_tokens, seconds) points.
// The knee is chosen among observed x values to minimize total squared
// residual; noiseless two-segment inputs are recovered exactly. Requires at
// least 4 points with at least 2 distinct x values.
FwdFit fit_profile(const std::vector<std::pair<double, double>>& points);

// CSV with one `batch_tokens,seconds` pair per line; a header line is allowed.
std::vector<std::pair<double, double>> load_profile_csv(const std::string& path);

std::string cost_model_to_json(const CostModel& m);
CostModel cost_model_from_json(const std::string& text);
CostModel load_cost_model(const std::string& path);
void save_cost_model(const CostModel& m, const std::string& path);

}  // namespace icept
