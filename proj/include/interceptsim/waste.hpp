#pragma once

#include <cstdint>

#include "interceptsim/cost_model.hpp"

namespace icept {
namespace waste {

// GPU memory waste estimates in byte*seconds for the three dispositions of a
// paused request's context. Estimates are token-granular (no block rounding);
// the ledger's realized measurements are block-granular.

// Waste of keeping the context resident for the whole interception:
// t_int * context * M.
double preserve(const CostModel& m, double t_int, double context);

// Waste of freeing the context and recomputing it in one shot when the
// request resumes: t_fwd(C) * C * M for the recomputation itself plus
// t_fwd(C) * C_other * M for the other running contexts held up by the
// longer iteration.
double discard_oneshot(const CostModel& m, double context, double other_context);

// Waste of synchronously moving the context out and back while the whole
// batch stalls: 2 * t_swap(C) * C_batch * M.
double swap_naive(const CostModel& m, double context, double batch_context);

// Waste of chunked recomputation at the given chunk size, n = ceil(C/chunk):
// t_fwd(C) * C * M / 2  +  n * t_fwd(C/n) * C_other * M.
double chunk_discard(const CostModel& m, double context, double other_context, double chunk);

enum class Decision { Preserve, Discard };

struct WasteEstimate {
  double preserve = 0.0;
  double discard_oneshot = 0.0;
  double swap_naive = 0.0;
  double chunk_discard = 0.0;
  Decision decision = Decision::Preserve;
  // min(preserve, chunk_discard): the sort key for interception scheduling.
  double key = 0.0;
};

// Evaluate all four components and pick min(preserve, chunk_discard); ties
// preserve.
WasteEstimate decide(const CostModel& m, double t_int_estimate, double context, double other_context,
                     double chunk);

}  // namespace waste
}  // namespace icept
