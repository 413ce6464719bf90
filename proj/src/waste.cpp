#include "interceptsim/waste.hpp"

#include <cmath>

namespace icept {
namespace waste {

double preserve(const CostModel& m, double t_int, double context) {
  return t_int * context * m.mem_per_token;
}

double discard_oneshot(const CostModel& m, double context, double other_context) {
  const double t = m.t_fwd(context);
  return t * context * m.mem_per_token + t * other_context * m.mem_per_token;
}

double swap_naive(const CostModel& m, double context, double batch_context) {
  return 2.0 * m.t_swap(context) * batch_context * m.mem_per_token;
}

double chunk_discard(const CostModel& m, double context, double other_context, double chunk) {
  if (context <= 0.0) return 0.0;
  const double n = std::ceil(context / chunk);
  return m.t_fwd(context) * context * m.mem_per_token / 2.0 +
         n * m.t_fwd(context / n) * other_context * m.mem_per_token;
}

WasteEstimate decide(const CostModel& m, double t_int_estimate, double context, double other_context,
                     double chunk) {
  WasteEstimate e;
  e.preserve = preserve(m, t_int_estimate, context);
  e.discard_oneshot = discard_oneshot(m, context, other_context);
  e.swap_naive = swap_naive(m, context, other_context + context);
  e.chunk_discard = chunk_discard(m, context, other_context, chunk);
  e.decision = e.preserve <= e.chunk_discard ? Decision::Preserve : Decision::Discard;
  e.key = e.preserve <= e.chunk_discard ? e.preserve : e.chunk_discard;
  return e;
}

}  // namespace waste
}  // namespace icept
