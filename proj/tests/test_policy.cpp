#include <doctest.h>

#include "interceptsim/policy.hpp"
#include "interceptsim/workload.hpp"

using namespace icept;

TEST_CASE("policy and estimator names round trip") {
  for (auto kind : {PolicyKind::VanillaDiscard, PolicyKind::ImprovedDiscard, PolicyKind::Preserve,
                    PolicyKind::NaiveSwap, PolicyKind::InferCept}) {
    CHECK(parse_policy(policy_name(kind)) == kind);
  }
  CHECK_THROWS_AS(parse_policy("fastserve"), ConfigError);
  for (auto mode : {EstimatorMode::Oracle, EstimatorMode::Profiled, EstimatorMode::Dynamic}) {
    CHECK(parse_estimator(estimator_name(mode)) == mode);
  }
  CHECK_THROWS_AS(parse_estimator("psychic"), ConfigError);
}

TEST_CASE("swap limit from the forward-time identity") {
  CostModel m;
  m.t0 = 0.0;
  m.slope_below = m.slope_above = 1e-5;
  m.saturation_point = 1e9;
  m.swap_per_token = 5e-5;
  // t_fwd(3000) = 0.03 s -> 600 tokens
  CHECK(compute_swap_limit(m, 3000) == 600);

  m.swap_per_token = 1e18;  // swap never free
  CHECK(compute_swap_limit(m, 3000) == 0);

  m.swap_per_token = 5e-5;
  m.t0 = 0.02;
  CHECK(compute_swap_limit(m, 0) == 400);
}

TEST_CASE("swap budget split favors swap-in, then swap-out") {
  const auto b = allocate_swap_budget(600, 200, 1000, 300, 10000, 1 << 30);
  CHECK(b.alloc_in == 200);
  CHECK(b.alloc_out == 400);

  const auto zero = allocate_swap_budget(0, 200, 1000, 300, 10000, 1 << 30);
  CHECK(zero.alloc_in == 0);
  CHECK(zero.alloc_out == 0);

  // Nothing to swap in and no CPU room: constraint 2 pins swap-out to zero.
  const auto stuck = allocate_swap_budget(600, 0, 1000, 300, 0, 1 << 30);
  CHECK(stuck.alloc_in == 0);
  CHECK(stuck.alloc_out == 0);
}

TEST_CASE("swap budget respects every constraint on random inputs") {
  for (std::int64_t limit : {0, 10, 600, 5000}) {
    for (std::int64_t p_in : {0, 5, 300, 4000}) {
      for (std::int64_t p_out : {0, 7, 450, 8000}) {
        for (std::int64_t fg : {0, 100, 2000}) {
          for (std::int64_t fc : {0, 50, 10000}) {
            const auto b = allocate_swap_budget(limit, p_in, p_out, fg, fc, 1 << 30);
            CHECK(b.alloc_in >= 0);
            CHECK(b.alloc_out >= 0);
            CHECK(b.alloc_in <= p_in);
            CHECK(b.alloc_out <= p_out);
            CHECK(b.alloc_in + b.alloc_out <= limit);
            CHECK(b.alloc_out <= fc + b.alloc_in);
            CHECK(b.alloc_in <= b.alloc_out + fg);
          }
        }
      }
    }
  }
}

TEST_CASE("interception planning: budget goes to the biggest waste first") {
  CostModel m;
  m.t0 = 0.0;
  m.slope_below = m.slope_above = 1e-3;
  m.saturation_point = 1e9;
  m.mem_per_token = 1e6;
  const PolicyConfig cfg = PolicyConfig::for_kind(PolicyKind::InferCept);

  // Request 1 has the larger min-waste; the budget covers exactly its context.
  std::vector<InterceptedRequest> intercepted = {{1, 1000, 100.0}, {2, 600, 100.0}};
  const auto plans = plan_interceptions(cfg, m, intercepted, 5000.0, 2048.0, 1000, 1 << 30);
  REQUIRE(plans.size() == 2);
  CHECK(plans[0].id == 1);
  CHECK(plans[0].swap_out_tokens == 1000);
  CHECK(plans[1].swap_out_tokens == 0);

  // Without budget the split is purely the per-request decision.
  const auto no_budget = plan_interceptions(cfg, m, intercepted, 5000.0, 2048.0, 0, 1 << 30);
  CHECK(no_budget[0].swap_out_tokens == 0);
  CHECK(no_budget[1].swap_out_tokens == 0);
}

TEST_CASE("interception planning splits the boundary request") {
  CostModel m;
  m.t0 = 0.0;
  m.slope_below = m.slope_above = 1e-3;
  m.saturation_point = 1e9;
  m.mem_per_token = 1e6;
  const PolicyConfig cfg = PolicyConfig::for_kind(PolicyKind::InferCept);

  std::vector<InterceptedRequest> intercepted = {{1, 1000, 100.0}, {2, 600, 50.0}};
  const auto plans = plan_interceptions(cfg, m, intercepted, 5000.0, 2048.0, 1300, 1 << 30);
  CHECK(plans[0].swap_out_tokens == 1000);
  CHECK(plans[1].swap_out_tokens == 300);  // truncated by the budget

  // CPU space caps the total swap-out.
  const auto capped = plan_interceptions(cfg, m, intercepted, 5000.0, 2048.0, 1300, 700);
  CHECK(capped[0].swap_out_tokens == 700);
  CHECK(capped[1].swap_out_tokens == 0);
}

TEST_CASE("interception planning honors the preserve mode") {
  CostModel m;
  m.t0 = 0.0;
  m.slope_below = m.slope_above = 1e-3;
  m.saturation_point = 1e9;
  m.mem_per_token = 1e6;

  // One short and one long interception.
  std::vector<InterceptedRequest> intercepted = {{1, 1000, 1e-4}, {2, 1000, 60.0}};

  PolicyConfig never = PolicyConfig::for_kind(PolicyKind::ImprovedDiscard);
  for (const auto& p : plan_interceptions(never, m, intercepted, 5000.0, 2048.0, 0, 1 << 30))
    CHECK_FALSE(p.preserve_rest);

  PolicyConfig heur = never;
  heur.preserve_mode = PreserveMode::Heuristic;
  heur.heuristic_threshold = 1.0;
  const auto hp = plan_interceptions(heur, m, intercepted, 5000.0, 2048.0, 0, 1 << 30);
  CHECK(hp[0].preserve_rest);
  CHECK_FALSE(hp[1].preserve_rest);

  PolicyConfig minw = PolicyConfig::for_kind(PolicyKind::InferCept);
  const auto mp = plan_interceptions(minw, m, intercepted, 5000.0, 2048.0, 0, 1 << 30);
  CHECK(mp[0].preserve_rest);        // preserve waste ~ 0.1 MB*s
  CHECK_FALSE(mp[1].preserve_rest);  // preserve waste 60 s * 1000 tokens
}
