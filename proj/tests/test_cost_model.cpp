#include <doctest.h>

#include <cmath>

#include "interceptsim/cost_model.hpp"
#include "interceptsim/rng.hpp"
#include "interceptsim/trace_io.hpp"

using namespace icept;

namespace {

CostModel kneed_model() {
  CostModel m;
  m.t0 = 0.02;
  m.slope_below = 1e-5;
  m.slope_above = 3e-5;
  m.saturation_point = 2048;
  return m;
}

}  // namespace

TEST_CASE("t_fwd piecewise evaluation") {
  const CostModel m = kneed_model();
  CHECK(m.t_fwd(0) == doctest::Approx(0.02).epsilon(1e-12));
  CHECK(m.t_fwd(2048) == doctest::Approx(0.04048).epsilon(1e-12));
  CHECK(m.t_fwd(3048) == doctest::Approx(0.07048).epsilon(1e-12));
}

TEST_CASE("t_fwd is continuous at the knee and monotone") {
  const CostModel m = kneed_model();
  CHECK(m.t_fwd(2048.0 - 1e-9) == doctest::Approx(m.t_fwd(2048.0 + 1e-9)).epsilon(1e-9));
  double prev = -1.0;
  for (double x = 0; x <= 8192; x += 64) {
    CHECK(m.t_fwd(x) >= prev);
    prev = m.t_fwd(x);
  }
}

TEST_CASE("t_swap is linear through the origin") {
  CostModel m;
  m.swap_per_token = 0.8e6 / 16e9;  // 0.8 MB/token over 16 GB/s = 50 us/token
  CHECK(m.t_swap(600) == doctest::Approx(0.03).epsilon(1e-12));
  CHECK(m.t_swap(0) == 0.0);
  Rng rng(1);
  for (int i = 0; i < 50; ++i) {
    const double n = std::floor(rng.next_double() * 10000);
    CHECK(m.t_swap(2 * n) == doctest::Approx(2 * m.t_swap(n)).epsilon(1e-12));
  }
}

TEST_CASE("tokens_to_bytes rounds to blocks") {
  CostModel m;
  m.block_size = 16;
  m.mem_per_token = 1e6;
  CHECK(m.tokens_to_bytes(17) == doctest::Approx(32e6).epsilon(1e-12));
  CHECK(m.tokens_to_bytes(0) == 0.0);
  CHECK(m.tokens_to_bytes(16) == doctest::Approx(16e6).epsilon(1e-12));

  // monotone and idempotent under block rounding
  double prev = -1.0;
  for (std::int64_t t = 0; t < 200; ++t) {
    CHECK(m.tokens_to_bytes(t) >= prev);
    prev = m.tokens_to_bytes(t);
    const std::int64_t rounded = (t + m.block_size - 1) / m.block_size * m.block_size;
    CHECK(m.tokens_to_bytes(t) == m.tokens_to_bytes(rounded));
  }
}

TEST_CASE("fit recovers noiseless two-segment data") {
  const CostModel truth = kneed_model();
  std::vector<std::pair<double, double>> pts;
  for (double x : {256.0, 1024.0, 2048.0, 3072.0, 4096.0}) pts.emplace_back(x, truth.t_fwd(x));
  const FwdFit fit = fit_profile(pts);
  CHECK(fit.t0 == doctest::Approx(truth.t0).epsilon(1e-9));
  CHECK(fit.slope_below == doctest::Approx(truth.slope_below).epsilon(1e-9));
  CHECK(fit.slope_above == doctest::Approx(truth.slope_above).epsilon(1e-9));
  CHECK(fit.saturation_point == doctest::Approx(2048.0).epsilon(1e-9));
}

TEST_CASE("fit of a single line still reproduces inputs") {
  std::vector<std::pair<double, double>> pts;
  for (double x : {100.0, 500.0, 900.0, 1300.0}) pts.emplace_back(x, 0.01 + 2e-5 * x);
  const FwdFit fit = fit_profile(pts);
  CostModel m;
  m.t0 = fit.t0;
  m.slope_below = fit.slope_below;
  m.slope_above = fit.slope_above;
  m.saturation_point = fit.saturation_point;
  for (const auto& [x, y] : pts) CHECK(m.t_fwd(x) == doctest::Approx(y).epsilon(1e-9));
}

TEST_CASE("fit preconditions") {
  std::vector<std::pair<double, double>> three = {{1, 1}, {2, 2}, {3, 3}};
  CHECK_THROWS_AS(fit_profile(three), FitError);
  std::vector<std::pair<double, double>> same_x = {{5, 1}, {5, 2}, {5, 3}, {5, 4}};
  CHECK_THROWS_AS(fit_profile(same_x), FitError);
}

TEST_CASE("chunked recompute never exceeds one-shot in added time") {
  // Sum of per-chunk marginal costs at chunk size S-B vs the one-shot
  // marginal; equality iff the one-shot batch stays at or below S.
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    CostModel m;
    m.t0 = rng.next_double() * 0.05;
    m.slope_below = 1e-6 + rng.next_double() * 5e-5;
    m.slope_above = m.slope_below * (1.0 + 3.0 * rng.next_double());
    m.saturation_point = 512 + std::floor(rng.next_double() * 4096);
    const double B = std::floor(rng.next_double() * m.saturation_point);
    const double C = 1 + std::floor(rng.next_double() * 12000);
    const double chunk = m.saturation_point - B;
    if (chunk < 1) continue;

    double chunked = 0.0;
    double left = C;
    while (left > 0) {
      const double c = std::min(left, chunk);
      chunked += m.t_fwd(B + c) - m.t_fwd(B);
      left -= c;
    }
    const double oneshot = m.t_fwd(B + C) - m.t_fwd(B);
    CHECK(chunked <= oneshot + 1e-12);
    if (B + C <= m.saturation_point) CHECK(chunked == doctest::Approx(oneshot).epsilon(1e-9));
  }
}

TEST_CASE("cost model JSON round trip and validation") {
  CostModel m = kneed_model();
  m.mem_per_token = 0.8e6;
  const CostModel back = cost_model_from_json(cost_model_to_json(m));
  CHECK(back.t0 == m.t0);
  CHECK(back.slope_below == m.slope_below);
  CHECK(back.slope_above == m.slope_above);
  CHECK(back.saturation_point == m.saturation_point);
  CHECK(back.mem_per_token == m.mem_per_token);

  CHECK_THROWS_AS(cost_model_from_json("{\"slope_below\":-1}"), ConfigError);
  CHECK_THROWS_AS(cost_model_from_json("not json"), ParseError);
}
