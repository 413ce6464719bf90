#include <doctest.h>

#include "interceptsim/metrics.hpp"

using namespace icept;

namespace {

RequestMetrics make(std::int64_t id, double arrival, double ttft_at, double completion,
                    std::int64_t output, double int_time, bool incomplete = false) {
  RequestMetrics r;
  r.id = id;
  r.arrival = arrival;
  r.first_token_time = ttft_at;
  r.completion = completion;
  r.output_tokens = output;
  r.interception_time = int_time;
  r.incomplete = incomplete;
  return r;
}

}  // namespace

TEST_CASE("normalized latency removes interception time") {
  MetricsLedger ledger;
  ledger.requests = {make(1, 0.0, 0.1, 10.33, 11, 10.0)};
  CHECK(normalized_latency(ledger) == doctest::Approx(0.03).epsilon(1e-12));
}

TEST_CASE("median of two is their midpoint") {
  MetricsLedger ledger;
  ledger.requests = {make(1, 0.0, 0.1, 2.0, 100, 0.0),    // 0.02 s/token
                     make(2, 0.0, 0.1, 4.0, 100, 0.0)};   // 0.04 s/token
  CHECK(normalized_latency(ledger) == doctest::Approx(0.03).epsilon(1e-12));
}

TEST_CASE("zero-output requests are excluded; empty is an error") {
  MetricsLedger ledger;
  ledger.requests = {make(1, 0.0, 0.1, 2.0, 0, 0.0), make(2, 0.0, 0.1, 4.0, 100, 0.0)};
  CHECK(normalized_latency(ledger) == doctest::Approx(0.04).epsilon(1e-12));

  MetricsLedger empty;
  CHECK_THROWS_AS(normalized_latency(empty), UndefinedMetric);
  MetricsLedger only_incomplete;
  only_incomplete.requests = {make(1, 0.0, 0.1, -1.0, 50, 0.0, true)};
  CHECK_THROWS_AS(normalized_latency(only_incomplete), UndefinedMetric);
}

TEST_CASE("throughput counts completions over the horizon") {
  MetricsLedger ledger;
  for (int i = 0; i < 100; ++i) ledger.requests.push_back(make(i, 0.0, 0.1, 50.0, 10, 0.0));
  CHECK(throughput(ledger) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(throughput(ledger, 200.0) == doctest::Approx(0.5).epsilon(1e-12));

  MetricsLedger none;
  none.requests = {make(1, 0.0, 0.1, -1.0, 10, 0.0, true)};
  CHECK(throughput(none) == 0.0);
}

TEST_CASE("ttft median") {
  MetricsLedger ledger;
  ledger.requests = {make(1, 1.0, 1.5, 3.0, 10, 0.0), make(2, 2.0, 2.1, 4.0, 10, 0.0),
                     make(3, 3.0, 3.9, 5.0, 10, 0.0)};
  CHECK(ttft(ledger) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("waste report buckets add up") {
  MetricsLedger ledger;
  ledger.waste.preserve = 1e9 * 60.0;   // 1 GB*min
  ledger.waste.recompute = 2e9 * 60.0;  // 2 GB*min
  ledger.waste.stall = 0.5e9 * 60.0;
  ledger.sim_wall = 120.0;
  ledger.gpu_kv_capacity = 10e9;
  ledger.forwarding_time = 100.0;
  ledger.recompute_time = 25.0;
  const auto wr = waste_report(ledger);
  CHECK(wr.total_gb_min == doctest::Approx(3.5).epsilon(1e-12));
  CHECK(wr.preserve_gb_min + wr.recompute_gb_min + wr.stall_gb_min ==
        doctest::Approx(wr.total_gb_min).epsilon(1e-12));
  CHECK(wr.pct_of_capacity_time == doctest::Approx(100.0 * 3.5e9 * 60.0 / (10e9 * 120.0)).epsilon(1e-12));
  CHECK(wr.recompute_fraction == doctest::Approx(0.25).epsilon(1e-12));

  MetricsLedger empty;
  const auto zero = waste_report(empty);
  CHECK(zero.total_gb_min == 0.0);
  CHECK(zero.pct_of_capacity_time == 0.0);
}

TEST_CASE("normalized latency is invariant to shifting all arrivals") {
  MetricsLedger a, b;
  for (int i = 0; i < 7; ++i) {
    a.requests.push_back(make(i, 0.3 * i, 0.3 * i + 0.2, 0.3 * i + 2.0 + 0.1 * i, 20, 0.5));
    b.requests.push_back(make(i, 0.3 * i + 5.0, 0.3 * i + 5.2, 0.3 * i + 7.0 + 0.1 * i, 20, 0.5));
  }
  CHECK(normalized_latency(a) == doctest::Approx(normalized_latency(b)).epsilon(1e-12));
}
