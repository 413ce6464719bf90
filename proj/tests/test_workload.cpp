#include <doctest.h>

#include <cmath>
#include <map>

#include "interceptsim/rng.hpp"
#include "interceptsim/workload.hpp"

using namespace icept;

namespace {

WorkloadSpec single_class_spec(const std::string& name, int count, double rate, std::uint64_t seed) {
  WorkloadSpec spec;
  spec.classes = {*find_builtin_class(name)};
  spec.classes[0].weight = 1.0;
  spec.request_count = count;
  spec.arrival_rate = rate;
  spec.seed = seed;
  return spec;
}

bool traces_equal(const std::vector<Request>& a, const std::vector<Request>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].id != b[i].id || a[i].arrival != b[i].arrival || a[i].prompt_tokens != b[i].prompt_tokens)
      return false;
    if (a[i].segments.size() != b[i].segments.size()) return false;
    for (std::size_t k = 0; k < a[i].segments.size(); ++k) {
      const auto& sa = a[i].segments[k];
      const auto& sb = b[i].segments[k];
      if (sa.decode_tokens != sb.decode_tokens) return false;
      if (sa.interception.has_value() != sb.interception.has_value()) return false;
      if (sa.interception &&
          (sa.interception->kind != sb.interception->kind ||
           sa.interception->duration != sb.interception->duration ||
           sa.interception->return_tokens != sb.interception->return_tokens))
        return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("built-in class table") {
  const auto* chat = find_builtin_class("Chatbot");
  REQUIRE(chat != nullptr);
  CHECK(chat->duration_mean == 28.6);
  CHECK(chat->duration_var == 15.6);
  CHECK(chat->count_mean == 4.45);
  CHECK(chat->count_var == 1.96);
  CHECK(chat->context_mean == 753.0);
  CHECK(chat->context_var == 703.0);

  const auto* math = find_builtin_class("Math");
  REQUIRE(math != nullptr);
  CHECK(math->duration_mean == 9e-5);
  CHECK(math->duration_var == 6e-5);
  CHECK(math->count_mean == 3.75);
  CHECK(math->context_mean == 1422.0);

  const auto* ve = find_builtin_class("VE");
  REQUIRE(ve != nullptr);
  CHECK(ve->count_mean == 28.18);
  CHECK(ve->context_mean == 2185.0);

  CHECK(find_builtin_class("QA")->duration_mean == 0.69);
  CHECK(find_builtin_class("Image")->duration_mean == 20.03);
  CHECK(find_builtin_class("TTS")->duration_mean == 17.24);
  CHECK(find_builtin_class("nope") == nullptr);
}

TEST_CASE("chatbot sample moments track the class statistics") {
  const auto trace = generate_trace(single_class_spec("Chatbot", 1000, 1.0, 7));
  double dur_sum = 0.0, count_sum = 0.0;
  std::int64_t n_int = 0;
  for (const auto& r : trace) {
    count_sum += r.interception_count();
    for (const auto& s : r.segments) {
      if (!s.interception) continue;
      dur_sum += s.interception->duration;
      n_int++;
    }
  }
  const double dur_mean = dur_sum / n_int;
  const double count_mean = count_sum / trace.size();
  CHECK(dur_mean == doctest::Approx(28.6).epsilon(0.10));
  CHECK(count_mean == doctest::Approx(4.45).epsilon(0.10));
}

TEST_CASE("zero variance collapses the duration draw") {
  auto spec = single_class_spec("Math", 100, 1.0, 3);
  spec.classes[0].duration_var = 0.0;
  for (const auto& r : generate_trace(spec)) {
    for (const auto& s : r.segments) {
      if (s.interception) CHECK(s.interception->duration == 9e-5);
    }
  }
}

TEST_CASE("same seed, same trace") {
  WorkloadSpec spec;
  spec.classes = builtin_classes();
  for (auto& c : spec.classes) c.weight = 1.0 / 6.0;
  spec.request_count = 2;
  spec.arrival_rate = 1.0;
  spec.seed = 42;
  CHECK(traces_equal(generate_trace(spec), generate_trace(spec)));

  spec.request_count = 200;
  CHECK(traces_equal(generate_trace(spec), generate_trace(spec)));
}

TEST_CASE("rescaling the rate keeps request bodies") {
  auto spec = single_class_spec("QA", 50, 1.0, 11);
  auto slow = generate_trace(spec);
  spec.arrival_rate = 4.0;
  auto fast = generate_trace(spec);
  REQUIRE(slow.size() == fast.size());
  for (std::size_t i = 0; i < slow.size(); ++i) {
    CHECK(slow[i].prompt_tokens == fast[i].prompt_tokens);
    CHECK(slow[i].segments.size() == fast[i].segments.size());
    CHECK(fast[i].arrival == doctest::Approx(slow[i].arrival / 4.0).epsilon(1e-12));
  }
}

TEST_CASE("context at interception replays from segments") {
  WorkloadSpec spec;
  spec.classes = builtin_classes();
  for (auto& c : spec.classes) c.weight = 1.0 / 6.0;
  spec.request_count = 500;
  spec.arrival_rate = 2.0;
  spec.seed = 99;
  for (const auto& r : generate_trace(spec)) {
    validate_request(r);
    int ctx = r.prompt_tokens;
    std::size_t j = 0;
    for (const auto& s : r.segments) {
      ctx += s.decode_tokens;
      if (s.interception) {
        CHECK(ctx == r.context_at_interception(j));
        CHECK(ctx <= spec.max_seq_len);
        ctx += s.interception->return_tokens;
        ++j;
      }
    }
  }
}

TEST_CASE("mixture proportions converge to the weights") {
  WorkloadSpec spec;
  spec.classes = {*find_builtin_class("Math"), *find_builtin_class("Chatbot")};
  spec.classes[0].weight = 0.3;
  spec.classes[1].weight = 0.7;
  spec.request_count = 10000;
  spec.arrival_rate = 1.0;
  spec.seed = 5;
  std::map<std::string, int> hits;
  for (const auto& r : generate_trace(spec)) hits[r.class_label()] += 1;
  CHECK(hits["Math"] / 10000.0 == doctest::Approx(0.3).epsilon(0.05));
  CHECK(hits["Chatbot"] / 10000.0 == doctest::Approx(0.7).epsilon(0.05));
}

TEST_CASE("invalid workload configs are rejected") {
  auto spec = single_class_spec("Math", 10, 1.0, 1);
  spec.arrival_rate = 0.0;
  CHECK_THROWS_AS(generate_trace(spec), ConfigError);
  spec.arrival_rate = -1.0;
  CHECK_THROWS_AS(generate_trace(spec), ConfigError);

  WorkloadSpec empty;
  empty.request_count = 10;
  empty.arrival_rate = 1.0;
  CHECK_THROWS_AS(generate_trace(empty), ConfigError);

  auto bad_weights = single_class_spec("Math", 10, 1.0, 1);
  bad_weights.classes[0].weight = 0.5;
  CHECK_THROWS_AS(generate_trace(bad_weights), ConfigError);

  auto zero_count = single_class_spec("Math", 0, 1.0, 1);
  CHECK_THROWS_AS(generate_trace(zero_count), ConfigError);
}

TEST_CASE("plain class produces interception-free requests") {
  WorkloadSpec spec;
  InterceptionClass plain;
  plain.name = "plain";
  plain.count_mean = 0.0;
  plain.context_mean = 900.0;
  plain.context_var = 200.0;
  plain.weight = 1.0;
  spec.classes = {plain};
  spec.request_count = 20;
  spec.arrival_rate = 1.0;
  spec.seed = 2;
  for (const auto& r : generate_trace(spec)) {
    CHECK(r.interception_count() == 0);
    CHECK(r.segments.size() == 1);
    CHECK(r.class_label() == "plain");
  }
}

TEST_CASE("rng streams are deterministic and decoupled") {
  Rng a = Rng::stream(7, 1);
  Rng b = Rng::stream(7, 1);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng c = Rng::stream(7, 2);
  CHECK(c.next_u64() != Rng::stream(7, 1).next_u64());
}

TEST_CASE("lognormal moment matching") {
  Rng rng(123);
  double sum = 0.0, sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = rng.lognormal_mean_var(28.6, 15.6);
    sum += x;
    sq += x * x;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  CHECK(mean == doctest::Approx(28.6).epsilon(0.02));
  CHECK(var == doctest::Approx(15.6).epsilon(0.10));
}
