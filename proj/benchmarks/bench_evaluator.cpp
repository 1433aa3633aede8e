#include <benchmark/benchmark.h>

#include <string>

#include "fcot/evaluator.hpp"
#include "fcot/gateway.hpp"

namespace {

std::string synthetic_trace(int kilobytes) {
  std::string trace;
  trace.reserve(static_cast<size_t>(kilobytes) * 1024);
  while (trace.size() < static_cast<size_t>(kilobytes) * 1024) {
    trace += "Let me reconsider. From the given facts, 3 + 6 = 9, so maybe \\boxed{9}. "
             "Wait, checking again with {nested {braces}} in passing. ";
  }
  trace += "\n**Final Answer**\n\\boxed{9}";
  return trace;
}

void BM_ExtractBoxed(benchmark::State& state) {
  std::string trace = synthetic_trace(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(fcot::extract_boxed(trace));
  }
  state.SetBytesProcessed(static_cast<int64_t>(state.iterations()) *
                          static_cast<int64_t>(trace.size()));
}
BENCHMARK(BM_ExtractBoxed)->Arg(1)->Arg(16)->Arg(128);

void BM_NormalizeAnswer(benchmark::State& state) {
  const char* answers[] = {"16.13", "4,933,828", "\\dfrac{1}{2}", "$-9867630$", "x^2 + 1"};
  size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(fcot::normalize_answer(answers[i++ % 5]));
  }
}
BENCHMARK(BM_NormalizeAnswer);

void BM_AnswersEqual(benchmark::State& state) {
  auto a = fcot::normalize_answer("0.333333333333");
  auto b = fcot::normalize_answer("1/3");
  for (auto _ : state) {
    benchmark::DoNotOptimize(fcot::answers_equal(a, b));
  }
}
BENCHMARK(BM_AnswersEqual);

void BM_CacheKey(benchmark::State& state) {
  fcot::ChatRequest request;
  request.model = "qwen3-14b";
  request.prompt = synthetic_trace(2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(fcot::cache_key("http://localhost:8000/v1", request, 3));
  }
}
BENCHMARK(BM_CacheKey);

}  // namespace

BENCHMARK_MAIN();
