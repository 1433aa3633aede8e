#include <benchmark/benchmark.h>

#include <string>

#include "fcot/context.hpp"

namespace {

fcot::ContextBlock block_of(int infos) {
  fcot::ContextBlock block;
  for (int i = 1; i <= infos; ++i) {
    block.infos.push_back({i, "Quantity " + std::to_string(i) + ": $" + std::to_string(i * 3) +
                                  " per unit, relation " + std::to_string(i) + "x baseline"});
  }
  block.question = "Total cost across all listed quantities";
  return block;
}

void BM_RenderXml(benchmark::State& state) {
  auto block = block_of(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(fcot::render_context(block, fcot::ContextFormat::XmlLike));
  }
}
BENCHMARK(BM_RenderXml)->Arg(2)->Arg(8)->Arg(32);

void BM_ValidateStrict(benchmark::State& state) {
  auto raw = fcot::render_context(block_of(static_cast<int>(state.range(0))),
                                  fcot::ContextFormat::XmlLike);
  for (auto _ : state) {
    benchmark::DoNotOptimize(fcot::validate_strict(raw));
  }
  state.SetBytesProcessed(static_cast<int64_t>(state.iterations()) *
                          static_cast<int64_t>(raw.size()));
}
BENCHMARK(BM_ValidateStrict)->Arg(2)->Arg(8)->Arg(32);

void BM_ParseStrict(benchmark::State& state) {
  auto raw = fcot::render_context(block_of(static_cast<int>(state.range(0))),
                                  fcot::ContextFormat::XmlLike);
  for (auto _ : state) {
    benchmark::DoNotOptimize(fcot::parse_context(raw));
  }
}
BENCHMARK(BM_ParseStrict)->Arg(2)->Arg(8)->Arg(32);

void BM_ParseLenientSoup(benchmark::State& state) {
  std::string soup = "chatter before <info_3>fact a</info_3> noise <info_1>fact b "
                     "<question>what now?</question> trailing <info_9>fact c</info_9>";
  for (auto _ : state) {
    benchmark::DoNotOptimize(fcot::parse_context(soup, fcot::ParseMode::Lenient));
  }
}
BENCHMARK(BM_ParseLenientSoup);

void BM_ExtractRegion(benchmark::State& state) {
  std::string output = "<think>" + std::string(4096, 'x') + "</think>Sure thing!\n" +
                       fcot::render_context(block_of(8), fcot::ContextFormat::XmlLike) +
                       "\nHope that helps.";
  for (auto _ : state) {
    benchmark::DoNotOptimize(fcot::extract_context_region(output));
  }
  state.SetBytesProcessed(static_cast<int64_t>(state.iterations()) *
                          static_cast<int64_t>(output.size()));
}
BENCHMARK(BM_ExtractRegion);

}  // namespace

BENCHMARK_MAIN();
