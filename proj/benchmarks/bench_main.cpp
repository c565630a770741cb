// Micro-benchmarks for the hot paths: answer normalization, verbatim span
// search, and one distractor search against an in-process scorer.

#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "ctxbench/corpus.hpp"
#include "ctxbench/eval.hpp"
#include "ctxbench/mock_providers.hpp"
#include "ctxbench/perturb.hpp"
#include "ctxbench/text.hpp"
#include "ctxbench/pipeline.hpp"

namespace {

using namespace ctxbench;

std::string long_context(std::size_t words) {
  std::string s;
  for (std::size_t i = 0; i < words; ++i) s += (i % 7 == 0 ? "Parisian " : "word ");
  return s + "Paris.";
}

void BM_NormalizeAnswer(benchmark::State& state) {
  const std::string text = "  The Eiffel-Tower, in (central) PARIS!  ";
  for (auto _ : state) benchmark::DoNotOptimize(normalize_answer(text));
}
BENCHMARK(BM_NormalizeAnswer);

void BM_FindVerbatim(benchmark::State& state) {
  const std::string ctx = long_context(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(find_verbatim(ctx, "Paris"));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * ctx.size()));
}
BENCHMARK(BM_FindVerbatim)->Arg(100)->Arg(1000);

// Cost is epochs * length * |pool| scorer calls; the noisy scorer hashes the
// whole prompt, so this tracks prompt construction as much as search logic.
void BM_DistractorSearch(benchmark::State& state) {
  const PromptTemplate tmpl;
  QARecord r;
  r.id = "b";
  r.question = "Where is the landmark?";
  r.context = "The landmark stands in Paris near the old market.";
  r.gold_answers = {"Paris"};
  mock::NoisyScorer scorer(1);
  DistractorConfig cfg;
  cfg.length = static_cast<std::size_t>(state.range(0));
  cfg.max_epochs = 1;
  const auto& words = default_common_words();
  cfg.pool_common_words.assign(words.begin(), words.begin() + state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(make_distractor(r, scorer, cfg, tmpl));
}
BENCHMARK(BM_DistractorSearch)->Args({4, 100})->Args({10, 1000})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
