#include <benchmark/benchmark.h>

#include <vector>

#include "tagformer/crf.h"
#include "tagformer/encoder.h"
#include "tagformer/rng.h"

using namespace tagformer;

namespace {

EncoderConfig bench_config(AttentionMode mode, int n) {
  EncoderConfig c;
  c.vocab_size = 200;
  c.d_model = 64;
  c.n_heads = 4;
  c.n_layers = 1;
  c.ffn_dim = 256;
  c.clip_distance = 8;
  c.window = 5;
  c.mode = mode;
  c.max_seq_len = n;
  return c;
}

// Words of 1-3 tokens, ~1.5 tokens per word.
struct Input {
  std::vector<int> tokens, segments, word_map;
  int n_words = 0;
};

Input make_input(int n, Rng& rng) {
  Input in;
  for (int i = 0; i < n; ++i) {
    in.tokens.push_back(5 + static_cast<int>(rng.below(195)));
    in.segments.push_back(0);
    if (i > 0 && rng.bernoulli(0.33)) {
      in.word_map.push_back(in.n_words - 1);
    } else {
      in.word_map.push_back(in.n_words++);
    }
  }
  return in;
}

void BM_EncoderForward(benchmark::State& state, AttentionMode mode) {
  const int n = static_cast<int>(state.range(0));
  const EncoderConfig cfg = bench_config(mode, n);
  Rng rng(7);
  ParameterStore<float> params;
  init_encoder_params(params, cfg, rng);
  const Input in = make_input(n, rng);
  const EncoderInput view{in.tokens, in.segments, in.word_map, in.n_words};
  for (auto _ : state) {
    Graph<float> g;
    auto trace = encoder_forward(g, params, cfg, view);
    benchmark::DoNotOptimize(g.value(trace.hidden).values().data());
  }
  state.SetComplexityN(n);
}

Matrix<double> random_matrix(int rows, int cols, Rng& rng) {
  Matrix<double> m(rows, cols);
  for (auto& v : m.values()) v = rng.normal();
  return m;
}

void BM_CrfLogPartition(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const int gamma = static_cast<int>(state.range(1));
  Rng rng(3);
  const auto y = random_matrix(n, gamma, rng);
  const auto t = random_matrix(gamma, gamma, rng);
  for (auto _ : state) benchmark::DoNotOptimize(crf_log_partition(y, t));
}

void BM_Viterbi(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const int gamma = static_cast<int>(state.range(1));
  Rng rng(3);
  const auto y = random_matrix(n, gamma, rng);
  const auto t = random_matrix(gamma, gamma, rng);
  for (auto _ : state) {
    auto path = viterbi_decode(y, t);
    benchmark::DoNotOptimize(path.data());
  }
}

}  // namespace

BENCHMARK_CAPTURE(BM_EncoderForward, rel_full, AttentionMode::kRelFull)->RangeMultiplier(2)->Range(64, 512)->Complexity();
BENCHMARK_CAPTURE(BM_EncoderForward, wwa, AttentionMode::kWwa)->RangeMultiplier(2)->Range(64, 512)->Complexity();
BENCHMARK_CAPTURE(BM_EncoderForward, abs_full, AttentionMode::kAbsFull)->Arg(256);
BENCHMARK(BM_CrfLogPartition)->Args({64, 9})->Args({320, 9})->Args({320, 17});
BENCHMARK(BM_Viterbi)->Args({64, 9})->Args({320, 9})->Args({320, 17});
BENCHMARK_MAIN();
