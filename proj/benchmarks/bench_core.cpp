#include <benchmark/benchmark.h>

#include <random>

#include "cellfree/cluster.hpp"
#include "cellfree/correlation.hpp"
#include "cellfree/downlink.hpp"
#include "cellfree/estimation.hpp"
#include "cellfree/geometry.hpp"
#include "cellfree/powerctl.hpp"
#include "cellfree/rng.hpp"
#include "cellfree/uplink.hpp"

namespace {

using namespace cellfree;

struct Bench {
  NetworkConfig cfg;
  Eigen::MatrixXd beta;
  ClusterState cl;
  std::vector<Eigen::MatrixXcd> R;
  EstimationStatistics st;
  Eigen::VectorXd p;
};

// one large-scale drop of an L-AP network, reused across iterations
Bench make_bench(int L, int N, int K, int tau_p) {
  Bench b;
  b.cfg.num_aps = L;
  b.cfg.antennas_per_ap = N;
  b.cfg.num_ues = K;
  b.cfg.pilot_length = tau_p;
  b.cfg.ul_data = b.cfg.coherence_block - tau_p;
  std::mt19937_64 rng = substream(7, 0);
  Positions pos = deploy(b.cfg, ApLayout::uniform, rng);
  b.beta = large_scale_fading(b.cfg, pos, rng);
  b.cl = assign_pilots_and_dcc(b.beta, tau_p);
  const double asd = 15.0 * M_PI / 180.0;
  b.R.resize(K * L);
  for (int k = 0; k < K; ++k)
    for (int l = 0; l < L; ++l) {
      Eigen::Vector2d d = pos.ues.col(k) - pos.aps.col(l);
      double az = d.norm() > 0 ? std::atan2(d(1), d(0)) : 0.0;
      double el = -std::atan2(b.cfg.ap_height, d.norm());
      b.R[k * L + l] = local_scattering(N, az, el, asd, asd, b.beta(k, l));
    }
  Eigen::VectorXd eta = Eigen::VectorXd::Constant(K, b.cfg.pilot_power);
  b.st = build_estimation_statistics(b.R, L, N, b.cl.pilot, tau_p, eta,
                                     b.cfg.noise_ul);
  b.p = Eigen::VectorXd::Constant(K, b.cfg.max_ul_power);
  return b;
}

const Bench& shared() {
  static Bench b = make_bench(25, 4, 10, 5);
  return b;
}

void BM_estimation_statistics(benchmark::State& state) {
  const Bench& b = shared();
  Eigen::VectorXd eta =
      Eigen::VectorXd::Constant(b.cfg.num_ues, b.cfg.pilot_power);
  for (auto _ : state)
    benchmark::DoNotOptimize(build_estimation_statistics(
        b.R, b.cfg.num_aps, b.cfg.antennas_per_ap, b.cl.pilot,
        b.cfg.pilot_length, eta, b.cfg.noise_ul));
}
BENCHMARK(BM_estimation_statistics)->Unit(benchmark::kMillisecond);

void BM_channel_draw(benchmark::State& state) {
  const Bench& b = shared();
  std::mt19937_64 rng(1);
  for (auto _ : state)
    benchmark::DoNotOptimize(sample_channel_draw(b.st, rng));
}
BENCHMARK(BM_channel_draw)->Unit(benchmark::kMillisecond);

void BM_centralized_combiner(benchmark::State& state) {
  const Bench& b = shared();
  std::mt19937_64 rng(2);
  ChannelDraw draw = sample_channel_draw(b.st, rng);
  const Combiner scheme = static_cast<Combiner>(state.range(0));
  for (auto _ : state)
    for (int k = 0; k < b.cfg.num_ues; ++k)
      benchmark::DoNotOptimize(
          centralized_combiner(scheme, b.st, b.cl, draw, b.p, k));
}
BENCHMARK(BM_centralized_combiner)
    ->Arg(static_cast<int>(Combiner::mmse))
    ->Arg(static_cast<int>(Combiner::p_mmse))
    ->Arg(static_cast<int>(Combiner::mr))
    ->Unit(benchmark::kMillisecond);

void BM_distributed_expectations_mr(benchmark::State& state) {
  const Bench& b = shared();
  for (auto _ : state)
    benchmark::DoNotOptimize(distributed_expectations_mr(b.st, b.cl));
}
BENCHMARK(BM_distributed_expectations_mr)->Unit(benchmark::kMillisecond);

void BM_maxmin_fixedpoint(benchmark::State& state) {
  const Bench& b = shared();
  auto m = centralized_dl_moments_mr(b.st, b.cl);
  SinrCoefficients co =
      ul_coefficients_centralized(m, b.cfg.noise_ul, b.cfg.max_ul_power);
  for (auto _ : state) benchmark::DoNotOptimize(ul_maxmin_fixedpoint(co));
}
BENCHMARK(BM_maxmin_fixedpoint)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
