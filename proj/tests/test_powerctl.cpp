#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "cellfree/cluster.hpp"
#include "cellfree/powerctl.hpp"
#include "test_util.hpp"

using namespace cellfree;

namespace {

struct Net {
  EstimationStatistics st;
  ClusterState cl;
  Eigen::VectorXd p;
};

Net contaminated_net(std::mt19937_64& rng, int N = 2) {
  const int K = 4, L = 3, tau_p = 2;
  auto R = testutil::random_R(K, L, N, rng);
  Eigen::MatrixXd beta = testutil::beta_of(R, K, L, N);
  Net net;
  net.cl = assign_pilots_and_dcc(beta, tau_p);
  Eigen::VectorXd eta = Eigen::VectorXd::Constant(K, 0.5);
  net.st = build_estimation_statistics(R, L, N, net.cl.pilot, tau_p, eta, 0.02);
  net.p = Eigen::VectorXd::Constant(K, 0.5);
  return net;
}

// small synthetic ul-generic instance
SinrCoefficients toy_ul(int K, double p_max, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.2, 1.0);
  SinrCoefficients co;
  co.form = SinrForm::ul_generic;
  co.b.resize(K);
  co.c.resize(K, K);
  co.noise = Eigen::VectorXd::Constant(K, 0.3);
  co.p_max = p_max;
  for (int k = 0; k < K; ++k) {
    co.b(k) = 2 * u(rng);
    for (int i = 0; i < K; ++i) co.c(k, i) = 0.3 * u(rng);
  }
  return co;
}

std::vector<double> trace_objectives(const std::string& path) {
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);  // header
  std::vector<double> out;
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::string cell;
    std::getline(row, cell, ',');
    std::getline(row, cell, ',');
    out.push_back(std::stod(cell));
  }
  return out;
}

}  // namespace

TEST_CASE("coefficient extraction round-trips the source SINRs") {
  std::mt19937_64 rng(61);
  Net net = contaminated_net(rng);
  const int K = net.st.K;
  DistributedExpectations ex = distributed_expectations_mr(net.st, net.cl);
  auto m = centralized_dl_moments_mr(net.st, net.cl);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  Eigen::VectorXd p(K);
  for (int k = 0; k < K; ++k) p(k) = u(rng);

  // uplink UatF (MR precoder statistics double as unit-weight combining)
  auto co_ul = ul_coefficients_centralized(m, net.st.noise_ul, 1.0);
  for (int k = 0; k < K; ++k) {
    double ref = distributed_sinr(
        ex, Eigen::VectorXcd::Ones(net.cl.serving[k].size()), p,
        net.st.noise_ul, k);
    CHECK(sinr_at(co_ul, p, k) == doctest::Approx(ref).epsilon(1e-9));
  }

  // uplink with the optimal LSFD weights at reference powers
  std::vector<Eigen::VectorXcd> lsfd(K);
  for (int k = 0; k < K; ++k)
    lsfd[k] = lsfd_weights(LsfdMode::opt, ex, net.cl, net.p, net.st.noise_ul, k);
  auto co_lsfd =
      ul_coefficients_distributed(ex, net.cl, lsfd, net.st.noise_ul, 1.0);
  for (int k = 0; k < K; ++k) {
    double ref = distributed_sinr(ex, lsfd[k], p, net.st.noise_ul, k);
    CHECK(sinr_at(co_lsfd, p, k) == doctest::Approx(ref).epsilon(1e-9));
  }

  // downlink centralized
  const double noise_dl = 0.03;
  auto co_dl = dl_coefficients_centralized(m, net.cl, noise_dl, 1.0);
  auto se = downlink_se_centralized(m, p, noise_dl, 1.0);
  for (int k = 0; k < K; ++k)
    CHECK(std::log2(1 + sinr_at(co_dl, p, k)) ==
          doctest::Approx(se.se(k)).epsilon(1e-9));

  // downlink distributed
  auto dl = distributed_dl_coefficients(ex, net.cl);
  auto co_dist = dl_coefficients_distributed(dl, net.cl, noise_dl, 1.0);
  std::vector<Eigen::VectorXd> rho_ap(K), rt(K);
  for (int k = 0; k < K; ++k) {
    rho_ap[k].resize(net.cl.serving[k].size());
    rt[k] = Eigen::VectorXd::Zero(net.st.L);
    for (size_t a = 0; a < net.cl.serving[k].size(); ++a) {
      rho_ap[k](a) = u(rng);
      rt[k](net.cl.serving[k][a]) = std::sqrt(rho_ap[k](a));
    }
  }
  for (int k = 0; k < K; ++k) {
    double ref = downlink_sinr_distributed(dl, rho_ap, noise_dl, k);
    CHECK(sinr_at_dist(co_dist, rt, k) == doctest::Approx(ref).epsilon(1e-9));
  }

  // variance nonnegativity of the own-signal coupling
  for (int k = 0; k < K; ++k) CHECK(co_ul.c(k, k) >= -1e-12);
}

TEST_CASE("single-antenna distributed coefficients reduce to the gamma form") {
  std::mt19937_64 rng(62);
  const int K = 4, L = 3, tau_p = 2, N = 1;
  auto R = testutil::random_R(K, L, N, rng);
  Eigen::MatrixXd beta = testutil::beta_of(R, K, L, N);
  ClusterState cl = assign_pilots_and_dcc(beta, tau_p);
  Eigen::VectorXd eta = Eigen::VectorXd::Constant(K, 0.5);
  auto st = build_estimation_statistics(R, L, N, cl.pilot, tau_p, eta, 0.02);
  DistributedExpectations ex = distributed_expectations_mr(st, cl);
  std::vector<Eigen::VectorXcd> unit(K);
  for (int k = 0; k < K; ++k)
    unit[k] = Eigen::VectorXcd::Ones(cl.serving[k].size());
  auto co = ul_coefficients_distributed(ex, cl, unit, st.noise_ul, 1.0);
  for (int k = 0; k < K; ++k) {
    double gsum = 0, nsum = 0;
    for (int l : cl.serving[k]) {
      gsum += mr_gamma_n1(st, k, l);
      nsum += mr_gamma_n1(st, k, l);
    }
    CHECK(co.b(k) == doctest::Approx(gsum * gsum).epsilon(1e-9));
    CHECK(co.noise(k) == doctest::Approx(st.noise_ul * nsum).epsilon(1e-9));
  }
}

TEST_CASE("uplink max-min fixed point: trivial and symmetric cases") {
  SinrCoefficients co = toy_ul(1, 0.8, 1);
  auto r = ul_maxmin_fixedpoint(co);
  CHECK(r.p(0) == doctest::Approx(0.8).epsilon(1e-9));

  SinrCoefficients sym = toy_ul(2, 0.8, 2);
  sym.b << 1.0, 1.0;
  sym.c << 0.2, 0.4, 0.4, 0.2;
  auto rs = ul_maxmin_fixedpoint(sym);
  CHECK(rs.p(0) == doctest::Approx(rs.p(1)).epsilon(1e-6));
  CHECK(rs.p.maxCoeff() == doctest::Approx(0.8).epsilon(1e-9));
}

TEST_CASE("uplink max-min fixed point matches a refined 2D grid oracle") {
  SinrCoefficients co = toy_ul(2, 1.0, 3);
  auto r = ul_maxmin_fixedpoint(co);
  CHECK(r.converged);
  double s0 = sinr_at(co, r.p, 0), s1 = sinr_at(co, r.p, 1);
  CHECK(std::abs(s0 - s1) <= 1e-5);
  CHECK(r.p.maxCoeff() == doctest::Approx(co.p_max).epsilon(1e-9));

  // grid search with one refinement pass
  double best = 0;
  Eigen::Vector2d center(co.p_max / 2, co.p_max / 2);
  double radius = co.p_max / 2;
  for (int stage = 0; stage < 2; ++stage) {
    double stage_best = -1;
    Eigen::Vector2d stage_arg = center;
    for (int a = 0; a <= 1000; ++a)
      for (int b = 0; b <= 1000; ++b) {
        Eigen::VectorXd p(2);
        p << center(0) - radius + 2 * radius * a / 1000.0,
            center(1) - radius + 2 * radius * b / 1000.0;
        if (p.minCoeff() < 0 || p.maxCoeff() > co.p_max) continue;
        double v = std::min(sinr_at(co, p, 0), sinr_at(co, p, 1));
        if (v > stage_best) {
          stage_best = v;
          stage_arg = p;
        }
      }
    best = stage_best;
    center = stage_arg;
    radius *= 0.01;
  }
  CHECK(r.objective == doctest::Approx(best).epsilon(0.01));
}

TEST_CASE("zero couplings get perturbed with a warning") {
  SinrCoefficients co = toy_ul(2, 1.0, 4);
  co.c.setZero();
  auto r = ul_maxmin_fixedpoint(co);
  CHECK(!r.warnings.empty());
  CHECK(r.converged);
}

TEST_CASE("uplink sum-SE BCD: trivial cases, identity, and monotone trace") {
  SinrCoefficients one = toy_ul(1, 0.8, 5);
  auto r1 = ul_sumse_bcd(one);
  CHECK(r1.p(0) == doctest::Approx(0.8).epsilon(1e-9));

  SinrCoefficients free_ul = toy_ul(3, 0.8, 6);
  free_ul.c.setZero();
  auto r2 = ul_sumse_bcd(free_ul);
  for (int k = 0; k < 3; ++k) CHECK(r2.p(k) == doctest::Approx(0.8).epsilon(1e-9));

  SinrCoefficients co = toy_ul(4, 1.0, 7);
  SolverOptions opt;
  opt.trace_csv = "bcd_trace_test.csv";
  auto r3 = ul_sumse_bcd(co, Eigen::VectorXd(), opt);
  CHECK(r3.converged);
  auto objs = trace_objectives(opt.trace_csv);
  REQUIRE(objs.size() >= 2);
  for (size_t i = 1; i < objs.size(); ++i) CHECK(objs[i] <= objs[i - 1] + 1e-12);
  std::remove(opt.trace_csv.c_str());

  // with the optimal u, the weighted-MMSE error satisfies 1/e = 1 + SINR
  Eigen::VectorXd p = r3.p;
  for (int k = 0; k < 4; ++k) {
    double denom = co.b(k) * p(k) + co.c.row(k).dot(p) + co.noise(k);
    double u = std::sqrt(co.b(k) * p(k)) / denom;
    double e = u * u * denom - 2 * u * std::sqrt(co.b(k) * p(k)) + 1;
    CHECK(1.0 / e == doctest::Approx(1.0 + sinr_at(co, p, k)).epsilon(1e-10));
  }
}

TEST_CASE("centralized downlink fixed point respects per-AP budgets") {
  // K=1, one AP carrying the whole precoder
  SinrCoefficients one;
  one.form = SinrForm::dl_centralized;
  one.b = Eigen::VectorXd::Constant(1, 1.5);
  one.c = Eigen::MatrixXd::Constant(1, 1, 0.2);
  one.noise = Eigen::VectorXd::Constant(1, 0.3);
  one.p_max = 0.7;
  one.ap_weight = Eigen::MatrixXd::Constant(1, 1, 1.0);
  auto r1 = dl_cent_maxmin_fixedpoint(one);
  CHECK(r1.p(0) == doctest::Approx(0.7).epsilon(1e-9));

  // K=2 asymmetric, two APs: binding AP + grid oracle
  SinrCoefficients co = toy_ul(2, 1.0, 8);
  co.form = SinrForm::dl_centralized;
  co.noise.setConstant(0.25);
  co.ap_weight.resize(2, 2);
  co.ap_weight << 0.7, 0.3, 0.2, 0.8;
  auto r = dl_cent_maxmin_fixedpoint(co);
  Eigen::VectorXd load = co.ap_weight.transpose() * r.p;
  CHECK(load.maxCoeff() == doctest::Approx(co.p_max).epsilon(1e-9));
  CHECK(std::abs(sinr_at(co, r.p, 0) - sinr_at(co, r.p, 1)) <= 1e-5);

  double best = 0;
  Eigen::Vector2d center(1.0, 1.0);
  double radius = 1.0;
  for (int stage = 0; stage < 2; ++stage) {
    double stage_best = -1;
    Eigen::Vector2d stage_arg = center;
    for (int a = 0; a <= 1000; ++a)
      for (int b = 0; b <= 1000; ++b) {
        Eigen::VectorXd p(2);
        p << center(0) - radius + 2 * radius * a / 1000.0,
            center(1) - radius + 2 * radius * b / 1000.0;
        if (p.minCoeff() < 0) continue;
        Eigen::VectorXd ld = co.ap_weight.transpose() * p;
        if (ld.maxCoeff() > co.p_max) continue;
        double v = std::min(sinr_at(co, p, 0), sinr_at(co, p, 1));
        if (v > stage_best) {
          stage_best = v;
          stage_arg = p;
        }
      }
    best = stage_best;
    center = stage_arg;
    radius *= 0.01;
  }
  CHECK(r.objective == doctest::Approx(best).epsilon(0.01));
}

TEST_CASE("centralized downlink BCD matches the uncapped closed-form update") {
  SinrCoefficients co = toy_ul(3, 100.0, 9);
  auto ul = ul_sumse_bcd(co);

  // one dedicated AP per UE with unit weight: the per-AP constraints become
  // per-UE caps and the subproblem solution is the scalar closed-form update
  SinrCoefficients dl = co;
  dl.form = SinrForm::dl_centralized;
  dl.ap_weight = Eigen::MatrixXd::Identity(3, 3);
  auto r = dl_cent_sumse_bcd(dl);
  for (int k = 0; k < 3; ++k)
    CHECK(r.p(k) == doctest::Approx(ul.p(k)).epsilon(1e-4));

  SolverOptions opt;
  opt.trace_csv = "bcd_dl_trace.csv";
  SinrCoefficients tight = co;
  tight.form = SinrForm::dl_centralized;
  tight.p_max = 0.5;
  tight.ap_weight.resize(3, 2);
  tight.ap_weight << 0.6, 0.4, 0.3, 0.7, 0.5, 0.5;
  auto rt = dl_cent_sumse_bcd(tight, opt);
  Eigen::VectorXd load = tight.ap_weight.transpose() * rt.p;
  CHECK(load.maxCoeff() <= tight.p_max * (1 + 1e-7));
  auto objs = trace_objectives(opt.trace_csv);
  for (size_t i = 1; i < objs.size(); ++i) CHECK(objs[i] <= objs[i - 1] + 1e-10);
  std::remove(opt.trace_csv.c_str());
}

namespace {

SinrCoefficients toy_dist(int K, int L, double rho_max, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.2, 1.0);
  SinrCoefficients co;
  co.form = SinrForm::dl_distributed;
  co.noise = Eigen::VectorXd::Constant(K, 0.3);
  co.p_max = rho_max;
  co.served.assign(L, {});
  for (int l = 0; l < L; ++l)
    for (int k = 0; k < K; ++k) co.served[l].push_back(k);
  co.b_dist.assign(K, Eigen::VectorXd::Zero(L));
  co.C_dist.assign(K, std::vector<Eigen::MatrixXd>(K));
  for (int k = 0; k < K; ++k)
    for (int l = 0; l < L; ++l) co.b_dist[k](l) = u(rng);
  for (int k = 0; k < K; ++k)
    for (int i = 0; i < K; ++i) {
      Eigen::MatrixXd Mx(L, L);
      for (int a = 0; a < L; ++a)
        for (int b = 0; b < L; ++b) Mx(a, b) = u(rng) - 0.6;
      co.C_dist[k][i] = Mx * Mx.transpose();
      if (i == k)  // own term dominates its signal square
        co.C_dist[k][k] += 1.001 * co.b_dist[k] * co.b_dist[k].transpose();
    }
  return co;
}

}  // namespace

TEST_CASE("distributed max-min bisection: scalar case and symmetric case") {
  SinrCoefficients one = toy_dist(1, 1, 0.6, 10);
  one.C_dist[0][0] = one.b_dist[0] * one.b_dist[0].transpose();
  auto r = dl_dist_maxmin_bisection(one);
  double b = one.b_dist[0](0);
  CHECK(r.objective ==
        doctest::Approx(0.6 * b * b / one.noise(0)).epsilon(1e-3));
  CHECK(r.rho_tilde[0](0) == doctest::Approx(std::sqrt(0.6)).epsilon(1e-3));

  SinrCoefficients sym = toy_dist(2, 2, 0.6, 11);
  sym.b_dist[0] << 0.8, 0.4;
  sym.b_dist[1] << 0.4, 0.8;
  Eigen::MatrixXd own(2, 2), cross(2, 2);
  own << 1.0, 0.3, 0.3, 0.5;
  cross << 0.4, 0.1, 0.1, 0.2;
  sym.C_dist[0][0] = own;
  Eigen::MatrixXd flip = own.reverse().eval();
  sym.C_dist[1][1] = flip;
  sym.C_dist[0][1] = cross.reverse().eval();
  sym.C_dist[1][0] = cross;
  auto rs = dl_dist_maxmin_bisection(sym);
  CHECK(sinr_at_dist(sym, rs.rho_tilde, 0) ==
        doctest::Approx(sinr_at_dist(sym, rs.rho_tilde, 1)).epsilon(0.01));
}

TEST_CASE("distributed max-min bisection matches a refined 4D grid oracle") {
  SinrCoefficients co = toy_dist(2, 2, 0.8, 12);
  auto r = dl_dist_maxmin_bisection(co);
  for (int l = 0; l < 2; ++l) {
    double sq = r.rho_tilde[0](l) * r.rho_tilde[0](l) +
                r.rho_tilde[1](l) * r.rho_tilde[1](l);
    CHECK(sq <= co.p_max * (1 + 1e-7));
  }

  const double rmax = std::sqrt(co.p_max);
  double best = -1;
  Eigen::Vector4d center(rmax / 2, rmax / 2, rmax / 2, rmax / 2);
  double radius = rmax / 2;
  const int n = 24;
  for (int stage = 0; stage < 3; ++stage) {
    double stage_best = -1;
    Eigen::Vector4d stage_arg = center;
    Eigen::Vector4d x;
    std::vector<Eigen::VectorXd> rt(2, Eigen::VectorXd::Zero(2));
    for (int a = 0; a <= n; ++a)
      for (int b = 0; b <= n; ++b)
        for (int c = 0; c <= n; ++c)
          for (int d = 0; d <= n; ++d) {
            x << center(0) - radius + 2.0 * radius * a / n,
                center(1) - radius + 2.0 * radius * b / n,
                center(2) - radius + 2.0 * radius * c / n,
                center(3) - radius + 2.0 * radius * d / n;
            if (x.minCoeff() < 0) continue;
            if (x(0) * x(0) + x(1) * x(1) > co.p_max) continue;
            if (x(2) * x(2) + x(3) * x(3) > co.p_max) continue;
            rt[0] << x(0), x(2);
            rt[1] << x(1), x(3);
            double v = std::min(sinr_at_dist(co, rt, 0),
                                sinr_at_dist(co, rt, 1));
            if (v > stage_best) {
              stage_best = v;
              stage_arg = x;
            }
          }
    best = stage_best;
    center = stage_arg;
    radius *= 2.5 / n;
  }
  CHECK(r.objective >= best * (1 - 0.02));
  CHECK(r.objective <= best * (1 + 0.02));
}

TEST_CASE("distributed sum-SE BCD is monotone and uses full power for K=1") {
  SinrCoefficients one = toy_dist(1, 2, 0.5, 13);
  one.C_dist[0][0] = one.b_dist[0] * one.b_dist[0].transpose();
  auto r1 = dl_dist_sumse_bcd(one);
  for (int l = 0; l < 2; ++l)
    CHECK(r1.rho_tilde[0](l) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-4));

  SolverOptions opt;
  opt.trace_csv = "bcd_dist_trace.csv";
  SinrCoefficients co = toy_dist(3, 2, 0.8, 14);
  auto r = dl_dist_sumse_bcd(co, opt);
  CHECK(r.converged);
  auto objs = trace_objectives(opt.trace_csv);
  for (size_t i = 1; i < objs.size(); ++i) CHECK(objs[i] <= objs[i - 1] + 1e-9);
  std::remove(opt.trace_csv.c_str());
  for (int l = 0; l < 2; ++l) {
    double sq = 0;
    for (int k = 0; k < 3; ++k) sq += r.rho_tilde[k](l) * r.rho_tilde[k](l);
    CHECK(sq <= co.p_max * (1 + 1e-7));
  }
}

TEST_CASE("fractional heuristics hit their closed-form anchors") {
  std::mt19937_64 rng(63);
  Net net = contaminated_net(rng);
  Eigen::MatrixXd beta(net.st.K, net.st.L);
  for (int k = 0; k < net.st.K; ++k)
    for (int l = 0; l < net.st.L; ++l) beta(k, l) = net.st.beta(k, l);

  // exponent zero: everyone at full power
  Eigen::VectorXd p = fpc_uplink(beta, net.cl, 0.0, 0.1);
  for (int k = 0; k < net.st.K; ++k) CHECK(p(k) == doctest::Approx(0.1));

  // compensation exponent equalizes the received total gain
  Eigen::VectorXd pc = fpc_uplink(beta, net.cl, -1.0, 0.1);
  CHECK(pc.maxCoeff() <= 0.1 * (1 + 1e-12));
  CHECK(pc.maxCoeff() == doctest::Approx(0.1));

  // per-AP proportional split
  ClusterState tiny;
  tiny.serving = {{0}, {0}};
  tiny.served = {{0, 1}};
  tiny.coservice = {{0, 1}, {0, 1}};
  Eigen::MatrixXd b2(2, 1);
  b2 << 0.3, 0.1;
  Eigen::MatrixXd rho = fpa_dl_distributed(b2, tiny, 1.0, 1.0);
  CHECK(rho(0, 0) == doctest::Approx(0.75));
  CHECK(rho(1, 0) == doctest::Approx(0.25));
  Eigen::MatrixXd eq = fpa_dl_distributed(b2, tiny, 0.0, 1.0);
  CHECK(eq(0, 0) == doctest::Approx(0.5));

  // centralized allocation with unit norm fractions and full service reduces
  // to budget / (UEs per AP)
  std::mt19937_64 rng2(64);
  const int K = 3, L = 2, tau_p = 3;
  auto R = testutil::random_R(K, L, 1, rng2);
  Eigen::MatrixXd bfull = testutil::beta_of(R, K, L, 1);
  ClusterState full;
  full.pilot = {0, 1, 2};
  full.serving = {{0, 1}, {0, 1}, {0, 1}};
  full.served = {{0, 1, 2}, {0, 1, 2}};
  full.coservice = compute_coservice_sets(full);
  Eigen::VectorXd omega = Eigen::VectorXd::Ones(K);
  Eigen::VectorXd rc = fpa_dl_centralized(bfull, full, omega, 0.0, 0.0, 0.9);
  for (int k = 0; k < K; ++k)
    CHECK(rc(k) == doctest::Approx(0.9 / tau_p).epsilon(1e-12));

  // the real instance stays within every AP budget
  auto m = centralized_dl_moments_mr(net.st, net.cl);
  Eigen::VectorXd om(net.st.K);
  for (int k = 0; k < net.st.K; ++k)
    om(k) = (m.per_ap_norm[k] / std::max(m.norm(k), 1e-300)).maxCoeff();
  Eigen::VectorXd ra = fpa_dl_centralized(beta, net.cl, om, -0.5, 0.5, 0.2);
  std::vector<bool> flags;
  per_ap_power_usage(m, net.cl, ra, 0.2, &flags);
  for (bool f : flags) CHECK(!f);
}
