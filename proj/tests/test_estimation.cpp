#include <doctest.h>

#include <random>

#include "cellfree/cluster.hpp"
#include "cellfree/estimation.hpp"
#include "test_util.hpp"

using namespace cellfree;

namespace {

EstimationStatistics tiny_contaminated(std::mt19937_64& rng, int N = 2) {
  // 3 APs, 4 UEs, 2 pilots: pilot sharing between (0,2) and (1,3)
  const int K = 4, L = 3;
  auto R = testutil::random_R(K, L, N, rng);
  std::vector<int> pilot = {0, 1, 0, 1};
  Eigen::VectorXd eta = Eigen::VectorXd::Constant(K, 0.6);
  return build_estimation_statistics(R, L, N, pilot, 2, eta, 0.05);
}

}  // namespace

TEST_CASE("single-antenna NMSE at effective SNR 10 is 1/11") {
  std::vector<Eigen::MatrixXcd> R = {
      Eigen::MatrixXcd::Constant(1, 1, 10.0)};  // beta = 10
  Eigen::VectorXd eta = Eigen::VectorXd::Ones(1);
  auto st = build_estimation_statistics(R, 1, 1, {0}, 1, eta, 1.0);
  CHECK(nmse_per_link(st, 0, 0) == doctest::Approx(1.0 / 11.0));
  CHECK(nmse_collective(st, {0}, 0) == doctest::Approx(1.0 / 11.0));
}

TEST_CASE("estimate covariance, error orthogonality and cross-correlation by sampling") {
  std::mt19937_64 rng(7);
  EstimationStatistics st = tiny_contaminated(rng);
  const int N = st.N, L = st.L;
  const int draws = 100000;

  Eigen::MatrixXcd cov_hat = Eigen::MatrixXcd::Zero(N, N);
  Eigen::MatrixXcd cov_err = Eigen::MatrixXcd::Zero(N, N);
  Eigen::MatrixXcd cross_est_err = Eigen::MatrixXcd::Zero(N, N);
  Eigen::MatrixXcd cross_ue = Eigen::MatrixXcd::Zero(N, N);
  const int k = 0, i = 2, l = 1;  // UEs 0 and 2 share pilot 0
  for (int d = 0; d < draws; ++d) {
    ChannelDraw dr = sample_channel_draw(st, rng);
    Eigen::VectorXcd hh = dr.hhat.col(k).segment(l * N, N);
    Eigen::VectorXcd he = dr.h.col(k).segment(l * N, N) - hh;
    Eigen::VectorXcd hi = dr.hhat.col(i).segment(l * N, N);
    cov_hat += hh * hh.adjoint();
    cov_err += he * he.adjoint();
    cross_est_err += hh * he.adjoint();
    cross_ue += hh * hi.adjoint();
  }
  cov_hat /= draws;
  cov_err /= draws;
  cross_est_err /= draws;
  cross_ue /= draws;

  double scale = st.Rm(k, l).real().trace() / N;
  CHECK((cov_hat - st.Phim(k, l)).cwiseAbs().maxCoeff() < 0.02 * scale);
  CHECK((cov_err - st.Cm(k, l)).cwiseAbs().maxCoeff() < 0.02 * scale);
  CHECK(cross_est_err.cwiseAbs().maxCoeff() < 0.02 * scale);  // hhat ⟂ error
  Eigen::MatrixXcd pred = estimate_cross_correlation(st, k, i, l);
  CHECK((cross_ue - pred).cwiseAbs().maxCoeff() < 0.02 * scale);

  // UEs on different pilots have uncorrelated estimates
  CHECK(estimate_cross_correlation(st, 0, 1, l).cwiseAbs().maxCoeff() == 0.0);
  (void)L;
}

TEST_CASE("pilot-path sampling is statistically identical to direct sampling") {
  std::mt19937_64 rng(11);
  EstimationStatistics st = tiny_contaminated(rng);
  const int N = st.N;
  const int draws = 40000;
  const int k = 2, l = 0;
  Eigen::MatrixXcd cov_direct = Eigen::MatrixXcd::Zero(N, N);
  Eigen::MatrixXcd cov_path = Eigen::MatrixXcd::Zero(N, N);
  for (int d = 0; d < draws; ++d) {
    ChannelDraw a = sample_channel_draw(st, rng, DrawMode::direct);
    ChannelDraw b = sample_channel_draw(st, rng, DrawMode::pilot_path);
    Eigen::VectorXcd ha = a.hhat.col(k).segment(l * N, N);
    Eigen::VectorXcd hb = b.hhat.col(k).segment(l * N, N);
    cov_direct += ha * ha.adjoint();
    cov_path += hb * hb.adjoint();
  }
  cov_direct /= draws;
  cov_path /= draws;
  double scale = st.Rm(k, l).real().trace() / N;
  CHECK((cov_direct - st.Phim(k, l)).cwiseAbs().maxCoeff() < 0.03 * scale);
  CHECK((cov_path - st.Phim(k, l)).cwiseAbs().maxCoeff() < 0.03 * scale);
}

TEST_CASE("nmse is concave in the eigenvalues") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (int rep = 0; rep < 100; ++rep) {
    Eigen::VectorXd a(6), b(6);
    for (int n = 0; n < 6; ++n) {
      a(n) = u(rng);
      b(n) = u(rng);
    }
    a.array() += 1e-3;
    b.array() += 1e-3;
    b *= a.sum() / b.sum();  // concavity holds on the fixed-trace slice
    double mid = nmse_from_eigenvalues(0.5 * (a + b), 5.0, 1.0);
    double avg = 0.5 * (nmse_from_eigenvalues(a, 5.0, 1.0) +
                        nmse_from_eigenvalues(b, 5.0, 1.0));
    CHECK(mid >= avg - 1e-12);
  }
}

TEST_CASE("merging the two smallest eigenvalues lowers the nmse") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.05, 2.0);
  for (int rep = 0; rep < 100; ++rep) {
    Eigen::VectorXd lam(6);
    for (int n = 0; n < 6; ++n) lam(n) = u(rng);
    std::sort(lam.data(), lam.data() + 6, std::greater<double>());
    Eigen::VectorXd merged = lam;
    merged(4) += merged(5);
    merged(5) = 0.0;
    CHECK(nmse_from_eigenvalues(lam, 5.0, 1.0) >
          nmse_from_eigenvalues(merged, 5.0, 1.0));
  }
}

TEST_CASE("uncorrelated fading maximizes the nmse at matched trace") {
  std::mt19937_64 rng(9);
  const int N = 4;
  double beta = 0.8, eta_tau = 3.0, noise = 1.0;
  double worst =
      nmse_from_eigenvalues(Eigen::VectorXd::Constant(N, beta), eta_tau, noise);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 100; ++rep) {
    Eigen::VectorXd lam(N);
    for (int n = 0; n < N; ++n) lam(n) = u(rng) + 1e-6;
    lam *= N * beta / lam.sum();  // match the trace
    CHECK(nmse_from_eigenvalues(lam, eta_tau, noise) <= worst + 1e-12);
  }
}

TEST_CASE("pilot contamination increases the nmse") {
  const int N = 2, L = 1;
  std::mt19937_64 rng(13);
  auto R2 = testutil::random_R(2, L, N, rng);
  Eigen::VectorXd eta = Eigen::VectorXd::Constant(2, 0.5);

  auto clean = build_estimation_statistics(R2, L, N, {0, 1}, 2, eta, 0.1);
  auto contaminated = build_estimation_statistics(R2, L, N, {0, 0}, 2, eta, 0.1);
  CHECK(nmse_per_link(contaminated, 0, 0) > nmse_per_link(clean, 0, 0));

  // stronger contaminator -> worse
  Eigen::VectorXd eta2 = eta;
  eta2(1) = 2.0;
  auto worse = build_estimation_statistics(R2, L, N, {0, 0}, 2, eta2, 0.1);
  CHECK(nmse_per_link(worse, 0, 0) > nmse_per_link(contaminated, 0, 0));
}

TEST_CASE("degenerate inputs are rejected") {
  std::vector<Eigen::MatrixXcd> R = {Eigen::MatrixXcd::Zero(1, 1)};
  Eigen::VectorXd eta = Eigen::VectorXd::Ones(1);
  auto st = build_estimation_statistics(R, 1, 1, {0}, 1, eta, 1.0);
  CHECK_THROWS(nmse_per_link(st, 0, 0));
  CHECK_THROWS(nmse_collective(st, {0}, 0));
  CHECK_THROWS(build_estimation_statistics(R, 1, 1, {0}, 1, eta, 0.0));
}
