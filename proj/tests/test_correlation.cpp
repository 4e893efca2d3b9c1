#include <doctest.h>

#include <cmath>

#include <Eigen/Eigenvalues>

#include "cellfree/correlation.hpp"

using namespace cellfree;

namespace {
constexpr double kDeg = M_PI / 180.0;

double eigen_ratio(const Eigen::MatrixXcd& R) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(R);
  return es.eigenvalues().maxCoeff() / std::max(es.eigenvalues().minCoeff(), 1e-300);
}
}  // namespace

TEST_CASE("zero angular spread collapses to a rank-1 matrix") {
  const int N = 6;
  double az = 0.4, el = -0.2, beta = 2.5;
  Eigen::MatrixXcd R = local_scattering(N, az, el, 0.0, 0.0, beta);
  Eigen::VectorXcd a = array_response(N, az, el);
  Eigen::MatrixXcd expected = beta * a * a.adjoint();
  CHECK((R - expected).cwiseAbs().maxCoeff() < 1e-12);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(R);
  CHECK(es.eigenvalues().maxCoeff() == doctest::Approx(N * beta));
}

TEST_CASE("diagonal equals beta and the matrix is Hermitian Toeplitz") {
  const int N = 8;
  Eigen::MatrixXcd R =
      local_scattering(N, 30 * kDeg, -15 * kDeg, 10 * kDeg, 10 * kDeg, 3.0);
  CHECK((R - R.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
  for (int m = 0; m < N; ++m) {
    CHECK(std::abs(R(m, m) - std::complex<double>(3.0, 0.0)) < 1e-9);
    if (m > 0)
      CHECK(std::abs(R(m, m - 1) - R(1, 0)) < 1e-9);  // constant diagonals
  }
  CHECK(R.real().trace() == doctest::Approx(N * 3.0));
}

TEST_CASE("dominant eigenvalue at 5 degree spread carries ~80% of the trace") {
  const int N = 8;
  Eigen::MatrixXcd R =
      local_scattering(N, 30 * kDeg, -15 * kDeg, 5 * kDeg, 5 * kDeg, 1.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(R);
  double lmax = es.eigenvalues().maxCoeff();
  CHECK(lmax > 0.77 * N);
  CHECK(lmax < 0.83 * N);
}

TEST_CASE("eigenvalue spread decreases with the angular spread") {
  const int N = 8;
  double r5 = eigen_ratio(local_scattering(N, 30 * kDeg, -15 * kDeg, 5 * kDeg, 5 * kDeg, 1.0));
  double r10 = eigen_ratio(local_scattering(N, 30 * kDeg, -15 * kDeg, 10 * kDeg, 10 * kDeg, 1.0));
  double r20 = eigen_ratio(local_scattering(N, 30 * kDeg, -15 * kDeg, 20 * kDeg, 20 * kDeg, 1.0));
  double runc = eigen_ratio(uncorrelated(N, 1.0));
  CHECK(r5 > r10);
  CHECK(r10 > r20);
  CHECK(r20 > runc);
  CHECK(r20 > 100.0);  // still far from uncorrelated
  CHECK(runc == doctest::Approx(1.0));
}

TEST_CASE("uncorrelated reference") {
  Eigen::MatrixXcd R = uncorrelated(4, 0.7);
  CHECK((R - 0.7 * Eigen::MatrixXcd::Identity(4, 4)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("psd repair clips tiny negative eigenvalues and keeps the trace") {
  Eigen::MatrixXcd R = local_scattering(6, 0.5, 0.1, 0.02, 0.02, 1.0);
  // inject a tiny negative eigenvalue
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(R);
  Eigen::VectorXd ev = es.eigenvalues();
  ev(0) = -1e-12 * R.real().trace();
  Eigen::MatrixXcd bad =
      es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
  bool repaired = false;
  Eigen::MatrixXcd fixed = ensure_psd(bad, &repaired);
  CHECK(repaired);
  CHECK(fixed.real().trace() == doctest::Approx(bad.real().trace()));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es2(fixed);
  CHECK(es2.eigenvalues().minCoeff() >= -1e-15);

  // a seriously indefinite matrix is rejected
  ev(0) = -0.5 * R.real().trace();
  Eigen::MatrixXcd worse =
      es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
  CHECK_THROWS(ensure_psd(worse));
}

TEST_CASE("quadrature is stable against further refinement") {
  // compare a matrix against one computed with a separate brute-force
  // Riemann sum over +/- 4 sigma
  const int N = 4;
  double az = 0.6, el = -0.3, sa = 8 * kDeg, se = 4 * kDeg;
  Eigen::MatrixXcd R = local_scattering(N, az, el, sa, se, 1.0);

  const int S = 4000;
  Eigen::VectorXcd c = Eigen::VectorXcd::Zero(N);
  double wsum = 0;
  for (int i = 0; i < S; ++i) {
    double phi = az - 4 * sa + 8.0 * sa * (i + 0.5) / S;
    double wp = std::exp(-0.5 * std::pow((phi - az) / sa, 2));
    for (int j = 0; j < S / 10; ++j) {
      double th = el - 4 * se + 8.0 * se * (j + 0.5) / (S / 10);
      double wt = std::exp(-0.5 * std::pow((th - el) / se, 2));
      double arg = M_PI * std::sin(phi) * std::cos(th);
      for (int d = 0; d < N; ++d)
        c(d) += wp * wt * std::complex<double>(std::cos(d * arg), std::sin(d * arg));
      wsum += wp * wt;
    }
  }
  c /= wsum;
  for (int d = 0; d < N; ++d) CHECK(std::abs(R(d, 0) - c(d)) < 1e-5);
}
