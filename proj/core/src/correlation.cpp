#include "cellfree/correlation.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include <Eigen/Eigenvalues>

namespace cellfree {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

struct Quadrature {
  std::vector<double> nodes;
  std::vector<double> weights;  // normalized to sum to 1 (truncated Gaussian)
};

// Gauss-Legendre rule on [-1,1] via the Golub-Welsch eigenvalue method.
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) {
    double b = i / std::sqrt(4.0 * i * i - 1.0);
    J(i, i - 1) = J(i - 1, i) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  x.resize(n);
  w.resize(n);
  for (int i = 0; i < n; ++i) {
    x[i] = es.eigenvalues()(i);
    double v = es.eigenvectors()(0, i);
    w[i] = 2.0 * v * v;
  }
}

// Gaussian-weighted quadrature over mean +/- 4 std; weights renormalized so
// the (truncated) density integrates to exactly 1, keeping trace(R) = N*beta.
Quadrature gaussian_rule(double mean, double std, int n) {
  Quadrature q;
  if (std <= 0.0) {
    q.nodes = {mean};
    q.weights = {1.0};
    return q;
  }
  std::vector<double> x, w;
  gauss_legendre(n, x, w);
  double a = mean - 4.0 * std, b = mean + 4.0 * std;
  double half = 0.5 * (b - a), mid = 0.5 * (a + b);
  double total = 0.0;
  q.nodes.resize(n);
  q.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double t = mid + half * x[i];
    double pdf = std::exp(-0.5 * std::pow((t - mean) / std, 2.0));
    q.nodes[i] = t;
    q.weights[i] = w[i] * half * pdf;
    total += q.weights[i];
  }
  for (double& wi : q.weights) wi /= total;
  return q;
}

// First column of the (normalized, beta = 1) Toeplitz correlation matrix.
Eigen::VectorXcd toeplitz_column(int N, double az, double el, double asd_az,
                                 double asd_el, int n) {
  Quadrature qa = gaussian_rule(az, asd_az, n);
  Quadrature qe = gaussian_rule(el, asd_el, n);
  Eigen::VectorXcd c = Eigen::VectorXcd::Zero(N);
  for (size_t i = 0; i < qa.nodes.size(); ++i) {
    double sin_az = std::sin(qa.nodes[i]);
    for (size_t j = 0; j < qe.nodes.size(); ++j) {
      double w = qa.weights[i] * qe.weights[j];
      double arg = kPi * sin_az * std::cos(qe.nodes[j]);
      for (int d = 0; d < N; ++d)
        c(d) += w * std::complex<double>(std::cos(d * arg), std::sin(d * arg));
    }
  }
  return c;
}

}  // namespace

Eigen::VectorXcd array_response(int N, double azimuth, double elevation) {
  Eigen::VectorXcd a(N);
  double arg = kPi * std::sin(azimuth) * std::cos(elevation);
  for (int m = 0; m < N; ++m)
    a(m) = std::complex<double>(std::cos(m * arg), std::sin(m * arg));
  return a;
}

Eigen::MatrixXcd uncorrelated(int N, double beta) {
  return beta * Eigen::MatrixXcd::Identity(N, N);
}

Eigen::MatrixXcd local_scattering(int N, double azimuth, double elevation,
                                  double asd_azimuth, double asd_elevation,
                                  double beta) {
  if (N <= 0) throw std::invalid_argument("num_antennas must be positive");
  if (beta < 0) throw std::invalid_argument("beta must be nonnegative");

  Eigen::VectorXcd c;
  if (asd_azimuth <= 0.0 && asd_elevation <= 0.0) {
    c = array_response(N, azimuth, elevation);
  } else {
    // refine the quadrature until every entry is stable to 1e-8
    int n = 20;
    c = toeplitz_column(N, azimuth, elevation, asd_azimuth, asd_elevation, n);
    for (;;) {
      n *= 2;
      Eigen::VectorXcd c2 =
          toeplitz_column(N, azimuth, elevation, asd_azimuth, asd_elevation, n);
      double err = (c2 - c).cwiseAbs().maxCoeff();
      c = c2;
      if (err < 1e-8 || n >= 1280) break;
    }
  }
  Eigen::MatrixXcd R(N, N);
  for (int m = 0; m < N; ++m)
    for (int l = 0; l < N; ++l)
      R(m, l) = (m >= l) ? c(m - l) : std::conj(c(l - m));
  return beta * R;
}

Eigen::MatrixXcd ensure_psd(const Eigen::MatrixXcd& R, bool* repaired) {
  Eigen::MatrixXcd H = 0.5 * (R + R.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H);
  double tr = H.real().trace();
  double min_eig = es.eigenvalues().minCoeff();
  if (repaired) *repaired = false;
  if (min_eig >= 0) return H;
  if (min_eig < -1e-9 * tr)
    throw std::invalid_argument("correlation matrix is not PSD");
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
  Eigen::MatrixXcd fixed =
      es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
  double tr_fixed = fixed.real().trace();
  if (tr_fixed > 0) fixed *= tr / tr_fixed;
  if (repaired) *repaired = true;
  return fixed;
}

}  // namespace cellfree
