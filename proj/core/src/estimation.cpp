#include "cellfree/estimation.hpp"

#include <cmath>
#include <complex>
#include <set>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "cellfree/rng.hpp"

namespace cellfree {

namespace {

Eigen::MatrixXcd psd_sqrt(const Eigen::MatrixXcd& R) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(R);
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * ev.cwiseSqrt().asDiagonal();
}

}  // namespace

EstimationStatistics build_estimation_statistics(
    const std::vector<Eigen::MatrixXcd>& R_all, int L, int N,
    const std::vector<int>& pilot, int tau_p,
    const Eigen::VectorXd& pilot_power, double noise_ul, StatsScope scope,
    const ClusterState* cluster) {
  const int K = static_cast<int>(pilot.size());
  if (static_cast<int>(R_all.size()) != K * L)
    throw std::invalid_argument("R_all must hold K*L matrices");
  if (pilot_power.size() != K)
    throw std::invalid_argument("pilot_power must have K entries");
  if (noise_ul <= 0) throw std::invalid_argument("noise power must be positive");
  if (scope != StatsScope::all_pairs && cluster == nullptr)
    throw std::invalid_argument("scoped statistics need a cluster");

  EstimationStatistics st;
  st.L = L;
  st.N = N;
  st.K = K;
  st.tau_p = tau_p;
  st.noise_ul = noise_ul;
  st.pilot_power = pilot_power;
  st.pilot = pilot;
  st.R = R_all;
  st.Rsqrt.resize(K * L);
  st.Psi.assign(tau_p * L, {});
  st.B.assign(K * L, {});
  st.Phi.assign(K * L, {});
  st.C.assign(K * L, {});

  for (int k = 0; k < K; ++k)
    for (int l = 0; l < L; ++l) st.Rsqrt[k * L + l] = psd_sqrt(st.Rm(k, l));

  std::set<int> used(pilot.begin(), pilot.end());
  for (int t : used)
    for (int l = 0; l < L; ++l) {
      Eigen::MatrixXcd psi =
          noise_ul * Eigen::MatrixXcd::Identity(N, N);
      for (int i = 0; i < K; ++i)
        if (pilot[i] == t) psi += pilot_power(i) * tau_p * st.Rm(i, l);
      st.Psi[t * L + l] = psi;
    }

  auto in_scope = [&](int k, int l) {
    switch (scope) {
      case StatsScope::all_pairs:
        return true;
      case StatsScope::coservice:
        // keep (k, l) when AP l serves some UE whose co-service set holds k
        for (int i : cluster->served[l])
          for (int j : cluster->coservice[i])
            if (j == k) return true;
        return false;
      case StatsScope::served_only:
        for (int i : cluster->served[l])
          if (i == k) return true;
        return false;
    }
    return true;
  };

  for (int k = 0; k < K; ++k) {
    double scale = pilot_power(k) * tau_p;
    for (int l = 0; l < L; ++l) {
      if (!in_scope(k, l)) continue;
      const Eigen::MatrixXcd& psi = st.Psim(pilot[k], l);
      Eigen::LLT<Eigen::MatrixXcd> llt(psi);
      if (llt.info() != Eigen::Success)
        throw std::runtime_error("pilot observation covariance not HPD");
      Eigen::MatrixXcd psi_inv_R = llt.solve(st.Rm(k, l));
      st.B[k * L + l] = std::sqrt(scale) * psi_inv_R.adjoint();
      st.Phi[k * L + l] = scale * st.Rm(k, l) * psi_inv_R;
      // symmetrize to wash out the solve's rounding
      st.Phi[k * L + l] = 0.5 * (st.Phi[k * L + l] + st.Phi[k * L + l].adjoint().eval());
      st.C[k * L + l] = st.Rm(k, l) - st.Phi[k * L + l];
    }
  }
  return st;
}

Eigen::MatrixXcd estimate_cross_correlation(const EstimationStatistics& st,
                                            int k, int i, int l) {
  if (st.pilot[k] != st.pilot[i])
    return Eigen::MatrixXcd::Zero(st.N, st.N);
  double scale =
      std::sqrt(st.pilot_power(k) * st.pilot_power(i)) * st.tau_p;
  Eigen::LLT<Eigen::MatrixXcd> llt(st.Psim(st.pilot[k], l));
  return scale * st.Rm(k, l) * llt.solve(st.Rm(i, l));
}

ChannelDraw sample_channel_draw(const EstimationStatistics& st,
                                std::mt19937_64& rng, DrawMode mode) {
  const int L = st.L, N = st.N, K = st.K, tau_p = st.tau_p;
  ChannelDraw d;
  d.h.resize(L * N, K);
  d.hhat.setZero(L * N, K);

  for (int k = 0; k < K; ++k)
    for (int l = 0; l < L; ++l)
      d.h.col(k).segment(l * N, N) = st.Rsqrt[k * L + l] * cnormal(N, rng);

  std::set<int> used(st.pilot.begin(), st.pilot.end());
  for (int l = 0; l < L; ++l) {
    std::vector<Eigen::VectorXcd> y(tau_p);
    if (mode == DrawMode::direct) {
      for (int t : used) {
        Eigen::VectorXcd yt = std::sqrt(st.noise_ul) * cnormal(N, rng);
        for (int i = 0; i < K; ++i)
          if (st.pilot[i] == t)
            yt += std::sqrt(st.pilot_power(i) * tau_p) * d.h.col(i).segment(l * N, N);
        y[t] = yt;
      }
    } else {
      // full pilot block with DFT sequences phi_t[s] = exp(-j 2 pi t s / tau_p)
      Eigen::MatrixXcd Y(N, tau_p);
      for (int s = 0; s < tau_p; ++s)
        Y.col(s) = std::sqrt(st.noise_ul) * cnormal(N, rng);
      for (int i = 0; i < K; ++i) {
        int t = st.pilot[i];
        for (int s = 0; s < tau_p; ++s) {
          double ang = -2.0 * M_PI * t * s / tau_p;
          std::complex<double> phi(std::cos(ang), std::sin(ang));
          Y.col(s) += std::sqrt(st.pilot_power(i)) * phi * d.h.col(i).segment(l * N, N);
        }
      }
      for (int t : used) {
        Eigen::VectorXcd yt = Eigen::VectorXcd::Zero(N);
        for (int s = 0; s < tau_p; ++s) {
          double ang = -2.0 * M_PI * t * s / tau_p;
          std::complex<double> phi_conj(std::cos(ang), -std::sin(ang));
          yt += phi_conj * Y.col(s);
        }
        y[t] = yt / std::sqrt(double(tau_p));
      }
    }
    for (int k = 0; k < K; ++k) {
      const Eigen::MatrixXcd& B = st.B[k * L + l];
      if (B.size() == 0) continue;
      d.hhat.col(k).segment(l * N, N) = B * y[st.pilot[k]];
    }
  }
  return d;
}

double nmse_from_eigenvalues(const Eigen::VectorXd& lambda, double eta_tau_p,
                             double noise) {
  double total = lambda.sum();
  if (total <= 0) throw std::invalid_argument("eigenvalues sum to zero");
  double acc = 0;
  for (int n = 0; n < lambda.size(); ++n)
    acc += lambda(n) * lambda(n) / (eta_tau_p * lambda(n) + noise);
  return 1.0 - eta_tau_p * acc / total;
}

double nmse_per_link(const EstimationStatistics& st, int k, int l) {
  double tr_R = st.Rm(k, l).real().trace();
  if (tr_R <= 0) throw std::invalid_argument("tr(R_kl) must be positive");
  return st.Cm(k, l).real().trace() / tr_R;
}

double nmse_collective(const EstimationStatistics& st,
                       const std::vector<int>& serving, int k) {
  double num = 0, den = 0;
  for (int l : serving) {
    num += st.Cm(k, l).real().trace();
    den += st.Rm(k, l).real().trace();
  }
  if (den <= 0) throw std::invalid_argument("serving-cluster trace is zero");
  return num / den;
}

}  // namespace cellfree
