#pragma once

#include <Eigen/Dense>
#include <random>
#include <vector>

#include "cellfree/cluster.hpp"

namespace cellfree {

// Which (UE, AP) pairs get estimate/error covariances materialized. The pilot
// observation covariances Psi are always built for every (pilot, AP) pair.
enum class StatsScope { all_pairs, coservice, served_only };

// Second-order statistics of the pilot-based MMSE channel estimates.
// Per-pair matrices are stored flat at index k*L + l (N x N each);
// Psi at index t*L + l. Pairs outside the chosen scope stay empty.
struct EstimationStatistics {
  int L = 0, N = 0, K = 0, tau_p = 0;
  double noise_ul = 0;
  Eigen::VectorXd pilot_power;  // eta_k
  std::vector<int> pilot;       // t_k

  std::vector<Eigen::MatrixXcd> R;      // channel correlation R_kl
  std::vector<Eigen::MatrixXcd> Rsqrt;  // factor A with A A^H = R_kl
  std::vector<Eigen::MatrixXcd> Psi;    // sum_i eta_i tau_p R_il + noise I
  std::vector<Eigen::MatrixXcd> B;      // estimator sqrt(eta_k tau_p) R Psi^-1
  std::vector<Eigen::MatrixXcd> Phi;    // estimate covariance eta tau_p R Psi^-1 R
  std::vector<Eigen::MatrixXcd> C;      // error covariance R - Phi

  const Eigen::MatrixXcd& Rm(int k, int l) const { return R[k * L + l]; }
  const Eigen::MatrixXcd& Cm(int k, int l) const { return C[k * L + l]; }
  const Eigen::MatrixXcd& Phim(int k, int l) const { return Phi[k * L + l]; }
  const Eigen::MatrixXcd& Psim(int t, int l) const { return Psi[t * L + l]; }

  double beta(int k, int l) const { return Rm(k, l).real().trace() / N; }
};

// R_all is K*L matrices indexed k*L + l. Inverses of Psi are taken with
// Cholesky (the noise term keeps them positive definite).
EstimationStatistics build_estimation_statistics(
    const std::vector<Eigen::MatrixXcd>& R_all, int L, int N,
    const std::vector<int>& pilot, int tau_p,
    const Eigen::VectorXd& pilot_power, double noise_ul,
    StatsScope scope = StatsScope::all_pairs,
    const ClusterState* cluster = nullptr);

// Cross-correlation E{hhat_kl hhat_il^H} of the estimates of two UEs on the
// same pilot: sqrt(eta_k eta_i) tau_p R_kl Psi^-1 R_il (zero otherwise).
Eigen::MatrixXcd estimate_cross_correlation(const EstimationStatistics& st,
                                            int k, int i, int l);

// direct: draw the channels and the despread pilot observations directly.
// pilot_path: simulate the full tau_p-sample pilot transmission with DFT
// pilot sequences and despread; statistically identical, used for validation.
enum class DrawMode { direct, pilot_path };

struct ChannelDraw {
  Eigen::MatrixXcd h;     // (L*N) x K collective true channels
  Eigen::MatrixXcd hhat;  // (L*N) x K collective MMSE estimates
};

// Pilot-sharing UEs see the same observation y_tl per (pilot, AP), making
// their estimates correlated exactly as estimate_cross_correlation predicts.
ChannelDraw sample_channel_draw(const EstimationStatistics& st,
                                std::mt19937_64& rng,
                                DrawMode mode = DrawMode::direct);

// Contamination-free NMSE as a function of the correlation eigenvalues:
// 1 - (eta*tau_p / sum(lambda)) * sum_n lambda_n^2/(eta*tau_p*lambda_n + noise).
// Strictly concave in lambda; merging the two smallest nonzero eigenvalues
// lowers it.
double nmse_from_eigenvalues(const Eigen::VectorXd& lambda, double eta_tau_p,
                             double noise);

// tr(C_kl)/tr(R_kl); rejects tr(R_kl) = 0.
double nmse_per_link(const EstimationStatistics& st, int k, int l);

// Collective NMSE over the serving cluster:
// sum_{l in M_k} tr(C_kl) / sum_{l in M_k} tr(R_kl).
double nmse_collective(const EstimationStatistics& st,
                       const std::vector<int>& serving, int k);

}  // namespace cellfree
