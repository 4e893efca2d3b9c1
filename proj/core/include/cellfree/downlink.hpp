#pragma once

#include <Eigen/Dense>
#include <random>
#include <string>
#include <vector>

#include "cellfree/cluster.hpp"
#include "cellfree/estimation.hpp"
#include "cellfree/uplink.hpp"

namespace cellfree {

// Scales a raw precoding direction to carry average power rho:
// w = sqrt(rho) * wbar / sqrt(E{||wbar||^2}). Rejects a nonpositive norm.
Eigen::VectorXcd precoder_from_combiner(const Eigen::VectorXcd& wbar,
                                        double mean_sq_norm, double rho);

// Moments of the normalized centralized precoders wbar'_i (unit average
// power): everything the hardening downlink bound and the duality allocation
// need.
struct CentralizedDlMoments {
  Eigen::VectorXcd mean;    // E{h_k^H D_k wbar'_k}
  Eigen::MatrixXd second;   // (k,i): E{|h_k^H D_i wbar'_i|^2}
  Eigen::VectorXd norm;     // E{||wbar_k||^2} before normalization
  std::vector<Eigen::VectorXd> per_ap_norm;  // E{||wbar_kl||^2} over M_k
  int num_draws = 0;
};

// Monte Carlo moments for a precoder taken from the given combiner family
// computed at virtual uplink powers p_virtual.
CentralizedDlMoments downlink_moments_centralized(
    Combiner scheme, const EstimationStatistics& st, const ClusterState& cl,
    const Eigen::VectorXd& p_virtual, int num_draws, std::mt19937_64& rng);

// Exact moments for centralized MR precoding (wbar_k = D_k hhat_k).
CentralizedDlMoments centralized_dl_moments_mr(const EstimationStatistics& st,
                                               const ClusterState& cl);

// Hardening bound on the downlink SE for per-UE powers rho. A negative
// Monte Carlo interference denominator is clamped to noise_dl*1e-6 with a
// warning.
SeResult downlink_se_centralized(const CentralizedDlMoments& m,
                                 const Eigen::VectorXd& rho, double noise_dl,
                                 double prelog,
                                 std::vector<std::string>* warnings = nullptr);

// Distributed downlink in square-root power variables: with
// rho_tilde_k(l) = sqrt(rho_kl),
//   SINR_k = |b_k^T rho_tilde_k|^2 /
//            (sum_i rho_tilde_i^T C_ki rho_tilde_i - |b_k^T rho_tilde_k|^2 + noise).
// Built from the same per-AP expectations as the uplink distributed bound
// (exact for MR, Monte Carlo otherwise).
struct DistributedDlCoefficients {
  std::vector<Eigen::VectorXcd> b;              // over M_k
  std::vector<std::vector<Eigen::MatrixXcd>> C; // C[k][i] over M_i x M_i
};

DistributedDlCoefficients distributed_dl_coefficients(
    const DistributedExpectations& ex, const ClusterState& cl);

double downlink_sinr_distributed(const DistributedDlCoefficients& co,
                                 const std::vector<Eigen::VectorXd>& rho_ap,
                                 double noise_dl, int k);

// rho_ap[k] holds the per-AP downlink powers rho_kl over M_k.
SeResult downlink_se_distributed(const DistributedDlCoefficients& co,
                                 const std::vector<Eigen::VectorXd>& rho_ap,
                                 double noise_dl, double prelog);

// Genie-aided downlink SE (UE knows the instantaneous effective channel),
// centralized operation.
SeResult downlink_se_genie_centralized(Combiner scheme,
                                       const EstimationStatistics& st,
                                       const ClusterState& cl,
                                       const Eigen::VectorXd& p_virtual,
                                       const Eigen::VectorXd& rho,
                                       const Eigen::VectorXd& norms,
                                       double noise_dl, double prelog,
                                       int num_draws, std::mt19937_64& rng);

// Uplink-downlink duality: downlink powers that reproduce the uplink UatF
// SINRs gamma_k with the same (normalized) vectors used for precoding.
struct DualityResult {
  Eigen::VectorXd rho;      // per-UE downlink powers
  Eigen::VectorXd ul_sinr;  // uplink UatF SINRs (the targets)
  Eigen::VectorXd dl_sinr;  // achieved downlink SINRs at rho
  bool feasible = false;
  std::string report;
};

DualityResult duality_power_allocation(const CentralizedDlMoments& m,
                                       const Eigen::VectorXd& p_ul,
                                       double noise_ul, double noise_dl);

// Average radiated power of each AP: sum_{k in D_l} rho_k *
// E{||wbar_kl||^2}/E{||wbar_k||^2}; flags[l] set when above
// max_dl_power * (1 + 1e-9).
Eigen::VectorXd per_ap_power_usage(const CentralizedDlMoments& m,
                                   const ClusterState& cl,
                                   const Eigen::VectorXd& rho,
                                   double max_dl_power,
                                   std::vector<bool>* flags = nullptr);

}  // namespace cellfree
