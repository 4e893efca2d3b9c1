#pragma once

#include <Eigen/Dense>
#include <random>
#include <vector>

#include "cellfree/cluster.hpp"
#include "cellfree/estimation.hpp"

namespace cellfree {

enum class Combiner { mmse, p_mmse, p_rzf, mr };
enum class LocalCombiner { l_mmse, lp_mmse, mr };
enum class LsfdMode { opt, nopt, none };

// Antenna row indices of the serving cluster inside the collective LN vector.
std::vector<int> active_rows(const std::vector<int>& serving, int N);

// Receive combining computed at the CPU from the collective channel
// estimates; only the rows of the serving cluster are nonzero. power holds
// the per-UE uplink data powers p_i.
Eigen::VectorXcd centralized_combiner(Combiner scheme,
                                      const EstimationStatistics& st,
                                      const ClusterState& cl,
                                      const ChannelDraw& draw,
                                      const Eigen::VectorXd& power, int k);

// Local combining at AP l for UE k (requires k in D_l).
Eigen::VectorXcd local_combiner(LocalCombiner scheme,
                                const EstimationStatistics& st,
                                const ClusterState& cl, const ChannelDraw& draw,
                                const Eigen::VectorXd& power, int k, int l);

// First/second-order statistics of the per-AP data estimates
// g_ki(l) = v_kl^H h_il, stored on the serving cluster M_k of each UE
// (entries ordered as cl.serving[k]).
struct DistributedExpectations {
  std::vector<Eigen::VectorXcd> g_mean;           // E{g_kk} over M_k
  std::vector<std::vector<Eigen::MatrixXcd>> G;   // G[k][i] = E{g_ki g_ki^H}
  std::vector<Eigen::VectorXd> noise;             // E{||v_kl||^2} over M_k
  int num_draws = 0;
};

DistributedExpectations distributed_expectations_mc(
    LocalCombiner scheme, const EstimationStatistics& st,
    const ClusterState& cl, const Eigen::VectorXd& power, int num_draws,
    std::mt19937_64& rng);

// Exact expectations for local MR combining (v_kl = hhat_kl).
DistributedExpectations distributed_expectations_mr(
    const EstimationStatistics& st, const ClusterState& cl);

// CPU-side weighting of the per-AP data estimates. opt solves the full
// SINR-optimal system; nopt restricts the interference sum to the co-service
// set; none returns all-ones. A singular system gets a 1e-12*trace ridge and
// a warning appended to `warnings` (when provided).
Eigen::VectorXcd lsfd_weights(LsfdMode mode, const DistributedExpectations& ex,
                              const ClusterState& cl,
                              const Eigen::VectorXd& power, double noise_ul,
                              int k, std::vector<std::string>* warnings = nullptr);

// SINR of the two-layer distributed bound for a given weight vector.
double distributed_sinr(const DistributedExpectations& ex,
                        const Eigen::VectorXcd& a, const Eigen::VectorXd& power,
                        double noise_ul, int k);

// Instantaneous SINR of an arbitrary combining vector v (full LN length,
// nonzero only on M_k) against the estimated channels, with the
// estimation-error and noise terms of the centralized bound.
double centralized_sinr(const EstimationStatistics& st, const ClusterState& cl,
                        const ChannelDraw& draw, const Eigen::VectorXd& power,
                        const Eigen::VectorXcd& v, int k);

struct SeResult {
  Eigen::VectorXd se;        // bit/s/Hz per UE
  Eigen::VectorXd std_error; // Monte Carlo standard error (zero if exact)
};

// Ergodic bound with instantaneous-SINR averaging; the interference and
// estimation-error terms in the denominator always run over all K UEs.
SeResult uplink_se_centralized(Combiner scheme, const EstimationStatistics& st,
                               const ClusterState& cl,
                               const Eigen::VectorXd& power, double prelog,
                               int num_draws, std::mt19937_64& rng);

// Use-and-then-forget bound for the same centralized combiners.
SeResult uplink_se_uatf(Combiner scheme, const EstimationStatistics& st,
                        const ClusterState& cl, const Eigen::VectorXd& power,
                        double prelog, int num_draws, std::mt19937_64& rng);

// Distributed bound from (Monte Carlo or exact) expectations; deterministic
// given the expectations.
SeResult uplink_se_distributed(const DistributedExpectations& ex,
                               LsfdMode lsfd, const ClusterState& cl,
                               const Eigen::VectorXd& power, double noise_ul,
                               double prelog,
                               std::vector<std::string>* warnings = nullptr);

// Genie-aided references (receiver knows the channel realizations).
SeResult uplink_se_genie_centralized(Combiner scheme,
                                     const EstimationStatistics& st,
                                     const ClusterState& cl,
                                     const Eigen::VectorXd& power,
                                     double prelog, int num_draws,
                                     std::mt19937_64& rng);
SeResult uplink_se_genie_distributed(LocalCombiner scheme,
                                     const DistributedExpectations& ex,
                                     LsfdMode lsfd,
                                     const EstimationStatistics& st,
                                     const ClusterState& cl,
                                     const Eigen::VectorXd& power,
                                     double prelog, int num_draws,
                                     std::mt19937_64& rng);

// Small-cell baseline: each UE is decoded by the strongest AP in its cluster
// using local MMSE combining (per-draw SINR-optimal for single-AP service).
SeResult uplink_se_cellular(const EstimationStatistics& st,
                            const ClusterState& cl,
                            const Eigen::VectorXd& power, double prelog,
                            int num_draws, std::mt19937_64& rng);

// Effective pilot-processing SNR coefficient for N = 1:
// gamma_kl = eta_k tau_p beta_kl^2 / (sum_{i in P_k} eta_i tau_p beta_il + noise).
double mr_gamma_n1(const EstimationStatistics& st, int k, int l);

}  // namespace cellfree
