#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "cellfree/cluster.hpp"
#include "cellfree/uplink.hpp"

namespace cellfree {

// Variance of the effective channel of UE k under per-AP power-normalized MR
// precoding from its serving cluster, after normalization by the mean:
//   sum_{l in M_k} rho_l tr(R_kl^2)/tr(R_kl) / (sum_{l in M_k} sqrt(rho_l tr(R_kl)))^2.
// Values near zero indicate a high degree of channel hardening. rho is
// aligned with `serving`; an all-zero or negative rho is rejected.
double hardening_metric(const std::vector<Eigen::MatrixXcd>& R_all, int L,
                        const std::vector<int>& serving,
                        const Eigen::VectorXd& rho, int k);

// Variance of the interference that the MR transmission toward UE i causes at
// UE k, normalized by the mean effective channel of UE k:
//   sum_{l in M_i} rho_i_l tr(R_il R_kl)/tr(R_il)
//     / (sum_{l in M_k} sqrt(rho_k_l tr(R_kl)))^2.
// Zero means UE k experiences favorable propagation with respect to UE i.
double favorable_metric(const std::vector<Eigen::MatrixXcd>& R_all, int L,
                        const std::vector<int>& serving_k,
                        const Eigen::VectorXd& rho_k,
                        const std::vector<int>& serving_i,
                        const Eigen::VectorXd& rho_i, int k, int i);

// Complex scalars exchanged over the fronthaul, totaled over all APs.
struct FronthaulCount {
  double per_block = 0;   // per coherence block
  double statistics = 0;  // per update of the channel statistics
};

// Uplink load: pilots plus data toward the CPU (centralized) or locally
// combined data estimates plus the LSFD statistics (distributed).
FronthaulCount fronthaul_uplink(bool centralized, const ClusterState& cl,
                                int tau_p, int tau_u, int N, LsfdMode lsfd,
                                int K);
// Downlink load: precoded transmit signals (centralized) or encoded data
// shares (distributed), any precoding scheme.
double fronthaul_downlink(bool centralized, const ClusterState& cl, int tau_d,
                          int N);

// Complex multiplications per coherence block to form the combining vector of
// UE k, including the channel estimates it consumes.
double combining_complexity(Combiner scheme, const ClusterState& cl, int N,
                            int tau_p, int K, int k);
double local_combining_complexity(LocalCombiner scheme, const ClusterState& cl,
                                  int N, int tau_p, int K, int k);
// Multiplications to form the LSFD weight vector of UE k (zero for unweighted
// fusion; opt and n-opt solve systems of the same size).
double lsfd_complexity(LsfdMode lsfd, const ClusterState& cl, int k);

struct SchemeAccounting {
  double mult_per_ue = 0;           // averaged over UEs
  double fronthaul_block = 0;       // all APs, per coherence block
  double fronthaul_statistics = 0;  // all APs, per statistics update
  bool scalable = false;            // counts constant in K on the probe grid
};

struct ScalabilityReport {
  std::map<std::string, SchemeAccounting> schemes;
  Eigen::VectorXd hardening;  // per UE; empty until diagnostics are attached
  Eigen::MatrixXd favorable;  // pairwise, zero diagonal

  std::string to_json() const;
};

// Accounting rows for the standard processing schemes on one cluster
// instance. The scalable flag probes K over {20, 40, 80} with the cluster
// structure held fixed, so it isolates the explicit K dependence of the
// counting formulas.
ScalabilityReport scalability_report(const ClusterState& cl, int N, int tau_p,
                                     int tau_u, int tau_d, int K);

// Fills the hardening/favorable fields from the correlation matrices and a
// K x L per-AP downlink power matrix (zero off the serving clusters).
void add_channel_diagnostics(ScalabilityReport& rep,
                             const std::vector<Eigen::MatrixXcd>& R_all, int L,
                             const ClusterState& cl,
                             const Eigen::MatrixXd& rho);

}  // namespace cellfree
