#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "cellfree/cluster.hpp"
#include "cellfree/downlink.hpp"
#include "cellfree/uplink.hpp"

namespace cellfree {

enum class SinrForm { ul_generic, dl_centralized, dl_distributed };

// Generic SINR parameterization consumed by the power optimizers.
//   ul_generic / dl_centralized: SINR_k(p) = b_k p_k / (c_k^T p + noise_k)
//   dl_distributed, in square roots rt_k (full length L, zero off M_k):
//     SINR_k = (b_dist_k^T rt_k)^2 /
//              (sum_i rt_i^T C_dist_ki rt_i - (b_dist_k^T rt_k)^2 + noise_k)
struct SinrCoefficients {
  SinrForm form = SinrForm::ul_generic;
  Eigen::VectorXd b;      // K signal gains (empty for dl_distributed)
  Eigen::MatrixXd c;      // K x K, row k = c_k (includes own-signal variance)
  Eigen::VectorXd noise;  // per-UE noise power
  double p_max = 0;       // per-UE (ul) or per-AP (dl) power budget

  // dl_centralized constraint data: fraction of UE k's power radiated by AP l
  Eigen::MatrixXd ap_weight;  // K x L, zero off the serving cluster

  // dl_distributed data (b made real nonnegative by phase rotation)
  std::vector<Eigen::VectorXd> b_dist;               // K of L
  std::vector<std::vector<Eigen::MatrixXd>> C_dist;  // [k][i], L x L symmetric
  std::vector<std::vector<int>> served;              // D_l per AP
};

// SINR evaluation for the scalar-power forms (p has K entries).
double sinr_at(const SinrCoefficients& co, const Eigen::VectorXd& p, int k);
// SINR evaluation for the distributed form (rt: K vectors of length L).
double sinr_at_dist(const SinrCoefficients& co,
                    const std::vector<Eigen::VectorXd>& rt, int k);

// Coefficient extraction. The uplink form uses the use-and-forget bound with
// unit-norm combiners (centralized) or fixed LSFD weights (distributed).
SinrCoefficients ul_coefficients_centralized(const CentralizedDlMoments& m,
                                             double noise_ul, double p_max);
SinrCoefficients ul_coefficients_distributed(
    const DistributedExpectations& ex, const ClusterState& cl,
    const std::vector<Eigen::VectorXcd>& lsfd, double noise_ul, double p_max);
SinrCoefficients dl_coefficients_centralized(const CentralizedDlMoments& m,
                                             const ClusterState& cl,
                                             double noise_dl, double rho_max);
// Rotates precoder phases so the signal coefficients are real nonnegative;
// rejects if a residual imaginary part above 1e-8 relative remains.
SinrCoefficients dl_coefficients_distributed(const DistributedDlCoefficients& dl,
                                             const ClusterState& cl,
                                             double noise_dl, double rho_max);

struct SolverOptions {
  double tol = -1;          // negative: use the algorithm default
  int max_iter = 10000;
  std::string trace_csv;    // per-iteration CSV dump when nonempty
};

struct PowerVector {
  Eigen::VectorXd p;                       // per-UE powers (scalar forms)
  std::vector<Eigen::VectorXd> rho_tilde;  // sqrt powers (distributed form)
  double objective = 0;
  int iterations = 0;
  bool converged = false;
  std::vector<std::string> warnings;
};

// Max-min fairness by fixed-point iteration: p_k <- p_k / SINR_k, then scale
// to put the largest power (ul) or the most loaded AP (dl) at the budget.
// Default tolerance 1e-5 on the SINR spread. Zero interference coefficients
// are perturbed by 1e-12 * max(c) with a warning (the convergence guarantee
// needs strictly positive couplings). Non-convergence throws.
PowerVector ul_maxmin_fixedpoint(const SinrCoefficients& co,
                                 const SolverOptions& opt = {});
PowerVector dl_cent_maxmin_fixedpoint(const SinrCoefficients& co,
                                      const SolverOptions& opt = {});

// Sum-SE maximization by block coordinate descent on the weighted-MMSE
// reformulation; stops when the relative objective improvement drops below
// the tolerance (default 1e-6) or the objective stops improving. init may be
// empty (full power).
PowerVector ul_sumse_bcd(const SinrCoefficients& co,
                         const Eigen::VectorXd& init = Eigen::VectorXd(),
                         const SolverOptions& opt = {});
PowerVector dl_cent_sumse_bcd(const SinrCoefficients& co,
                              const SolverOptions& opt = {});

// Distributed max-min fairness: bisection on the common SINR target with a
// convex feasibility subproblem per candidate (projected-gradient on the
// hinge residuals of the cone constraints). Default 1e-5 relative interval.
PowerVector dl_dist_maxmin_bisection(const SinrCoefficients& co,
                                     const SolverOptions& opt = {});

// Distributed sum-SE BCD; the quadratic subproblem under per-AP ball
// constraints is solved by projected gradient to a 1e-7 stationarity
// residual.
PowerVector dl_dist_sumse_bcd(const SinrCoefficients& co,
                              const SolverOptions& opt = {});

// Scalable heuristics. beta is the K x L large-scale fading matrix.
Eigen::VectorXd fpc_uplink(const Eigen::MatrixXd& beta, const ClusterState& cl,
                           double upsilon, double p_max);
Eigen::VectorXd fpa_dl_centralized(const Eigen::MatrixXd& beta,
                                   const ClusterState& cl,
                                   const Eigen::VectorXd& omega, double upsilon,
                                   double kappa, double rho_max);
// Returns the K x L per-AP allocation (zero off the serving clusters); each
// AP spends exactly rho_max. upsilon = 0 gives per-AP equal allocation.
Eigen::MatrixXd fpa_dl_distributed(const Eigen::MatrixXd& beta,
                                   const ClusterState& cl, double upsilon,
                                   double rho_max);

}  // namespace cellfree
