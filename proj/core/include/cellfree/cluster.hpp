#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace cellfree {

// User-centric cooperation clusters plus the pilot assignment that induced
// them. All indices are 0-based. serving[k] (the AP cluster of UE k) and
// served[l] (UEs handled by AP l) are kept consistent: l is in serving[k]
// iff k is in served[l].
struct ClusterState {
  std::vector<int> pilot;                       // pilot index t_k per UE
  std::vector<int> master;                      // strongest AP per UE
  std::vector<std::vector<int>> serving;        // M_k, sorted ascending
  std::vector<std::vector<int>> served;         // D_l, sorted ascending
  std::vector<std::vector<int>> pilot_sharers;  // P_k = {i : t_i = t_k}, incl. k
  std::vector<std::vector<int>> coservice;      // S_k = union of D_l, l in M_k
  std::vector<std::string> warnings;

  std::string to_json() const;
  static ClusterState from_json(const std::string& text);
};

// Greedy joint pilot assignment and cluster formation: the first tau_p UEs get
// orthogonal pilots; every later UE picks the pilot with the least accumulated
// contamination at its strongest AP. Each AP then serves, per pilot, the UE
// with the largest channel gain. UEs left unserved are force-added to their
// strongest AP's cluster (with a contamination warning, since that AP then
// serves two UEs on one pilot).
ClusterState assign_pilots_and_dcc(const Eigen::MatrixXd& beta, int tau_p);

// Same pilot assignment, but AP l joins M_k whenever beta_kl >= threshold
// (linear scale); the strongest AP is always included.
ClusterState threshold_dcc(const Eigen::MatrixXd& beta, int tau_p,
                           double threshold);

// Index of the single serving AP when each UE falls back to small-cell
// operation: the strongest AP within M_k.
int small_cell_selection(const Eigen::VectorXd& beta_row,
                         const std::vector<int>& serving);

// Recomputes S_k from serving/served (already stored in `coservice` by the
// constructors above).
std::vector<std::vector<int>> compute_coservice_sets(const ClusterState& state);

}  // namespace cellfree
