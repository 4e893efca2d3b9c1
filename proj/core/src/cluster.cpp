#include "cellfree/cluster.hpp"

#include <json.hpp>

#include <algorithm>
#include <set>
#include <stdexcept>

namespace cellfree {

namespace {

std::vector<int> assign_pilots(const Eigen::MatrixXd& beta, int tau_p,
                               std::vector<int>& master) {
  const int K = static_cast<int>(beta.rows());
  std::vector<int> pilot(K);
  master.resize(K);
  for (int k = 0; k < K; ++k) {
    int m = 0;
    beta.row(k).maxCoeff(&m);
    master[k] = m;
  }
  for (int k = 0; k < K; ++k) {
    if (k < tau_p) {
      pilot[k] = k;
      continue;
    }
    // least contaminated pilot as seen from the master AP; ties -> lowest t
    int best_t = 0;
    double best = std::numeric_limits<double>::infinity();
    for (int t = 0; t < tau_p; ++t) {
      double interf = 0;
      for (int i = 0; i < k; ++i)
        if (pilot[i] == t) interf += beta(i, master[k]);
      if (interf < best) {
        best = interf;
        best_t = t;
      }
    }
    pilot[k] = best_t;
  }
  return pilot;
}

void finalize(ClusterState& st, const Eigen::MatrixXd& beta) {
  const int K = static_cast<int>(beta.rows());
  const int L = static_cast<int>(beta.cols());

  // master-AP guarantee: no UE may be left unserved
  for (int k = 0; k < K; ++k) {
    if (!st.serving[k].empty()) continue;
    int m = st.master[k];
    st.serving[k].push_back(m);
    st.served[m].push_back(k);
    for (int i : st.served[m])
      if (i != k && st.pilot[i] == st.pilot[k]) {
        st.warnings.push_back("UE " + std::to_string(k) +
                              " force-added to master AP " + std::to_string(m) +
                              "; shares pilot " + std::to_string(st.pilot[k]) +
                              " with UE " + std::to_string(i) +
                              " at the same AP (contamination)");
        break;
      }
  }
  for (auto& v : st.serving) std::sort(v.begin(), v.end());
  for (auto& v : st.served) std::sort(v.begin(), v.end());

  st.pilot_sharers.assign(K, {});
  for (int k = 0; k < K; ++k)
    for (int i = 0; i < K; ++i)
      if (st.pilot[i] == st.pilot[k]) st.pilot_sharers[k].push_back(i);

  st.coservice = compute_coservice_sets(st);
  (void)L;
}

}  // namespace

std::vector<std::vector<int>> compute_coservice_sets(const ClusterState& st) {
  std::vector<std::vector<int>> cs(st.serving.size());
  for (size_t k = 0; k < st.serving.size(); ++k) {
    std::set<int> s = {static_cast<int>(k)};
    for (int l : st.serving[k]) s.insert(st.served[l].begin(), st.served[l].end());
    cs[k].assign(s.begin(), s.end());
  }
  return cs;
}

ClusterState assign_pilots_and_dcc(const Eigen::MatrixXd& beta, int tau_p) {
  const int K = static_cast<int>(beta.rows());
  const int L = static_cast<int>(beta.cols());
  if (tau_p <= 0) throw std::invalid_argument("tau_p must be positive");
  if (K == 0 || L == 0) throw std::invalid_argument("beta must be nonempty");

  ClusterState st;
  st.pilot = assign_pilots(beta, tau_p, st.master);
  st.serving.assign(K, {});
  st.served.assign(L, {});

  // each AP serves the strongest UE on each pilot (ties -> lowest UE index)
  for (int l = 0; l < L; ++l)
    for (int t = 0; t < tau_p; ++t) {
      int best_k = -1;
      double best = -1.0;
      for (int k = 0; k < K; ++k)
        if (st.pilot[k] == t && beta(k, l) > best) {
          best = beta(k, l);
          best_k = k;
        }
      if (best_k >= 0) {
        st.serving[best_k].push_back(l);
        st.served[l].push_back(best_k);
      }
    }
  finalize(st, beta);
  return st;
}

ClusterState threshold_dcc(const Eigen::MatrixXd& beta, int tau_p,
                           double threshold) {
  const int K = static_cast<int>(beta.rows());
  const int L = static_cast<int>(beta.cols());
  if (tau_p <= 0) throw std::invalid_argument("tau_p must be positive");

  ClusterState st;
  st.pilot = assign_pilots(beta, tau_p, st.master);
  st.serving.assign(K, {});
  st.served.assign(L, {});
  for (int k = 0; k < K; ++k)
    for (int l = 0; l < L; ++l)
      if (beta(k, l) >= threshold || l == st.master[k]) {
        st.serving[k].push_back(l);
        st.served[l].push_back(k);
      }
  for (int l = 0; l < L; ++l)
    for (size_t a = 0; a < st.served[l].size(); ++a)
      for (size_t b = a + 1; b < st.served[l].size(); ++b)
        if (st.pilot[st.served[l][a]] == st.pilot[st.served[l][b]])
          st.warnings.push_back(
              "AP " + std::to_string(l) + " serves pilot-sharing UEs " +
              std::to_string(st.served[l][a]) + " and " +
              std::to_string(st.served[l][b]) + " (contamination)");
  finalize(st, beta);
  return st;
}

int small_cell_selection(const Eigen::VectorXd& beta_row,
                         const std::vector<int>& serving) {
  if (serving.empty()) throw std::invalid_argument("empty serving set");
  int best = serving.front();
  for (int l : serving)
    if (beta_row(l) > beta_row(best)) best = l;
  return best;
}

std::string ClusterState::to_json() const {
  nlohmann::json j;
  j["pilot"] = pilot;
  j["master"] = master;
  j["serving"] = serving;
  j["served"] = served;
  j["pilot_sharers"] = pilot_sharers;
  j["coservice"] = coservice;
  j["warnings"] = warnings;
  return j.dump();
}

ClusterState ClusterState::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  ClusterState st;
  st.pilot = j.at("pilot").get<std::vector<int>>();
  st.master = j.at("master").get<std::vector<int>>();
  st.serving = j.at("serving").get<std::vector<std::vector<int>>>();
  st.served = j.at("served").get<std::vector<std::vector<int>>>();
  st.pilot_sharers = j.at("pilot_sharers").get<std::vector<std::vector<int>>>();
  st.coservice = j.at("coservice").get<std::vector<std::vector<int>>>();
  st.warnings = j.at("warnings").get<std::vector<std::string>>();
  return st;
}

}  // namespace cellfree
