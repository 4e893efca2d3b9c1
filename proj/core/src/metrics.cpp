#include "cellfree/metrics.hpp"

#include <json.hpp>

#include <cmath>
#include <stdexcept>

namespace cellfree {

namespace {

void check_rho(const Eigen::VectorXd& rho, const std::vector<int>& serving,
               const char* who) {
  if (rho.size() != static_cast<Eigen::Index>(serving.size()))
    throw std::invalid_argument(std::string(who) +
                                ": rho length does not match the cluster");
  if (rho.size() > 0 && rho.minCoeff() < 0)
    throw std::invalid_argument(std::string(who) + ": negative power");
}

// (sum_{l in M_k} sqrt(rho_l tr(R_kl)))^2, the squared mean of the effective
// MR channel
double mean_sq(const std::vector<Eigen::MatrixXcd>& R_all, int L,
               const std::vector<int>& serving, const Eigen::VectorXd& rho,
               int k) {
  double root = 0;
  for (int a = 0; a < static_cast<int>(serving.size()); ++a) {
    double tr = R_all[k * L + serving[a]].real().trace();
    root += std::sqrt(rho(a) * tr);
  }
  return root * root;
}

}  // namespace

double hardening_metric(const std::vector<Eigen::MatrixXcd>& R_all, int L,
                        const std::vector<int>& serving,
                        const Eigen::VectorXd& rho, int k) {
  check_rho(rho, serving, "hardening_metric");
  if (rho.size() == 0 || rho.maxCoeff() <= 0)
    throw std::invalid_argument("hardening_metric: all-zero power allocation");
  double num = 0;
  for (int a = 0; a < static_cast<int>(serving.size()); ++a) {
    if (rho(a) == 0) continue;
    const Eigen::MatrixXcd& R = R_all[k * L + serving[a]];
    double tr = R.real().trace();
    if (tr <= 0)
      throw std::invalid_argument("hardening_metric: zero-trace correlation");
    num += rho(a) * (R * R).real().trace() / tr;
  }
  return num / mean_sq(R_all, L, serving, rho, k);
}

double favorable_metric(const std::vector<Eigen::MatrixXcd>& R_all, int L,
                        const std::vector<int>& serving_k,
                        const Eigen::VectorXd& rho_k,
                        const std::vector<int>& serving_i,
                        const Eigen::VectorXd& rho_i, int k, int i) {
  check_rho(rho_k, serving_k, "favorable_metric");
  check_rho(rho_i, serving_i, "favorable_metric");
  if (rho_k.size() == 0 || rho_k.maxCoeff() <= 0)
    throw std::invalid_argument("favorable_metric: all-zero power allocation");
  double num = 0;
  for (int a = 0; a < static_cast<int>(serving_i.size()); ++a) {
    if (rho_i(a) == 0) continue;
    int l = serving_i[a];
    const Eigen::MatrixXcd& Ri = R_all[i * L + l];
    double tr = Ri.real().trace();
    if (tr <= 0)
      throw std::invalid_argument("favorable_metric: zero-trace correlation");
    num += rho_i(a) * (Ri * R_all[k * L + l]).real().trace() / tr;
  }
  return num / mean_sq(R_all, L, serving_k, rho_k, k);
}

namespace {

double sum_served(const ClusterState& cl) {
  double s = 0;
  for (const auto& d : cl.served) s += static_cast<double>(d.size());
  return s;
}

}  // namespace

FronthaulCount fronthaul_uplink(bool centralized, const ClusterState& cl,
                                int tau_p, int tau_u, int N, LsfdMode lsfd,
                                int K) {
  FronthaulCount f;
  if (centralized) {
    f.per_block = static_cast<double>(tau_p + tau_u) * N * cl.served.size();
    return f;
  }
  f.per_block = tau_u * sum_served(cl);
  switch (lsfd) {
    case LsfdMode::opt:
      f.statistics = (3.0 * K + 1) / 2 * sum_served(cl);
      break;
    case LsfdMode::nopt:
      for (const auto& d : cl.served)
        for (int k : d)
          f.statistics += (3.0 * cl.coservice[k].size() + 1) / 2;
      break;
    case LsfdMode::none:
      break;
  }
  return f;
}

double fronthaul_downlink(bool centralized, const ClusterState& cl, int tau_d,
                          int N) {
  if (centralized) return static_cast<double>(tau_d) * N * cl.served.size();
  return tau_d * sum_served(cl);
}

double combining_complexity(Combiner scheme, const ClusterState& cl, int N,
                            int tau_p, int K, int k) {
  const double M = static_cast<double>(cl.serving[k].size());
  const double S = static_cast<double>(cl.coservice[k].size());
  const double est_per_pair = N * tau_p + static_cast<double>(N) * N;
  const double NM = N * M;
  // inverting an NM x NM Hermitian system and applying it to one vector
  const double solve = NM * NM + (NM * NM * NM - NM) / 3;
  switch (scheme) {
    case Combiner::mmse:
      return est_per_pair * K * M + (NM * NM + NM) / 2 * K + solve;
    case Combiner::p_mmse:
      return est_per_pair * S * M + (NM * NM + NM) / 2 * S + solve;
    case Combiner::p_rzf:
      return est_per_pair * S * M + (S * S + S) / 2 * NM + S * S + S * NM +
             (S * S * S - S) / 3;
    case Combiner::mr:
      return est_per_pair * M;
  }
  return 0;
}

double local_combining_complexity(LocalCombiner scheme, const ClusterState& cl,
                                  int N, int tau_p, int K, int k) {
  const double M = static_cast<double>(cl.serving[k].size());
  const double est_per_pair = N * tau_p + static_cast<double>(N) * N;
  const double Nd = N;
  const double solve = Nd * Nd * M + (Nd * Nd * Nd - Nd) / 3 * M;
  switch (scheme) {
    case LocalCombiner::l_mmse:
      return est_per_pair * K * M + (Nd * Nd + Nd) / 2 * K * M + solve;
    case LocalCombiner::lp_mmse: {
      double served = 0;
      for (int l : cl.serving[k]) served += cl.served[l].size();
      return est_per_pair * served + (Nd * Nd + Nd) / 2 * served + solve;
    }
    case LocalCombiner::mr:
      return est_per_pair * M;
  }
  return 0;
}

double lsfd_complexity(LsfdMode lsfd, const ClusterState& cl, int k) {
  if (lsfd == LsfdMode::none) return 0;
  const double M = static_cast<double>(cl.serving[k].size());
  return M * M + (M * M * M - M) / 3;
}

namespace {

double avg_mult(const ClusterState& cl, int N, int tau_p, int K,
                const std::string& name) {
  const int Kc = static_cast<int>(cl.serving.size());
  double s = 0;
  for (int k = 0; k < Kc; ++k) {
    if (name == "mmse")
      s += combining_complexity(Combiner::mmse, cl, N, tau_p, K, k);
    else if (name == "p-mmse")
      s += combining_complexity(Combiner::p_mmse, cl, N, tau_p, K, k);
    else if (name == "p-rzf")
      s += combining_complexity(Combiner::p_rzf, cl, N, tau_p, K, k);
    else if (name == "mr")
      s += combining_complexity(Combiner::mr, cl, N, tau_p, K, k);
    else if (name == "l-mmse")
      s += local_combining_complexity(LocalCombiner::l_mmse, cl, N, tau_p, K, k);
    else if (name == "lp-mmse")
      s += local_combining_complexity(LocalCombiner::lp_mmse, cl, N, tau_p, K, k);
    else if (name == "mr-local")
      s += local_combining_complexity(LocalCombiner::mr, cl, N, tau_p, K, k);
    else if (name == "opt-lsfd" || name == "n-opt-lsfd")
      s += lsfd_complexity(LsfdMode::opt, cl, k);
  }
  return s / Kc;
}

SchemeAccounting account(const ClusterState& cl, int N, int tau_p, int tau_u,
                         int tau_d, int K, const std::string& name) {
  const bool centralized = (name == "mmse" || name == "p-mmse" ||
                            name == "p-rzf" || name == "mr");
  LsfdMode lsfd = LsfdMode::none;
  if (name == "opt-lsfd") lsfd = LsfdMode::opt;
  if (name == "n-opt-lsfd") lsfd = LsfdMode::nopt;

  auto eval = [&](int Kprobe) {
    SchemeAccounting a;
    a.mult_per_ue = avg_mult(cl, N, tau_p, Kprobe, name);
    FronthaulCount f =
        fronthaul_uplink(centralized, cl, tau_p, tau_u, N, lsfd, Kprobe);
    a.fronthaul_block = f.per_block + fronthaul_downlink(centralized, cl, tau_d, N);
    a.fronthaul_statistics = f.statistics;
    return a;
  };

  SchemeAccounting a = eval(K);
  a.scalable = true;
  SchemeAccounting ref = eval(20);
  for (int Kprobe : {40, 80}) {
    SchemeAccounting probe = eval(Kprobe);
    if (probe.mult_per_ue != ref.mult_per_ue ||
        probe.fronthaul_block != ref.fronthaul_block ||
        probe.fronthaul_statistics != ref.fronthaul_statistics)
      a.scalable = false;
  }
  return a;
}

}  // namespace

ScalabilityReport scalability_report(const ClusterState& cl, int N, int tau_p,
                                     int tau_u, int tau_d, int K) {
  ScalabilityReport rep;
  for (const char* name :
       {"mmse", "p-mmse", "p-rzf", "mr", "l-mmse", "lp-mmse", "mr-local",
        "opt-lsfd", "n-opt-lsfd"})
    rep.schemes[name] = account(cl, N, tau_p, tau_u, tau_d, K, name);
  return rep;
}

void add_channel_diagnostics(ScalabilityReport& rep,
                             const std::vector<Eigen::MatrixXcd>& R_all, int L,
                             const ClusterState& cl,
                             const Eigen::MatrixXd& rho) {
  const int K = static_cast<int>(cl.serving.size());
  auto rho_of = [&](int k) {
    Eigen::VectorXd r(cl.serving[k].size());
    for (int a = 0; a < r.size(); ++a) r(a) = rho(k, cl.serving[k][a]);
    return r;
  };
  rep.hardening.resize(K);
  rep.favorable = Eigen::MatrixXd::Zero(K, K);
  for (int k = 0; k < K; ++k) {
    rep.hardening(k) =
        hardening_metric(R_all, L, cl.serving[k], rho_of(k), k);
    for (int i = 0; i < K; ++i) {
      if (i == k) continue;
      rep.favorable(k, i) =
          favorable_metric(R_all, L, cl.serving[k], rho_of(k), cl.serving[i],
                           rho_of(i), k, i);
    }
  }
}

std::string ScalabilityReport::to_json() const {
  nlohmann::json j;
  for (const auto& [name, a] : schemes) {
    j["schemes"][name] = {{"mult_per_ue", a.mult_per_ue},
                          {"fronthaul_block", a.fronthaul_block},
                          {"fronthaul_statistics", a.fronthaul_statistics},
                          {"scalable", a.scalable}};
  }
  if (hardening.size() > 0) {
    j["hardening"] = std::vector<double>(hardening.data(),
                                         hardening.data() + hardening.size());
    for (int k = 0; k < favorable.rows(); ++k) {
      std::vector<double> row(favorable.cols());
      for (int i = 0; i < favorable.cols(); ++i) row[i] = favorable(k, i);
      j["favorable"].push_back(row);
    }
  }
  return j.dump(2);
}

}  // namespace cellfree
