#include "cellfree/downlink.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cellfree {

namespace {

constexpr double kTiny = 1e-300;

double clamp_denominator(double den, double noise_dl,
                         std::vector<std::string>* warnings, int k) {
  if (den > 0) return den;
  if (warnings)
    warnings->push_back("downlink interference denominator for UE " +
                        std::to_string(k) +
                        " was nonpositive; clamped to noise_dl*1e-6");
  return noise_dl * 1e-6;
}

}  // namespace

Eigen::VectorXcd precoder_from_combiner(const Eigen::VectorXcd& wbar,
                                        double mean_sq_norm, double rho) {
  if (mean_sq_norm <= 0)
    throw std::invalid_argument("precoder normalization requires E{||w||^2} > 0");
  if (rho < 0) throw std::invalid_argument("downlink power must be nonnegative");
  return std::sqrt(rho / mean_sq_norm) * wbar;
}

CentralizedDlMoments downlink_moments_centralized(
    Combiner scheme, const EstimationStatistics& st, const ClusterState& cl,
    const Eigen::VectorXd& p_virtual, int num_draws, std::mt19937_64& rng) {
  const int K = st.K, N = st.N;
  if (num_draws <= 0) throw std::invalid_argument("num_draws must be positive");
  CentralizedDlMoments m;
  m.num_draws = num_draws;
  m.mean = Eigen::VectorXcd::Zero(K);
  m.second = Eigen::MatrixXd::Zero(K, K);
  m.norm = Eigen::VectorXd::Zero(K);
  m.per_ap_norm.resize(K);
  for (int k = 0; k < K; ++k)
    m.per_ap_norm[k] = Eigen::VectorXd::Zero(cl.serving[k].size());

  for (int d = 0; d < num_draws; ++d) {
    ChannelDraw draw = sample_channel_draw(st, rng);
    for (int i = 0; i < K; ++i) {
      Eigen::VectorXcd w =
          centralized_combiner(scheme, st, cl, draw, p_virtual, i);
      m.norm(i) += w.squaredNorm();
      for (size_t a = 0; a < cl.serving[i].size(); ++a)
        m.per_ap_norm[i](a) += w.segment(cl.serving[i][a] * N, N).squaredNorm();
      m.mean(i) += std::conj(w.dot(draw.h.col(i)));
      for (int k = 0; k < K; ++k)
        m.second(k, i) += std::norm(w.dot(draw.h.col(k)));
    }
  }
  m.norm /= num_draws;
  m.mean /= num_draws;
  m.second /= num_draws;
  for (int k = 0; k < K; ++k) {
    m.per_ap_norm[k] /= num_draws;
    double n = std::max(m.norm(k), kTiny);
    m.mean(k) /= std::sqrt(n);
    m.second.col(k) /= n;
  }
  return m;
}

CentralizedDlMoments centralized_dl_moments_mr(const EstimationStatistics& st,
                                               const ClusterState& cl) {
  DistributedExpectations ex = distributed_expectations_mr(st, cl);
  const int K = st.K;
  CentralizedDlMoments m;
  m.num_draws = 0;
  m.mean.resize(K);
  m.second.resize(K, K);
  m.norm.resize(K);
  m.per_ap_norm.resize(K);
  for (int k = 0; k < K; ++k) {
    m.per_ap_norm[k] = ex.noise[k];
    m.norm(k) = ex.noise[k].sum();
    m.mean(k) =
        std::conj(ex.g_mean[k].sum()) / std::sqrt(std::max(m.norm(k), kTiny));
  }
  for (int k = 0; k < K; ++k)
    for (int i = 0; i < K; ++i)
      m.second(k, i) =
          std::real(ex.G[i][k].sum()) / std::max(m.norm(i), kTiny);
  return m;
}

SeResult downlink_se_centralized(const CentralizedDlMoments& m,
                                 const Eigen::VectorXd& rho, double noise_dl,
                                 double prelog,
                                 std::vector<std::string>* warnings) {
  const int K = static_cast<int>(m.mean.size());
  if (rho.size() != K)
    throw std::invalid_argument("rho must hold one power per UE");
  SeResult r;
  r.se.resize(K);
  r.std_error = Eigen::VectorXd::Zero(K);
  for (int k = 0; k < K; ++k) {
    double sig = rho(k) * std::norm(m.mean(k));
    double den = noise_dl - sig;
    for (int i = 0; i < K; ++i) den += rho(i) * m.second(k, i);
    den = clamp_denominator(den, noise_dl, warnings, k);
    r.se(k) = prelog * std::log2(1.0 + sig / den);
  }
  return r;
}

DistributedDlCoefficients distributed_dl_coefficients(
    const DistributedExpectations& ex, const ClusterState& cl) {
  const int K = static_cast<int>(ex.g_mean.size());
  DistributedDlCoefficients co;
  co.b.resize(K);
  co.C.resize(K);
  for (int k = 0; k < K; ++k) {
    const int m = static_cast<int>(ex.g_mean[k].size());
    co.b[k].resize(m);
    for (int a = 0; a < m; ++a)
      co.b[k](a) = std::conj(ex.g_mean[k](a)) /
                   std::sqrt(std::max(ex.noise[k](a), kTiny));
  }
  for (int k = 0; k < K; ++k) {
    co.C[k].resize(K);
    for (int i = 0; i < K; ++i) {
      const int m = static_cast<int>(ex.noise[i].size());
      co.C[k][i].resize(m, m);
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b)
          co.C[k][i](a, b) =
              ex.G[i][k](a, b) / std::sqrt(std::max(ex.noise[i](a), kTiny) *
                                           std::max(ex.noise[i](b), kTiny));
    }
  }
  return co;
}

double downlink_sinr_distributed(const DistributedDlCoefficients& co,
                                 const std::vector<Eigen::VectorXd>& rho_ap,
                                 double noise_dl, int k) {
  const int K = static_cast<int>(co.b.size());
  Eigen::VectorXd rk = rho_ap[k].cwiseSqrt();
  std::complex<double> s = 0;
  for (int a = 0; a < rk.size(); ++a) s += rk(a) * co.b[k](a);
  double sig = std::norm(s);
  double den = noise_dl - sig;
  for (int i = 0; i < K; ++i) {
    Eigen::VectorXd ri = rho_ap[i].cwiseSqrt();
    den += std::real(ri.cast<std::complex<double>>().dot(co.C[k][i] *
        ri.cast<std::complex<double>>()));
  }
  return sig / std::max(den, kTiny);
}

SeResult downlink_se_distributed(const DistributedDlCoefficients& co,
                                 const std::vector<Eigen::VectorXd>& rho_ap,
                                 double noise_dl, double prelog) {
  const int K = static_cast<int>(co.b.size());
  SeResult r;
  r.se.resize(K);
  r.std_error = Eigen::VectorXd::Zero(K);
  for (int k = 0; k < K; ++k)
    r.se(k) = prelog *
              std::log2(1.0 + downlink_sinr_distributed(co, rho_ap, noise_dl, k));
  return r;
}

SeResult downlink_se_genie_centralized(Combiner scheme,
                                       const EstimationStatistics& st,
                                       const ClusterState& cl,
                                       const Eigen::VectorXd& p_virtual,
                                       const Eigen::VectorXd& rho,
                                       const Eigen::VectorXd& norms,
                                       double noise_dl, double prelog,
                                       int num_draws, std::mt19937_64& rng) {
  const int K = st.K;
  Eigen::MatrixXd sum_log = Eigen::MatrixXd::Zero(K, 2);  // mean, sum of squares
  for (int d = 0; d < num_draws; ++d) {
    ChannelDraw draw = sample_channel_draw(st, rng);
    std::vector<Eigen::VectorXcd> w(K);
    for (int i = 0; i < K; ++i) {
      Eigen::VectorXcd wbar =
          centralized_combiner(scheme, st, cl, draw, p_virtual, i);
      w[i] = precoder_from_combiner(wbar, norms(i), rho(i));
    }
    for (int k = 0; k < K; ++k) {
      double num = std::norm(w[k].dot(draw.h.col(k)));
      double den = noise_dl;
      for (int i = 0; i < K; ++i)
        if (i != k) den += std::norm(w[i].dot(draw.h.col(k)));
      double x = std::log2(1.0 + num / std::max(den, kTiny));
      sum_log(k, 0) += x;
      sum_log(k, 1) += x * x;
    }
  }
  SeResult r;
  r.se.resize(K);
  r.std_error.resize(K);
  for (int k = 0; k < K; ++k) {
    double n = num_draws;
    double mean = sum_log(k, 0) / n;
    double var = n > 1 ? (sum_log(k, 1) - n * mean * mean) / (n - 1) : 0.0;
    r.se(k) = prelog * mean;
    r.std_error(k) = prelog * std::sqrt(std::max(var, 0.0) / n);
  }
  return r;
}

DualityResult duality_power_allocation(const CentralizedDlMoments& m,
                                       const Eigen::VectorXd& p_ul,
                                       double noise_ul, double noise_dl) {
  const int K = static_cast<int>(m.mean.size());
  DualityResult out;
  out.ul_sinr.resize(K);
  for (int k = 0; k < K; ++k) {
    double b = std::norm(m.mean(k));
    double den = noise_ul - p_ul(k) * b;
    for (int i = 0; i < K; ++i) den += p_ul(i) * m.second(i, k);
    out.ul_sinr(k) = p_ul(k) * b / std::max(den, kTiny);
  }

  Eigen::MatrixXd M = -m.second;
  for (int k = 0; k < K; ++k) {
    double b = std::norm(m.mean(k));
    if (out.ul_sinr(k) <= 0) {
      out.report = "uplink SINR of UE " + std::to_string(k) +
                   " is nonpositive; no dual allocation exists";
      out.rho = Eigen::VectorXd::Zero(K);
      out.dl_sinr = Eigen::VectorXd::Zero(K);
      return out;
    }
    M(k, k) += b / out.ul_sinr(k) + b;
  }
  out.rho = M.partialPivLu().solve(Eigen::VectorXd::Constant(K, noise_dl));

  out.dl_sinr.resize(K);
  for (int k = 0; k < K; ++k) {
    double sig = out.rho(k) * std::norm(m.mean(k));
    double den = noise_dl - sig;
    for (int i = 0; i < K; ++i) den += out.rho(i) * m.second(k, i);
    out.dl_sinr(k) = sig / std::max(den, kTiny);
  }
  out.feasible = (out.rho.minCoeff() > 0);
  out.report = out.feasible
                   ? "feasible"
                   : "dual system produced nonpositive powers; the uplink "
                     "SINR targets are not jointly reachable in the downlink";
  return out;
}

Eigen::VectorXd per_ap_power_usage(const CentralizedDlMoments& m,
                                   const ClusterState& cl,
                                   const Eigen::VectorXd& rho,
                                   double max_dl_power,
                                   std::vector<bool>* flags) {
  const int L = static_cast<int>(cl.served.size());
  Eigen::VectorXd usage = Eigen::VectorXd::Zero(L);
  for (int k = 0; k < static_cast<int>(cl.serving.size()); ++k) {
    double n = std::max(m.norm(k), kTiny);
    for (size_t a = 0; a < cl.serving[k].size(); ++a)
      usage(cl.serving[k][a]) += rho(k) * m.per_ap_norm[k](a) / n;
  }
  if (flags) {
    flags->assign(L, false);
    for (int l = 0; l < L; ++l)
      (*flags)[l] = usage(l) > max_dl_power * (1 + 1e-9);
  }
  return usage;
}

}  // namespace cellfree
