#include "cellfree/uplink.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Cholesky>

namespace cellfree {

namespace {

constexpr double kTiny = 1e-300;

Eigen::VectorXcd gather(const Eigen::MatrixXcd& collective, int col,
                        const std::vector<int>& rows) {
  Eigen::VectorXcd out(rows.size());
  for (size_t i = 0; i < rows.size(); ++i) out(i) = collective(rows[i], col);
  return out;
}

// sum_i p_i C_il per AP, shared by every UE's denominator
std::vector<Eigen::MatrixXcd> weighted_error_cov(const EstimationStatistics& st,
                                                 const Eigen::VectorXd& p) {
  std::vector<Eigen::MatrixXcd> out(st.L);
  for (int l = 0; l < st.L; ++l) {
    Eigen::MatrixXcd sum = Eigen::MatrixXcd::Zero(st.N, st.N);
    for (int i = 0; i < st.K; ++i) sum += p(i) * st.Cm(i, l);
    out[l] = sum;
  }
  return out;
}

double quad_blockdiag(const std::vector<Eigen::MatrixXcd>& blocks,
                      const std::vector<int>& aps, const Eigen::VectorXcd& v,
                      int N) {
  double out = 0;
  for (size_t a = 0; a < aps.size(); ++a) {
    Eigen::VectorXcd seg = v.segment(a * N, N);
    out += std::real(seg.dot(blocks[aps[a]] * seg));
  }
  return out;
}

}  // namespace

std::vector<int> active_rows(const std::vector<int>& serving, int N) {
  std::vector<int> rows;
  rows.reserve(serving.size() * N);
  for (int l : serving)
    for (int n = 0; n < N; ++n) rows.push_back(l * N + n);
  return rows;
}

Eigen::VectorXcd centralized_combiner(Combiner scheme,
                                      const EstimationStatistics& st,
                                      const ClusterState& cl,
                                      const ChannelDraw& draw,
                                      const Eigen::VectorXd& p, int k) {
  const int N = st.N;
  const std::vector<int>& Mk = cl.serving[k];
  std::vector<int> rows = active_rows(Mk, N);
  const int n = static_cast<int>(rows.size());
  Eigen::VectorXcd v_active;

  Eigen::VectorXcd hk = gather(draw.hhat, k, rows);
  switch (scheme) {
    case Combiner::mr:
      v_active = hk;
      break;
    case Combiner::mmse:
    case Combiner::p_mmse: {
      Eigen::MatrixXcd A =
          st.noise_ul * Eigen::MatrixXcd::Identity(n, n);
      auto add_ue = [&](int i) {
        if (p(i) == 0) return;
        Eigen::VectorXcd hi = gather(draw.hhat, i, rows);
        A += p(i) * hi * hi.adjoint();
        for (size_t a = 0; a < Mk.size(); ++a)
          A.block(a * N, a * N, N, N) += p(i) * st.Cm(i, Mk[a]);
      };
      if (scheme == Combiner::mmse)
        for (int i = 0; i < st.K; ++i) add_ue(i);
      else
        for (int i : cl.coservice[k]) add_ue(i);
      v_active = p(k) * A.llt().solve(hk);
      break;
    }
    case Combiner::p_rzf: {
      std::vector<int> sel;
      int pos_k = -1;
      for (int i : cl.coservice[k])
        if (p(i) > 0 || i == k) {
          if (i == k) pos_k = static_cast<int>(sel.size());
          sel.push_back(i);
        }
      if (pos_k < 0) throw std::invalid_argument("UE k missing from S_k");
      Eigen::MatrixXcd Hs(n, sel.size());
      Eigen::VectorXd pinv(sel.size());
      for (size_t j = 0; j < sel.size(); ++j) {
        Hs.col(j) = gather(draw.hhat, sel[j], rows);
        pinv(j) = p(sel[j]) > 0 ? 1.0 / p(sel[j]) : 1e30;
      }
      Eigen::MatrixXcd G = Hs.adjoint() * Hs;
      G += (st.noise_ul * pinv).asDiagonal();
      Eigen::VectorXcd e = Eigen::VectorXcd::Zero(sel.size());
      e(pos_k) = 1.0;
      v_active = p(k) * Hs * G.llt().solve(e);
      break;
    }
  }

  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(st.L * N);
  for (int i = 0; i < n; ++i) v(rows[i]) = v_active(i);
  return v;
}

Eigen::VectorXcd local_combiner(LocalCombiner scheme,
                                const EstimationStatistics& st,
                                const ClusterState& cl, const ChannelDraw& draw,
                                const Eigen::VectorXd& p, int k, int l) {
  const int N = st.N;
  Eigen::VectorXcd hk = draw.hhat.col(k).segment(l * N, N);
  if (scheme == LocalCombiner::mr) return hk;
  Eigen::MatrixXcd A = st.noise_ul * Eigen::MatrixXcd::Identity(N, N);
  auto add_ue = [&](int i) {
    Eigen::VectorXcd hi = draw.hhat.col(i).segment(l * N, N);
    A += p(i) * (hi * hi.adjoint() + st.Cm(i, l));
  };
  if (scheme == LocalCombiner::l_mmse)
    for (int i = 0; i < st.K; ++i) add_ue(i);
  else
    for (int i : cl.served[l]) add_ue(i);
  return p(k) * A.llt().solve(hk);
}

DistributedExpectations distributed_expectations_mc(
    LocalCombiner scheme, const EstimationStatistics& st,
    const ClusterState& cl, const Eigen::VectorXd& p, int num_draws,
    std::mt19937_64& rng) {
  const int K = st.K, N = st.N;
  if (num_draws <= 0) throw std::invalid_argument("num_draws must be positive");
  DistributedExpectations ex;
  ex.num_draws = num_draws;
  ex.g_mean.resize(K);
  ex.G.resize(K);
  ex.noise.resize(K);
  for (int k = 0; k < K; ++k) {
    int m = static_cast<int>(cl.serving[k].size());
    ex.g_mean[k] = Eigen::VectorXcd::Zero(m);
    ex.noise[k] = Eigen::VectorXd::Zero(m);
    ex.G[k].assign(K, Eigen::MatrixXcd::Zero(m, m));
  }

  std::vector<Eigen::MatrixXcd> g(K);  // g[k]: |M_k| x K, row a = AP serving[k][a]
  for (int k = 0; k < K; ++k)
    g[k].resize(cl.serving[k].size(), K);

  for (int d = 0; d < num_draws; ++d) {
    ChannelDraw draw = sample_channel_draw(st, rng);
    for (int k = 0; k < K; ++k) {
      const auto& Mk = cl.serving[k];
      for (size_t a = 0; a < Mk.size(); ++a) {
        int l = Mk[a];
        Eigen::VectorXcd v = local_combiner(scheme, st, cl, draw, p, k, l);
        ex.noise[k](a) += v.squaredNorm();
        for (int i = 0; i < K; ++i)
          g[k](a, i) = v.dot(draw.h.col(i).segment(l * N, N));
      }
    }
    for (int k = 0; k < K; ++k) {
      ex.g_mean[k] += g[k].col(k);
      for (int i = 0; i < K; ++i)
        ex.G[k][i] += g[k].col(i) * g[k].col(i).adjoint();
    }
  }
  for (int k = 0; k < K; ++k) {
    ex.g_mean[k] /= num_draws;
    ex.noise[k] /= num_draws;
    for (int i = 0; i < K; ++i) ex.G[k][i] /= num_draws;
  }
  return ex;
}

DistributedExpectations distributed_expectations_mr(
    const EstimationStatistics& st, const ClusterState& cl) {
  const int K = st.K;
  const double tau_p = st.tau_p;
  DistributedExpectations ex;
  ex.num_draws = 0;
  ex.g_mean.resize(K);
  ex.G.resize(K);
  ex.noise.resize(K);

  for (int k = 0; k < K; ++k) {
    const auto& Mk = cl.serving[k];
    const int m = static_cast<int>(Mk.size());
    ex.g_mean[k] = Eigen::VectorXcd::Zero(m);
    ex.noise[k] = Eigen::VectorXd::Zero(m);
    ex.G[k].assign(K, Eigen::MatrixXcd::Zero(m, m));

    // per-AP solves Psi^{-1} R_kl, reused across interferers
    std::vector<Eigen::MatrixXcd> psi_inv_Rk(m);
    for (int a = 0; a < m; ++a) {
      int l = Mk[a];
      Eigen::LLT<Eigen::MatrixXcd> llt(st.Psim(st.pilot[k], l));
      psi_inv_Rk[a] = llt.solve(st.Rm(k, l));
      ex.noise[k](a) = st.Phim(k, l).real().trace();
    }

    for (int i = 0; i < K; ++i) {
      bool shares = st.pilot[i] == st.pilot[k];
      Eigen::VectorXcd mean = Eigen::VectorXcd::Zero(m);
      for (int a = 0; a < m; ++a) {
        int l = Mk[a];
        double eta_k = st.pilot_power(k), eta_i = st.pilot_power(i);
        std::complex<double> cross =
            (st.Rm(i, l) * psi_inv_Rk[a]).trace();  // tr(R_il Psi^-1 R_kl)
        if (shares)
          mean(a) = std::sqrt(eta_k * eta_i) * tau_p * cross;
        // diagonal of the second moment
        double base =
            std::real((st.Rm(i, l) * st.Phim(k, l)).trace());
        double coh = shares ? eta_k * eta_i * tau_p * tau_p * std::norm(cross)
                            : 0.0;
        ex.G[k][i](a, a) = base + coh;
      }
      if (shares)
        for (int a = 0; a < m; ++a)
          for (int b = 0; b < m; ++b)
            if (a != b) ex.G[k][i](a, b) = mean(a) * std::conj(mean(b));
      if (i == k) ex.g_mean[k] = mean;
    }
  }
  return ex;
}

Eigen::VectorXcd lsfd_weights(LsfdMode mode, const DistributedExpectations& ex,
                              const ClusterState& cl, const Eigen::VectorXd& p,
                              double noise_ul, int k,
                              std::vector<std::string>* warnings) {
  const int m = static_cast<int>(ex.g_mean[k].size());
  if (mode == LsfdMode::none) return Eigen::VectorXcd::Ones(m);

  Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(m, m);
  if (mode == LsfdMode::opt) {
    for (int i = 0; i < static_cast<int>(p.size()); ++i)
      A += p(i) * ex.G[k][i];
  } else {
    for (int i : cl.coservice[k]) A += p(i) * ex.G[k][i];
  }
  A += (noise_ul * ex.noise[k]).asDiagonal();

  Eigen::LDLT<Eigen::MatrixXcd> ldlt(A);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
    double tr = std::max(A.real().trace(), kTiny);
    A += (1e-12 * tr) * Eigen::MatrixXcd::Identity(m, m);
    ldlt.compute(A);
    if (warnings)
      warnings->push_back("LSFD system for UE " + std::to_string(k) +
                          " was singular; applied 1e-12*trace ridge");
  }
  return ldlt.solve(ex.g_mean[k]);
}

double distributed_sinr(const DistributedExpectations& ex,
                        const Eigen::VectorXcd& a, const Eigen::VectorXd& p,
                        double noise_ul, int k) {
  std::complex<double> mean = a.dot(ex.g_mean[k]);
  double num = p(k) * std::norm(mean);
  double den = -num;
  for (int i = 0; i < static_cast<int>(p.size()); ++i)
    den += p(i) * std::real(a.dot(ex.G[k][i] * a));
  for (int i = 0; i < a.size(); ++i)
    den += noise_ul * std::norm(a(i)) * ex.noise[k](i);
  return num / std::max(den, kTiny);
}

namespace {

SeResult average_log2(const std::vector<std::vector<double>>& per_draw,
                      double prelog) {
  const int K = static_cast<int>(per_draw.size());
  SeResult r;
  r.se.resize(K);
  r.std_error.resize(K);
  for (int k = 0; k < K; ++k) {
    const auto& xs = per_draw[k];
    double n = static_cast<double>(xs.size());
    double mean = 0;
    for (double x : xs) mean += x;
    mean /= n;
    double var = 0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var = n > 1 ? var / (n - 1) : 0.0;
    r.se(k) = prelog * mean;
    r.std_error(k) = prelog * std::sqrt(var / n);
  }
  return r;
}

}  // namespace

double centralized_sinr(const EstimationStatistics& st, const ClusterState& cl,
                        const ChannelDraw& draw, const Eigen::VectorXd& p,
                        const Eigen::VectorXcd& v, int k) {
  const int K = st.K, N = st.N;
  std::vector<int> rows = active_rows(cl.serving[k], N);
  Eigen::VectorXcd va = gather(v, 0, rows);
  double num = p(k) * std::norm(v.dot(draw.hhat.col(k)));
  double den = 0;
  for (int i = 0; i < K; ++i)
    if (i != k) den += p(i) * std::norm(v.dot(draw.hhat.col(i)));
  for (size_t a = 0; a < cl.serving[k].size(); ++a) {
    int l = cl.serving[k][a];
    Eigen::VectorXcd seg = va.segment(a * N, N);
    for (int i = 0; i < K; ++i)
      den += p(i) * std::real(seg.dot(st.Cm(i, l) * seg));
  }
  den += st.noise_ul * v.squaredNorm();
  return num / std::max(den, kTiny);
}

SeResult uplink_se_centralized(Combiner scheme, const EstimationStatistics& st,
                               const ClusterState& cl, const Eigen::VectorXd& p,
                               double prelog, int num_draws,
                               std::mt19937_64& rng) {
  const int K = st.K, N = st.N;
  auto Csum = weighted_error_cov(st, p);
  std::vector<std::vector<double>> log_sinr(K);
  for (int d = 0; d < num_draws; ++d) {
    ChannelDraw draw = sample_channel_draw(st, rng);
    for (int k = 0; k < K; ++k) {
      Eigen::VectorXcd v = centralized_combiner(scheme, st, cl, draw, p, k);
      std::vector<int> rows = active_rows(cl.serving[k], N);
      Eigen::VectorXcd va = gather(v, 0, rows);
      double num = p(k) * std::norm(v.dot(draw.hhat.col(k)));
      double den = 0;
      for (int i = 0; i < K; ++i)
        if (i != k) den += p(i) * std::norm(v.dot(draw.hhat.col(i)));
      den += quad_blockdiag(Csum, cl.serving[k], va, N);
      den += st.noise_ul * v.squaredNorm();
      log_sinr[k].push_back(std::log2(1.0 + num / std::max(den, kTiny)));
    }
  }
  return average_log2(log_sinr, prelog);
}

SeResult uplink_se_uatf(Combiner scheme, const EstimationStatistics& st,
                        const ClusterState& cl, const Eigen::VectorXd& p,
                        double prelog, int num_draws, std::mt19937_64& rng) {
  const int K = st.K;
  Eigen::VectorXcd m1 = Eigen::VectorXcd::Zero(K);
  Eigen::MatrixXd m2 = Eigen::MatrixXd::Zero(K, K);
  Eigen::VectorXd nn = Eigen::VectorXd::Zero(K);
  for (int d = 0; d < num_draws; ++d) {
    ChannelDraw draw = sample_channel_draw(st, rng);
    for (int k = 0; k < K; ++k) {
      Eigen::VectorXcd v = centralized_combiner(scheme, st, cl, draw, p, k);
      m1(k) += v.dot(draw.h.col(k));
      for (int i = 0; i < K; ++i) m2(k, i) += std::norm(v.dot(draw.h.col(i)));
      nn(k) += v.squaredNorm();
    }
  }
  m1 /= num_draws;
  m2 /= num_draws;
  nn /= num_draws;
  SeResult r;
  r.se.resize(K);
  r.std_error = Eigen::VectorXd::Zero(K);
  for (int k = 0; k < K; ++k) {
    double num = p(k) * std::norm(m1(k));
    double den = -num + st.noise_ul * nn(k);
    for (int i = 0; i < K; ++i) den += p(i) * m2(k, i);
    r.se(k) = prelog * std::log2(1.0 + num / std::max(den, kTiny));
  }
  return r;
}

SeResult uplink_se_distributed(const DistributedExpectations& ex, LsfdMode lsfd,
                               const ClusterState& cl, const Eigen::VectorXd& p,
                               double noise_ul, double prelog,
                               std::vector<std::string>* warnings) {
  const int K = static_cast<int>(ex.g_mean.size());
  SeResult r;
  r.se.resize(K);
  r.std_error = Eigen::VectorXd::Zero(K);
  for (int k = 0; k < K; ++k) {
    Eigen::VectorXcd a = lsfd_weights(lsfd, ex, cl, p, noise_ul, k, warnings);
    r.se(k) = prelog * std::log2(1.0 + distributed_sinr(ex, a, p, noise_ul, k));
  }
  return r;
}

SeResult uplink_se_genie_centralized(Combiner scheme,
                                     const EstimationStatistics& st,
                                     const ClusterState& cl,
                                     const Eigen::VectorXd& p, double prelog,
                                     int num_draws, std::mt19937_64& rng) {
  const int K = st.K;
  std::vector<std::vector<double>> log_sinr(K);
  for (int d = 0; d < num_draws; ++d) {
    ChannelDraw draw = sample_channel_draw(st, rng);
    for (int k = 0; k < K; ++k) {
      Eigen::VectorXcd v = centralized_combiner(scheme, st, cl, draw, p, k);
      double num = p(k) * std::norm(v.dot(draw.h.col(k)));
      double den = st.noise_ul * v.squaredNorm();
      for (int i = 0; i < K; ++i)
        if (i != k) den += p(i) * std::norm(v.dot(draw.h.col(i)));
      log_sinr[k].push_back(std::log2(1.0 + num / std::max(den, kTiny)));
    }
  }
  return average_log2(log_sinr, prelog);
}

SeResult uplink_se_genie_distributed(LocalCombiner scheme,
                                     const DistributedExpectations& ex,
                                     LsfdMode lsfd,
                                     const EstimationStatistics& st,
                                     const ClusterState& cl,
                                     const Eigen::VectorXd& p, double prelog,
                                     int num_draws, std::mt19937_64& rng) {
  const int K = st.K, N = st.N;
  std::vector<Eigen::VectorXcd> a(K);
  for (int k = 0; k < K; ++k)
    a[k] = lsfd_weights(lsfd, ex, cl, p, st.noise_ul, k);

  std::vector<std::vector<double>> log_sinr(K);
  for (int d = 0; d < num_draws; ++d) {
    ChannelDraw draw = sample_channel_draw(st, rng);
    for (int k = 0; k < K; ++k) {
      const auto& Mk = cl.serving[k];
      Eigen::MatrixXcd g(Mk.size(), K);
      double noise_term = 0;
      for (size_t idx = 0; idx < Mk.size(); ++idx) {
        int l = Mk[idx];
        Eigen::VectorXcd v = local_combiner(scheme, st, cl, draw, p, k, l);
        noise_term += std::norm(a[k](idx)) * v.squaredNorm();
        for (int i = 0; i < K; ++i)
          g(idx, i) = v.dot(draw.h.col(i).segment(l * N, N));
      }
      Eigen::RowVectorXcd combined = a[k].adjoint() * g;
      double num = p(k) * std::norm(combined(k));
      double den = st.noise_ul * noise_term;
      for (int i = 0; i < K; ++i)
        if (i != k) den += p(i) * std::norm(combined(i));
      log_sinr[k].push_back(std::log2(1.0 + num / std::max(den, kTiny)));
    }
  }
  return average_log2(log_sinr, prelog);
}

SeResult uplink_se_cellular(const EstimationStatistics& st,
                            const ClusterState& cl, const Eigen::VectorXd& p,
                            double prelog, int num_draws,
                            std::mt19937_64& rng) {
  const int K = st.K, N = st.N;
  std::vector<int> serving_ap(K);
  for (int k = 0; k < K; ++k) {
    Eigen::VectorXd beta_row(st.L);
    for (int l = 0; l < st.L; ++l) beta_row(l) = st.beta(k, l);
    serving_ap[k] = small_cell_selection(beta_row, cl.serving[k]);
  }
  std::vector<std::vector<double>> log_sinr(K);
  for (int d = 0; d < num_draws; ++d) {
    ChannelDraw draw = sample_channel_draw(st, rng);
    for (int k = 0; k < K; ++k) {
      int l = serving_ap[k];
      Eigen::MatrixXcd A = st.noise_ul * Eigen::MatrixXcd::Identity(N, N);
      for (int i = 0; i < K; ++i) {
        A += p(i) * st.Cm(i, l);
        if (i != k) {
          Eigen::VectorXcd hi = draw.hhat.col(i).segment(l * N, N);
          A += p(i) * hi * hi.adjoint();
        }
      }
      Eigen::VectorXcd hk = draw.hhat.col(k).segment(l * N, N);
      double sinr = p(k) * std::real(hk.dot(A.llt().solve(hk)));
      log_sinr[k].push_back(std::log2(1.0 + sinr));
    }
  }
  return average_log2(log_sinr, prelog);
}

double mr_gamma_n1(const EstimationStatistics& st, int k, int l) {
  if (st.N != 1) throw std::invalid_argument("closed form requires N = 1");
  double beta_kl = st.beta(k, l);
  double den = st.noise_ul;
  for (int i = 0; i < st.K; ++i)
    if (st.pilot[i] == st.pilot[k])
      den += st.pilot_power(i) * st.tau_p * st.beta(i, l);
  return st.pilot_power(k) * st.tau_p * beta_kl * beta_kl / den;
}

}  // namespace cellfree
