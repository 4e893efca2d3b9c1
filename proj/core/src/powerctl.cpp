#include "cellfree/powerctl.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace cellfree {

namespace {

constexpr double kTiny = 1e-300;
constexpr int kDefaultMaxIter = 10000;

struct Trace {
  std::ofstream out;
  explicit Trace(const std::string& path) {
    if (!path.empty()) {
      out.open(path);
      out << "iteration,objective,min_sinr,max_sinr\n";
    }
  }
  void row(int it, double obj, double lo, double hi) {
    if (out.is_open()) out << it << ',' << obj << ',' << lo << ',' << hi << '\n';
  }
};

double tol_or(const SolverOptions& opt, double fallback) {
  return opt.tol > 0 ? opt.tol : fallback;
}

void perturb_zero_couplings(SinrCoefficients& co,
                            std::vector<std::string>* warnings) {
  double cmax = co.c.maxCoeff();
  if (cmax <= 0) cmax = 1.0;
  bool touched = false;
  for (int k = 0; k < co.c.rows(); ++k)
    for (int i = 0; i < co.c.cols(); ++i)
      if (co.c(k, i) <= 0) {
        co.c(k, i) = 1e-12 * cmax;
        touched = true;
      }
  if (touched && warnings)
    warnings->push_back(
        "zero interference couplings perturbed by 1e-12*max(c) to meet the "
        "positivity conditions of the fixed-point convergence guarantee");
}

// the per-AP load of a centralized downlink allocation
double max_ap_load(const SinrCoefficients& co, const Eigen::VectorXd& rho) {
  Eigen::VectorXd load = co.ap_weight.transpose() * rho;
  return load.maxCoeff();
}

PowerVector maxmin_fixedpoint_impl(const SinrCoefficients& base,
                                   const SolverOptions& opt, bool per_ap) {
  PowerVector out;
  SinrCoefficients co = base;
  perturb_zero_couplings(co, &out.warnings);
  const int K = static_cast<int>(co.b.size());
  const double eps = tol_or(opt, 1e-5);
  Trace trace(opt.trace_csv);

  Eigen::VectorXd p = Eigen::VectorXd::Constant(K, co.p_max);
  if (per_ap) p *= co.p_max / std::max(max_ap_load(co, p), kTiny);

  Eigen::VectorXd sinr(K);
  for (int it = 0; it < opt.max_iter; ++it) {
    for (int k = 0; k < K; ++k) sinr(k) = sinr_at(co, p, k);
    double lo = sinr.minCoeff(), hi = sinr.maxCoeff();
    trace.row(it, lo, lo, hi);
    if (hi - lo <= eps) {
      out.p = p;
      out.objective = lo;
      out.iterations = it;
      out.converged = true;
      return out;
    }
    for (int k = 0; k < K; ++k) p(k) /= std::max(sinr(k), kTiny);
    double scale = per_ap ? co.p_max / std::max(max_ap_load(co, p), kTiny)
                          : co.p_max / std::max(p.maxCoeff(), kTiny);
    p *= scale;
  }
  throw std::runtime_error("max-min fixed point did not converge within " +
                           std::to_string(opt.max_iter) + " iterations");
}

// weighted-MMSE pieces for the scalar-power forms
void optimal_u_d(const SinrCoefficients& co, const Eigen::VectorXd& p,
                 Eigen::VectorXd& u, Eigen::VectorXd& d) {
  const int K = static_cast<int>(co.b.size());
  for (int k = 0; k < K; ++k) {
    double denom = co.b(k) * p(k) + co.c.row(k).dot(p) + co.noise(k);
    u(k) = std::sqrt(co.b(k) * p(k)) / std::max(denom, kTiny);
    double e = u(k) * u(k) * denom - 2 * u(k) * std::sqrt(co.b(k) * p(k)) + 1;
    d(k) = 1.0 / std::max(e, kTiny);
  }
}

double wmmse_objective(const SinrCoefficients& co, const Eigen::VectorXd& p,
                       const Eigen::VectorXd& u, const Eigen::VectorXd& d) {
  double f = 0;
  for (int k = 0; k < co.b.size(); ++k) {
    double denom = co.b(k) * p(k) + co.c.row(k).dot(p) + co.noise(k);
    double e = u(k) * u(k) * denom - 2 * u(k) * std::sqrt(co.b(k) * p(k)) + 1;
    f += d(k) * e - std::log(d(k));
  }
  return f;
}

}  // namespace

double sinr_at(const SinrCoefficients& co, const Eigen::VectorXd& p, int k) {
  if (co.form == SinrForm::dl_distributed)
    throw std::invalid_argument("scalar powers passed to a distributed form");
  return co.b(k) * p(k) /
         std::max(co.c.row(k).dot(p) + co.noise(k), kTiny);
}

double sinr_at_dist(const SinrCoefficients& co,
                    const std::vector<Eigen::VectorXd>& rt, int k) {
  double sig = co.b_dist[k].dot(rt[k]);
  sig *= sig;
  double den = co.noise(k) - sig;
  for (size_t i = 0; i < rt.size(); ++i)
    den += rt[i].dot(co.C_dist[k][i] * rt[i]);
  return sig / std::max(den, kTiny);
}

SinrCoefficients ul_coefficients_centralized(const CentralizedDlMoments& m,
                                             double noise_ul, double p_max) {
  const int K = static_cast<int>(m.mean.size());
  SinrCoefficients co;
  co.form = SinrForm::ul_generic;
  co.b.resize(K);
  co.c.resize(K, K);
  co.noise = Eigen::VectorXd::Constant(K, noise_ul);
  co.p_max = p_max;
  for (int k = 0; k < K; ++k) {
    co.b(k) = std::norm(m.mean(k));
    for (int i = 0; i < K; ++i)
      co.c(k, i) = m.second(i, k) - (i == k ? co.b(k) : 0.0);
  }
  return co;
}

SinrCoefficients ul_coefficients_distributed(
    const DistributedExpectations& ex, const ClusterState& cl,
    const std::vector<Eigen::VectorXcd>& lsfd, double noise_ul, double p_max) {
  const int K = static_cast<int>(ex.g_mean.size());
  SinrCoefficients co;
  co.form = SinrForm::ul_generic;
  co.b.resize(K);
  co.c.resize(K, K);
  co.noise.resize(K);
  co.p_max = p_max;
  for (int k = 0; k < K; ++k) {
    const Eigen::VectorXcd& a = lsfd[k];
    co.b(k) = std::norm(a.dot(ex.g_mean[k]));
    double nn = 0;
    for (int j = 0; j < a.size(); ++j)
      nn += std::norm(a(j)) * ex.noise[k](j);
    co.noise(k) = noise_ul * nn;
    for (int i = 0; i < K; ++i)
      co.c(k, i) =
          std::real(a.dot(ex.G[k][i] * a)) - (i == k ? co.b(k) : 0.0);
  }
  (void)cl;
  return co;
}

SinrCoefficients dl_coefficients_centralized(const CentralizedDlMoments& m,
                                             const ClusterState& cl,
                                             double noise_dl, double rho_max) {
  const int K = static_cast<int>(m.mean.size());
  const int L = static_cast<int>(cl.served.size());
  SinrCoefficients co;
  co.form = SinrForm::dl_centralized;
  co.b.resize(K);
  co.c.resize(K, K);
  co.noise = Eigen::VectorXd::Constant(K, noise_dl);
  co.p_max = rho_max;
  co.ap_weight = Eigen::MatrixXd::Zero(K, L);
  for (int k = 0; k < K; ++k) {
    co.b(k) = std::norm(m.mean(k));
    for (int i = 0; i < K; ++i)
      co.c(k, i) = m.second(k, i) - (i == k ? co.b(k) : 0.0);
    double n = std::max(m.norm(k), kTiny);
    for (size_t a = 0; a < cl.serving[k].size(); ++a)
      co.ap_weight(k, cl.serving[k][a]) = m.per_ap_norm[k](a) / n;
  }
  return co;
}

SinrCoefficients dl_coefficients_distributed(const DistributedDlCoefficients& dl,
                                             const ClusterState& cl,
                                             double noise_dl, double rho_max) {
  const int K = static_cast<int>(dl.b.size());
  const int L = static_cast<int>(cl.served.size());
  SinrCoefficients co;
  co.form = SinrForm::dl_distributed;
  co.noise = Eigen::VectorXd::Constant(K, noise_dl);
  co.p_max = rho_max;
  co.served = cl.served;
  co.b_dist.assign(K, Eigen::VectorXd::Zero(L));
  co.C_dist.assign(K, std::vector<Eigen::MatrixXd>(K));

  // phases that make every signal coefficient real nonnegative
  std::vector<Eigen::VectorXcd> phase(K);
  for (int i = 0; i < K; ++i) {
    phase[i].resize(dl.b[i].size());
    for (int a = 0; a < dl.b[i].size(); ++a) {
      double mag = std::abs(dl.b[i](a));
      phase[i](a) = mag > 0 ? dl.b[i](a) / mag : 1.0;
    }
  }
  double bscale = kTiny;
  for (int k = 0; k < K; ++k)
    for (size_t a = 0; a < cl.serving[k].size(); ++a)
      bscale = std::max(bscale, std::abs(dl.b[k](a)));
  for (int k = 0; k < K; ++k)
    for (size_t a = 0; a < cl.serving[k].size(); ++a) {
      std::complex<double> rotated = dl.b[k](a) / phase[k](a);
      if (std::abs(std::imag(rotated)) > 1e-8 * bscale)
        throw std::runtime_error(
            "signal coefficient kept a complex residual after phase rotation");
      co.b_dist[k](cl.serving[k][a]) = std::real(rotated);
    }
  for (int k = 0; k < K; ++k)
    for (int i = 0; i < K; ++i) {
      Eigen::MatrixXd C = Eigen::MatrixXd::Zero(L, L);
      for (size_t a = 0; a < cl.serving[i].size(); ++a)
        for (size_t b = 0; b < cl.serving[i].size(); ++b)
          C(cl.serving[i][a], cl.serving[i][b]) = std::real(
              dl.C[k][i](a, b) * phase[i](b) / phase[i](a));
      co.C_dist[k][i] = 0.5 * (C + C.transpose());
    }
  return co;
}

PowerVector ul_maxmin_fixedpoint(const SinrCoefficients& co,
                                 const SolverOptions& opt) {
  return maxmin_fixedpoint_impl(co, opt, false);
}

PowerVector dl_cent_maxmin_fixedpoint(const SinrCoefficients& co,
                                      const SolverOptions& opt) {
  return maxmin_fixedpoint_impl(co, opt, true);
}

PowerVector ul_sumse_bcd(const SinrCoefficients& co,
                         const Eigen::VectorXd& init,
                         const SolverOptions& opt) {
  const int K = static_cast<int>(co.b.size());
  const double eps = tol_or(opt, 1e-6);
  Trace trace(opt.trace_csv);
  PowerVector out;
  Eigen::VectorXd p =
      init.size() == K ? init : Eigen::VectorXd::Constant(K, co.p_max);
  Eigen::VectorXd u(K), d(K);
  double prev = std::numeric_limits<double>::infinity();
  for (int it = 0; it < opt.max_iter; ++it) {
    optimal_u_d(co, p, u, d);
    for (int k = 0; k < K; ++k) {
      double den = d(k) * u(k) * u(k) * co.b(k);
      for (int i = 0; i < K; ++i) den += d(i) * u(i) * u(i) * co.c(i, k);
      double cand = co.b(k) * d(k) * d(k) * u(k) * u(k) /
                    std::max(den * den, kTiny);
      p(k) = std::min(co.p_max, cand);
    }
    double f = wmmse_objective(co, p, u, d);
    double lo = sinr_at(co, p, 0), hi = lo;
    for (int k = 1; k < K; ++k) {
      double s = sinr_at(co, p, k);
      lo = std::min(lo, s);
      hi = std::max(hi, s);
    }
    trace.row(it, f, lo, hi);
    double improve = prev - f;
    if (improve <= 0 || improve < eps * std::abs(prev)) {
      out.p = p;
      out.objective = f;
      out.iterations = it + 1;
      out.converged = true;
      return out;
    }
    prev = f;
  }
  throw std::runtime_error("sum-SE BCD did not converge within " +
                           std::to_string(opt.max_iter) + " iterations");
}

namespace {

// minimize sum_k A_k q_k^2 - B_k q_k  s.t.  sum_k w_kl q_k^2 <= p_max per AP,
// by coordinate-wise bisection on the dual multipliers (the primal solution
// for multipliers mu is q_k = B_k / (2 (A_k + sum_l mu_l w_kl))).
Eigen::VectorXd constrained_quadratic(const Eigen::VectorXd& A,
                                      const Eigen::VectorXd& B,
                                      const Eigen::MatrixXd& w, double p_max) {
  const int K = static_cast<int>(A.size());
  const int L = static_cast<int>(w.cols());
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(L);
  auto primal = [&](Eigen::VectorXd& q) {
    for (int k = 0; k < K; ++k) {
      double den = A(k) + w.row(k).dot(mu);
      q(k) = B(k) > 0 ? B(k) / std::max(2 * den, kTiny) : 0.0;
    }
  };
  Eigen::VectorXd q(K);
  for (int pass = 0; pass < 10000; ++pass) {
    double worst = 0;
    for (int l = 0; l < L; ++l) {
      auto load = [&](double m) {
        double s = 0;
        for (int k = 0; k < K; ++k)
          if (w(k, l) > 0) {
            double den = A(k) + w.row(k).dot(mu) + (m - mu(l)) * w(k, l);
            double qk = B(k) > 0 ? B(k) / std::max(2 * den, kTiny) : 0.0;
            s += w(k, l) * qk * qk;
          }
        return s;
      };
      if (load(0.0) <= p_max) {
        mu(l) = 0;
      } else {
        double hi = std::max(mu(l), 1.0);
        while (load(hi) > p_max) hi *= 2;
        double lo = 0;
        for (int b = 0; b < 200 && hi - lo > 1e-15 * (1 + hi); ++b) {
          double mid = 0.5 * (lo + hi);
          (load(mid) > p_max ? lo : hi) = mid;
        }
        mu(l) = hi;
      }
      primal(q);
      for (int ll = 0; ll < L; ++ll) {
        double excess = 0;
        for (int k = 0; k < K; ++k) excess += w(k, ll) * q(k) * q(k);
        worst = std::max(worst, excess - p_max);
      }
    }
    if (worst <= 1e-9 * p_max) break;
  }
  primal(q);
  return q;
}

}  // namespace

PowerVector dl_cent_sumse_bcd(const SinrCoefficients& co,
                              const SolverOptions& opt) {
  const int K = static_cast<int>(co.b.size());
  const double eps = tol_or(opt, 1e-6);
  Trace trace(opt.trace_csv);
  PowerVector out;
  // feasible full-power start: equal rho scaled to the most loaded AP
  Eigen::VectorXd rho = Eigen::VectorXd::Ones(K);
  rho *= co.p_max / std::max(max_ap_load(co, rho), kTiny);
  Eigen::VectorXd u(K), d(K), A(K), B(K);
  double prev = std::numeric_limits<double>::infinity();
  for (int it = 0; it < opt.max_iter; ++it) {
    optimal_u_d(co, rho, u, d);
    for (int k = 0; k < K; ++k) {
      A(k) = d(k) * u(k) * u(k) * co.b(k);
      for (int i = 0; i < K; ++i) A(k) += d(i) * u(i) * u(i) * co.c(i, k);
      B(k) = 2 * d(k) * u(k) * std::sqrt(co.b(k));
    }
    Eigen::VectorXd q = constrained_quadratic(A, B, co.ap_weight, co.p_max);
    rho = q.cwiseProduct(q);
    double f = wmmse_objective(co, rho, u, d);
    trace.row(it, f, 0, 0);
    double improve = prev - f;
    if (improve <= 0 || improve < eps * std::abs(prev)) {
      out.p = rho;
      out.objective = f;
      out.iterations = it + 1;
      out.converged = true;
      return out;
    }
    prev = f;
  }
  throw std::runtime_error("downlink sum-SE BCD did not converge within " +
                           std::to_string(opt.max_iter) + " iterations");
}

namespace {

// project per AP: clip to >= 0, then rescale every AP group whose squared
// norm exceeds the budget (exact projection onto ball ∩ orthant)
void project_per_ap(std::vector<Eigen::VectorXd>& x,
                    const std::vector<std::vector<int>>& served, double p_max) {
  const int L = static_cast<int>(served.size());
  for (auto& xk : x) xk = xk.cwiseMax(0.0);
  for (int l = 0; l < L; ++l) {
    double sq = 0;
    for (int k : served[l]) sq += x[k](l) * x[k](l);
    if (sq > p_max) {
      double s = std::sqrt(p_max / sq);
      for (int k : served[l]) x[k](l) *= s;
    }
  }
}

struct FeasibilityResult {
  bool feasible = false;
  std::vector<Eigen::VectorXd> x;
};

// Convex feasibility for a common SINR target t: minimize the squared hinge
// of the cone constraint residuals by projected gradient over the per-AP
// balls. A zero minimum certifies feasibility.
FeasibilityResult cone_feasibility(const SinrCoefficients& co, double t,
                                   std::vector<Eigen::VectorXd> x,
                                   int max_iter) {
  const int K = static_cast<int>(co.b_dist.size());
  const double st = std::sqrt((1 + t) / t);
  double scale = std::sqrt(co.noise.maxCoeff());
  for (int k = 0; k < K; ++k)
    scale = std::max(scale, st * co.b_dist[k].dot(x[k]));
  const double tol = 1e-7 * scale;

  auto residuals = [&](const std::vector<Eigen::VectorXd>& y,
                       Eigen::VectorXd& r, Eigen::VectorXd& R) {
    for (int k = 0; k < K; ++k) {
      double quad = co.noise(k);
      for (int i = 0; i < K; ++i) quad += y[i].dot(co.C_dist[k][i] * y[i]);
      R(k) = std::sqrt(quad);
      r(k) = R(k) - st * co.b_dist[k].dot(y[k]);
    }
  };

  Eigen::VectorXd r(K), R(K);
  double step = 1.0;
  FeasibilityResult res;
  residuals(x, r, R);
  double phi = r.cwiseMax(0.0).squaredNorm();
  for (int it = 0; it < max_iter; ++it) {
    if (r.maxCoeff() <= tol) {
      res.feasible = true;
      res.x = x;
      return res;
    }
    std::vector<Eigen::VectorXd> grad(K, Eigen::VectorXd::Zero(x[0].size()));
    for (int k = 0; k < K; ++k) {
      double a = std::max(r(k), 0.0);
      if (a == 0) continue;
      for (int i = 0; i < K; ++i)
        grad[i] += (2 * a / R(k)) * (co.C_dist[k][i] * x[i]);
      grad[k] -= (2 * a * st) * co.b_dist[k];
    }
    // backtracking line search on the convex hinge objective
    bool moved = false;
    for (int ls = 0; ls < 60; ++ls) {
      std::vector<Eigen::VectorXd> y(K);
      for (int k = 0; k < K; ++k) y[k] = x[k] - step * grad[k];
      project_per_ap(y, co.served, co.p_max);
      Eigen::VectorXd r2(K), R2(K);
      residuals(y, r2, R2);
      double phi2 = r2.cwiseMax(0.0).squaredNorm();
      if (phi2 < phi) {
        x = std::move(y);
        r = r2;
        R = R2;
        double drop = phi - phi2;
        phi = phi2;
        moved = true;
        step *= 1.5;
        if (drop < 1e-14 * (phi + tol * tol)) it = max_iter;  // stalled
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
  }
  res.feasible = r.maxCoeff() <= tol;
  if (res.feasible) res.x = x;
  return res;
}

std::vector<Eigen::VectorXd> per_ap_equal_start(const SinrCoefficients& co,
                                                int K, int L) {
  std::vector<Eigen::VectorXd> x(K, Eigen::VectorXd::Zero(L));
  for (int l = 0; l < L; ++l)
    for (int k : co.served[l])
      x[k](l) = std::sqrt(co.p_max / co.served[l].size());
  return x;
}

}  // namespace

PowerVector dl_dist_maxmin_bisection(const SinrCoefficients& co,
                                     const SolverOptions& opt) {
  const int K = static_cast<int>(co.b_dist.size());
  const int L = static_cast<int>(co.served.size());
  const double eps = tol_or(opt, 1e-5);
  Trace trace(opt.trace_csv);
  PowerVector out;

  std::vector<int> cluster_size(K, 0);
  for (int l = 0; l < L; ++l)
    for (int k : co.served[l]) ++cluster_size[k];

  double t_hi = std::numeric_limits<double>::infinity();
  for (int k = 0; k < K; ++k)
    t_hi = std::min(t_hi, cluster_size[k] * co.p_max *
                              co.b_dist[k].squaredNorm() / co.noise(k));
  double t_lo = 0;
  std::vector<Eigen::VectorXd> best = per_ap_equal_start(co, K, L);
  {
    // the equal start certifies a positive lower bound
    double s = std::numeric_limits<double>::infinity();
    for (int k = 0; k < K; ++k) s = std::min(s, sinr_at_dist(co, best, k));
    t_lo = s;
  }

  int it = 0;
  while (t_hi - t_lo > eps * std::max(1.0, t_lo) && it < opt.max_iter) {
    double t = 0.5 * (t_lo + t_hi);
    FeasibilityResult fr = cone_feasibility(co, t, best, 4000);
    trace.row(it, t_lo, t_lo, t_hi);
    if (fr.feasible) {
      t_lo = t;
      best = std::move(fr.x);
    } else {
      t_hi = t;
    }
    ++it;
  }
  out.rho_tilde = best;
  out.iterations = it;
  out.converged = true;
  double s = std::numeric_limits<double>::infinity();
  for (int k = 0; k < K; ++k) s = std::min(s, sinr_at_dist(co, best, k));
  out.objective = s;
  return out;
}

PowerVector dl_dist_sumse_bcd(const SinrCoefficients& co,
                              const SolverOptions& opt) {
  const int K = static_cast<int>(co.b_dist.size());
  const int L = static_cast<int>(co.served.size());
  const double eps = tol_or(opt, 1e-6);
  Trace trace(opt.trace_csv);
  PowerVector out;
  std::vector<Eigen::VectorXd> x = per_ap_equal_start(co, K, L);

  Eigen::VectorXd u(K), d(K);
  auto update_u_d = [&]() {
    for (int k = 0; k < K; ++k) {
      double quad = co.noise(k);
      for (int i = 0; i < K; ++i) quad += x[i].dot(co.C_dist[k][i] * x[i]);
      double sig = co.b_dist[k].dot(x[k]);
      u(k) = sig / std::max(quad, kTiny);
      double e = u(k) * u(k) * quad - 2 * u(k) * sig + 1;
      d(k) = 1.0 / std::max(e, kTiny);
    }
  };
  auto objective = [&]() {
    double f = 0;
    for (int k = 0; k < K; ++k) {
      double quad = co.noise(k);
      for (int i = 0; i < K; ++i) quad += x[i].dot(co.C_dist[k][i] * x[i]);
      double e =
          u(k) * u(k) * quad - 2 * u(k) * co.b_dist[k].dot(x[k]) + 1;
      f += d(k) * e - std::log(d(k));
    }
    return f;
  };

  double prev = std::numeric_limits<double>::infinity();
  for (int it = 0; it < opt.max_iter; ++it) {
    update_u_d();
    // subproblem: minimize sum_i x_i^T Q_i x_i - q_i^T x_i under per-AP balls
    std::vector<Eigen::MatrixXd> Q(K, Eigen::MatrixXd::Zero(L, L));
    std::vector<Eigen::VectorXd> qv(K);
    double lip = kTiny;
    for (int i = 0; i < K; ++i) {
      for (int k = 0; k < K; ++k)
        Q[i] += d(k) * u(k) * u(k) * co.C_dist[k][i];
      qv[i] = 2 * d(i) * u(i) * co.b_dist[i];
      lip = std::max(lip, 2 * Q[i].cwiseAbs().rowwise().sum().maxCoeff());
    }
    double step = 1.0 / lip;
    for (int pg = 0; pg < 5000; ++pg) {
      std::vector<Eigen::VectorXd> y(K);
      double move = 0;
      for (int i = 0; i < K; ++i)
        y[i] = x[i] - step * (2 * (Q[i] * x[i]) - qv[i]);
      project_per_ap(y, co.served, co.p_max);
      for (int i = 0; i < K; ++i) move = std::max(move, (y[i] - x[i]).lpNorm<Eigen::Infinity>());
      x = std::move(y);
      if (move <= 1e-9 * (1 + std::sqrt(co.p_max))) break;
    }
    double f = objective();
    trace.row(it, f, 0, 0);
    double improve = prev - f;
    if (improve <= 0 || improve < eps * std::abs(prev)) {
      out.rho_tilde = x;
      out.objective = f;
      out.iterations = it + 1;
      out.converged = true;
      return out;
    }
    prev = f;
  }
  throw std::runtime_error("distributed sum-SE BCD did not converge within " +
                           std::to_string(opt.max_iter) + " iterations");
}

namespace {

void check_exponents(double upsilon, double kappa) {
  if (upsilon < -1 || upsilon > 1)
    throw std::invalid_argument("fractional exponent must lie in [-1, 1]");
  if (kappa < 0 || kappa > 1)
    throw std::invalid_argument("norm-fraction exponent must lie in [0, 1]");
}

Eigen::VectorXd cluster_gains(const Eigen::MatrixXd& beta,
                              const ClusterState& cl) {
  const int K = static_cast<int>(cl.serving.size());
  Eigen::VectorXd g(K);
  for (int k = 0; k < K; ++k) {
    g(k) = 0;
    for (int l : cl.serving[k]) g(k) += beta(k, l);
  }
  return g;
}

}  // namespace

Eigen::VectorXd fpc_uplink(const Eigen::MatrixXd& beta, const ClusterState& cl,
                           double upsilon, double p_max) {
  check_exponents(upsilon, 0);
  Eigen::VectorXd g = cluster_gains(beta, cl);
  const int K = static_cast<int>(g.size());
  Eigen::VectorXd p(K);
  for (int k = 0; k < K; ++k) {
    double denom = 0;
    for (int i : cl.coservice[k])
      denom = std::max(denom, std::pow(g(i), upsilon));
    p(k) = p_max * std::pow(g(k), upsilon) / std::max(denom, kTiny);
  }
  return p;
}

Eigen::VectorXd fpa_dl_centralized(const Eigen::MatrixXd& beta,
                                   const ClusterState& cl,
                                   const Eigen::VectorXd& omega, double upsilon,
                                   double kappa, double rho_max) {
  check_exponents(upsilon, kappa);
  Eigen::VectorXd g = cluster_gains(beta, cl);
  const int K = static_cast<int>(g.size());
  Eigen::VectorXd rho(K);
  for (int k = 0; k < K; ++k) {
    double denom = 0;
    for (int l : cl.serving[k]) {
      double load = 0;
      for (int i : cl.served[l])
        load += std::pow(g(i), upsilon) * std::pow(omega(i), 1 - kappa);
      denom = std::max(denom, load);
    }
    rho(k) = rho_max * std::pow(g(k), upsilon) * std::pow(omega(k), -kappa) /
             std::max(denom, kTiny);
  }
  return rho;
}

Eigen::MatrixXd fpa_dl_distributed(const Eigen::MatrixXd& beta,
                                   const ClusterState& cl, double upsilon,
                                   double rho_max) {
  check_exponents(upsilon, 0);
  const int K = static_cast<int>(cl.serving.size());
  const int L = static_cast<int>(cl.served.size());
  Eigen::MatrixXd rho = Eigen::MatrixXd::Zero(K, L);
  for (int l = 0; l < L; ++l) {
    double denom = 0;
    for (int i : cl.served[l]) denom += std::pow(beta(i, l), upsilon);
    for (int k : cl.served[l])
      rho(k, l) = rho_max * std::pow(beta(k, l), upsilon) / std::max(denom, kTiny);
  }
  return rho;
}

}  // namespace cellfree
