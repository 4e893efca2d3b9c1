#pragma once

// shared helpers for building small synthetic networks in the unit tests

#include <random>
#include <vector>

#include "cellfree/correlation.hpp"
#include "cellfree/estimation.hpp"

namespace testutil {

// Random local-scattering correlation matrices with random gains in
// [0.1, 1.1] * scale and random angles; K*L matrices indexed k*L + l.
inline std::vector<Eigen::MatrixXcd> random_R(int K, int L, int N,
                                              std::mt19937_64& rng,
                                              double scale = 1.0,
                                              double asd_deg = 15.0) {
  std::uniform_real_distribution<double> ug(0.1, 1.1), ua(-M_PI / 3, M_PI / 3);
  double asd = asd_deg * M_PI / 180.0;
  std::vector<Eigen::MatrixXcd> R(K * L);
  for (int k = 0; k < K; ++k)
    for (int l = 0; l < L; ++l)
      R[k * L + l] = cellfree::local_scattering(N, ua(rng), ua(rng) / 3, asd,
                                                asd / 2, ug(rng) * scale);
  return R;
}

inline Eigen::MatrixXd beta_of(const std::vector<Eigen::MatrixXcd>& R, int K,
                               int L, int N) {
  Eigen::MatrixXd beta(K, L);
  for (int k = 0; k < K; ++k)
    for (int l = 0; l < L; ++l)
      beta(k, l) = R[k * L + l].real().trace() / N;
  return beta;
}

}  // namespace testutil
