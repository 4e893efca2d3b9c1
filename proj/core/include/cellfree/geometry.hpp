#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace cellfree {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// All powers are linear mW; pathloss/shadowing parameters in dB.
struct NetworkConfig {
  int num_aps = 100;          // L
  int antennas_per_ap = 4;    // N
  int num_ues = 40;           // K
  double area_side = 1000.0;  // square coverage area with wrap-around [m]

  int coherence_block = 200;  // tau_c [samples]
  int pilot_length = 10;      // tau_p
  int ul_data = 190;          // tau_u
  int dl_data = 0;            // tau_d

  double max_ul_power = 100.0;  // per-UE data power cap [mW]
  double max_dl_power = 200.0;  // per-AP power cap [mW]
  double pilot_power = 100.0;   // per-UE pilot power [mW]
  double noise_ul = 3.9810717055349693e-10;  // -94 dBm
  double noise_dl = 3.9810717055349693e-10;

  double ap_height = 10.0;   // vertical AP-UE separation [m]
  double shadow_std = 4.0;   // shadow fading std [dB]; 0 disables shadowing
  double pathloss_intercept = -30.5;      // channel gain at 1 m [dB]
  double pathloss_exponent_coeff = 36.7;  // slope of -coeff*log10(d)

  std::uint64_t rng_seed = 1;
};

// Throws ConfigError on inconsistent parameters (tau_p+tau_u+tau_d != tau_c,
// non-positive dimensions, negative powers).
void validate(const NetworkConfig& cfg);

// Presets: "running-example-400x1", "running-example-100x4", "intro-benchmark".
NetworkConfig preset(const std::string& name);

// JSON object with keys mirroring the NetworkConfig field names; missing keys
// keep the defaults of `base`. Throws ConfigError on unknown keys.
NetworkConfig config_from_json(const std::string& json_text,
                               const NetworkConfig& base = {});
std::string config_to_json(const NetworkConfig& cfg);

enum class ApLayout { grid, uniform };

struct Positions {
  Eigen::Matrix2Xd aps;  // 2 x L, coordinates in [0, area_side)
  Eigen::Matrix2Xd ues;  // 2 x K
};

// Grid layout requires a square number of APs (ConfigError otherwise); cells
// are area_side/sqrt(L) wide with APs at the cell centers. UEs are always
// dropped uniformly at random.
Positions deploy(const NetworkConfig& cfg, ApLayout layout, std::mt19937_64& rng);

// Shortest distance between two points on the wrap-around torus (minimum over
// the 9 shifted copies of the area).
double wrap_distance(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                     double area_side);

// K x L matrix of linear large-scale fading coefficients beta_kl, combining
// distance-based pathloss over d = sqrt(wrap^2 + height^2) with spatially
// correlated log-normal shadow fading (decorrelation distance 9 m between
// UEs seen from the same AP, independent across APs). with_shadowing=false
// gives the pure pathloss median.
Eigen::MatrixXd large_scale_fading(const NetworkConfig& cfg,
                                   const Positions& pos, std::mt19937_64& rng,
                                   bool with_shadowing = true);

// Shadow realizations in dB (K x L), exposed for statistical tests.
Eigen::MatrixXd shadow_fading_db(const NetworkConfig& cfg, const Positions& pos,
                                 std::mt19937_64& rng);

}  // namespace cellfree
