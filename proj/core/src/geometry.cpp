#include "cellfree/geometry.hpp"

#include <json.hpp>

#include <cmath>
#include <Eigen/Cholesky>

namespace cellfree {

void validate(const NetworkConfig& cfg) {
  if (cfg.num_aps <= 0 || cfg.antennas_per_ap <= 0 || cfg.num_ues <= 0)
    throw ConfigError("num_aps, antennas_per_ap and num_ues must be positive");
  if (cfg.area_side <= 0) throw ConfigError("area_side must be positive");
  if (cfg.pilot_length <= 0 || cfg.coherence_block <= 0)
    throw ConfigError("pilot_length and coherence_block must be positive");
  if (cfg.ul_data < 0 || cfg.dl_data < 0)
    throw ConfigError("data segment lengths must be nonnegative");
  if (cfg.pilot_length + cfg.ul_data + cfg.dl_data != cfg.coherence_block)
    throw ConfigError(
        "pilot_length + ul_data + dl_data must equal coherence_block");
  if (cfg.max_ul_power < 0 || cfg.max_dl_power < 0 || cfg.pilot_power < 0)
    throw ConfigError("transmit powers must be nonnegative");
  if (cfg.noise_ul <= 0 || cfg.noise_dl <= 0)
    throw ConfigError("noise powers must be positive");
  if (cfg.shadow_std < 0) throw ConfigError("shadow_std must be nonnegative");
  if (cfg.ap_height < 0) throw ConfigError("ap_height must be nonnegative");
}

static double dbm(double x) { return std::pow(10.0, x / 10.0); }

NetworkConfig preset(const std::string& name) {
  NetworkConfig cfg;  // defaults match the 100-AP, 4-antenna running example
  if (name == "running-example-100x4") {
    return cfg;
  } else if (name == "running-example-400x1") {
    cfg.num_aps = 400;
    cfg.antennas_per_ap = 1;
    return cfg;
  } else if (name == "intro-benchmark") {
    // Single-UE uplink SNR comparison on a 400 m x 400 m grid of 64 APs.
    cfg.num_aps = 64;
    cfg.antennas_per_ap = 1;
    cfg.num_ues = 1;
    cfg.area_side = 400.0;
    cfg.coherence_block = 200;
    cfg.pilot_length = 1;
    cfg.ul_data = 199;
    cfg.dl_data = 0;
    cfg.max_ul_power = dbm(10.0);
    cfg.pilot_power = dbm(10.0);
    cfg.noise_ul = dbm(-96.0);
    cfg.noise_dl = dbm(-96.0);
    cfg.shadow_std = 0.0;
    return cfg;
  }
  throw ConfigError("unknown preset: " + name);
}

NetworkConfig config_from_json(const std::string& json_text,
                               const NetworkConfig& base) {
  nlohmann::json j = nlohmann::json::parse(json_text);
  NetworkConfig cfg = base;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& key = it.key();
    if (key == "num_aps") cfg.num_aps = it->get<int>();
    else if (key == "antennas_per_ap") cfg.antennas_per_ap = it->get<int>();
    else if (key == "num_ues") cfg.num_ues = it->get<int>();
    else if (key == "area_side") cfg.area_side = it->get<double>();
    else if (key == "coherence_block") cfg.coherence_block = it->get<int>();
    else if (key == "pilot_length") cfg.pilot_length = it->get<int>();
    else if (key == "ul_data") cfg.ul_data = it->get<int>();
    else if (key == "dl_data") cfg.dl_data = it->get<int>();
    else if (key == "max_ul_power") cfg.max_ul_power = it->get<double>();
    else if (key == "max_dl_power") cfg.max_dl_power = it->get<double>();
    else if (key == "pilot_power") cfg.pilot_power = it->get<double>();
    else if (key == "noise_ul") cfg.noise_ul = it->get<double>();
    else if (key == "noise_dl") cfg.noise_dl = it->get<double>();
    else if (key == "ap_height") cfg.ap_height = it->get<double>();
    else if (key == "shadow_std") cfg.shadow_std = it->get<double>();
    else if (key == "pathloss_intercept") cfg.pathloss_intercept = it->get<double>();
    else if (key == "pathloss_exponent_coeff")
      cfg.pathloss_exponent_coeff = it->get<double>();
    else if (key == "rng_seed") cfg.rng_seed = it->get<std::uint64_t>();
    else throw ConfigError("unknown config key: " + key);
  }
  validate(cfg);
  return cfg;
}

std::string config_to_json(const NetworkConfig& cfg) {
  nlohmann::json j;
  j["num_aps"] = cfg.num_aps;
  j["antennas_per_ap"] = cfg.antennas_per_ap;
  j["num_ues"] = cfg.num_ues;
  j["area_side"] = cfg.area_side;
  j["coherence_block"] = cfg.coherence_block;
  j["pilot_length"] = cfg.pilot_length;
  j["ul_data"] = cfg.ul_data;
  j["dl_data"] = cfg.dl_data;
  j["max_ul_power"] = cfg.max_ul_power;
  j["max_dl_power"] = cfg.max_dl_power;
  j["pilot_power"] = cfg.pilot_power;
  j["noise_ul"] = cfg.noise_ul;
  j["noise_dl"] = cfg.noise_dl;
  j["ap_height"] = cfg.ap_height;
  j["shadow_std"] = cfg.shadow_std;
  j["pathloss_intercept"] = cfg.pathloss_intercept;
  j["pathloss_exponent_coeff"] = cfg.pathloss_exponent_coeff;
  j["rng_seed"] = cfg.rng_seed;
  return j.dump(2);
}

Positions deploy(const NetworkConfig& cfg, ApLayout layout,
                 std::mt19937_64& rng) {
  validate(cfg);
  Positions pos;
  pos.aps.resize(2, cfg.num_aps);
  pos.ues.resize(2, cfg.num_ues);

  if (layout == ApLayout::grid) {
    int side = static_cast<int>(std::llround(std::sqrt(double(cfg.num_aps))));
    if (side * side != cfg.num_aps)
      throw ConfigError("grid layout requires a square number of APs");
    double cell = cfg.area_side / side;
    int idx = 0;
    for (int iy = 0; iy < side; ++iy)
      for (int ix = 0; ix < side; ++ix, ++idx)
        pos.aps.col(idx) << (ix + 0.5) * cell, (iy + 0.5) * cell;
  } else {
    std::uniform_real_distribution<double> u(0.0, cfg.area_side);
    for (int l = 0; l < cfg.num_aps; ++l) pos.aps.col(l) << u(rng), u(rng);
  }
  std::uniform_real_distribution<double> u(0.0, cfg.area_side);
  for (int k = 0; k < cfg.num_ues; ++k) pos.ues.col(k) << u(rng), u(rng);
  return pos;
}

double wrap_distance(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                     double area_side) {
  double best = std::numeric_limits<double>::infinity();
  for (int sx = -1; sx <= 1; ++sx)
    for (int sy = -1; sy <= 1; ++sy) {
      double dx = a.x() - b.x() + sx * area_side;
      double dy = a.y() - b.y() + sy * area_side;
      best = std::min(best, std::hypot(dx, dy));
    }
  return best;
}

Eigen::MatrixXd shadow_fading_db(const NetworkConfig& cfg, const Positions& pos,
                                 std::mt19937_64& rng) {
  const int K = cfg.num_ues, L = cfg.num_aps;
  // Covariance between UEs as seen from any one AP depends only on the UE
  // separation; draws are independent across APs.
  Eigen::MatrixXd cov(K, K);
  for (int k = 0; k < K; ++k)
    for (int i = 0; i <= k; ++i) {
      double delta = wrap_distance(pos.ues.col(k), pos.ues.col(i), cfg.area_side);
      double c = cfg.shadow_std * cfg.shadow_std * std::pow(2.0, -delta / 9.0);
      cov(k, i) = cov(i, k) = c;
    }
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    // near-duplicate UE positions make the covariance singular
    cov.diagonal().array() += 1e-9;
    llt.compute(cov);
    if (llt.info() != Eigen::Success)
      throw ConfigError("shadow covariance not positive definite");
  }
  Eigen::MatrixXd chol = llt.matrixL();
  std::normal_distribution<double> n01(0.0, 1.0);
  Eigen::MatrixXd z(K, L);
  for (int k = 0; k < K; ++k)
    for (int l = 0; l < L; ++l) z(k, l) = n01(rng);
  return chol * z;
}

Eigen::MatrixXd large_scale_fading(const NetworkConfig& cfg,
                                   const Positions& pos, std::mt19937_64& rng,
                                   bool with_shadowing) {
  const int K = cfg.num_ues, L = cfg.num_aps;
  Eigen::MatrixXd beta_db(K, L);
  for (int k = 0; k < K; ++k)
    for (int l = 0; l < L; ++l) {
      double horiz = wrap_distance(pos.ues.col(k), pos.aps.col(l), cfg.area_side);
      double d = std::hypot(horiz, cfg.ap_height);
      beta_db(k, l) = cfg.pathloss_intercept -
                      cfg.pathloss_exponent_coeff * std::log10(d);
    }
  if (with_shadowing && cfg.shadow_std > 0)
    beta_db += shadow_fading_db(cfg, pos, rng);
  return Eigen::pow(10.0, (beta_db / 10.0).array());
}

}  // namespace cellfree
