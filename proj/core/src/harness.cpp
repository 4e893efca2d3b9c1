#include "cellfree/harness.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <thread>

#include "cellfree/cluster.hpp"
#include "cellfree/correlation.hpp"
#include "cellfree/downlink.hpp"
#include "cellfree/estimation.hpp"
#include "cellfree/powerctl.hpp"
#include "cellfree/rng.hpp"

namespace cellfree {

namespace {

constexpr const char* kVersion = "0.1.0";

template <typename T>
std::string enum_name(T v, const std::vector<std::pair<T, const char*>>& table) {
  for (const auto& [e, n] : table)
    if (e == v) return n;
  throw ConfigError("unknown enum value");
}

template <typename T>
T enum_value(const std::string& name,
             const std::vector<std::pair<T, const char*>>& table) {
  for (const auto& [e, n] : table)
    if (name == n) return e;
  throw ConfigError("unknown name: " + name);
}

const std::vector<std::pair<OperationMode, const char*>> kModes = {
    {OperationMode::centralized, "centralized"},
    {OperationMode::distributed, "distributed"},
    {OperationMode::cellular, "cellular"},
    {OperationMode::small_cell, "small-cell"}};
const std::vector<std::pair<LinkDirection, const char*>> kLinks = {
    {LinkDirection::uplink, "uplink"}, {LinkDirection::downlink, "downlink"}};
const std::vector<std::pair<Quantity, const char*>> kQuantities = {
    {Quantity::se, "se"}, {Quantity::snr, "snr"}};
const std::vector<std::pair<LsfdMode, const char*>> kLsfd = {
    {LsfdMode::opt, "opt"}, {LsfdMode::nopt, "n-opt"}, {LsfdMode::none, "none"}};
const std::vector<std::pair<ApLayout, const char*>> kLayouts = {
    {ApLayout::grid, "grid"}, {ApLayout::uniform, "uniform"}};

Combiner parse_combiner(const std::string& s) {
  if (s == "mmse") return Combiner::mmse;
  if (s == "p-mmse") return Combiner::p_mmse;
  if (s == "p-rzf") return Combiner::p_rzf;
  if (s == "mr") return Combiner::mr;
  throw ConfigError("unknown centralized scheme: " + s);
}

LocalCombiner parse_local_combiner(const std::string& s) {
  if (s == "l-mmse") return LocalCombiner::l_mmse;
  if (s == "lp-mmse") return LocalCombiner::lp_mmse;
  if (s == "mr") return LocalCombiner::mr;
  throw ConfigError("unknown distributed scheme: " + s);
}

// Correlation matrices from the deployment: nominal angles toward the
// nearest wrap-around copy of each UE, equal azimuth/elevation spreads.
std::vector<Eigen::MatrixXcd> build_correlations(const NetworkConfig& cfg,
                                                 const Positions& pos,
                                                 const Eigen::MatrixXd& beta,
                                                 double asd_deg) {
  const int K = cfg.num_ues, L = cfg.num_aps, N = cfg.antennas_per_ap;
  const double asd = asd_deg * M_PI / 180.0;
  std::vector<Eigen::MatrixXcd> R(K * L);
  for (int k = 0; k < K; ++k) {
    for (int l = 0; l < L; ++l) {
      Eigen::Vector2d d = pos.ues.col(k) - pos.aps.col(l);
      for (int c = 0; c < 2; ++c) {
        if (d(c) > cfg.area_side / 2) d(c) -= cfg.area_side;
        if (d(c) < -cfg.area_side / 2) d(c) += cfg.area_side;
      }
      double horizontal = d.norm();
      double azimuth = (horizontal > 0) ? std::atan2(d(1), d(0)) : 0.0;
      double elevation = -std::atan2(cfg.ap_height, horizontal);
      R[k * L + l] =
          local_scattering(N, azimuth, elevation, asd, asd, beta(k, l));
    }
  }
  return R;
}

// Large-scale SNR benchmark: MR over all APs (cell-free), a co-located array
// with the same total antenna count at the area center, or best-AP selection.
Eigen::VectorXd snr_samples(const ExperimentSpec& spec, const Positions& pos,
                            const Eigen::MatrixXd& /*beta*/) {
  const NetworkConfig& cfg = spec.config;
  const double p = cfg.max_ul_power;
  // a bounded coverage area with edges and pure distance pathloss (no
  // wrap-around, no shadowing): the benchmark exposes how each architecture
  // treats unlucky UEs near the corners
  auto pathloss = [&](const Eigen::Vector2d& ue, const Eigen::Vector2d& ap) {
    double d = std::hypot((ue - ap).norm(), cfg.ap_height);
    return std::pow(10.0, (cfg.pathloss_intercept -
                           cfg.pathloss_exponent_coeff * std::log10(d)) /
                              10.0);
  };
  Eigen::VectorXd out(cfg.num_ues);
  for (int k = 0; k < cfg.num_ues; ++k) {
    double x = 0;
    switch (spec.mode) {
      case OperationMode::centralized:
      case OperationMode::distributed:
        for (int l = 0; l < cfg.num_aps; ++l)
          x += pathloss(pos.ues.col(k), pos.aps.col(l));
        break;
      case OperationMode::cellular: {
        Eigen::Vector2d center(cfg.area_side / 2, cfg.area_side / 2);
        x = cfg.num_aps * cfg.antennas_per_ap *
            pathloss(pos.ues.col(k), center);
        break;
      }
      case OperationMode::small_cell:
        for (int l = 0; l < cfg.num_aps; ++l)
          x = std::max(x, pathloss(pos.ues.col(k), pos.aps.col(l)));
        break;
    }
    out(k) = 10 * std::log10(p * x / cfg.noise_ul);
  }
  return out;
}

Eigen::VectorXd ul_powers(const ExperimentSpec& spec,
                          const Eigen::MatrixXd& beta, const ClusterState& cl) {
  const NetworkConfig& cfg = spec.config;
  if (spec.power == "fpc")
    return fpc_uplink(beta, cl, spec.upsilon, cfg.max_ul_power);
  return Eigen::VectorXd::Constant(cfg.num_ues, cfg.max_ul_power);
}

Eigen::VectorXd run_setup(const ExperimentSpec& spec, int setup,
                          ScalabilityReport* report) {
  const NetworkConfig& cfg = spec.config;
  std::mt19937_64 rng = substream(spec.seed, setup);
  Positions pos = deploy(cfg, spec.layout, rng);
  Eigen::MatrixXd beta =
      large_scale_fading(cfg, pos, rng, cfg.shadow_std > 0);
  if (spec.quantity == Quantity::snr) return snr_samples(spec, pos, beta);

  ClusterState cl = assign_pilots_and_dcc(beta, cfg.pilot_length);
  if (report)
    *report = scalability_report(cl, cfg.antennas_per_ap, cfg.pilot_length,
                                 cfg.ul_data, cfg.dl_data, cfg.num_ues);
  auto R = build_correlations(cfg, pos, beta, spec.asd_deg);
  Eigen::VectorXd eta = Eigen::VectorXd::Constant(cfg.num_ues, cfg.pilot_power);
  EstimationStatistics st = build_estimation_statistics(
      R, cfg.num_aps, cfg.antennas_per_ap, cl.pilot, cfg.pilot_length, eta,
      cfg.noise_ul);
  Eigen::VectorXd p = ul_powers(spec, beta, cl);

  SeResult res;
  if (spec.link == LinkDirection::uplink) {
    const double prelog = double(cfg.ul_data) / cfg.coherence_block;
    switch (spec.mode) {
      case OperationMode::centralized:
        res = uplink_se_centralized(parse_combiner(spec.scheme), st, cl, p,
                                    prelog, spec.draws_per_setup, rng);
        break;
      case OperationMode::distributed: {
        LocalCombiner scheme = parse_local_combiner(spec.scheme);
        DistributedExpectations ex =
            (scheme == LocalCombiner::mr)
                ? distributed_expectations_mr(st, cl)
                : distributed_expectations_mc(scheme, st, cl, p,
                                              spec.draws_per_setup, rng);
        res = uplink_se_distributed(ex, spec.lsfd, cl, p, cfg.noise_ul, prelog);
        break;
      }
      case OperationMode::cellular:
      case OperationMode::small_cell:
        res = uplink_se_cellular(st, cl, p, prelog, spec.draws_per_setup, rng);
        break;
    }
  } else {
    const double prelog = double(cfg.dl_data) / cfg.coherence_block;
    if (spec.mode == OperationMode::centralized) {
      Combiner scheme = parse_combiner(spec.scheme);
      CentralizedDlMoments m =
          (scheme == Combiner::mr)
              ? centralized_dl_moments_mr(st, cl)
              : downlink_moments_centralized(scheme, st, cl, p,
                                             spec.draws_per_setup, rng);
      Eigen::VectorXd rho;
      if (spec.power == "fpa") {
        Eigen::VectorXd omega(cfg.num_ues);
        for (int k = 0; k < cfg.num_ues; ++k)
          omega(k) = m.per_ap_norm[k].maxCoeff() / m.norm(k);
        rho = fpa_dl_centralized(beta, cl, omega, spec.upsilon, spec.kappa,
                                 cfg.max_dl_power);
      } else {
        rho = Eigen::VectorXd::Constant(cfg.num_ues, cfg.max_dl_power);
      }
      res = downlink_se_centralized(m, rho, cfg.noise_dl, prelog);
    } else {
      LocalCombiner scheme = parse_local_combiner(spec.scheme);
      DistributedExpectations ex =
          (scheme == LocalCombiner::mr)
              ? distributed_expectations_mr(st, cl)
              : distributed_expectations_mc(scheme, st, cl, p,
                                            spec.draws_per_setup, rng);
      DistributedDlCoefficients co = distributed_dl_coefficients(ex, cl);
      double ups = (spec.power == "fpa") ? spec.upsilon : 0.0;
      Eigen::MatrixXd rho_full =
          fpa_dl_distributed(beta, cl, ups, cfg.max_dl_power);
      std::vector<Eigen::VectorXd> rho_ap(cfg.num_ues);
      for (int k = 0; k < cfg.num_ues; ++k) {
        rho_ap[k].resize(cl.serving[k].size());
        for (int a = 0; a < rho_ap[k].size(); ++a)
          rho_ap[k](a) = rho_full(k, cl.serving[k][a]);
      }
      res = downlink_se_distributed(co, rho_ap, cfg.noise_dl, prelog);
    }
  }
  return res.se;
}

}  // namespace

void validate(const ExperimentSpec& spec) {
  validate(spec.config);
  if (spec.num_setups < 1) throw ConfigError("num_setups must be positive");
  if (spec.draws_per_setup < 1) throw ConfigError("draws_per_setup must be positive");
  if (spec.format != "csv" && spec.format != "json")
    throw ConfigError("format must be csv or json");
  if (spec.quantity == Quantity::snr) return;
  if (spec.mode == OperationMode::cellular)
    throw ConfigError("the co-located reference only supports the snr quantity");
  if (spec.link == LinkDirection::downlink && spec.config.dl_data < 1)
    throw ConfigError("downlink experiments need dl_data > 0");
  if (spec.mode == OperationMode::centralized)
    parse_combiner(spec.scheme);
  else if (spec.mode == OperationMode::distributed)
    parse_local_combiner(spec.scheme);
  if (spec.power != "full" && spec.power != "fpc" && spec.power != "fpa")
    throw ConfigError("unknown power policy: " + spec.power);
  if (spec.link == LinkDirection::uplink && spec.power == "fpa")
    throw ConfigError("fpa is a downlink policy");
  if (spec.link == LinkDirection::downlink && spec.power == "fpc")
    throw ConfigError("fpc is an uplink policy");
}

std::string ExperimentSpec::to_json() const {
  nlohmann::json j;
  j["scenario"] = scenario;
  j["config"] = nlohmann::json::parse(config_to_json(config));
  j["layout"] = enum_name(layout, kLayouts);
  j["mode"] = enum_name(mode, kModes);
  j["link"] = enum_name(link, kLinks);
  j["quantity"] = enum_name(quantity, kQuantities);
  j["scheme"] = scheme;
  j["lsfd"] = enum_name(lsfd, kLsfd);
  j["power"] = power;
  j["upsilon"] = upsilon;
  j["kappa"] = kappa;
  j["asd_deg"] = asd_deg;
  j["num_setups"] = num_setups;
  j["draws_per_setup"] = draws_per_setup;
  j["seed"] = seed;
  j["out"] = out;
  j["format"] = format;
  return j.dump(2);
}

ExperimentSpec ExperimentSpec::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  ExperimentSpec s;
  if (j.contains("scenario")) s.scenario = j["scenario"].get<std::string>();
  if (s.scenario != "inline") s.config = preset(s.scenario);
  if (j.contains("config")) s.config = config_from_json(j["config"].dump(), s.config);
  auto get = [&](const char* key, auto& field, auto parse) {
    if (j.contains(key)) field = parse(j[key]);
  };
  get("layout", s.layout,
      [](const nlohmann::json& v) { return enum_value<ApLayout>(v, kLayouts); });
  get("mode", s.mode, [](const nlohmann::json& v) {
    return enum_value<OperationMode>(v, kModes);
  });
  get("link", s.link, [](const nlohmann::json& v) {
    return enum_value<LinkDirection>(v, kLinks);
  });
  get("quantity", s.quantity, [](const nlohmann::json& v) {
    return enum_value<Quantity>(v, kQuantities);
  });
  get("lsfd", s.lsfd,
      [](const nlohmann::json& v) { return enum_value<LsfdMode>(v, kLsfd); });
  if (j.contains("scheme")) s.scheme = j["scheme"].get<std::string>();
  if (j.contains("power")) s.power = j["power"].get<std::string>();
  if (j.contains("upsilon")) s.upsilon = j["upsilon"].get<double>();
  if (j.contains("kappa")) s.kappa = j["kappa"].get<double>();
  if (j.contains("asd_deg")) s.asd_deg = j["asd_deg"].get<double>();
  if (j.contains("num_setups")) s.num_setups = j["num_setups"].get<int>();
  if (j.contains("draws_per_setup"))
    s.draws_per_setup = j["draws_per_setup"].get<int>();
  if (j.contains("seed")) s.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("out")) s.out = j["out"].get<std::string>();
  if (j.contains("format")) s.format = j["format"].get<std::string>();
  return s;
}

double CdfTable::quantile(double q) const {
  if (samples.size() == 0) throw ConfigError("empty CDF table");
  if (q < 0 || q > 1) throw ConfigError("quantile level out of range");
  int rank = static_cast<int>(std::ceil(q * samples.size()));
  rank = std::clamp(rank, 1, static_cast<int>(samples.size()));
  return samples(rank - 1);
}

double CdfTable::quantile_std_error(double q) const {
  if (samples.size() == 0) throw ConfigError("empty CDF table");
  const int n = static_cast<int>(samples.size());
  int rank = std::clamp(static_cast<int>(std::ceil(q * n)), 1, n) - 1;
  int spread = static_cast<int>(std::ceil(std::sqrt(n * q * (1 - q))));
  int lo = std::clamp(rank - spread, 0, n - 1);
  int hi = std::clamp(rank + spread, 0, n - 1);
  return (samples(hi) - samples(lo)) / 2;
}

ExperimentResult run_experiment(const ExperimentSpec& spec,
                                const RunOptions& opt) {
  validate(spec);
  ExperimentResult result;
  std::vector<Eigen::VectorXd> per_setup(spec.num_setups);
  std::vector<std::string> errors(spec.num_setups);

  auto work = [&](int begin, int step) {
    for (int s = begin; s < spec.num_setups; s += step) {
      try {
        per_setup[s] =
            run_setup(spec, s, s == 0 ? &result.report : nullptr);
      } catch (const std::exception& e) {
        errors[s] = "setup " + std::to_string(s) + ": " + e.what();
      }
    }
  };
  const int threads = std::max(1, opt.threads);
  if (threads == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors)
    if (!e.empty()) throw std::runtime_error(e);

  std::vector<double> pooled;
  pooled.reserve(static_cast<std::size_t>(spec.num_setups) *
                 spec.config.num_ues);
  for (const auto& v : per_setup)
    pooled.insert(pooled.end(), v.data(), v.data() + v.size());
  std::sort(pooled.begin(), pooled.end());
  result.table.samples =
      Eigen::Map<Eigen::VectorXd>(pooled.data(), pooled.size());
  return result;
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string to_csv(const CdfTable& table) {
  if (table.size() == 0) throw ConfigError("empty CDF table");
  std::string out = "sample_index,se_bits_per_hz,cdf_value\n";
  for (int i = 0; i < table.size(); ++i)
    out += std::to_string(i) + "," + fmt(table.samples(i)) + "," +
           fmt(table.cdf_value(i)) + "\n";
  return out;
}

std::string to_json(const CdfTable& table, const ExperimentSpec& spec) {
  if (table.size() == 0) throw ConfigError("empty CDF table");
  nlohmann::json j;
  j["spec"] = nlohmann::json::parse(spec.to_json());
  j["seed"] = spec.seed;
  j["version"] = kVersion;
  j["num_samples"] = table.size();
  j["samples"] = std::vector<double>(
      table.samples.data(), table.samples.data() + table.samples.size());
  for (double q : {0.05, 0.10, 0.50}) {
    nlohmann::json row;
    row["level"] = q;
    row["value"] = table.quantile(q);
    row["std_error"] = table.quantile_std_error(q);
    j["quantiles"].push_back(row);
  }
  return j.dump(2);
}

CdfTable cdf_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  std::vector<double> samples = j.at("samples").get<std::vector<double>>();
  CdfTable t;
  t.samples = Eigen::Map<Eigen::VectorXd>(samples.data(), samples.size());
  return t;
}

void emit(const CdfTable& table, const ExperimentSpec& spec,
          const std::string& format, const std::string& path) {
  std::string text;
  if (format == "csv")
    text = to_csv(table);
  else if (format == "json")
    text = to_json(table, spec);
  else
    throw ConfigError("format must be csv or json");
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open output file: " + path);
  f << text;
  if (!f) throw ConfigError("write failed: " + path);
}

}  // namespace cellfree
