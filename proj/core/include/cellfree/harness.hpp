#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "cellfree/geometry.hpp"
#include "cellfree/metrics.hpp"
#include "cellfree/uplink.hpp"

namespace cellfree {

enum class OperationMode { centralized, distributed, cellular, small_cell };
enum class LinkDirection { uplink, downlink };
// se: ergodic spectral efficiency [bit/s/Hz]. snr: single-link SNR [dB] from
// the large-scale coefficients only (the architecture-comparison benchmark).
enum class Quantity { se, snr };

// Full description of one Monte Carlo experiment; the seed determines the
// output exactly.
struct ExperimentSpec {
  std::string scenario = "inline";  // preset name, or "inline" for `config`
  NetworkConfig config;
  ApLayout layout = ApLayout::uniform;
  OperationMode mode = OperationMode::centralized;
  LinkDirection link = LinkDirection::uplink;
  Quantity quantity = Quantity::se;
  std::string scheme = "mmse";  // centralized: mmse|p-mmse|p-rzf|mr
                                // distributed: l-mmse|lp-mmse|mr
  LsfdMode lsfd = LsfdMode::opt;
  std::string power = "full";  // full | fpc (ul) | fpa (dl)
  double upsilon = 0.5;        // heuristic power exponents
  double kappa = 0.5;
  double asd_deg = 15.0;  // angular standard deviation, azimuth and elevation
  int num_setups = 50;
  int draws_per_setup = 500;
  std::uint64_t seed = 1;
  std::string out;             // output file ("" = none)
  std::string format = "csv";  // csv | json

  std::string to_json() const;
  static ExperimentSpec from_json(const std::string& text);
};

// Throws ConfigError when the scheme/power policy does not fit the mode or
// the counts are degenerate (num_setups < 1, draws < 1).
void validate(const ExperimentSpec& spec);

// Pooled per-(setup, UE) samples with empirical CDF positions.
struct CdfTable {
  Eigen::VectorXd samples;  // sorted ascending

  int size() const { return static_cast<int>(samples.size()); }
  double cdf_value(int idx) const { return double(idx + 1) / samples.size(); }
  // empirical quantile: the order statistic at rank ceil(q*n)
  double quantile(double q) const;
  // Monte Carlo standard error from the order-statistic spread at
  // rank +- sqrt(n q (1-q))
  double quantile_std_error(double q) const;
};

struct ExperimentResult {
  CdfTable table;
  ScalabilityReport report;  // accounting of the first setup's clusters
};

struct RunOptions {
  int threads = 1;  // setup-level parallelism; results independent of it
};

// Per setup: deploy APs and UEs, draw large-scale fading, form clusters,
// build the estimation statistics, run the channel-realization Monte Carlo
// for the selected mode/scheme, and record one sample per UE. The pooled
// samples across setups form the CDF.
ExperimentResult run_experiment(const ExperimentSpec& spec,
                                const RunOptions& opt = {});

// CSV columns: sample_index, se_bits_per_hz, cdf_value.
std::string to_csv(const CdfTable& table);
// JSON with the spec echo, the samples, the 5%/10%/50% quantiles with
// standard errors, and seed/version metadata.
std::string to_json(const CdfTable& table, const ExperimentSpec& spec);
CdfTable cdf_from_json(const std::string& text);

// Writes the table to `path` in the given format; throws on an unwritable
// path or an empty table.
void emit(const CdfTable& table, const ExperimentSpec& spec,
          const std::string& format, const std::string& path);

}  // namespace cellfree
