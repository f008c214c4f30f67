#pragma once

#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kho/analysis.hpp"
#include "kho/charfn.hpp"
#include "kho/classical.hpp"
#include "kho/phase_space.hpp"
#include "kho/quantum.hpp"

namespace kho {

inline constexpr const char* kToolVersion = "1.0.0";

/// Shortest decimal text that parses back to the same double.
std::string format_number(double x);
std::string format_tau(const std::optional<int>& tau);

/// Comma-separated file with a header row. Throws std::runtime_error when the
/// file cannot be opened.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, std::initializer_list<const char*> header);

  CsvWriter& cell(double x);
  CsvWriter& cell(long long x);
  CsvWriter& cell(const std::string& s);
  void end_row();

 private:
  std::ofstream out_;
  bool first_ = true;
};

namespace csv {
inline constexpr const char* trajectories = "kick,v,u,weight";
inline constexpr const char* moments = "kick,mean_v,mean_u,var_v,var_u";
inline constexpr const char* density = "v,u,value";
inline constexpr const char* lyapunov = "gamma_tau_half,lambda";
inline constexpr const char* bifurcation = "gamma_tau_half,u";
inline constexpr const char* charfn = "re_lambda,im_lambda,re_C,im_C,err_bound";
inline constexpr const char* sweep = "axis_value,tau_hbar,max_dr,budget,epsilon,seed";
inline constexpr const char* distance = "kick,var_cl,var_q,dr";
}  // namespace csv

void write_moments_csv(const std::string& path, std::span<const PhaseSpaceMoments> rows);
void write_moments_csv(const std::string& path, std::span<const MomentRecord> rows);
void write_density_csv(const std::string& path, const DensityGrid& grid);
void write_wigner_csv(const std::string& path, const WignerGrid& grid);
void write_lyapunov_csv(const std::string& path, std::span<const std::pair<double, double>> rows);
void write_bifurcation_csv(const std::string& path, std::span<const BifurcationSlice> slices);
void write_charfn_csv(const std::string& path, std::span<const CharFnEstimate> values);
void write_sweep_csv(const std::string& path, const SweepTable& table);
void write_distance_csv(const std::string& path, const BreakingTimeResult& result);

/// Binary density operator: 8-byte magic "KHORHO01", uint32 version, uint32
/// reserved, uint64 N, then N*N (re, im) float64 pairs in row-major order, all
/// little-endian.
void write_density_checkpoint(const std::string& path, const DensityOperator& rho);
DensityOperator read_density_checkpoint(const std::string& path);

using ConfigEntries = std::vector<std::pair<std::string, std::string>>;

/// `key = value` lines; `#` starts a comment, `[section]` lines are ignored.
ConfigEntries read_config_file(const std::string& path);

struct RunManifest {
  std::string subcommand;
  ConfigEntries config;  // every option with its resolved value
  std::uint64_t seed = 0;
  std::string tool_version = kToolVersion;
  std::vector<std::string> outputs;
  double wall_seconds = 0.0;
};

/// Written as a config file, so it can be passed back with --config.
void write_manifest(const std::string& path, const RunManifest& manifest);

}  // namespace kho
