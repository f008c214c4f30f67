#include "kho/io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <stdexcept>

namespace kho {

static_assert(std::endian::native == std::endian::little, "checkpoint layout assumes a little-endian host");

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), res.ptr);
}

std::string format_tau(const std::optional<int>& tau) { return tau ? std::to_string(*tau) : "inf"; }

CsvWriter::CsvWriter(const std::string& path, std::initializer_list<const char*> header) : out_(path) {
  if (!out_) throw std::runtime_error("cannot open '" + path + "' for writing");
  for (const char* h : header) cell(std::string(h));
  if (header.size() > 0) end_row();
}

CsvWriter& CsvWriter::cell(double x) { return cell(format_number(x)); }
CsvWriter& CsvWriter::cell(long long x) { return cell(std::to_string(x)); }

CsvWriter& CsvWriter::cell(const std::string& s) {
  if (!first_) out_ << ',';
  out_ << s;
  first_ = false;
  return *this;
}

void CsvWriter::end_row() {
  out_ << '\n';
  first_ = true;
  if (!out_) throw std::runtime_error("write failed");
}

namespace {

CsvWriter open_with(const std::string& path, const char* header) {
  // headers are stored as one string; split it into cells
  CsvWriter w(path, {});
  std::string h(header);
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = h.find(',', start);
    w.cell(h.substr(start, comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  w.end_row();
  return w;
}

template <class Grid>
void write_grid(const std::string& path, const Grid& g) {
  CsvWriter w = open_with(path, csv::density);
  for (int i = 0; i < g.spec.n_first; ++i)
    for (int j = 0; j < g.spec.n_second; ++j) {
      w.cell(g.spec.first_at(i)).cell(g.spec.second_at(j)).cell(g.at(i, j));
      w.end_row();
    }
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

void write_moments_csv(const std::string& path, std::span<const PhaseSpaceMoments> rows) {
  CsvWriter w = open_with(path, csv::moments);
  for (const auto& r : rows) {
    w.cell(static_cast<long long>(r.kick)).cell(r.mean_first).cell(r.mean_second).cell(r.var_first).cell(r.var_second);
    w.end_row();
  }
}

void write_moments_csv(const std::string& path, std::span<const MomentRecord> rows) {
  CsvWriter w = open_with(path, csv::moments);
  for (const auto& r : rows) {
    w.cell(static_cast<long long>(r.kick)).cell(r.mean_v).cell(r.mean_u).cell(r.var_v).cell(r.var_u);
    w.end_row();
  }
}

void write_density_csv(const std::string& path, const DensityGrid& grid) { write_grid(path, grid); }
void write_wigner_csv(const std::string& path, const WignerGrid& grid) { write_grid(path, grid); }

void write_lyapunov_csv(const std::string& path, std::span<const std::pair<double, double>> rows) {
  CsvWriter w = open_with(path, csv::lyapunov);
  for (const auto& [g, l] : rows) {
    w.cell(g).cell(l);
    w.end_row();
  }
}

void write_bifurcation_csv(const std::string& path, std::span<const BifurcationSlice> slices) {
  CsvWriter w = open_with(path, csv::bifurcation);
  for (const auto& s : slices) {
    if (s.diverged) {
      w.cell(s.half_damping).cell(std::string("inf"));
      w.end_row();
      continue;
    }
    for (double u : s.u) {
      w.cell(s.half_damping).cell(u);
      w.end_row();
    }
  }
}

void write_charfn_csv(const std::string& path, std::span<const CharFnEstimate> values) {
  CsvWriter w = open_with(path, csv::charfn);
  for (const auto& v : values) {
    w.cell(v.value.lambda.real()).cell(v.value.lambda.imag()).cell(v.value.value.real()).cell(v.value.value.imag());
    w.cell(v.error_bound);
    w.end_row();
  }
}

void write_sweep_csv(const std::string& path, const SweepTable& table) {
  CsvWriter w = open_with(path, csv::sweep);
  for (const auto& r : table.rows) {
    w.cell(r.axis_value);
    w.cell(r.error.empty() ? format_tau(r.tau) : std::string("nan"));
    w.cell(r.error.empty() ? r.max_distance : std::nan(""));
    w.cell(static_cast<long long>(r.budget)).cell(r.epsilon).cell(std::to_string(r.seed));
    w.end_row();
  }
}

void write_distance_csv(const std::string& path, const BreakingTimeResult& result) {
  CsvWriter w = open_with(path, csv::distance);
  for (const auto& s : result.trace) {
    w.cell(static_cast<long long>(s.kick)).cell(s.var_classical).cell(s.var_quantum).cell(s.distance);
    w.end_row();
  }
}

namespace {
constexpr char kMagic[8] = {'K', 'H', 'O', 'R', 'H', 'O', '0', '1'};
constexpr std::uint32_t kCheckpointVersion = 1;
}  // namespace

void write_density_checkpoint(const std::string& path, const DensityOperator& rho) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  const std::uint32_t version = kCheckpointVersion, reserved = 0;
  const std::uint64_t n = static_cast<std::uint64_t>(rho.dim());
  out.write(kMagic, sizeof kMagic);
  out.write(reinterpret_cast<const char*>(&version), sizeof version);
  out.write(reinterpret_cast<const char*>(&reserved), sizeof reserved);
  out.write(reinterpret_cast<const char*>(&n), sizeof n);
  const Eigen::MatrixXcd& m = rho.matrix();
  for (int r = 0; r < rho.dim(); ++r)
    for (int c = 0; c < rho.dim(); ++c) {
      const double pair[2] = {m(r, c).real(), m(r, c).imag()};
      out.write(reinterpret_cast<const char*>(pair), sizeof pair);
    }
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

DensityOperator read_density_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint '" + path + "'");
  char magic[8];
  std::uint32_t version = 0, reserved = 0;
  std::uint64_t n = 0;
  in.read(magic, sizeof magic);
  in.read(reinterpret_cast<char*>(&version), sizeof version);
  in.read(reinterpret_cast<char*>(&reserved), sizeof reserved);
  in.read(reinterpret_cast<char*>(&n), sizeof n);
  if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) throw std::runtime_error("not a density checkpoint: " + path);
  if (version != kCheckpointVersion) throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  if (n < 8 || n > 65536) throw std::runtime_error("implausible checkpoint dimension " + std::to_string(n));
  const int dim = static_cast<int>(n);
  Eigen::MatrixXcd m(dim, dim);
  for (int r = 0; r < dim; ++r)
    for (int c = 0; c < dim; ++c) {
      double pair[2];
      in.read(reinterpret_cast<char*>(pair), sizeof pair);
      m(r, c) = cdouble(pair[0], pair[1]);
    }
  if (!in) throw std::runtime_error("truncated checkpoint: " + path);
  return DensityOperator(std::move(m));
}

ConfigEntries read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot read config file '" + path + "'");
  ConfigEntries entries;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty() || line.front() == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": expected key = value");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    if (key.empty()) throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": empty key");
    entries.emplace_back(std::move(key), std::move(value));
  }
  return entries;
}

void write_manifest(const std::string& path, const RunManifest& manifest) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << "# kho run manifest\n";
  out << "# subcommand: " << manifest.subcommand << '\n';
  out << "# tool_version: " << manifest.tool_version << '\n';
  out << "# seed: " << manifest.seed << '\n';
  for (const auto& o : manifest.outputs) out << "# output: " << o << '\n';
  out << "# wall_seconds: " << format_number(manifest.wall_seconds) << '\n';
  for (const auto& [k, v] : manifest.config) out << k << " = " << v << '\n';
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

}  // namespace kho
