#include "kho/cli.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <complex>
#include <iostream>
#include <numbers>
#include <optional>
#include <set>
#include <stdexcept>

#include <omp.h>

#include "CLI11.hpp"
#include "kho/analysis.hpp"
#include "kho/charfn.hpp"
#include "kho/classical.hpp"
#include "kho/errors.hpp"
#include "kho/io.hpp"
#include "kho/params.hpp"
#include "kho/phase_space.hpp"
#include "kho/quantum.hpp"

namespace kho::cli {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

double parse_double(std::string_view text) {
  const std::string t = trim(text);
  double x = 0.0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), x);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size()) {
    throw std::invalid_argument("not a number: '" + std::string(text) + "'");
  }
  return x;
}

std::pair<double, double> parse_pair(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) throw std::invalid_argument("expected 'a,b', got '" + text + "'");
  return {parse_double(std::string_view(text).substr(0, comma)), parse_double(std::string_view(text).substr(comma + 1))};
}

std::string key_of(std::string_view name) {
  std::string k(name);
  for (char& c : k) c = c == '-' ? '_' : static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return k;
}

// "--gamma-tau-half" -> "--gamma-tau-half,--gamma_tau_half" so config keys match
std::string names(const std::string& dashed, const std::string& extra = "") {
  std::string out = "--" + dashed;
  const std::string under = key_of(dashed);
  if (under != dashed) out += ",--" + under;
  if (!extra.empty()) out += "," + extra;
  return out;
}

struct Options {
  std::string out;
  std::string config;
  std::uint64_t seed = 0;
  int threads = 0;

  // model
  double k = 2.0;
  double kprime = 6.0;
  int q = 6;
  double alpha = 0.0;
  double eta = 0.5;
  double h = 0.0;
  double diffusion = 0.0;
  std::string env = "none";

  int kicks = 0;
  std::string start = "0.5,0";
  int orbits = 1;
  double spacing = 0.5;
  std::string frame = "physical";
  std::string method;
  int grid_points = 201;
  double extent = 3.0;
  std::string mean = "0,0";
  double variance = 0.0;
  int ensemble_points = 400;
  std::size_t samples = 100000;
  std::string moments_out;
  std::string gamma_range;
  int ic_points = 10;
  std::size_t iterations = 10000;
  std::size_t transient = 10000;
  std::size_t recorded = 1000;
  int fock_dim = 0;
  double tail_tolerance = kDefaultTailTolerance;
  std::string checkpoint;
  std::string from_checkpoint;
  std::string lambda = "0,0";
  std::string lambda_grid;
  int budget = 50;
  double epsilon = 0.1;
  std::string axis = "eta";
  std::string values;
};

struct Command {
  CLI::App* app = nullptr;
  std::function<void(Command&)> body;
  std::vector<std::string> outputs;
  ConfigEntries resolved;  // values chosen by the program rather than the user
};

bool given(CLI::App* app, const std::string& name) { return app->get_option(name)->count() > 0; }

void add_common(CLI::App* app, Options& o) {
  app->add_option("--out", o.out, "output path")->required();
  app->add_option("--config", o.config, "config file of key = value lines");
  app->add_option("--seed", o.seed, "root seed for every random stream");
  app->add_option("--threads", o.threads, "thread cap, 0 leaves the default")->check(CLI::NonNegativeNumber);
}

void add_model(CLI::App* app, Options& o) {
  auto* k = app->add_option(names("k", "--K"), o.k, "kick strength K");
  auto* kp = app->add_option(names("kprime"), o.kprime, "damped kick strength K'");
  k->excludes(kp);
  auto* q = app->add_option(names("q"), o.q, "crystal symmetry, alpha = 2 pi / q")->check(CLI::PositiveNumber);
  auto* alpha = app->add_option(names("alpha"), o.alpha, "rotation angle per kick period");
  q->excludes(alpha);
  app->add_option(names("eta"), o.eta, "Lamb-Dicke parameter")->check(CLI::PositiveNumber);
  app->add_option(names("gamma-tau-half"), o.h, "Gamma tau / 2")->check(CLI::NonNegativeNumber);
  app->add_option(names("d", "--D"), o.diffusion, "diffusion D = gamma tau / 2")->check(CLI::NonNegativeNumber);
  app->add_option(names("env"), o.env, "none, dissipative or diffusive");
}

// K and q/alpha have defaults but exclude each other, so only the chosen one
// is materialized.
DimensionlessParams resolve_model(Command& c, const Options& o, bool damping_without_env = false) {
  CLI::App* app = c.app;
  DimensionlessKnobs knobs;
  const EnvironmentKind env = parse_environment(o.env);
  knobs.eta = o.eta;
  knobs.half_damping = o.h;
  knobs.diffusion = o.diffusion;
  if (given(app, "--kprime")) {
    knobs.frame = KickFrame::dissipative;
    knobs.kick = o.kprime;
  } else {
    knobs.kick = o.k;
    if (!given(app, "--k")) c.resolved.emplace_back("k", format_number(o.k));
  }
  if (given(app, "--alpha")) {
    knobs.angle = o.alpha;
  } else {
    knobs.symmetry = o.q;
    if (!given(app, "--q")) c.resolved.emplace_back("q", std::to_string(o.q));
  }
  if (!damping_without_env && env != EnvironmentKind::dissipative && o.h != 0.0) {
    throw std::invalid_argument("--gamma-tau-half needs --env dissipative");
  }
  if (env != EnvironmentKind::diffusive && o.diffusion != 0.0) throw std::invalid_argument("--d needs --env diffusive");
  return make_dimensionless(knobs);
}

MapKind map_kind_for(EnvironmentKind env) {
  switch (env) {
    case EnvironmentKind::none: return MapKind::conservative;
    case EnvironmentKind::dissipative: return MapKind::dissipative;
    case EnvironmentKind::diffusive: return MapKind::diffusive;
  }
  return MapKind::conservative;
}

Frame physical_frame(MapKind kind) { return kind == MapKind::dissipative ? Frame::dissipative : Frame::raw; }

Frame grid_frame(const Options& o, MapKind kind) {
  if (o.frame == "scaled") return Frame::scaled;
  if (o.frame == "physical") return physical_frame(kind);
  throw std::invalid_argument("--frame must be physical or scaled, got '" + o.frame + "'");
}

void add_grid(CLI::App* app, Options& o) {
  app->add_option(names("grid-points"), o.grid_points, "nodes per axis")->check(CLI::Range(2, 100000));
  app->add_option(names("extent"), o.extent, "grid half-width")->check(CLI::PositiveNumber);
}

GridSpec make_grid(const Options& o, Frame frame) {
  GridSpec spec;
  spec.first_min = spec.second_min = -o.extent;
  spec.first_max = spec.second_max = o.extent;
  spec.n_first = spec.n_second = o.grid_points;
  spec.frame = frame;
  spec.check();
  return spec;
}

std::vector<double> damping_values(const Command& c, const Options& o) {
  if (given(c.app, "--gamma-range")) return parse_values(o.gamma_range);
  return {o.h};
}

// ----- quantum evolution shared by quantum-evolve, wigner and charfn -----

struct QuantumResult {
  std::vector<MomentRecord> moments;
  std::optional<DensityOperator> rho;
  std::optional<PureState> psi;
  int dim = 0;
};

void add_quantum(CLI::App* app, Options& o) {
  app->add_option(names("fock-dim"), o.fock_dim, "Fock basis size, 0 picks and grows it")
      ->check(CLI::NonNegativeNumber);
  app->add_option(names("tail-tolerance"), o.tail_tolerance, "population allowed in the top eighth of the basis")
      ->check(CLI::PositiveNumber);
  app->add_option(names("mean"), o.mean, "initial coherent amplitude v,u in the scaled frame");
}

QuantumResult evolve_quantum(const Options& o, const DimensionlessParams& d, EnvironmentKind env) {
  const auto [mv, mu] = parse_pair(o.mean);
  const cdouble beta(mv, mu);
  const bool automatic = o.fock_dim == 0;
  int dim = automatic ? automatic_fock_dim(d.eta, 64.0, 1024) : o.fock_dim;
  if (automatic) {
    while (dim < 8192 && dim < 8.0 * (std::norm(beta) + 1.0)) dim *= 2;
  }
  EvolveOptions opts;
  opts.tail_tolerance = o.tail_tolerance;
  opts.abort_on_truncation = false;
  for (;;) {
    QuantumResult r;
    r.dim = dim;
    std::optional<int> truncated;
    if (env == EnvironmentKind::none) {
      auto ev = evolve_kicked(PureState::coherent(dim, beta), d, o.kicks, opts);
      truncated = ev.truncated_at;
      r.moments = std::move(ev.moments);
      r.psi = std::move(ev.state);
    } else {
      auto ev = evolve_kicked(DensityOperator::coherent(dim, beta), d, env, o.kicks, opts);
      truncated = ev.truncated_at;
      r.moments = std::move(ev.moments);
      r.rho = std::move(ev.state);
    }
    if (!truncated) return r;
    if (!automatic || dim >= 8192) {
      throw TruncationError("Fock basis of " + std::to_string(dim) + " states is too small at kick " +
                                std::to_string(*truncated) + "; raise --fock_dim",
                            *truncated);
    }
    dim = std::min(2 * dim, 8192);
  }
}

// ----- subcommands -----

void classical_web(Command& c, Options& o) {
  const DimensionlessParams d = resolve_model(c, o);
  const MapKind kind = map_kind_for(parse_environment(o.env));
  const Frame frame = grid_frame(o, kind);
  const auto [v0, u0] = parse_pair(o.start);
  std::vector<ClassicalState> states;
  for (int i = 0; i < o.orbits; ++i) states.push_back({v0 + i * o.spacing, u0, frame});
  WeightedEnsemble e(frame, std::move(states), std::vector<double>(static_cast<std::size_t>(o.orbits), 1.0));
  CsvWriter w(o.out, {"kick", "v", "u", "weight"});
  evolve_weighted_ensemble(std::move(e), d, o.kicks, kind, o.seed, [&](int kick, const WeightedEnsemble& en) {
    for (std::size_t i = 0; i < en.size(); ++i) {
      w.cell(static_cast<long long>(kick)).cell(en.states()[i].first).cell(en.states()[i].second).cell(en.weights()[i]);
      w.end_row();
    }
  });
  c.outputs.push_back(o.out);
}

void density(Command& c, Options& o) {
  const DimensionlessParams d = resolve_model(c, o);
  const MapKind kind = map_kind_for(parse_environment(o.env));
  const Frame frame = grid_frame(o, kind);
  const GridSpec spec = make_grid(o, frame);
  GaussianDensity g = vacuum_matched_density(frame, d);
  std::tie(g.mean_first, g.mean_second) = parse_pair(o.mean);
  if (o.variance > 0.0) g.variance = o.variance;

  DensityGrid grid;
  if (o.method == "backward") {
    if (kind == MapKind::diffusive) throw std::invalid_argument("backward rendering needs a deterministic map; use --method histogram");
    grid = render_density_backward(spec, d, o.kicks, kind, g);
  } else if (o.method == "histogram") {
    WeightedEnsemble e = kind == MapKind::diffusive ? gaussian_sample_ensemble(g, o.samples, o.seed)
                                                    : gaussian_grid_ensemble(g, o.ensemble_points);
    EnsembleEvolution ev = evolve_weighted_ensemble(std::move(e), d, o.kicks, kind, o.seed);
    grid = histogram_density(ev.ensemble, spec);
    if (!o.moments_out.empty()) {
      write_moments_csv(o.moments_out, ev.moments);
      c.outputs.push_back(o.moments_out);
    }
  } else {
    throw std::invalid_argument("--method must be backward or histogram, got '" + o.method + "'");
  }
  write_density_csv(o.out, grid);
  c.outputs.push_back(o.out);
  std::cout << "integral " << format_number(grid.integral()) << '\n';
}

void lyapunov(Command& c, Options& o) {
  const DimensionlessParams d = resolve_model(c, o, true);
  std::vector<std::pair<double, double>> rows;
  for (double h : damping_values(c, o)) {
    const DimensionlessParams dh = with_half_damping(d, h);
    const WeightedEnsemble e = gaussian_grid_ensemble(vacuum_matched_density(Frame::dissipative, dh), o.ic_points);
    rows.emplace_back(h, lyapunov_exponent(dh, e, o.iterations).mean);
  }
  write_lyapunov_csv(o.out, rows);
  c.outputs.push_back(o.out);
}

void bifurcation(Command& c, Options& o) {
  const DimensionlessParams d = resolve_model(c, o, true);
  const auto [v0, u0] = parse_pair(o.start);
  const std::vector<double> hs = damping_values(c, o);
  const auto slices = bifurcation_scan(d, hs, o.transient, o.recorded, {v0, u0, Frame::dissipative});
  write_bifurcation_csv(o.out, slices);
  c.outputs.push_back(o.out);
}

void quantum_evolve(Command& c, Options& o) {
  const DimensionlessParams d = resolve_model(c, o);
  const QuantumResult r = evolve_quantum(o, d, parse_environment(o.env));
  write_moments_csv(o.out, r.moments);
  c.outputs.push_back(o.out);
  if (!o.checkpoint.empty()) {
    write_density_checkpoint(o.checkpoint, r.rho ? *r.rho : DensityOperator::from_pure(*r.psi));
    c.outputs.push_back(o.checkpoint);
  }
  std::cout << "fock_dim " << r.dim << '\n';
}

void wigner_cmd(Command& c, Options& o) {
  const GridSpec spec = make_grid(o, Frame::scaled);
  WignerGrid grid;
  if (!o.from_checkpoint.empty()) {
    grid = wigner(read_density_checkpoint(o.from_checkpoint), spec);
  } else {
    const DimensionlessParams d = resolve_model(c, o);
    const QuantumResult r = evolve_quantum(o, d, parse_environment(o.env));
    grid = r.rho ? wigner(*r.rho, spec) : wigner(*r.psi, spec);
  }
  write_wigner_csv(o.out, grid);
  c.outputs.push_back(o.out);
  std::cout << "integral " << format_number(grid.integral()) << (grid.coarse ? " (coarse grid)" : "") << '\n';
}

std::vector<cdouble> lambda_points(const Command& c, const Options& o) {
  std::vector<cdouble> out;
  if (given(c.app, "--lambda-grid")) {
    const auto colon = o.lambda_grid.find(':');
    if (colon == std::string::npos) throw std::invalid_argument("--lambda-grid expects n:half_width");
    const double nd = parse_double(std::string_view(o.lambda_grid).substr(0, colon));
    const double half = parse_double(std::string_view(o.lambda_grid).substr(colon + 1));
    const int n = static_cast<int>(nd);
    if (n < 1 || n != nd || !(half >= 0.0)) throw std::invalid_argument("bad --lambda-grid '" + o.lambda_grid + "'");
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double re = n == 1 ? 0.0 : -half + 2.0 * half * i / (n - 1);
        const double im = n == 1 ? 0.0 : -half + 2.0 * half * j / (n - 1);
        out.emplace_back(re, im);
      }
    return out;
  }
  std::size_t start = 0;
  for (;;) {
    const auto semi = o.lambda.find(';', start);
    const auto [re, im] = parse_pair(o.lambda.substr(start, semi - start));
    out.emplace_back(re, im);
    if (semi == std::string::npos) break;
    start = semi + 1;
  }
  return out;
}

void charfn_cmd(Command& c, Options& o) {
  const DimensionlessParams d = resolve_model(c, o);
  const EnvironmentKind env = parse_environment(o.env);
  const std::vector<cdouble> lambdas = lambda_points(c, o);
  std::vector<CharFnEstimate> values;
  if (o.method == "fock") {
    const QuantumResult r = evolve_quantum(o, d, env);
    for (cdouble l : lambdas) {
      CharFnEstimate e;
      e.value = r.rho ? char_fn_from_state(*r.rho, l) : char_fn_from_state(*r.psi, l);
      values.push_back(e);
    }
  } else if (o.method == "bessel" || o.method == "semiclassical") {
    const auto [mv, mu] = parse_pair(o.mean);
    const GaussianCharFn initial{cdouble(mv, mu), 0.25};
    for (cdouble l : lambdas) {
      CharFnQuery q;
      q.lambda = l;
      q.kicks = o.kicks;
      q.env = env;
      values.push_back(o.method == "bessel" ? bessel_sum_charfn(q, d, initial) : semiclassical_charfn(q, d, initial));
    }
  } else {
    throw std::invalid_argument("--method must be bessel, semiclassical or fock, got '" + o.method + "'");
  }
  write_charfn_csv(o.out, values);
  c.outputs.push_back(o.out);
}

void add_comparison(CLI::App* app, Options& o) {
  app->add_option(names("budget"), o.budget, "kick budget")->check(CLI::PositiveNumber);
  app->add_option(names("epsilon"), o.epsilon, "relative distance threshold")->check(CLI::PositiveNumber);
  app->add_option(names("fock-dim"), o.fock_dim, "Fock basis size, 0 picks and grows it")
      ->check(CLI::NonNegativeNumber);
  app->add_option(names("grid-points"), o.ensemble_points, "classical grid ensemble nodes per axis")
      ->check(CLI::Range(2, 100000));
  app->add_option(names("samples"), o.samples, "Monte Carlo size for the diffusive kind")->check(CLI::PositiveNumber);
  app->add_option(names("tail-tolerance"), o.tail_tolerance, "population allowed in the top eighth of the basis")
      ->check(CLI::PositiveNumber);
}

ComparisonConfig comparison_config(Command& c, const Options& o) {
  ComparisonConfig cfg;
  cfg.params = resolve_model(c, o);
  cfg.env = parse_environment(o.env);
  cfg.budget = o.budget;
  cfg.epsilon = o.epsilon;
  cfg.fock_dim = o.fock_dim;
  cfg.grid_points = o.ensemble_points;
  cfg.samples = o.samples;
  cfg.seed = o.seed;
  cfg.tail_tolerance = o.tail_tolerance;
  return cfg;
}

void breaking_time(Command& c, Options& o) {
  const ComparisonConfig cfg = comparison_config(c, o);
  const ComparisonRun run = run_comparison(cfg);
  const BreakingTimeResult res = measure_breaking_time(run);
  write_distance_csv(o.out, res);
  c.outputs.push_back(o.out);
  std::cout << "tau_hbar " << format_tau(res.tau) << " max_dr " << format_number(res.max_distance) << " fock_dim "
            << run.fock_dim << '\n';
}

void sweep_cmd(Command& c, Options& o) {
  const ComparisonConfig cfg = comparison_config(c, o);
  const SweepAxis axis = parse_sweep_axis(o.axis);
  const std::vector<double> values = parse_values(o.values);
  const SweepTable table = sweep(axis, values, cfg, [&](const SweepRow& r) {
    std::cerr << to_string(axis) << ' ' << format_number(r.axis_value) << " tau_hbar "
              << (r.error.empty() ? format_tau(r.tau) : "nan (" + r.error + ")") << '\n';
  });
  write_sweep_csv(o.out, table);
  c.outputs.push_back(o.out);
}

// ----- config merging and manifest -----

std::vector<std::string> merge_config(const std::vector<std::string>& args) {
  std::string path;
  std::set<std::string> on_command_line;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a.rfind("--", 0) != 0) continue;
    const auto eq = a.find('=');
    const std::string key = key_of(a.substr(2, eq == std::string::npos ? std::string::npos : eq - 2));
    on_command_line.insert(key);
    if (key == "config") {
      if (eq != std::string::npos) path = a.substr(eq + 1);
      else if (i + 1 < args.size()) path = args[i + 1];
    }
  }
  if (path.empty() || args.empty()) return args;
  std::vector<std::string> merged{args.front()};
  for (const auto& [key, value] : read_config_file(path)) {
    const std::string k = key_of(key);
    if (on_command_line.contains(k) || k == "config") continue;
    merged.push_back("--" + key);
    merged.push_back(value);
  }
  merged.insert(merged.end(), args.begin() + 1, args.end());
  return merged;
}

ConfigEntries materialize(const Command& c) {
  ConfigEntries entries;
  for (const CLI::Option* opt : c.app->get_options()) {
    const auto& lnames = opt->get_lnames();
    if (lnames.empty()) continue;
    const std::string key = key_of(lnames.front());
    if (key == "help" || key == "config") continue;
    if (opt->count() > 0) {
      for (const std::string& r : opt->results()) entries.emplace_back(key, r);
    } else {
      // resolved values sit where the option would, so a replayed manifest keeps its order
      const auto resolved = std::find_if(c.resolved.begin(), c.resolved.end(), [&](const auto& e) { return e.first == key; });
      if (resolved != c.resolved.end()) {
        entries.push_back(*resolved);
        continue;
      }
      // options in an exclusion pair are written only when chosen or resolved
      if (!opt->get_excludes().empty()) continue;
      const std::string def = opt->get_default_str();
      if (def.empty()) continue;
      entries.emplace_back(key, def);
    }
  }
  return entries;
}

}  // namespace

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> out;
  if (text.find(':') != std::string::npos) {
    const auto c1 = text.find(':');
    const auto c2 = text.find(':', c1 + 1);
    if (c2 == std::string::npos) throw std::invalid_argument("range must be start:stop:step, got '" + text + "'");
    const double a = parse_double(std::string_view(text).substr(0, c1));
    const double b = parse_double(std::string_view(text).substr(c1 + 1, c2 - c1 - 1));
    const double step = parse_double(std::string_view(text).substr(c2 + 1));
    if (step == 0.0 || (b - a) / step < 0.0) throw std::invalid_argument("range step does not reach the stop value: '" + text + "'");
    const auto n = static_cast<long long>(std::floor((b - a) / step + 1e-9)) + 1;
    if (n > 10'000'000) throw std::invalid_argument("range has too many points: '" + text + "'");
    for (long long i = 0; i < n; ++i) out.push_back(a + static_cast<double>(i) * step);
    return out;
  }
  std::size_t start = 0;
  for (;;) {
    const auto comma = text.find(',', start);
    out.push_back(parse_double(std::string_view(text).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

int run(const std::vector<std::string>& raw_args) {
  Options o;
  CLI::App app{"Kicked harmonic oscillator simulator"};
  app.option_defaults()->always_capture_default()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  std::vector<Command> commands;
  commands.reserve(9);

  auto make = [&](const char* name, const char* help, int kicks, std::function<void(Command&, Options&)> body,
                  const std::function<void(CLI::App*)>& extra) {
    CLI::App* sub = app.add_subcommand(name, help);
    add_common(sub, o);
    add_model(sub, o);
    extra(sub);
    if (kicks >= 0) {
      // separate default per subcommand
      sub->add_option(names("kicks"), o.kicks, "number of kicks")->check(CLI::NonNegativeNumber)->default_str(std::to_string(kicks));
    }
    commands.push_back({sub, [&o, body](Command& c) { body(c, o); }, {}, {}});
  };

  make("classical-web", "trajectories of the classical map", 10000, classical_web, [&](CLI::App* s) {
    s->add_option(names("start"), o.start, "first initial point v,u");
    s->add_option(names("orbits"), o.orbits, "number of orbits")->check(CLI::PositiveNumber);
    s->add_option(names("spacing"), o.spacing, "v offset between orbit seeds");
    s->add_option(names("frame"), o.frame, "physical or scaled");
  });
  make("density", "classical probability density on a grid", 9, density, [&](CLI::App* s) {
    add_grid(s, o);
    s->add_option(names("method"), o.method, "backward or histogram")->default_str("backward");
    s->add_option(names("frame"), o.frame, "physical or scaled");
    s->add_option(names("mean"), o.mean, "initial mean v,u");
    s->add_option(names("variance"), o.variance, "initial variance per axis, 0 matches the vacuum")
        ->check(CLI::NonNegativeNumber);
    s->add_option(names("ensemble-points"), o.ensemble_points, "histogram ensemble nodes per axis")
        ->check(CLI::Range(2, 100000));
    s->add_option(names("samples"), o.samples, "Monte Carlo size for the diffusive map")->check(CLI::PositiveNumber);
    s->add_option(names("moments-out"), o.moments_out, "moment series path (histogram method)");
  });
  make("lyapunov", "average Lyapunov exponent of the dissipative map", -1, lyapunov, [&](CLI::App* s) {
    s->add_option(names("gamma-range"), o.gamma_range, "start:stop:step of Gamma tau / 2");
    s->add_option(names("ic-points"), o.ic_points, "initial conditions per axis")->check(CLI::PositiveNumber);
    s->add_option(names("iterations"), o.iterations, "iterations per trajectory")->check(CLI::Range(1000, 1'000'000'000));
  });
  make("bifurcation", "bifurcation diagram of the dissipative map", -1, bifurcation, [&](CLI::App* s) {
    s->add_option(names("gamma-range"), o.gamma_range, "start:stop:step of Gamma tau / 2");
    s->add_option(names("transient"), o.transient, "iterations before recording")->check(CLI::PositiveNumber);
    s->add_option(names("recorded"), o.recorded, "u values kept per damping value")->check(CLI::PositiveNumber);
    s->add_option(names("start"), o.start, "initial point v,u");
  });
  make("quantum-evolve", "moments of the kicked quantum state", 9, quantum_evolve, [&](CLI::App* s) {
    add_quantum(s, o);
    s->add_option(names("checkpoint"), o.checkpoint, "binary density operator path for the final state");
  });
  make("wigner", "Wigner function of the kicked quantum state", 9, wigner_cmd, [&](CLI::App* s) {
    add_quantum(s, o);
    add_grid(s, o);
    s->add_option(names("from-checkpoint"), o.from_checkpoint, "render a saved density operator instead");
  });
  make("charfn", "characteristic function values", 0, charfn_cmd, [&](CLI::App* s) {
    add_quantum(s, o);
    s->add_option(names("method"), o.method, "bessel, semiclassical or fock")->default_str("bessel");
    s->add_option(names("lambda"), o.lambda, "re,im points separated by ';'");
    s->add_option(names("lambda-grid"), o.lambda_grid, "n:half_width square grid");
  });
  make("breaking-time", "quantum-classical breaking time", -1, breaking_time,
       [&](CLI::App* s) { add_comparison(s, o); });
  make("sweep", "breaking time along one parameter", -1, sweep_cmd, [&](CLI::App* s) {
    add_comparison(s, o);
    s->add_option(names("axis"), o.axis, "eta, gamma_tau_half or D");
    s->add_option(names("values"), o.values, "start:stop:step or a comma list")->required();
  });

  const auto started = std::chrono::steady_clock::now();
  Command* chosen = nullptr;
  try {
    std::vector<std::string> args = merge_config(raw_args);
    std::reverse(args.begin(), args.end());
    app.parse(args);
    for (Command& c : commands)
      if (c.app->parsed()) chosen = &c;
    if (o.threads > 0) omp_set_num_threads(o.threads);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    // defaults assigned through default_str are not written back to the variable
    if (CLI::Option* method = chosen->app->get_option_no_throw("--method")) o.method = method->as<std::string>();
    if (CLI::Option* kicks = chosen->app->get_option_no_throw("--kicks")) o.kicks = kicks->as<int>();
    chosen->body(*chosen);
  } catch (const NumericalAbort& e) {
    std::cerr << "numerical abort: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  RunManifest m;
  m.subcommand = chosen->app->get_name();
  m.config = materialize(*chosen);
  m.seed = o.seed;
  m.outputs = chosen->outputs;
  m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  try {
    write_manifest(o.out + ".manifest", m);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitOk;
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args);
}

}  // namespace kho::cli
