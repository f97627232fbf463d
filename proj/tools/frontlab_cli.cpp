// frontlab: simulation, limit-law sampling, Stefan reference and experiments.
//
// Exit codes: 0 success (an explosion is a result, not a failure), 1 usage
// error (bad flags, unreadable config, existing outputs without --force,
// parameters outside a required regime), 2 runtime error.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <frontlab/experiments.hpp>
#include <frontlab/fast_front.hpp>
#include <frontlab/initcond.hpp>
#include <frontlab/io.hpp>
#include <frontlab/limitlaw.hpp>
#include <frontlab/simulate.hpp>
#include <frontlab/stefan.hpp>
#include <frontlab/stepfn.hpp>

namespace fs = std::filesystem;
using namespace frontlab;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::string t = s;
  for (char& c : t)
    if (c == '[' || c == ']' || c == ' ') c = ',';
  for (const auto& item : split(t, ','))
    if (!item.empty()) out.push_back(parse_real(item));
  return out;
}

std::string dash_name(std::string s) {
  for (char& c : s)
    if (c == '_') c = '-';
  return s;
}

/// Collects every output of a command so collisions are found before any work.
struct Outputs {
  bool force = false;
  std::vector<std::pair<fs::path, std::string>> files;

  void check(const fs::path& p) const {
    if (!force && fs::exists(p)) throw OutputExists("refusing to overwrite existing output " + p.string() + " (use --force)");
  }
  void add(const fs::path& p, std::string content) { files.emplace_back(p, std::move(content)); }
  void commit() const {
    for (const auto& [p, c] : files) write_atomically(p, c, force);
  }
};

std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

/// Config file entries become trailing flags, so they win over the command line
/// (every option takes its last value). Keys under [params] or unknown to an
/// experiment become --set key=value.
std::vector<std::string> config_arguments(const std::string& path, const std::string& sub, CLI::App* app) {
  if (!fs::exists(path)) throw UsageError("cannot read config file " + path);
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigTOML().from_file(path);
  } catch (const CLI::ParseError& e) {
    throw UsageError("cannot parse config file " + path + ": " + e.what());
  }
  std::vector<std::string> args;
  for (const auto& item : items) {
    if (item.name == "++" || item.name == "--") continue;  // section markers
    std::string section = item.parents.empty() ? "" : item.parents.front();
    std::string value;
    for (const auto& in : item.inputs) value += (value.empty() ? "" : ",") + in;
    if (section == "params" || (sub == "experiment" && !app->get_option_no_throw("--" + dash_name(item.name)))) {
      if (sub != "experiment") throw UsageError("config key '" + item.name + "' is not an option of " + sub);
      args.push_back("--set");
      args.push_back(item.name + "=" + value);
      continue;
    }
    if (!section.empty() && section != sub) continue;  // settings for another subcommand
    const CLI::Option* opt = app->get_option_no_throw("--" + dash_name(item.name));
    if (!opt) throw UsageError("config key '" + item.name + "' is not an option of " + sub);
    if (opt->get_type_size() == 0) {
      if (value == "true" || value == "1") args.push_back("--" + dash_name(item.name));
      continue;
    }
    args.push_back("--" + dash_name(item.name));
    args.push_back(value);
  }
  return args;
}

// --- simulate ----------------------------------------------------------------

struct SimulateArgs {
  std::string ic = "geometric:mean=1";
  std::string mode = "frictionless";
  std::string engine = "exact";
  double horizon = 1000;
  std::uint64_t seed = 1;
  long long window = 0;
  std::string checkpoints;
  int checkpoint_count = 20;
  double t0 = 0, v = 0, gamma_prime = 0.86, eps = 0.01;
  long long x0 = 0;
  std::string q_file;
  std::string out = "run.csv";
  std::string summary;
  std::string events;
  std::string hitting;
  std::string front;
  std::string ic_out;
  bool lazy_dead = false;
  bool far_field = false;
};

TrajectorySpec trajectory(const SimulateArgs& a) {
  if (a.mode == "frictionless") return TrajectorySpec::frictionless();
  if (a.mode == "mdla") return TrajectorySpec::mdla();
  if (a.mode == "pushed") return TrajectorySpec::pushed();
  if (a.mode == "linear") return TrajectorySpec::linear(a.t0, a.x0, a.v);
  if (a.mode == "truncated-upper") return TrajectorySpec::truncated_upper(a.t0, a.x0, a.v, a.gamma_prime, a.eps);
  if (a.mode == "truncated-lower") return TrajectorySpec::truncated_lower(a.t0, a.x0, a.v, a.gamma_prime, a.eps);
  if (a.mode == "custom") {
    if (a.q_file.empty()) throw UsageError("custom mode needs --q-file");
    std::ifstream in(a.q_file);
    if (!in) throw UsageError("cannot read " + a.q_file);
    return TrajectorySpec::custom_path(read_step_function_csv(in));
  }
  throw UsageError("unknown mode '" + a.mode + "'");
}

int run_simulate(const SimulateArgs& a, const std::string& config, Outputs& outs) {
  if (!(a.horizon >= 0) || !std::isfinite(a.horizon)) throw UsageError("--horizon must be finite and nonnegative");
  auto spec = trajectory(a);
  long long window = a.window > 0 ? a.window
                                  : suggest_window(10 * std::pow(a.horizon, 2.0 / 3.0) + 100, a.horizon, 2.0, 1e-6);
  auto ic = make_initial_condition(a.ic, window, derive_seed(a.seed, 0));
  std::vector<double> cps;
  if (!a.checkpoints.empty()) cps = parse_list(a.checkpoints);
  else
    for (int k = 1; k <= a.checkpoint_count; ++k) cps.push_back(a.horizon * k / a.checkpoint_count);

  fs::path out = a.out;
  fs::path summary = a.summary.empty() ? fs::path(a.out + ".json") : fs::path(a.summary);
  outs.check(out);
  outs.check(summary);
  for (const auto& p : {a.events, a.hitting, a.front, a.ic_out})
    if (!p.empty()) outs.check(p);

  nlohmann::json res;
  res["config"] = config;
  res["master_seed"] = a.seed;
  res["initial_condition"] = ic.descriptor_json();
  std::ostringstream table;
  if (a.engine == "fast") {
    if (!spec.is_front()) throw UsageError("the fast engine simulates fronts only");
    if (!a.events.empty() || !a.hitting.empty()) throw UsageError("the fast engine keeps no event log or hitting table");
    FastFrontOptions fo;
    fo.horizon = a.horizon;
    fo.checkpoints = cps;
    fo.seed = derive_seed(a.seed, 1);
    fo.rule = spec.kind;
    auto r = sample_front(ic, fo);
    table << schema_line("front-checkpoints") << "# engine=fast\n" << "t,r\n";
    for (const auto& [t, q] : r.checkpoint_r) table << format_real(t) << ',' << q << '\n';
    res["final_r"] = r.final_r;
    res["end_time"] = r.end_time;
    res["exploded"] = r.exploded;
    res["explosion_time"] = real_json(r.explosion_time);
    res["guard_violations"] = r.violations;
    if (!a.front.empty()) {
      std::ostringstream f;
      write_csv(f, r.front_path(), "front");
      outs.add(a.front, f.str());
    }
  } else if (a.engine == "exact") {
    SimulationOptions so;
    so.horizon = a.horizon;
    so.checkpoints = cps;
    so.seed = derive_seed(a.seed, 1);
    so.lazy_dead = a.lazy_dead;
    so.far_field = a.far_field;
    std::ostringstream log;
    if (!a.events.empty()) so.event_log = &log;
    auto r = run_simulation(ic, {spec}, so);
    const auto& ab = r.absorbers[0];
    if (spec.kind == TrajectoryKind::front_pushed) {
      table << schema_line("front-checkpoints") << "# trajectory=pushed\n" << "t,r\n";
      for (const auto& [t, q] : ab.checkpoint_q) table << format_real(t) << ',' << q << '\n';
    } else {
      write_snapshots_csv(table, ab);
    }
    res["trajectory"] = spec.name();
    res["final_q"] = ab.final_q;
    res["final_n"] = ab.final_n;
    res["end_time"] = r.end_time;
    res["exploded"] = r.exploded;
    res["explosion_time"] = real_json(r.explosion_time);
    res["jumps"] = r.jumps;
    res["far_field_violations"] = r.far_field_violations;
    res["window_warning"] = r.window_warning;
    if (!a.events.empty()) outs.add(a.events, log.str());
    if (!a.hitting.empty()) {
      std::ostringstream h;
      write_hitting_csv(h, ab);
      outs.add(a.hitting, h.str());
    }
    if (!a.front.empty()) {
      std::ostringstream f;
      write_csv(f, ab.front_path(r.end_time), "front");
      outs.add(a.front, f.str());
    }
  } else {
    throw UsageError("--engine must be exact or fast");
  }
  if (!a.ic_out.empty()) {
    std::ostringstream f;
    ic.write_csv(f);
    outs.add(a.ic_out, f.str());
  }
  outs.add(out, table.str());
  outs.add(summary, dump(with_schema(res, "simulate-summary")));
  outs.commit();
  std::cout << dump(res);
  return 0;
}

// --- ensemble ----------------------------------------------------------------

struct EnsembleArgs {
  std::string ic = "geometric:mean=1";
  std::string mode = "frictionless";
  std::string engine = "fast";
  std::size_t runs = 100;
  std::string times;
  double t_min = 100, t_max = 10000;
  std::size_t points = 9;
  long long window = 0;
  std::uint64_t seed = 1;
  std::size_t bootstrap = 1000;
  std::string out = "ensemble.csv";
  std::string summary;
};

int run_ensemble_cmd(const EnsembleArgs& a, const std::string& config, Outputs& outs) {
  FrontEnsembleConfig c;
  c.ic = a.ic;
  c.rule = parse_front_rule(a.mode);
  c.engine = parse_engine(a.engine);
  c.runs = a.runs;
  c.times = a.times.empty() ? log_spaced(a.t_min, a.t_max, a.points) : parse_list(a.times);
  double horizon = *std::max_element(c.times.begin(), c.times.end());
  c.window = a.window > 0 ? a.window : static_cast<long long>(40 * std::pow(horizon, 2.0 / 3.0)) + 100000;
  c.seed = a.seed;
  fs::path out = a.out;
  fs::path summary = a.summary.empty() ? fs::path(a.out + ".json") : fs::path(a.summary);
  outs.check(out);
  outs.check(summary);
  auto ens = front_ensemble(c);
  std::ostringstream table;
  ens.write_csv(table, a.seed);
  nlohmann::json res;
  res["config"] = config;
  res["master_seed"] = a.seed;
  res["runs"] = a.runs;
  res["window"] = c.window;
  res["window_exits"] = ens.exploded();
  res["violations"] = ens.violations;
  std::vector<double> med;
  for (std::size_t j = 0; j < ens.times.size(); ++j) med.push_back(median(ens.at(j)));
  res["times"] = ens.times;
  std::vector<nlohmann::json> mj;
  for (double m : med) mj.push_back(real_json(m));
  res["medians"] = mj;
  try {
    res["fit"] = exponent_fit(ens.times, ens.r, a.bootstrap, derive_seed(a.seed, 0xf17)).to_json();
  } catch (const InsufficientData& e) {
    res["fit"] = nullptr;
    res["fit_skipped"] = e.what();
  }
  outs.add(out, table.str());
  outs.add(summary, dump(with_schema(res, "ensemble-summary")));
  outs.commit();
  std::cout << dump(res);
  return 0;
}

// --- limit-sample ------------------------------------------------------------

struct LimitArgs {
  double sigma = std::sqrt(2.0);
  std::size_t n = 1000;
  double horizon = 1;
  double dxi = 1e-3;
  double xi_cap = 1e4;
  std::uint64_t seed = 1;
  std::string out = "limit_samples.csv";
  std::string path_out;
};

int run_limit(const LimitArgs& a, const std::string& config, Outputs& outs) {
  if (!(a.sigma > 0) || !(a.dxi > 0) || !(a.horizon >= 0)) throw UsageError("sigma and dxi must be positive");
  outs.check(a.out);
  outs.check(a.out + ".json");
  if (!a.path_out.empty()) outs.check(a.path_out);
  auto samples = limit_front_samples(a.sigma, a.n, a.horizon, a.dxi, a.seed, a.xi_cap);
  std::ostringstream t;
  t << schema_line("distribution-sample") << "# master_seed=" << a.seed << " sigma=" << format_real(a.sigma)
    << " t=" << format_real(a.horizon) << "\n" << "value\n";
  for (double v : samples) t << format_real(v) << '\n';
  outs.add(a.out, t.str());
  if (!a.path_out.empty()) {
    std::ostringstream p;
    sample_limit_front(a.sigma, 2.0, a.dxi, a.seed, a.horizon).write_csv(p);
    outs.add(a.path_out, p.str());
  }
  nlohmann::json res;
  res["config"] = config;
  res["master_seed"] = a.seed;
  res["n"] = a.n;
  std::vector<double> finite;
  for (double v : samples)
    if (std::isfinite(v)) finite.push_back(v);
  res["median"] = finite.empty() ? nlohmann::json(nullptr) : nlohmann::json(median(samples));
  res["beyond_cap"] = samples.size() - finite.size();
  outs.add(a.out + ".json", dump(with_schema(res, "limit-sample-summary")));
  outs.commit();
  std::cout << dump(res);
  return 0;
}

// --- stefan ------------------------------------------------------------------

struct StefanArgs {
  double rho = 0.5;
  std::string times = "0.5,1,4";
  double xi_max = 0;
  int points = 200;
  std::string out = "stefan_profile.csv";
  std::string kappa_table;
};

int run_stefan(const StefanArgs& a, const std::string& config, Outputs& outs) {
  if (!(a.rho > 0 && a.rho < 1)) throw UsageError("--rho must lie in (0,1); for rho >= 1 there is no solution");
  auto times = parse_list(a.times);
  if (times.empty()) throw UsageError("--times is empty");
  outs.check(a.out);
  outs.check(a.out + ".json");
  if (!a.kappa_table.empty()) outs.check(a.kappa_table);
  StefanSolution sol(a.rho);
  double tmax = *std::max_element(times.begin(), times.end());
  double xi_max = a.xi_max > 0 ? a.xi_max : sol.kappa() * std::sqrt(tmax) + 8 * std::sqrt(tmax);
  std::ostringstream prof;
  sol.write_profile_csv(prof, times, xi_max, a.points);
  outs.add(a.out, prof.str());
  nlohmann::json res;
  res["config"] = config;
  res["rho"] = a.rho;
  res["kappa"] = sol.kappa();
  std::vector<nlohmann::json> flux;
  for (double t : times) {
    auto f = sol.flux_identity_residual(t);
    flux.push_back({{"t", t}, {"residual", f.residual}, {"error_estimate", f.error_estimate}});
  }
  res["flux_residuals"] = flux;
  if (!a.kappa_table.empty()) {
    std::ostringstream k;
    std::vector<double> rhos;
    for (int i = 1; i <= 19; ++i) rhos.push_back(0.05 * i);
    write_kappa_table(k, rhos);
    outs.add(a.kappa_table, k.str());
  }
  outs.add(a.out + ".json", dump(with_schema(res, "stefan-summary")));
  outs.commit();
  std::cout << "kappa=" << format_real(sol.kappa()) << "\n";
  return 0;
}

// --- experiment --------------------------------------------------------------

struct ExperimentArgs {
  std::string name;
  std::vector<std::string> sets;
  std::string preset;
  std::uint64_t seed = 1;
  std::string out_dir = ".";
};

int run_experiment_cmd(const ExperimentArgs& a, const std::string& config, Outputs& outs) {
  Params p;
  for (const auto& s : a.sets) {
    auto eq = s.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + s + "'");
    p.set(s.substr(0, eq), s.substr(eq + 1));
  }
  if (!a.preset.empty()) p.set("preset", a.preset);
  fs::path dir = a.out_dir;
  fs::path summary = dir / (a.name + ".json");
  outs.check(summary);
  auto result = run_experiment(a.name, p, a.seed);
  result.summary["config"] = config;
  for (const auto& [file, content] : result.tables) {
    fs::path path = dir / (a.name + "_" + file);
    outs.check(path);
    outs.add(path, content);
  }
  outs.add(summary, dump(with_schema(result.summary, "experiment-summary")));
  outs.commit();
  std::cout << dump(result.summary);
  return 0;
}

// --- regime-check ------------------------------------------------------------

struct RegimeArgs {
  RegimeSpec spec;
  std::optional<double> t, t0, v;
  std::optional<long long> x, x0;
};

int run_regime(const RegimeArgs& a) {
  nlohmann::json res;
  res["regime"] = a.spec.to_json();
  res["parameters"] = to_json(a.spec.parameters());
  res["truncation"] = a.spec.truncation();
  if (a.t.has_value() != a.x.has_value()) throw UsageError("--t and --x go together");
  if (a.t) res["xi"] = to_json(a.spec.in_xi(*a.t, *a.x));
  if (a.t0 || a.x0 || a.v) {
    if (!(a.t0 && a.x0 && a.v)) throw UsageError("--t0, --x0 and --v go together");
    res["sigma"] = to_json(a.spec.in_sigma(*a.t0, *a.x0, *a.v));
    res["sigma_tilde"] = to_json(a.spec.in_sigma_tilde(*a.t0, *a.x0, *a.v));
  }
  std::cout << dump(res);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"frontlab: randomly driven fronts, limit laws and experiments"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  bool force = false;
  std::string config_path;

  auto common = [&](CLI::App* sub) {
    sub->add_flag("--force", force, "overwrite existing outputs");
    sub->add_option("--config", config_path, "key = value file; its values override flags");
  };

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "one run of a front or a prescribed boundary");
  s->add_option("--ic", sim.ic, "geometric:mean=1, poisson:mean=.., bernoulli-mixture:mean=1, sine:eps=..,gamma=.., file:path");
  s->add_option("--mode", sim.mode, "frictionless, mdla, pushed, linear, truncated-upper, truncated-lower, custom");
  s->add_option("--engine", sim.engine, "exact or fast (fronts only)");
  s->add_option("--horizon", sim.horizon);
  s->add_option("--seed", sim.seed);
  s->add_option("--window", sim.window, "lattice window; 0 picks one from the horizon");
  s->add_option("--checkpoints", sim.checkpoints, "comma separated times");
  s->add_option("--checkpoint-count", sim.checkpoint_count, "evenly spaced checkpoints when --checkpoints is empty");
  s->add_option("--t0", sim.t0);
  s->add_option("--x0", sim.x0);
  s->add_option("--v", sim.v);
  s->add_option("--gamma-prime", sim.gamma_prime);
  s->add_option("--eps", sim.eps);
  s->add_option("--q-file", sim.q_file, "step function CSV for custom mode");
  s->add_option("--out", sim.out, "checkpoint table");
  s->add_option("--summary", sim.summary, "JSON summary (default: <out>.json)");
  s->add_option("--events", sim.events, "JSONL event log");
  s->add_option("--hitting", sim.hitting, "hitting-time table");
  s->add_option("--front", sim.front, "front path as a step function");
  s->add_option("--ic-out", sim.ic_out, "initial condition table");
  s->add_flag("--lazy-dead", sim.lazy_dead, "stop simulating particles dead for every boundary");
  s->add_flag("--far-field", sim.far_field, "freeze particles far ahead of the boundary");
  common(s);

  EnsembleArgs ens;
  auto* e = app.add_subcommand("ensemble", "independent front runs at checkpoint times");
  e->add_option("--ic", ens.ic);
  e->add_option("--mode", ens.mode);
  e->add_option("--engine", ens.engine);
  e->add_option("--runs", ens.runs);
  e->add_option("--times", ens.times, "comma separated; default log grid from --t-min to --t-max");
  e->add_option("--t-min", ens.t_min);
  e->add_option("--t-max", ens.t_max);
  e->add_option("--points", ens.points);
  e->add_option("--window", ens.window);
  e->add_option("--seed", ens.seed);
  e->add_option("--bootstrap", ens.bootstrap);
  e->add_option("--out", ens.out);
  e->add_option("--summary", ens.summary);
  common(e);

  LimitArgs lim;
  auto* l = app.add_subcommand("limit-sample", "samples of Frnt_*(t) = inverse of 2 sigma int [B]_+");
  l->add_option("--sigma", lim.sigma);
  l->add_option("--n", lim.n);
  l->add_option("--horizon", lim.horizon, "time t at which Frnt_* is sampled");
  l->add_option("--dxi", lim.dxi);
  l->add_option("--xi-cap", lim.xi_cap, "samples beyond this are written as +inf");
  l->add_option("--seed", lim.seed);
  l->add_option("--out", lim.out);
  l->add_option("--path-out", lim.path_out, "one sampled path {xi, B, hit}");
  common(l);

  StefanArgs st;
  auto* f = app.add_subcommand("stefan", "subcritical reference solution");
  f->add_option("--rho", st.rho);
  f->add_option("--times", st.times);
  f->add_option("--xi-max", st.xi_max);
  f->add_option("--points", st.points);
  f->add_option("--out", st.out);
  f->add_option("--kappa-table", st.kappa_table);
  common(f);

  ExperimentArgs ex;
  auto* x = app.add_subcommand("experiment", "named experiment with CSV tables and a JSON summary");
  x->add_option("--name", ex.name)->required()->check(CLI::IsMember(experiment_names()));
  x->add_option("--set", ex.sets, "key=value experiment parameter")->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  x->add_option("--preset", ex.preset, "small or full");
  x->add_option("--seed", ex.seed);
  x->add_option("--out-dir", ex.out_dir);
  common(x);

  RegimeArgs rg;
  auto* r = app.add_subcommand("regime-check", "membership in Xi, Sigma and Sigma~");
  r->add_option("--eps", rg.spec.eps);
  r->add_option("--a", rg.spec.a);
  r->add_option("--gamma", rg.spec.gamma);
  r->add_option("--gamma-prime", rg.spec.gamma_prime);
  r->add_option("--t", rg.t);
  r->add_option("--x", rg.x);
  r->add_option("--t0", rg.t0);
  r->add_option("--x0", rg.x0);
  r->add_option("--v", rg.v);
  common(r);

  try {
    // Config values are appended after the command line so they take precedence.
    std::vector<std::string> args(argv + 1, argv + argc);
    for (std::size_t i = 0; i + 1 < args.size(); ++i)
      if (args[i] == "--config") config_path = args[i + 1];
      else if (args[i].rfind("--config=", 0) == 0) config_path = args[i].substr(9);
    if (!config_path.empty() && !args.empty()) {
      CLI::App* target = app.get_subcommand_no_throw(args.front());
      if (!target) throw UsageError("--config needs a subcommand first");
      auto extra = config_arguments(config_path, args.front(), target);
      args.insert(args.end(), extra.begin(), extra.end());
    }
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& err) {
    return app.exit(err) == 0 ? 0 : 1;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }

  Outputs outs;
  outs.force = force;
  try {
    CLI::App* sub = app.get_subcommands().front();
    std::string config = sub->config_to_str(true, false);
    if (s->parsed()) return run_simulate(sim, config, outs);
    if (e->parsed()) return run_ensemble_cmd(ens, config, outs);
    if (l->parsed()) return run_limit(lim, config, outs);
    if (f->parsed()) return run_stefan(st, config, outs);
    if (x->parsed()) return run_experiment_cmd(ex, config, outs);
    if (r->parsed()) return run_regime(rg);
  } catch (const UsageError& err) {
    std::cerr << "usage error: " << err.what() << "\n";
    return 1;
  } catch (const OutputExists& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  } catch (const RegimeViolation& err) {
    std::cerr << "usage error: " << err.what() << "\n";
    return 1;
  } catch (const InsufficientData& err) {
    std::cerr << "usage error: " << err.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& err) {
    std::cerr << "usage error: " << err.what() << "\n";
    return 1;
  } catch (const std::exception& err) {
    std::cerr << "runtime error: " << err.what() << "\n";
    return 2;
  }
  return 1;
}
