#include "histent/cli.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include <CLI11.hpp>

#include "histent/entropy.hpp"
#include "histent/error.hpp"
#include "histent/maxent.hpp"
#include "histent/montecarlo.hpp"

namespace histent {

namespace {

using nlohmann::json;

std::vector<int> range(int lo, int hi) {
  std::vector<int> v;
  for (int i = lo; i <= hi; ++i) v.push_back(i);
  return v;
}

Command parse_command(const std::string& s) {
  if (s == "sweep") return Command::sweep;
  if (s == "urn") return Command::urn;
  if (s == "translate") return Command::translate;
  if (s == "maxent") return Command::maxent;
  if (s == "check") return Command::check;
  throw ConfigError("unknown subcommand '" + s + "'", "command");
}

void check_object(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError("must be an object", path);
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError("unknown key", path.empty() ? key : path + "." + key);
  }
}

template <typename T>
T read_value(const json& j, const std::string& path) {
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (!j.is_boolean()) throw ConfigError("must be true or false", path);
    } else if constexpr (std::is_integral_v<T>) {
      if (!j.is_number_integer()) throw ConfigError("must be an integer", path);
      if constexpr (std::is_unsigned_v<T>) {
        if (j.is_number_integer() && !j.is_number_unsigned() && j.get<long long>() < 0) {
          throw ConfigError("must be non-negative", path);
        }
      }
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!j.is_number()) throw ConfigError("must be a number", path);
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!j.is_string()) throw ConfigError("must be a string", path);
    }
    return j.get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(e.what(), path);
  }
}

template <typename T>
std::vector<T> read_list(const json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError("must be an array", path);
  std::vector<T> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(read_value<T>(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

bool has(const json& j, const char* section, const char* key) {
  return j.is_object() && j.contains(section) && j[section].is_object() && j[section].contains(key);
}

ModelConfig default_model(Command c) {
  switch (c) {
    case Command::urn:
    case Command::translate:
      return UrnModel{};
    case Command::maxent:
      return RandomKernelModel{};
    default:
      return RandomWalkModel{};
  }
}

std::size_t default_count(const ModelConfig& m) { return model_is_continuum(m) ? 10000 : 100000; }

void apply_figure(RunConfig& c, int figure) {
  switch (figure) {
    case 1:
      c.command = Command::sweep;
      c.model = RandomWalkModel{};
      break;
    case 2:
      c.command = Command::sweep;
      c.model = DiffusionModel{};
      break;
    case 3:
      c.command = Command::sweep;
      c.model = BrownianModel{};
      break;
    case 4:
      c.command = Command::urn;
      c.model = UrnModel{};
      c.urn_mode = "surface";
      break;
    case 5:
      c.command = Command::urn;
      c.model = UrnModel{};
      c.urn_mode = "curves";
      break;
    default:
      throw ConfigError("figure must be 1..5", "figure");
  }
  c.figure = figure;
}

ModelConfig model_from_value(const json& v) {
  if (v.is_string()) return model_from_json(json{{"model", v.get<std::string>()}});
  return model_from_json(v);
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string hex(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << v;
  return s.str();
}

void emit(const RunConfig& c, const std::string& stem, const std::string& body, std::ostream& out,
          std::ostream& err) {
  if (c.to_stdout) {
    out << body;
    return;
  }
  std::filesystem::create_directories(c.out_dir);
  const auto path = std::filesystem::path(c.out_dir) / stem;
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path.string());
  f << body;
  err << "histent: wrote " << path.string() << '\n';
}

void emit_sweep(const RunConfig& c, SweepResult result, const std::string& stem, std::ostream& out,
                std::ostream& err) {
  result.provenance["config_hash"] = hex(c.hash());
  result.provenance["tool_version"] = kToolVersion;
  std::size_t warned = 0;
  for (const auto& r : result.rows) warned += r.bias_warning ? 1 : 0;
  if (warned > 0) {
    err << "histent: warning: " << warned
        << " grid point(s) have more than count/10 distinct classes; the plug-in estimate is biased low there\n";
  }
  std::ostringstream body;
  if (c.format == "json") {
    body << to_json(result).dump(2) << '\n';
  } else {
    write_csv(body, result);
  }
  emit(c, stem + "." + c.format, body.str(), out, err);
}

}  // namespace

std::string command_name(Command c) {
  switch (c) {
    case Command::sweep:
      return "sweep";
    case Command::urn:
      return "urn";
    case Command::translate:
      return "translate";
    case Command::maxent:
      return "maxent";
    case Command::check:
      return "check";
  }
  return "?";
}

json RunConfig::to_json() const {
  json j{{"command", command_name(command)}, {"model", model_to_json(model)}};
  if (figure) j["figure"] = *figure;
  switch (command) {
    case Command::sweep:
      j["sweep"] = {{"dx", sweep.dx},
                    {"dt", sweep.dt},
                    {"method", sweep.method == Method::exact ? "exact" : "monte-carlo"},
                    {"bootstrap", sweep.bootstrap},
                    {"miller_madow", sweep.miller_madow},
                    {"count", sweep.count},
                    {"seed", sweep.seed}};
      break;
    case Command::urn:
      j["urn"] = {{"mode", urn_mode}, {"t1", t1s}, {"m", ms}, {"k", ks}};
      break;
    case Command::translate:
      j["translate"] = {{"times", times}, {"T", shifts}};
      if (dx) j["translate"]["dx"] = *dx;
      break;
    case Command::maxent:
      j["graining"] = graining;
      break;
    case Command::check:
      break;
  }
  return j;
}

std::uint64_t RunConfig::hash() const {
  const std::string text = to_json().dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

void apply_config_json(RunConfig& c, const json& j) {
  check_object(j, "", {"command", "figure", "model", "sweep", "sampling", "urn", "translate", "graining", "output"});
  if (j.contains("figure")) apply_figure(c, read_value<int>(j["figure"], "figure"));
  if (j.contains("command")) c.command = parse_command(read_value<std::string>(j["command"], "command"));
  if (j.contains("model")) c.model = model_from_value(j["model"]);
  if (j.contains("sweep")) {
    const json& s = j["sweep"];
    check_object(s, "sweep", {"dx", "dt", "method", "bootstrap", "miller_madow", "class_cap"});
    if (s.contains("dx")) c.sweep.dx = read_list<double>(s["dx"], "sweep.dx");
    if (s.contains("dt")) c.sweep.dt = read_list<int>(s["dt"], "sweep.dt");
    if (s.contains("method")) {
      const auto m = read_value<std::string>(s["method"], "sweep.method");
      if (m == "exact") {
        c.sweep.method = Method::exact;
      } else if (m == "monte-carlo") {
        c.sweep.method = Method::monte_carlo;
      } else {
        throw ConfigError("must be \"exact\" or \"monte-carlo\"", "sweep.method");
      }
    }
    if (s.contains("bootstrap")) c.sweep.bootstrap = read_value<int>(s["bootstrap"], "sweep.bootstrap");
    if (s.contains("miller_madow")) c.sweep.miller_madow = read_value<bool>(s["miller_madow"], "sweep.miller_madow");
    if (s.contains("class_cap")) c.sweep.class_cap = read_value<std::size_t>(s["class_cap"], "sweep.class_cap");
  }
  if (j.contains("sampling")) {
    const json& s = j["sampling"];
    check_object(s, "sampling", {"count", "seed", "workers"});
    if (s.contains("count")) c.sweep.count = read_value<std::size_t>(s["count"], "sampling.count");
    if (s.contains("seed")) c.sweep.seed = read_value<std::uint64_t>(s["seed"], "sampling.seed");
    if (s.contains("workers")) c.sweep.workers = read_value<unsigned>(s["workers"], "sampling.workers");
  }
  if (j.contains("urn")) {
    const json& u = j["urn"];
    check_object(u, "urn", {"mode", "t1", "m", "k"});
    if (u.contains("mode")) {
      c.urn_mode = read_value<std::string>(u["mode"], "urn.mode");
      if (c.urn_mode != "surface" && c.urn_mode != "curves") throw ConfigError("must be surface or curves", "urn.mode");
    }
    if (u.contains("t1")) c.t1s = read_list<int>(u["t1"], "urn.t1");
    if (u.contains("m")) c.ms = read_list<int>(u["m"], "urn.m");
    if (u.contains("k")) c.ks = read_list<int>(u["k"], "urn.k");
  }
  if (j.contains("translate")) {
    const json& t = j["translate"];
    check_object(t, "translate", {"times", "T", "dx"});
    if (t.contains("times")) c.times = read_list<int>(t["times"], "translate.times");
    if (t.contains("T")) c.shifts = read_list<int>(t["T"], "translate.T");
    if (t.contains("dx")) c.dx = read_value<double>(t["dx"], "translate.dx");
  }
  if (j.contains("graining")) {
    if (!j["graining"].is_object()) throw ConfigError("must be an object", "graining");
    c.graining = j["graining"];
  }
  if (j.contains("output")) {
    const json& o = j["output"];
    check_object(o, "output", {"dir", "format", "stdout"});
    if (o.contains("dir")) c.out_dir = read_value<std::string>(o["dir"], "output.dir");
    if (o.contains("format")) c.format = read_value<std::string>(o["format"], "output.format");
    if (o.contains("stdout")) c.to_stdout = read_value<bool>(o["stdout"], "output.stdout");
  }
}

RunConfig parse_config(const std::vector<std::string>& args, std::optional<std::string> env_seed) {
  CLI::App app{"Entropy of coarse-grained histories", "histent"};
  std::string command, config_path, model, out_dir, format, method;
  int figure = 0, bootstrap = 0;
  std::vector<double> dx;
  std::vector<int> dt;
  std::size_t count = 0;
  std::uint64_t seed = 0;
  unsigned workers = 0;
  bool to_stdout = false, miller_madow = false;
  app.add_option("command", command, "sweep | urn | translate | maxent | check");
  auto* o_config = app.add_option("--config", config_path, "JSON config file");
  auto* o_figure = app.add_option("--figure", figure, "Figure preset 1..5");
  auto* o_model = app.add_option("--model", model, "rw | diffusion | brownian | urn | random");
  auto* o_dx = app.add_option("--dx", dx, "Bin widths (comma-separated)")->delimiter(',');
  auto* o_dt = app.add_option("--dt", dt, "Coarse time steps in fine steps (comma-separated)")->delimiter(',');
  auto* o_count = app.add_option("--count", count, "Trajectories");
  auto* o_seed = app.add_option("--seed", seed, "Master seed");
  auto* o_workers = app.add_option("--workers", workers, "Worker threads (0 = all cores)");
  auto* o_out = app.add_option("--out", out_dir, "Output directory");
  auto* o_format = app.add_option("--format", format, "csv | json")->check(CLI::IsMember({"csv", "json"}));
  auto* o_stdout = app.add_flag("--stdout", to_stdout, "Write results to standard output");
  auto* o_method = app.add_option("--method", method, "exact | monte-carlo")->check(CLI::IsMember({"exact", "monte-carlo"}));
  auto* o_boot = app.add_option("--bootstrap", bootstrap, "Bootstrap resamples for CIs (0 = off)");
  auto* o_mm = app.add_flag("--miller-madow", miller_madow, "Apply the Miller-Madow correction");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    throw;
  } catch (const CLI::ParseError& e) {
    throw ConfigError(e.what(), "args");
  }

  RunConfig c;
  json file = json::object();
  if (o_config->count()) {
    std::ifstream in(config_path);
    if (!in) throw ConfigError("cannot open config file " + config_path, "config");
    try {
      file = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError(std::string("invalid JSON: ") + e.what(), "config");
    }
    if (!file.is_object()) throw ConfigError("config file must hold a JSON object", "config");
  }

  // Figure preset first, so the file and flags refine it.
  if (o_figure->count()) apply_figure(c, figure);
  else if (file.contains("figure")) apply_figure(c, read_value<int>(file["figure"], "figure"));
  if (!command.empty()) {
    const Command requested = parse_command(command);
    if (c.figure && requested != c.command) {
      throw ConfigError("figure " + std::to_string(*c.figure) + " does not run '" + command + "'", "figure");
    }
    c.command = requested;
  } else if (file.contains("command")) c.command = parse_command(read_value<std::string>(file["command"], "command"));
  else if (!c.figure) throw ConfigError("missing subcommand (sweep, urn, translate, maxent, check)", "command");
  if (!c.figure && !file.contains("model")) c.model = default_model(c.command);

  json body = file;
  body.erase("figure");
  body.erase("command");
  apply_config_json(c, body);

  auto overridden = [&](const char* flag, bool in_file) {
    if (in_file) c.warnings.push_back(std::string("--") + flag + " overrides the config file value");
  };
  if (o_model->count()) {
    overridden("model", file.contains("model"));
    c.model = model_from_json(json{{"model", model}});
  }
  if (o_dx->count()) {
    overridden("dx", has(file, "sweep", "dx") || has(file, "translate", "dx"));
    if (c.command == Command::translate) {
      if (dx.size() != 1) throw ConfigError("translate takes a single dx", "dx");
      c.dx = dx.front();
    } else if (c.command == Command::maxent) {
      if (dx.size() != 1) throw ConfigError("maxent takes a single dx", "dx");
      c.graining["dx"] = dx.front();
    } else {
      c.sweep.dx = dx;
    }
  }
  if (o_dt->count()) {
    overridden("dt", has(file, "sweep", "dt") || has(file, "graining", "dt"));
    if (c.command == Command::maxent) {
      if (dt.size() != 1) throw ConfigError("maxent takes a single dt", "dt");
      c.graining["dt"] = dt.front();
    } else {
      c.sweep.dt = dt;
    }
  }
  const bool count_in_file = has(file, "sampling", "count");
  if (o_count->count()) {
    overridden("count", count_in_file);
    c.sweep.count = count;
  } else if (!count_in_file) {
    c.sweep.count = default_count(c.model);
  }
  if (o_seed->count()) {
    overridden("seed", has(file, "sampling", "seed"));
    c.sweep.seed = seed;
  } else if (!has(file, "sampling", "seed") && env_seed && !env_seed->empty()) {
    try {
      std::size_t used = 0;
      c.sweep.seed = std::stoull(*env_seed, &used);
      if (used != env_seed->size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw ConfigError("must be a non-negative integer", "HISTENT_SEED");
    }
  }
  if (o_workers->count()) c.sweep.workers = workers;
  if (o_out->count()) {
    overridden("out", has(file, "output", "dir"));
    c.out_dir = out_dir;
  }
  if (o_format->count()) {
    overridden("format", has(file, "output", "format"));
    c.format = format;
  }
  if (o_stdout->count()) c.to_stdout = to_stdout;
  if (o_method->count()) {
    overridden("method", has(file, "sweep", "method"));
    c.sweep.method = method == "exact" ? Method::exact : Method::monte_carlo;
  }
  if (o_boot->count()) {
    overridden("bootstrap", has(file, "sweep", "bootstrap"));
    c.sweep.bootstrap = bootstrap;
  }
  if (o_mm->count()) c.sweep.miller_madow = miller_madow;

  if (c.format != "csv" && c.format != "json") throw ConfigError("must be csv or json", "output.format");
  if (c.sweep.count < 1) throw ConfigError("must be at least 1", "sampling.count");
  if (c.sweep.bootstrap == 1 || c.sweep.bootstrap < 0) throw ConfigError("must be 0 (off) or at least 2", "sweep.bootstrap");

  // Axis defaults that depend on the model.
  if (const auto* urn = std::get_if<UrnModel>(&c.model)) {
    const int span = urn->balls * 2;
    if (c.t1s.empty()) c.t1s = range(0, span);
    if (c.ms.empty()) c.ms = range(1, span);
    if (c.ks.empty()) c.ks = {1, 2, 3};
    if (c.command == Command::translate) {
      if (c.times.empty()) c.times = {0, 1};
      if (c.shifts.empty()) c.shifts = range(0, span);
    }
  }
  if (c.command == Command::translate && !std::holds_alternative<UrnModel>(c.model)) {
    if (c.times.empty()) c.times = {1};
    if (c.shifts.empty()) c.shifts = range(0, model_steps(c.model) - c.times.back());
  }
  if (c.command == Command::urn && !std::holds_alternative<UrnModel>(c.model)) {
    throw ConfigError("the urn subcommand needs the urn model", "model");
  }
  if (c.command == Command::sweep && std::holds_alternative<UrnModel>(c.model)) {
    throw ConfigError("urn studies run under the urn subcommand", "model");
  }
  return c;
}

int execute(const RunConfig& c, std::ostream& out, std::ostream& err) {
  for (const auto& w : c.warnings) err << "histent: warning: " << w << '\n';
  switch (c.command) {
    case Command::sweep: {
      err << "histent: sweep " << model_name(c.model) << " ("
          << (c.sweep.method == Method::exact ? std::string("exact")
                                              : std::to_string(c.sweep.count) + " trajectories")
          << ")\n";
      emit_sweep(c, sweep_entropy_vs_graining(c.model, c.sweep), "sweep_" + model_name(c.model), out, err);
      return 0;
    }
    case Command::urn: {
      const auto& urn = std::get<UrnModel>(c.model);
      if (c.urn_mode == "surface") {
        emit_sweep(c, urn_two_time_surface(urn, c.t1s, c.ms), "urn_surface", out, err);
      } else {
        emit_sweep(c, urn_multi_time_curves(urn, c.t1s, c.ks), "urn_curves", out, err);
      }
      return 0;
    }
    case Command::translate: {
      emit_sweep(c, second_law_translation(c.model, c.times, c.dx, c.shifts), "translate_" + model_name(c.model), out,
                 err);
      return 0;
    }
    case Command::maxent: {
      const auto law = model_law(c.model);
      if (!law) throw ConfigError("maxent needs a model with an exact law", "model");
      const StateSpace space = model_space(c.model);
      const CoarseGraining cg = graining_from_json(c.graining, space, model_steps(c.model), model_eta(c.model));
      const InitialCondition rho0 = model_initial(c.model);
      const InequalityReport report = verify_inequalities(*law, cg, rho0);
      const auto hd = exact_history_probs(*law, rho0, cg, space);
      const double xs[] = {1.0, 1.5, 2.0};
      json j = report.to_json();
      j["entropy"] = make_report(entropy_terms(hd), xs, step_by_step_entropy(hd, cg)).to_json();
      j["provenance"] = {{"config", c.to_json()}, {"config_hash", hex(c.hash())}, {"tool_version", kToolVersion}};
      emit(c, "maxent.json", j.dump(2) + "\n", out, err);
      if (!report.holds) {
        err << "histent: inequality chain violated\n";
        return 1;
      }
      return 0;
    }
    case Command::check:
      return run_checks(err, c.sweep.workers) ? 0 : 1;
  }
  return 2;
}

bool run_checks(std::ostream& err, unsigned workers) {
  bool all = true;
  auto report = [&](const std::string& name, bool ok, const std::string& detail = {}) {
    err << "check " << name << ": " << (ok ? "ok" : "FAILED") << (detail.empty() ? "" : " (" + detail + ")") << '\n';
    all = all && ok;
  };
  auto guarded = [&](const std::string& name, auto&& body) {
    try {
      body();
    } catch (const std::exception& e) {
      report(name, false, e.what());
    }
  };

  guarded("kernels", [&] {
    random_walk_kernel(StateSpace::lattice(8)).validate();
    diffusion_kernel(1.0, 0.01, StateSpace::continuum(20.0, 200, -10.0)).validate();
    urn_kernel(15).validate();
    report("kernels", true);
  });

  guarded("urn-exact", [&] {
    double worst = 0.0;
    for (int R = 1; R <= 4; ++R) {
      const TransitionLaw law(urn_kernel(R));
      for (int j = 0; j <= 12; ++j) {
        const Eigen::MatrixXd P = law.over(j);
        for (int n0 = 0; n0 <= 2 * R; ++n0) {
          for (int nj = 0; nj <= 2 * R; ++nj) worst = std::max(worst, std::abs(urn_exact_prob(nj, j, n0, R) - P(nj, n0)));
        }
      }
    }
    report("urn-exact", worst <= 1e-12, "max error " + sci(worst));
  });

  std::mt19937_64 rng(20240611);
  double identity_err = 0.0, mono_drop = 0.0, chain_slack = 0.0;
  guarded("identities", [&] {
    for (int trial = 0; trial < 20; ++trial) {
      const auto V = static_cast<std::size_t>(3 + trial % 3);
      const int N = 2 + trial % 2;
      const StateSpace space = StateSpace::lattice(V, Boundary::open);
      const TransitionLaw law(random_kernel(V, rng));
      const InitialCondition rho0 = InitialCondition::point_cell(space, static_cast<std::size_t>(trial) % V);
      std::vector<SpatialPartition> parts;
      for (int k = 0; k < N; ++k) {
        std::vector<int> map(V);
        std::iota(map.begin(), map.end(), 0);
        for (auto& b : map) b = b % 2;
        parts.push_back(SpatialPartition::from_cell_map(space, map));
      }
      std::vector<int> times = range(1, N);
      const CoarseGraining cg(TimeGrid(N, 1.0, times), parts);
      const auto hd = exact_history_probs(law, rho0, cg, space);
      const EntropyTerms t = entropy_terms(hd);
      const double log2V = std::log2(static_cast<double>(V));
      identity_err = std::max({identity_err, std::abs(t.lp_depth() - (N * log2V - t.s_hs())),
                               std::abs(t.isham_linden(1.0) - t.dimensionless()),
                               std::abs(t.s_hs() - step_by_step_entropy(hd, cg))});
      for (auto mode : {CoarsenMode::merge_bins, CoarsenMode::drop_times}) {
        const int factor = 2;
        if (mode == CoarsenMode::drop_times && N % factor != 0) continue;
        const CoarseGraining coarse = coarsen(cg, mode, factor);
        const EntropyTerms tc = entropy_terms(exact_history_probs(law, rho0, coarse, space));
        for (double x : {1.0, 1.5, 2.0}) mono_drop = std::max(mono_drop, t.isham_linden(x) - tc.isham_linden(x));
        mono_drop = std::max(mono_drop, t.s_hs() - tc.s_hs());
      }
      if (trial % 2 == 0) {
        const InequalityReport r = verify_inequalities(law, cg, rho0);
        chain_slack = std::min({chain_slack, r.slack_ic_dc, r.slack_dc_hs});
      }
    }
    report("identities", identity_err <= 1e-9, "max error " + sci(identity_err));
    report("monotonicity", mono_drop <= 1e-9, "max drop " + sci(mono_drop));
    report("inequality-chain", chain_slack >= -1e-6, "min slack " + sci(chain_slack));
  });

  guarded("reproducibility", [&] {
    const ModelConfig model = RandomWalkModel{64, 32, 0};
    const auto a = sample_trajectories(model, 2000, 7, 1);
    const auto b = sample_trajectories(model, 2000, 7, std::max(2u, resolve_workers(workers)));
    report("reproducibility", a.data == b.data);
  });
  return all;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  try {
    const char* env = std::getenv("HISTENT_SEED");
    const RunConfig config = parse_config(args, env ? std::optional<std::string>(env) : std::nullopt);
    return execute(config, out, err);
  } catch (const CLI::CallForHelp&) {
    out << "usage: histent <sweep|urn|translate|maxent|check> [--config FILE] [--figure 1..5] [--model NAME]\n"
           "               [--dx LIST] [--dt LIST] [--count N] [--seed S] [--workers K] [--out DIR]\n"
           "               [--format csv|json] [--stdout] [--method exact|monte-carlo] [--bootstrap K]\n"
           "               [--miller-madow]\n";
    return 0;
  } catch (const ConfigError& e) {
    err << "histent: config error: " << e.what() << '\n';
    return 2;
  } catch (const CapacityError& e) {
    err << "histent: " << e.what() << '\n';
    return 2;
  } catch (const InvariantViolation& e) {
    err << "histent: invariant violated: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "histent: error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace histent
