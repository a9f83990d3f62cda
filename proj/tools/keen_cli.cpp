// Command-line front end. Links only the public C API: it assembles a JSON
// request per subcommand (config block merged with flags), runs it, and
// writes the response payloads (JSON / CSV / SVG) plus a run manifest into
// the output directory.

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "keen/keen.h"

using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

struct Global {
  std::string config_path;
  std::string out_dir = ".";
  std::string format = "json";  // or "csv"
  std::string input_csv_path;   // reuse a stored trajectory (collapse-fit/ratio)
  long long seed = -1;
  int jobs = 0;
  bool plot = false;
  std::vector<std::string> sets;  // PARAM=VALUE model overrides
};

// Extract one subcommand block from the config; everything else stays as the
// model configuration handed to keen_create.
std::pair<json, json> split_config(const json& cfg, const std::string& cmd) {
  static const std::vector<std::string> cmds = {
      "simulate",   "classify",  "quintic",       "amplitudes", "modes",
      "collapse-fit", "sweep1d", "regime2d",      "mc-ic",      "mc-params",
      "branch-switch", "separatrix", "ratio"};
  json model = json::object();
  json block = json::object();
  for (auto it = cfg.begin(); it != cfg.end(); ++it) {
    if (it.key() == cmd) {
      block = it.value();
    } else if (std::find(cmds.begin(), cmds.end(), it.key()) != cmds.end()) {
      continue;  // another command's block
    } else {
      model[it.key()] = it.value();
    }
  }
  return {model, block};
}

void apply_sets(json& model, const std::vector<std::string>& sets) {
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw CLI::ValidationError("--set expects PARAM=VALUE, got '" + s + "'");
    try {
      std::size_t used = 0;
      const std::string num = s.substr(eq + 1);
      const double v = std::stod(num, &used);
      if (used != num.size()) throw std::invalid_argument(num);
      model[s.substr(0, eq)] = v;
    } catch (const std::exception&) {
      throw CLI::ValidationError("--set value is not a number in '" + s + "'");
    }
  }
}

int run_command(const Global& g, const std::string& cmd, json request) {
  json cfg = json::object();
  if (!g.config_path.empty()) cfg = json::parse(read_file(g.config_path));
  auto [model, block] = split_config(cfg, cmd);
  apply_sets(model, g.sets);
  // CLI flags override config-block values.
  for (auto it = request.begin(); it != request.end(); ++it)
    block[it.key()] = it.value();
  request = block;

  if (g.seed >= 0 &&
      (cmd == "mc-ic" || cmd == "mc-params"))
    request["seed"] = static_cast<unsigned long long>(g.seed);
  int jobs = g.jobs;
  if (jobs == 0) {
    if (const char* env = std::getenv("KEEN_JOBS")) jobs = std::atoi(env);
  }
  if (jobs > 0 &&
      (cmd == "mc-ic" || cmd == "mc-params" || cmd == "regime2d"))
    request["jobs"] = jobs;
  if (g.plot) request["plot"] = true;
  if (!g.input_csv_path.empty()) {
    if (cmd != "collapse-fit" && cmd != "ratio")
      throw CLI::ValidationError("--input applies to collapse-fit and ratio");
    request["csv"] = read_file(g.input_csv_path);
  }

  const auto t0 = std::chrono::steady_clock::now();
  keen_handle* h = keen_create(model.dump().c_str());
  if (!h) {
    std::cerr << "error: out of memory" << std::endl;
    return 2;
  }
  char* out = nullptr;
  const int code = keen_run(h, cmd.c_str(), request.dump().c_str(), &out);
  if (code != KEEN_OK) {
    std::cerr << "error (" << (code == KEEN_ERR_USAGE ? "usage" : "numerical")
              << ") in " << cmd << ": " << keen_last_error(h) << std::endl;
    keen_destroy(h);
    return code;
  }
  json resp = json::parse(out);
  keen_string_free(out);
  keen_destroy(h);

  std::vector<std::string> outputs;
  auto emit = [&](const std::string& name, const std::string& content) {
    const std::string path = g.out_dir + "/" + name;
    write_file(path, content);
    outputs.push_back(path);
  };

  json meta = resp;  // JSON artifact without the bulky embedded payloads
  if (resp.contains("csv")) {
    emit(cmd + ".csv", resp.at("csv").get<std::string>());
    meta.erase("csv");
  }
  if (resp.contains("svg")) {
    emit(cmd + ".svg", resp.at("svg").get<std::string>());
    meta.erase("svg");
  }
  emit(cmd + ".json", meta.dump(2) + "\n");

  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  json manifest{{"command", cmd},
                {"config", g.config_path.empty() ? json() : json(g.config_path)},
                {"seed", g.seed >= 0 ? json(g.seed) : json()},
                {"outputs", outputs},
                {"version", keen_version()},
                {"wall_clock_s", wall}};
  write_file(g.out_dir + "/manifest.json", manifest.dump(2) + "\n");

  // Primary payload to stdout.
  if (g.format == "csv" && resp.contains("csv"))
    std::cout << resp.at("csv").get<std::string>();
  else
    std::cout << meta.dump(2) << std::endl;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Endogenous-money macro model: simulation and asymptotics"};
  app.require_subcommand(1);
  app.set_version_flag("--version", keen_version());

  Global g;
  app.add_option("--config", g.config_path, "model + command config (JSON)");
  app.add_option("--out", g.out_dir, "output directory (default .)");
  app.add_option("--seed", g.seed, "RNG seed for Monte Carlo commands");
  app.add_option("--format", g.format, "stdout payload: json or csv")
      ->check(CLI::IsMember({"json", "csv"}));
  app.add_flag("--plot", g.plot, "also emit an SVG figure");
  app.add_option("--jobs", g.jobs, "worker threads (default: KEEN_JOBS or cores)");
  app.add_option("--set", g.sets, "model parameter override PARAM=VALUE")
      ->take_all();
  app.add_option("--input", g.input_csv_path,
                 "trajectory CSV to reuse (collapse-fit, ratio)");

  // Per-command request flags; unset options are left to config/defaults.
  json req = json::object();
  auto opt_num = [&req](CLI::App* c, const char* flag, const char* key,
                        const char* help) {
    c->add_option_function<double>(
        flag, [&req, key = std::string(key)](double v) { req[key] = v; },
        help);
  };
  auto opt_int = [&req](CLI::App* c, const char* flag, const char* key,
                        const char* help) {
    c->add_option_function<int>(
        flag, [&req, key = std::string(key)](int v) { req[key] = v; }, help);
  };
  auto opt_str = [&req](CLI::App* c, const char* flag, const char* key,
                        const char* help) {
    c->add_option_function<std::string>(
        flag,
        [&req, key = std::string(key)](const std::string& v) { req[key] = v; },
        help);
  };
  auto opt_win = [&req](CLI::App* c, const char* flag, const char* key,
                        const char* help) {
    c->add_option_function<std::vector<double>>(
          flag,
          [&req, key = std::string(key)](const std::vector<double>& v) {
            req[key] = v;
          },
          help)
        ->expected(2);
  };

  CLI::App* c;
  c = app.add_subcommand("simulate", "integrate the model and emit a trajectory");
  opt_num(c, "--t-end", "t_end", "final time (years, default 150)");
  opt_num(c, "--rel-tol", "rel_tol", "relative tolerance");
  opt_num(c, "--sample-dt", "sample_dt", "output grid spacing");
  c->add_flag_function(
      "--nine-state", [&req](std::int64_t) { req["nine_state"] = true; },
      "integrate W_D explicitly (conservation check)");

  app.add_subcommand("classify", "leading-order regime classification");
  app.add_subcommand("quintic", "characteristic quintic and its roots");
  app.add_subcommand("amplitudes", "leading-order amplitude/phase table");

  c = app.add_subcommand("modes", "second-order mode spectrum");
  opt_win(c, "--window", "window", "transient fit window [begin end]");
  c->add_flag_function(
      "--no-fit", [&req](std::int64_t) { req["fit"] = false; },
      "skip the trajectory transient fit");

  c = app.add_subcommand("collapse-fit", "terminal-collapse closed-form fit");
  opt_num(c, "--t-end", "t_end", "integration horizon (default 400)");
  opt_win(c, "--window", "window", "collapse fit window (default 250 350)");

  c = app.add_subcommand("sweep1d", "one-parameter sensitivity sweep");
  opt_str(c, "--param", "param", "parameter name (required)");
  opt_int(c, "--n", "n", "grid points (default 33)");

  c = app.add_subcommand("regime2d", "regime diagram over (s, v)");
  opt_num(c, "--s-lo", "s_lo", "s lower bound");
  opt_num(c, "--s-hi", "s_hi", "s upper bound");
  opt_num(c, "--v-lo", "v_lo", "v lower bound");
  opt_num(c, "--v-hi", "v_hi", "v upper bound");
  opt_int(c, "--ns", "ns", "grid points in s");
  opt_int(c, "--nv", "nv", "grid points in v");

  c = app.add_subcommand("mc-ic", "Monte Carlo over initial conditions");
  opt_num(c, "--sigma", "sigma", "fractional perturbation sd (default 0.01)");
  opt_int(c, "--n", "n", "number of runs (default 100)");

  c = app.add_subcommand("mc-params", "Monte Carlo over parameters");
  opt_num(c, "--sigma", "sigma", "fractional perturbation sd (default 0.10)");
  opt_int(c, "--n", "n", "number of samples (default 100)");

  c = app.add_subcommand("branch-switch", "switch a parameter mid-run");
  opt_str(c, "--param", "param", "parameter to switch (required)");
  opt_num(c, "--before", "before", "value before the switch (required)");
  opt_num(c, "--after", "after", "value after the switch (required)");
  opt_num(c, "--t-switch", "t_switch", "switch time (required)");
  opt_num(c, "--horizon", "horizon", "total horizon (default 420)");

  c = app.add_subcommand("separatrix", "bisect the branch-switch separatrix");
  opt_str(c, "--param", "param", "parameter to switch (required)");
  opt_num(c, "--before", "before", "value before the switch (required)");
  opt_num(c, "--after", "after", "value after the switch (required)");
  opt_num(c, "--t1", "t1", "bracket start (required)");
  opt_num(c, "--t2", "t2", "bracket end (required)");
  opt_num(c, "--horizon", "horizon", "total horizon (default 420)");

  c = app.add_subcommand("ratio", "lagged amplitude-ratio diagnostic");
  opt_str(c, "--num", "numerator", "numerator field (default F_L)");
  opt_str(c, "--den", "denominator", "denominator field (default F_D)");
  opt_win(c, "--window", "window", "evaluation window (default 60 100)");

  // Let global flags (--out, --config, ...) appear after the subcommand.
  for (CLI::App* sc : app.get_subcommands([](const CLI::App*) { return true; }))
    sc->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;  // usage problems exit 1; --help/--version exit 0
  }

  try {
    return run_command(g, app.get_subcommands().front()->get_name(), req);
  } catch (const CLI::Error& e) {
    std::cerr << "error (usage): " << e.what() << std::endl;
    return 1;
  } catch (const json::exception& e) {
    std::cerr << "error (usage): " << e.what() << std::endl;
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 2;
  }
}
