#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Core>

#include "config.hpp"
#include "runners.hpp"

namespace {

using namespace erglab;
using namespace erglab::cli;

constexpr const char* kVersion = "0.1.0";

struct Flags {
  std::string config, system, system_file, matrix, out, replay;
  std::vector<std::string> map_params;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::map<std::string, std::string> fields;
};

json versions() {
  return json{{"erglab", kVersion},
              {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                            std::to_string(EIGEN_MINOR_VERSION)},
              {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                    std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                    std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
              {"cli11", CLI11_VERSION},
              {"compiler", std::string("g++ ") + __VERSION__}};
}

void print_errors(const std::vector<std::string>& errors) {
  for (const auto& e : errors) std::cerr << "config error: " << e << '\n';
}

// Config file, then flags on top; returns the merged document or throws
// schema_error for malformed flags.
json merge_config(const Command& cmd, const Flags& fl) {
  json cfg = json::object();
  if (!fl.config.empty()) {
    cfg = read_json_file(fl.config);
    if (!cfg.is_object()) throw schema_error("'" + fl.config + "' must contain a JSON object");
    if (cfg.contains("command") && cfg["command"] != cmd.name)
      throw schema_error("config is for '" + cfg["command"].dump() + "', not '" + cmd.name + "'");
    // system files named in a config are relative to the config
    if (cfg.contains("system") && cfg["system"].is_object() && cfg["system"].contains("file") &&
        cfg["system"]["file"].is_string()) {
      const std::filesystem::path file = cfg["system"]["file"].get<std::string>();
      if (file.is_relative())
        cfg["system"]["file"] = (std::filesystem::path(fl.config).parent_path() / file).lexically_normal().string();
    }
  }
  cfg["command"] = cmd.name;
  if (fl.seed) cfg["seed"] = *fl.seed;
  if (!fl.out.empty()) cfg["output"] = fl.out;
  if (fl.workers) cfg["workers"] = *fl.workers;
  if (!fl.system.empty()) cfg["system"] = json{{"name", fl.system}};
  if (!fl.system_file.empty()) cfg["system"] = json{{"file", fl.system_file}};
  for (const auto& kv : fl.map_params) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw schema_error("--map-param expects KEY=VALUE, got '" + kv + "'");
    const auto v = parse_flag(kv.substr(eq + 1), Kind::real);
    if (!v) throw schema_error("--map-param " + kv.substr(0, eq) + " must be a real");
    cfg["system"]["params"][kv.substr(0, eq)] = *v;
  }
  if (!fl.matrix.empty()) {
    const auto v = parse_flag(fl.matrix, Kind::real_list);
    if (!v) throw schema_error("--matrix expects a comma-separated list of reals");
    cfg["system"]["matrix"] = *v;
  }
  for (const Field& f : cmd.fields) {
    const auto it = fl.fields.find(f.key);
    if (it == fl.fields.end()) continue;
    const auto v = parse_flag(it->second, f.kind);
    cfg["params"][f.key] = v ? *v : json(it->second);
  }
  return cfg;
}

int run_command(const Command& cmd, const Flags& fl) {
  json cfg;
  try {
    cfg = merge_config(cmd, fl);
  } catch (const schema_error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  }
  if (const auto errors = validate_config(cfg); !errors.empty()) {
    print_errors(errors);
    return 2;
  }

  RunContext ctx;
  ctx.cfg = cfg;
  ctx.params = cfg["params"];
  ctx.seed = cfg["seed"].get<std::uint64_t>();
  ctx.workers = cfg["workers"].get<std::size_t>();
  if (ctx.workers == 0) ctx.workers = default_workers();
  ctx.out = cfg["output"].get<std::string>();

  if (cmd.name == "oracle" && !fl.replay.empty()) {
    const auto seed = parse_flag(fl.replay, Kind::integer);
    if (!seed || seed->get<long long>() < 0) {
      std::cerr << "config error: --replay expects an instance seed\n";
      return 2;
    }
    try {
      const json rec = run_oracle(ctx.get<std::string>("lemma"), seed->get<std::uint64_t>());
      std::cout << rec.dump() << '\n';
      return rec["pass"].get<bool>() ? 0 : 1;
    } catch (const std::invalid_argument& e) {
      std::cerr << "config error: " << e.what() << '\n';
      return 2;
    }
  }

  const auto start = std::chrono::steady_clock::now();
  try {
    std::filesystem::create_directories(ctx.out);
    if (cmd.name == "oracle") {
      run_oracle_cmd(ctx);
    } else if (cmd.name == "perturb") {
      run_perturb(ctx);
    } else if (cmd.name == "sweep") {
      run_sweep(ctx);
    } else {
      ctx.stage = "system";
      const AnySystem sys = make_system(cfg["system"]);
      if (cmd.name == "spectrum") run_spectrum(ctx, sys);
      if (cmd.name == "dominate") run_dominate(ctx, sys);
      if (cmd.name == "block") run_block(ctx, sys);
      if (cmd.name == "decompose") run_decompose(ctx, sys);
      if (cmd.name == "disk") run_disk(ctx, sys);
    }
  } catch (const schema_error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error in " << cmd.name << " (" << ctx.stage << "): " << e.what() << '\n';
    return 2;
  } catch (const numeric_error& e) {
    std::cerr << "numeric failure in " << cmd.name << " (" << ctx.stage << "): " << e.what() << '\n';
    return 3;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  nlohmann::ordered_json report;
  report["header"] = {{"wall_time_seconds", wall}, {"versions", versions()}};
  report["config"] = cfg;
  report["outputs"] = ctx.files;
  report["summary"] = ctx.summary;
  report["exit_code"] = ctx.exit_code;
  std::ofstream(ctx.out / "report.json") << report.dump(2) << '\n';
  std::cout << ctx.summary.dump() << '\n';
  return ctx.exit_code;
}

int run_validate(const std::string& path) {
  json cfg;
  try {
    cfg = read_json_file(path);
  } catch (const schema_error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  }
  const auto errors = validate_config(cfg);
  if (!errors.empty()) {
    print_errors(errors);
    return 2;
  }
  std::cout << path << ": ok (" << cfg["command"].get<std::string>() << ")\n";
  return 0;
}

std::string flag_names(const std::string& key) {
  std::string dashed = key;
  std::replace(dashed.begin(), dashed.end(), '_', '-');
  return dashed == key ? "--" + key : "--" + key + ",--" + dashed;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1 && argv[1][0] != '-') {
    const std::string word = argv[1];
    const auto names = command_names();
    if (std::find(names.begin(), names.end(), word) == names.end()) {
      std::cerr << "unknown command '" << word << "'" << did_you_mean(word, names) << "\n";
      return 2;
    }
  }

  CLI::App app{"erglab: experiments on conservative dynamics and Pesin theory"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  Flags fl;
  std::string validate_path;
  const Command* chosen = nullptr;

  for (const Command& cmd : commands()) {
    CLI::App* sub = app.add_subcommand(cmd.name, cmd.help);
    sub->add_option("--config", fl.config, "JSON config file");
    sub->add_option("--seed", fl.seed, "master seed");
    sub->add_option("--out", fl.out, "output directory");
    sub->add_option("--workers", fl.workers, "worker threads (0: hardware)");
    if (cmd.needs_system || cmd.name == "sweep") {
      sub->add_option("--system", fl.system, "zoo map name");
      sub->add_option("--system-file", fl.system_file, "finite system JSON file");
      sub->add_option("--map-param", fl.map_params, "system parameter KEY=VALUE (repeatable)");
      sub->add_option("--matrix", fl.matrix, "matrix entries, row-major, comma-separated");
    }
    if (cmd.name == "oracle") sub->add_option("--replay", fl.replay, "rerun one instance seed and print its record");
    for (const Field& f : cmd.fields) {
      std::string help = f.help;
      if (!f.fallback.is_null()) help += " [" + f.fallback.dump() + "]";
      sub->add_option_function<std::string>(
          flag_names(f.key), [&fl, key = f.key](const std::string& v) { fl.fields[key] = v; }, help);
    }
    sub->callback([&chosen, &cmd] { chosen = &cmd; });
  }
  CLI::App* val = app.add_subcommand("validate", "check a config file without running it");
  val->add_option("path", validate_path, "config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  if (val->parsed()) return run_validate(validate_path);
  return run_command(*chosen, fl);
}
