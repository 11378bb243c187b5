#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"
#include "curvop/version.hpp"

namespace fs = std::filesystem;
using namespace curvop::cli;

namespace {

json read_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
}

void write_outputs(const fs::path& dir, const CommandResult& result) {
  fs::create_directories(dir);
  for (const auto& [name, contents] : result.files) {
    std::ofstream out(dir / name, std::ios::binary);
    out << contents;
    if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"curvop: curvature operator algebra, invariant cones and Hamilton's ODE"};
  app.set_version_flag("--version", curvop::kVersion);
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::string out_dir = "curvop-out";
  Overrides overrides;
  app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--seed", overrides.seed, "RNG seed (overrides the config)");
  app.add_option("--out", out_dir, "output directory")->capture_default_str();
  app.add_option("--tol", overrides.tol, "tolerance (overrides the config)");

  auto* selftest = app.add_subcommand("selftest", "identity and calibration checks");
  std::optional<int> n_min, n_max;
  std::string fault;
  selftest->add_option("--n-min", n_min, "smallest dimension");
  selftest->add_option("--n-max", n_max, "largest dimension");
  selftest->add_option("--fault", fault)->group("");  // test hook

  auto* cone_test = app.add_subcommand("cone-test", "membership margins of one operator");
  std::vector<std::string> cones;
  std::string operator_file;
  cone_test->add_option("--cone", cones, "cone names (co, 2co, ic1, ic2, ric, scal, sec)");
  cone_test->add_option("--operator", operator_file, "operator JSON file");

  auto* integrate = app.add_subcommand("integrate", "integrate Hamilton's ODE dR/dt = 2Q(R)");
  std::optional<double> t_end;
  integrate->add_option("--t-end", t_end, "final time");

  auto* probe = app.add_subcommand("probe", "tangency, invariance, defect and theorem probes");
  std::string kind, probe_cone;
  std::optional<int> samples;
  probe->add_option("--kind", kind, "tangency | invariance | defect | theorem");
  probe->add_option("--cone", probe_cone, "cone name");
  probe->add_option("--samples", samples, "sample count");

  auto* constants = app.add_subcommand("constants", "pinching constants alpha, beta, T, K");
  std::optional<int> n;
  std::optional<double> a, b;
  constants->add_option("-n", n, "dimension");
  constants->add_option("-A", a, "scal bound constant A, 0 < A < 1/4");
  constants->add_option("-B", b, "scal bound constant B >= 0");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  json& extra = overrides.extra;
  if (n_min) extra["n_min"] = *n_min;
  if (n_max) extra["n_max"] = *n_max;
  if (!fault.empty()) extra["fault"] = fault;
  if (!cones.empty()) extra["cones"] = cones;
  if (!operator_file.empty()) extra["operator"] = {{"file", operator_file}};
  if (t_end) extra["t_end"] = *t_end;
  if (!kind.empty()) extra["kind"] = kind;
  if (!probe_cone.empty()) extra["cone"] = probe_cone;
  if (samples) extra["samples"] = *samples;
  if (n) extra["n"] = *n;
  if (a) extra["A"] = *a;
  if (b) extra["B"] = *b;

  try {
    const json resolved = resolve_config(command, read_config(config_path), overrides);
    const CommandResult result = run_command(command, resolved);
    write_outputs(out_dir, result);
    std::cout << result.summary;
    std::cout << "config hash " << config_hash(resolved) << ", seed " << resolved["seed"].get<std::uint64_t>()
              << ", outputs in " << out_dir << "\n";
    return result.exit_code;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCheckFailed;
  }
}
