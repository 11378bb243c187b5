#include "commands.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

#include "curvop/pinching.hpp"
#include "curvop/sampling.hpp"
#include "curvop/selftest.hpp"
#include "curvop/version.hpp"

namespace curvop::cli {

namespace {

// ---- config -------------------------------------------------------------

json search_defaults() { return {{"starts", 64}, {"iterations", 500}, {"grad_tol", 1e-8}, {"threads", 0}}; }

json solver_defaults(Method method, double step, double rtol, double atol) {
  return {{"method", std::string(method_name(method))},
          {"step", step},
          {"rtol", rtol},
          {"atol", atol},
          {"max_step", 0.0},  // <= 0: unbounded
          {"norm_cap", 0.0},
          {"max_steps", 10'000'000},
          {"store_every", 1}};
}

json all_cone_names() {
  json names = json::array();
  for (ConeId c : kAllCones) names.push_back(std::string(cone_name(c)));
  return names;
}

json generate_defaults(const std::string& mode, int n) {
  return {{"generate", mode}, {"n", n}, {"cone", "co"}, {"delta", 1e-3}};
}

bool compatible(const json& def, const json& val) {
  if (def.is_number_float()) return val.is_number();
  if (def.is_number_integer()) return val.is_number_integer();
  if (def.is_string()) return val.is_string();
  if (def.is_boolean()) return val.is_boolean();
  if (def.is_array()) return val.is_array();
  if (def.is_object()) return val.is_object();
  return false;
}

void merge_into(json& target, const json& user, const std::string& where) {
  if (!user.is_object()) throw ConfigError(where + " must be a JSON object");
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string path = where + "." + it.key();
    if (!target.contains(it.key())) throw ConfigError("unknown key " + path);
    json& slot = target[it.key()];
    if (!compatible(slot, it.value())) throw ConfigError("wrong type for " + path);
    if (slot.is_object()) {
      merge_into(slot, it.value(), path);
    } else if (slot.is_number_float()) {
      slot = it.value().get<double>();
    } else {
      slot = it.value();
    }
  }
}

json resolve_operator(const json& user, const json& fallback) {
  if (user.is_null()) return fallback;
  if (!user.is_object()) throw ConfigError("operator must be an object");
  const int forms = int(user.contains("generate")) + int(user.contains("file")) + int(user.contains("inline"));
  if (forms != 1) throw ConfigError("operator needs exactly one of generate, file, inline");
  json resolved;
  if (user.contains("generate")) {
    resolved = fallback.contains("generate") ? fallback : generate_defaults("identity", 4);
  } else if (user.contains("file")) {
    resolved = {{"file", ""}};
  } else {
    resolved = {{"inline", json::object()}};
  }
  merge_into(resolved, user, "operator");
  if (resolved.contains("generate")) {
    const std::string mode = resolved["generate"];
    if (mode != "identity" && mode != "zero" && !parse_random_mode(mode))
      throw ConfigError("unknown operator.generate mode '" + mode + "'");
    if (!parse_cone(resolved["cone"].get<std::string>())) throw ConfigError("unknown operator.cone");
    if (resolved["n"].get<int>() < 2) throw ConfigError("operator.n must be >= 2");
  }
  return resolved;
}

void check_cone(const json& name, const std::string& where) {
  if (!name.is_string() || !parse_cone(name.get<std::string>()))
    throw ConfigError("unknown cone " + name.dump() + " in " + where + " (expected co, 2co, ic1, ic2, ric, scal, sec)");
}

void check_solver(const json& s) {
  if (!parse_method(s["method"].get<std::string>())) throw ConfigError("unknown solver.method (rk4-fixed, rkf45-adaptive)");
}

void check_positive_int(const json& cfg, const char* key) {
  if (cfg[key].get<long>() < 1) throw ConfigError(std::string(key) + " must be >= 1");
}

json probe_defaults(const std::string& kind) {
  json d = {{"schema_version", kSchemaVersion}, {"seed", 1}, {"kind", kind},       {"cone", "co"},
            {"search", search_defaults()},     {"threads", 0}, {"expect", "none"}};
  if (kind == "tangency") {
    d.update({{"n", 4}, {"samples", 500}, {"tol", 1e-6}, {"boundary_offset", 0.0}});
  } else if (kind == "invariance") {
    d.update({{"n", 4},
              {"samples", 100},
              {"tol", 1e-6},
              {"horizon_fraction", 0.5},
              {"boundary_offset", 1e-3},
              {"check_every", 1},
              {"solver", solver_defaults(Method::Rkf45Adaptive, 0.0, 1e-10, 1e-12)}});
  } else if (kind == "defect") {
    d.update({{"n", 3}, {"A", 0.1}, {"B", 1.0}, {"samples", 1000}, {"tol", 1e-8}, {"scal_cap", 1e3}, {"max_draws", 10000}});
  } else if (kind == "theorem") {
    d.update({{"n", 3},
              {"A", 0.1},
              {"B", 1.0},
              {"eps", 0.5},
              {"samples", 200},
              {"tol", 1e-6},
              {"scale_max", 10.0},
              {"states_per_window", 400},
              {"solver", solver_defaults(Method::Rkf45Adaptive, 0.0, 1e-10, 1e-13)}});
  } else {
    throw ConfigError("unknown probe kind '" + kind + "' (tangency, invariance, defect, theorem)");
  }
  return d;
}

json command_defaults(const std::string& command, const json& user) {
  const json base = {{"schema_version", kSchemaVersion}, {"seed", 1}};
  json d = base;
  if (command == "selftest") {
    d.update({{"tol", 1e-10}, {"n_min", 2}, {"n_max", 8}, {"random_operators", 20}, {"fault", "none"}});
  } else if (command == "cone-test") {
    d.update({{"tol", 1e-8},
              {"cones", all_cone_names()},
              {"operator", generate_defaults("gaussian-bianchi", 4)},
              {"search", search_defaults()}});
  } else if (command == "integrate") {
    d.update({{"tol", 1e-10},
              {"t_end", 0.2},
              {"operator", generate_defaults("identity", 3)},
              {"solver", solver_defaults(Method::Rk4Fixed, 1e-4, 1e-9, 1e-12)},
              {"margins", json::array()},
              {"search", search_defaults()}});
  } else if (command == "probe") {
    std::string kind = "tangency";
    if (user.contains("kind")) {
      if (!user["kind"].is_string()) throw ConfigError("kind must be a string");
      kind = user["kind"];
    }
    d = probe_defaults(kind);
  } else if (command == "constants") {
    d.update({{"tol", 0.0}, {"n", 3}, {"A", 0.1}, {"B", 1.0}, {"grid_points", 10001}});
  } else {
    throw ConfigError("unknown command '" + command + "'");
  }
  return d;
}

// ---- formatting ---------------------------------------------------------

std::string num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

json num_json(double x) { return std::isfinite(x) ? json(x) : json(num(x)); }

class CsvWriter {
 public:
  CsvWriter(const std::string& command, const json& cfg, const std::vector<std::string>& columns) {
    out_ << "# tool=curvop version=" << kVersion << " command=" << command << "\n";
    out_ << "# config_hash=" << config_hash(cfg) << " seed=" << cfg["seed"].get<std::uint64_t>() << "\n";
    out_ << "# config=" << cfg.dump() << "\n";
    row(columns);
  }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << "\n";
  }
  std::string str() const { return out_.str(); }

 private:
  std::ostringstream out_;
};

json provenance(const std::string& command, const json& cfg) {
  return {{"tool", "curvop"},
          {"version", kVersion},
          {"command", command},
          {"config_hash", config_hash(cfg)},
          {"seed", cfg["seed"]},
          {"config", cfg}};
}

std::string flag(bool b) { return b ? "1" : "0"; }

// ---- shared builders ----------------------------------------------------

SearchBudget make_budget(const json& cfg) {
  const json& s = cfg["search"];
  SearchBudget b;
  b.starts = s["starts"];
  b.iterations = s["iterations"];
  b.grad_tol = s["grad_tol"];
  b.threads = s["threads"];
  b.seed = mix_seed(cfg["seed"].get<std::uint64_t>(), 0x5eed);
  return b;
}

SolverConfig make_solver(const json& s) {
  SolverConfig c;
  c.method = *parse_method(s["method"].get<std::string>());
  c.step = s["step"];
  c.rtol = s["rtol"];
  c.atol = s["atol"];
  const double max_step = s["max_step"];
  c.max_step = max_step > 0.0 ? max_step : std::numeric_limits<double>::infinity();
  c.norm_cap = s["norm_cap"];
  c.max_steps = s["max_steps"];
  c.store_every = s["store_every"];
  return c;
}

CurvatureOperator load_operator(const json& spec, std::uint64_t seed, const SearchBudget& budget) {
  if (spec.contains("file")) {
    const std::string path = spec["file"];
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open operator file '" + path + "'");
    json j;
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError("operator file '" + path + "' is not valid JSON: " + e.what());
    }
    return operator_from_json(j);
  }
  if (spec.contains("inline")) return operator_from_json(spec["inline"]);
  const std::string mode = spec["generate"];
  const BasisPtr basis = build_basis(spec["n"]);
  if (mode == "identity") return CurvatureOperator::identity(basis);
  if (mode == "zero") return CurvatureOperator::zero(basis);
  RandomSpec rs{*parse_random_mode(mode), *parse_cone(spec["cone"].get<std::string>()), spec["delta"]};
  return random_operator(basis, seed, rs, budget);
}

bool expectation_met(const json& cfg, bool found) {
  const std::string expect = cfg["expect"];
  if (expect == "clean") return !found;
  if (expect == "violations") return found;
  return true;
}

// ---- commands -----------------------------------------------------------

CommandResult cmd_selftest(const json& cfg) {
  SelftestOptions opt;
  opt.n_min = cfg["n_min"];
  opt.n_max = cfg["n_max"];
  opt.random_operators = cfg["random_operators"];
  opt.tol = cfg["tol"];
  if (cfg["fault"] == "sharp-normalization") opt.sharp_scale = 2.0;

  const SelftestResult res = run_selftest(opt);
  CsvWriter csv("selftest", cfg, {"check", "passed", "value", "detail"});
  std::ostringstream summary;
  for (const auto& c : res.checks) {
    csv.row({c.name, flag(c.passed), num(c.value), c.detail});
    summary << (c.passed ? "PASS " : "FAIL ") << c.name << "  worst residual " << num(c.value);
    if (!c.detail.empty()) summary << "  (" << c.detail << ")";
    summary << "\n";
  }
  CommandResult out;
  if (res.passed()) {
    summary << "selftest: all " << res.checks.size() << " checks passed\n";
  } else {
    summary << "selftest: failed check " << res.first_failure() << "\n";
    out.exit_code = kExitCheckFailed;
  }
  out.summary = summary.str();
  out.files["selftest.csv"] = csv.str();
  return out;
}

CommandResult cmd_cone_test(const json& cfg) {
  const SearchBudget budget = make_budget(cfg);
  const CurvatureOperator r = load_operator(cfg["operator"], cfg["seed"], budget);
  const double tol = cfg["tol"];

  CsvWriter csv("cone-test", cfg, {"cone", "oracle", "status", "margin", "witness_margin"});
  json reports = json::array();
  std::ostringstream summary;
  summary << "operator n=" << r.n() << " |R|=" << num(r.norm()) << "\n";
  for (const auto& name : cfg["cones"]) {
    const ConeId cone = *parse_cone(name.get<std::string>());
    const std::string oracle(oracle_kind_name(oracle_kind(cone)));
    try {
      const MembershipReport rep = member(r, cone, tol, budget);
      const double check = rep.witness.columns.size() ? evaluate_witness(r, cone, rep.witness) : rep.margin;
      const std::string status = rep.inside ? "inside" : "outside";
      csv.row({name, oracle, status, num(rep.margin), num(check)});
      json w = json::array();
      for (Eigen::Index c = 0; c < rep.witness.columns.cols(); ++c) {
        json col = json::array();
        for (Eigen::Index i = 0; i < rep.witness.columns.rows(); ++i) col.push_back(rep.witness.columns(i, c));
        w.push_back(col);
      }
      reports.push_back({{"cone", name},
                         {"oracle", oracle},
                         {"inside", rep.inside},
                         {"margin", num_json(rep.margin)},
                         {"witness", w},
                         {"witness_margin", num_json(check)}});
      summary << name.get<std::string>() << ": " << status << " margin " << num(rep.margin) << "\n";
    } catch (const DimensionError& e) {
      csv.row({name, oracle, "undefined", "nan", "nan"});
      reports.push_back({{"cone", name}, {"oracle", oracle}, {"undefined", e.what()}});
      summary << name.get<std::string>() << ": undefined (" << e.what() << ")\n";
    }
  }
  json doc = {{"provenance", provenance("cone-test", cfg)}, {"operator", to_json(r)}, {"reports", reports}};
  CommandResult out;
  out.summary = summary.str();
  out.files["cone_test.json"] = doc.dump(2) + "\n";
  out.files["cone_test.csv"] = csv.str();
  return out;
}

CommandResult cmd_integrate(const json& cfg) {
  const SearchBudget budget = make_budget(cfg);
  const CurvatureOperator r0 = load_operator(cfg["operator"], cfg["seed"], budget);
  const SolverConfig solver = make_solver(cfg["solver"]);
  std::vector<ConeId> cones;
  for (const auto& name : cfg["margins"]) cones.push_back(*parse_cone(name.get<std::string>()));

  CommandResult out;
  std::ostringstream summary;
  Trajectory traj;
  bool truncated = false;
  try {
    traj = integrate(r0, cfg["t_end"], solver);
  } catch (const TruncationError& e) {
    traj = e.partial();
    truncated = true;
    summary << "truncated: " << e.what() << "\n";
  }

  std::vector<std::string> columns = {"t", "norm", "scal", "ric_min"};
  for (ConeId c : cones) columns.push_back("margin_" + std::string(cone_name(c)));
  columns.push_back("blowup");
  CsvWriter csv("integrate", cfg, columns);
  json states = json::array();
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    std::vector<std::string> row = {num(traj.times[i]), num(traj.ops[i].norm()), num(traj.scal_track[i]),
                                    num(traj.ric_min_track[i])};
    for (ConeId c : cones) row.push_back(num(cone_margin(traj.ops[i], c, budget).margin));
    const bool last = i + 1 == traj.times.size();
    row.push_back(flag(last && traj.blown_up));
    csv.row(row);
    states.push_back({{"t", traj.times[i]}, {"operator", to_json(traj.ops[i])}});
  }

  const double scal_dev = traj.times.size() >= 3 ? scal_rate_check(traj) : 0.0;
  json meta = {{"steps", traj.steps},
               {"stored", traj.times.size()},
               {"final_time", traj.times.empty() ? 0.0 : traj.times.back()},
               {"blown_up", traj.blown_up},
               {"blowup_time_estimate", traj.blowup_time_estimate ? json(*traj.blowup_time_estimate) : json()},
               {"truncated", truncated},
               {"reprojections", traj.reprojections},
               {"max_bianchi_residual", traj.max_bianchi_residual},
               {"max_symmetry_residual", traj.max_symmetry_residual},
               {"scal_rate_deviation", scal_dev}};
  json doc = {{"provenance", provenance("integrate", cfg)}, {"summary", meta}, {"states", states}};

  summary << "steps " << traj.steps << ", stored " << traj.times.size() << ", final t " << num(meta["final_time"])
          << "\n";
  if (traj.blown_up) summary << "blow-up at t ~ " << num(traj.blowup_time_estimate.value_or(traj.times.back())) << "\n";
  summary << "max bianchi residual " << num(traj.max_bianchi_residual) << ", scal rate deviation " << num(scal_dev)
          << "\n";
  const bool residual_ok = traj.max_bianchi_residual <= cfg["tol"].get<double>();
  if (!residual_ok) summary << "bianchi residual exceeds tol\n";
  out.exit_code = (truncated || !residual_ok) ? kExitCheckFailed : kExitOk;
  out.summary = summary.str();
  out.files["trajectory.csv"] = csv.str();
  out.files["trajectory.json"] = doc.dump(1) + "\n";
  return out;
}

CommandResult cmd_probe(const json& cfg) {
  const std::string kind = cfg["kind"];
  const ConeId cone = *parse_cone(cfg["cone"].get<std::string>());
  const std::uint64_t seed = cfg["seed"];
  const SearchBudget budget = make_budget(cfg);
  const int threads = cfg["threads"];
  const std::string file = "probe_" + kind;

  CommandResult out;
  std::ostringstream summary;
  json stats;
  bool found = false;

  if (kind == "tangency") {
    TangencyConfig tc;
    tc.n = cfg["n"];
    tc.samples = cfg["samples"];
    tc.tol = cfg["tol"];
    tc.boundary_offset = cfg["boundary_offset"];
    tc.seed = seed;
    tc.budget = budget;
    tc.threads = threads;
    const TangencyReport rep = tangency_probe(cone, tc);
    CsvWriter csv("probe", cfg, {"index", "margin", "slope", "exit"});
    for (std::size_t i = 0; i < rep.samples.size(); ++i) {
      const auto& s = rep.samples[i];
      csv.row({std::to_string(i), num(s.margin), num(s.slope), flag(s.exit)});
    }
    out.files[file + ".csv"] = csv.str();
    found = rep.exits > 0;
    stats = {{"exits", rep.exits}, {"worst_slope", num_json(rep.worst_slope)}, {"worst_index", rep.worst_index}};
    summary << "tangency " << cone_name(cone) << " n=" << rep.n << ": " << rep.exits << " first-order exits in "
            << rep.samples.size() << " samples, worst slope " << num(rep.worst_slope) << "\n";
  } else if (kind == "invariance") {
    InvarianceConfig ic;
    ic.n = cfg["n"];
    ic.samples = cfg["samples"];
    ic.horizon_fraction = cfg["horizon_fraction"];
    ic.tol = cfg["tol"];
    ic.boundary_offset = cfg["boundary_offset"];
    ic.solver = make_solver(cfg["solver"]);
    ic.seed = seed;
    ic.budget = budget;
    ic.check_every = cfg["check_every"];
    ic.threads = threads;
    const InvarianceReport rep = invariance_probe(cone, ic);
    CsvWriter csv("probe", cfg,
                  {"index", "initial_margin", "min_margin", "min_margin_time", "horizon", "blowup_estimate", "violated"});
    for (std::size_t i = 0; i < rep.samples.size(); ++i) {
      const auto& s = rep.samples[i];
      csv.row({std::to_string(i), num(s.initial_margin), num(s.min_margin), num(s.min_margin_time), num(s.horizon),
               num(s.blowup_estimate), flag(s.violated)});
    }
    out.files[file + ".csv"] = csv.str();
    found = rep.violations > 0;
    stats = {{"violations", rep.violations}, {"global_min_margin", num_json(rep.global_min_margin)}};
    summary << "invariance " << cone_name(cone) << " n=" << rep.n << ": " << rep.violations << " violations in "
            << rep.samples.size() << " samples, min relative margin " << num(rep.global_min_margin) << "\n";
  } else if (kind == "defect") {
    const PinchingConstants c = find_constants(cfg["n"], cfg["A"], cfg["B"]);
    DefectProbeConfig dc;
    dc.samples = cfg["samples"];
    dc.tol = cfg["tol"];
    dc.scal_cap = cfg["scal_cap"];
    dc.seed = seed;
    dc.budget = budget;
    dc.max_draws = cfg["max_draws"];
    dc.threads = threads;
    const DefectProbeReport rep = defect_psd_probe(c, cone, dc);
    CsvWriter csv("probe", cfg,
                  {"index", "t", "eps", "scal", "psi", "lambda_min", "defect_norm", "ricci_bound_ok", "wedge_bound_ok",
                   "violation"});
    for (std::size_t i = 0; i < rep.samples.size(); ++i) {
      const auto& s = rep.samples[i];
      csv.row({std::to_string(i), num(s.t), num(s.eps), num(s.scal), num(s.psi), num(s.lambda_min),
               num(s.defect_norm), flag(s.ricci_bound_ok), flag(s.wedge_bound_ok), flag(s.violation)});
    }
    out.files[file + ".csv"] = csv.str();
    found = rep.violations > 0 || rep.bound_failures > 0;
    stats = {{"violations", rep.violations},
             {"bound_failures", rep.bound_failures},
             {"worst_lambda_min", num_json(rep.worst_lambda_min)},
             {"T", c.T},
             {"K", c.K}};
    summary << "defect " << cone_name(cone) << " n=" << c.n << ": " << rep.violations << " violations, "
            << rep.bound_failures << " bound failures in " << rep.samples.size() << " samples, min eigenvalue "
            << num(rep.worst_lambda_min) << "\n";
  } else {
    TheoremProbeConfig tc;
    tc.n = cfg["n"];
    tc.A = cfg["A"];
    tc.B = cfg["B"];
    tc.eps = cfg["eps"];
    tc.samples = cfg["samples"];
    tc.tol = cfg["tol"];
    tc.scale_max = cfg["scale_max"];
    tc.solver = make_solver(cfg["solver"]);
    tc.states_per_window = cfg["states_per_window"];
    tc.seed = seed;
    tc.budget = budget;
    tc.threads = threads;
    const TheoremProbeReport rep = theorem_probe(cone, tc);
    CsvWriter csv("probe", cfg,
                  {"index", "initial_shift", "window_end", "max_shift", "max_excess", "max_psi_excess", "checked_states",
                   "violation"});
    for (std::size_t i = 0; i < rep.samples.size(); ++i) {
      const auto& s = rep.samples[i];
      csv.row({std::to_string(i), num(s.initial_shift), num(s.window_end), num(s.max_shift), num(s.max_excess),
               num(s.max_psi_excess), std::to_string(s.checked_states), flag(s.violation)});
    }
    out.files[file + ".csv"] = csv.str();
    found = rep.violations > 0;
    stats = {{"violations", rep.violations},
             {"worst_excess", num_json(rep.worst_excess)},
             {"T", rep.constants.T},
             {"K", rep.constants.K}};
    summary << "theorem (reaction term only) " << cone_name(cone) << " n=" << tc.n << ": " << rep.violations
            << " violations in " << rep.samples.size() << " trajectories, worst excess over K eps "
            << num(rep.worst_excess) << "\n";
  }

  const bool met = expectation_met(cfg, found);
  if (!met) summary << "expectation '" << cfg["expect"].get<std::string>() << "' not met\n";
  out.exit_code = met ? kExitOk : kExitCheckFailed;
  json doc = {{"provenance", provenance("probe", cfg)}, {"kind", kind}, {"cone", cfg["cone"]}, {"found", found},
              {"expectation_met", met}, {"stats", stats}};
  out.files[file + ".json"] = doc.dump(2) + "\n";
  out.summary = summary.str();
  return out;
}

CommandResult cmd_constants(const json& cfg) {
  const PinchingConstants c = find_constants(cfg["n"], cfg["A"], cfg["B"]);
  const std::vector<ConditionMargins> table = margin_table(c, cfg["grid_points"]);
  CsvWriter csv("constants", cfg, {"t", "c1", "c2_lower", "c2_upper", "c3", "c4_a", "c4_b", "c4_c", "worst"});
  double worst = std::numeric_limits<double>::infinity();
  double worst_t = 0.0;
  for (const auto& m : table) {
    csv.row({num(m.t), num(m.c1), num(m.c2_lower), num(m.c2_upper), num(m.c3), num(m.c4_a), num(m.c4_b), num(m.c4_c),
             num(m.worst())});
    if (m.worst() < worst) {
      worst = m.worst();
      worst_t = m.t;
    }
  }
  json constants = {{"n", c.n},         {"A", c.A},         {"B", c.B}, {"alpha", c.alpha},
                    {"beta", c.beta},   {"T", c.T},         {"K", c.K}, {"alpha_lo", c.alpha_lo},
                    {"alpha_hi", c.alpha_hi}};
  json doc = {{"provenance", provenance("constants", cfg)},
              {"constants", constants},
              {"grid_min_margin", worst},
              {"grid_min_margin_t", worst_t}};
  CommandResult out;
  std::ostringstream summary;
  summary << "n=" << c.n << " A=" << num(c.A) << " B=" << num(c.B) << "\n"
          << "alpha=" << num(c.alpha) << " beta=" << num(c.beta) << " T=" << num(c.T) << " K=" << num(c.K) << "\n"
          << "min margin on " << table.size() << " grid points: " << num(worst) << " at t=" << num(worst_t) << "\n";
  if (worst < -cfg["tol"].get<double>()) {
    summary << "a condition fails on the grid\n";
    out.exit_code = kExitCheckFailed;
  }
  out.summary = summary.str();
  out.files["constants.json"] = doc.dump(2) + "\n";
  out.files["constants_margins.csv"] = csv.str();
  return out;
}

}  // namespace

json resolve_config(const std::string& command, const json& user, const Overrides& overrides) {
  if (!user.is_object()) throw ConfigError("config must be a JSON object");
  json merged_user = user;
  merged_user.update(overrides.extra);
  if (overrides.seed) merged_user["seed"] = *overrides.seed;
  if (overrides.tol) merged_user["tol"] = *overrides.tol;
  if (merged_user.contains("schema_version") && merged_user["schema_version"] != kSchemaVersion)
    throw ConfigError("unsupported schema_version " + merged_user["schema_version"].dump() + " (expected " +
                      std::to_string(kSchemaVersion) + ")");

  json cfg = command_defaults(command, merged_user);
  json op_user;
  if (merged_user.contains("operator")) {
    if (!cfg.contains("operator")) throw ConfigError("unknown key config.operator");
    op_user = merged_user["operator"];
    merged_user.erase("operator");
  }
  merge_into(cfg, merged_user, "config");
  if (!cfg["seed"].is_number_unsigned() && cfg["seed"].get<long long>() < 0)
    throw ConfigError("seed must be an unsigned integer");
  if (cfg.contains("operator")) cfg["operator"] = resolve_operator(op_user, cfg["operator"]);

  if (cfg.contains("cones")) {
    if (cfg["cones"].empty()) throw ConfigError("cones must not be empty");
    for (const auto& c : cfg["cones"]) check_cone(c, "cones");
  }
  if (cfg.contains("margins"))
    for (const auto& c : cfg["margins"]) check_cone(c, "margins");
  if (cfg.contains("cone")) check_cone(cfg["cone"], "cone");
  if (cfg.contains("solver")) check_solver(cfg["solver"]);
  if (cfg.contains("expect")) {
    const std::string e = cfg["expect"];
    if (e != "none" && e != "clean" && e != "violations") throw ConfigError("expect must be none, clean or violations");
  }
  if (cfg.contains("fault")) {
    const std::string f = cfg["fault"];
    if (f != "none" && f != "sharp-normalization") throw ConfigError("unknown fault '" + f + "'");
  }
  for (const char* key : {"samples", "grid_points", "random_operators", "check_every", "states_per_window", "max_draws"})
    if (cfg.contains(key)) check_positive_int(cfg, key);
  if (cfg.contains("search")) {
    if (cfg["search"]["starts"].get<int>() < 1) throw ConfigError("search.starts must be >= 1");
    if (cfg["search"]["iterations"].get<int>() < 1) throw ConfigError("search.iterations must be >= 1");
  }
  if (cfg.contains("n") && cfg["n"].get<int>() < 2) throw ConfigError("n must be >= 2");
  if (command == "selftest" && cfg["tol"].get<double>() <= 0.0) throw ConfigError("tol must be positive");
  if (command == "integrate" && !(cfg["t_end"].get<double>() > 0.0)) throw ConfigError("t_end must be positive");
  return cfg;
}

std::string config_hash(const json& resolved) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : resolved.dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

CommandResult run_command(const std::string& command, const json& resolved) {
  if (command == "selftest") return cmd_selftest(resolved);
  if (command == "cone-test") return cmd_cone_test(resolved);
  if (command == "integrate") return cmd_integrate(resolved);
  if (command == "probe") return cmd_probe(resolved);
  if (command == "constants") return cmd_constants(resolved);
  throw ConfigError("unknown command '" + command + "'");
}

std::string csv_body(const std::string& csv) {
  std::istringstream in(csv);
  std::string line, body;
  while (std::getline(in, line))
    if (line.rfind("# ", 0) != 0) body += line + "\n";
  return body;
}

}  // namespace curvop::cli
