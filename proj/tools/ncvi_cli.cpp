// ncvi: solve, project, check, bench and generate subcommands.
//
// Exit codes: 0 success, 1 check failure, 2 input error (parse, infeasible set,
// dimension mismatch), 3 solver failure, 4 invalid configuration or usage.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ncvi/ncvi.hpp"
#include "ncvi/verify.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ncvi;

namespace {

constexpr int kOk = 0, kCheckFailed = 1, kInputError = 2, kSolverFailure = 3, kUsage = 4;

fs::path default_output_dir() {
  const char* env = std::getenv("NCVI_OUTPUT_DIR");
  return env && *env ? fs::path(env) : fs::path(".");
}

std::vector<double> flat(const Point& p) {
  const Vec v = to_flat(p);
  return {v.data(), v.data() + v.size()};
}

struct Overrides {
  std::optional<double> sigma, alpha1, alpha2, alpha3, mu0, theta1, theta2, tol;
  std::optional<std::string> theta2_mode;
  std::optional<int> max_iter;

  void add(CLI::App* app) {
    app->add_option("--sigma", sigma, "line-search sufficient decrease");
    app->add_option("--alpha1", alpha1, "centering backtracking factor");
    app->add_option("--alpha2", alpha2, "mu reduction factor along the centering step");
    app->add_option("--alpha3", alpha3, "mu reduction factor after a Newton step");
    app->add_option("--mu0", mu0, "initial smoothing parameter");
    app->add_option("--theta1", theta1, "relative tolerance of the centering solve");
    app->add_option("--theta2-mode", theta2_mode, "constant, superlinear or quadratic")
        ->check(CLI::IsMember({"constant", "superlinear", "quadratic"}));
    app->add_option("--theta2", theta2, "relative tolerance of the Newton solve in constant mode");
    app->add_option("--tol", tol, "stopping tolerance on |H_0|");
    app->add_option("--max-iter", max_iter, "outer iteration limit");
  }

  SolverConfig apply(SolverConfig c) const {
    if (sigma) c.sigma = *sigma;
    if (alpha1) c.alpha1 = *alpha1;
    if (alpha2) c.alpha2 = *alpha2;
    if (alpha3) c.alpha3 = *alpha3;
    if (mu0) c.mu0 = *mu0;
    if (theta1) c.theta1 = *theta1;
    if (theta2) {
      c.theta2_const = *theta2;
      c.theta2_mode = Theta2Mode::Constant;
    }
    if (theta2_mode) {
      static const std::map<std::string, Theta2Mode> modes{{"constant", Theta2Mode::Constant},
                                                           {"superlinear", Theta2Mode::Superlinear},
                                                           {"quadratic", Theta2Mode::Quadratic}};
      c.theta2_mode = modes.at(*theta2_mode);
    }
    if (tol) c.tol_h0 = *tol;
    if (max_iter) c.max_outer = *max_iter;
    return c;
  }
};

std::string mode_name(Theta2Mode m) {
  switch (m) {
    case Theta2Mode::Constant: return "constant";
    case Theta2Mode::Superlinear: return "superlinear";
    case Theta2Mode::Quadratic: return "quadratic";
  }
  return "?";
}

json config_json(const SolverConfig& c) {
  json j{{"sigma", c.sigma},   {"alpha1", c.alpha1},       {"alpha2", c.alpha2},
         {"alpha3", c.alpha3}, {"mu0", c.mu0},             {"theta1", c.theta1},
         {"theta2_mode", mode_name(c.theta2_mode)},        {"max_outer", c.max_outer}};
  if (c.theta2_mode == Theta2Mode::Constant) j["theta2"] = c.theta2_const;
  return j;
}

json report_json(const VIProblem& prob, const SolveReport& rep, const SolverConfig& cfg, std::uint64_t seed) {
  const IterateState& last = rep.trace.back();
  json j{{"problem", prob.name},
         {"seed", seed},
         {"status", to_string(rep.status)},
         {"message", rep.message},
         {"outer_iterations", rep.outer_iterations()},
         {"krylov_iterations", rep.total_krylov()},
         {"h0_norm", last.h0_norm},
         {"mu", last.mu},
         {"tol_h0", rep.tol_h0},
         {"beta", rep.beta},
         {"theta", rep.theta},
         {"x_norm", norm(rep.solution.first)},
         {"y_norm", norm(rep.solution.second)},
         {"x", flat(rep.solution.first)},
         {"y", flat(rep.solution.second)},
         {"config", config_json(cfg)}};
  j["order_estimate"] = std::isfinite(rep.order_estimate) ? json(rep.order_estimate) : json(nullptr);
  if (rep.inverse_norm_max) j["inverse_norm_max"] = *rep.inverse_norm_max;
  if (prob.planted) j["error_to_planted"] = norm(rep.solution.first - prob.planted->first);
  return j;
}

// Runs `body`, translating library errors into exit codes.
int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigInvalid& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const InfeasibleSet& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const DimensionMismatch& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kSolverFailure;
  }
}

int cmd_solve(const fs::path& manifest, const Overrides& ov, std::optional<std::uint64_t> seed, const fs::path& out) {
  // Overrides are validated before the manifest is touched.
  const SolverConfig cfg = ov.apply(SolverConfig{});
  cfg.validate();
  const ProblemManifest man = load_manifest_data(manifest);
  const VIProblem prob = build_problem(man);
  const SolveReport rep = solve(prob, cfg);
  fs::create_directories(out);
  std::ofstream trace(out / "trace.csv");
  write_trace_csv(trace, rep);
  std::ofstream(out / "report.json") << report_json(prob, rep, cfg, seed.value_or(man.seed)).dump(2) << "\n";
  std::cout << prob.name << ": " << to_string(rep.status) << " after " << rep.outer_iterations()
            << " iterations, |H_0| = " << rep.trace.back().h0_norm;
  if (std::isfinite(rep.order_estimate)) std::cout << ", order " << rep.order_estimate;
  std::cout << "\n";
  if (rep.status != SolveStatus::Solved) {
    std::cerr << "solver: " << rep.message << "\n";
    return kSolverFailure;
  }
  return kOk;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    if (cell.empty()) continue;
    try {
      v.push_back(std::stod(cell));
    } catch (const std::exception&) {
      throw ParseError("bad number '" + cell + "'");
    }
  }
  return v;
}

int cmd_project(const std::string& manifest, const std::string& kind, int n, int m, const std::string& z_text,
                double mu) {
  SmoothedSet set;
  if (!manifest.empty()) {
    set = build_problem(load_manifest_data(manifest)).set;
  } else {
    SetDescriptor d;
    d.kind = set_kind_from_string(kind);
    d.n = n;
    d.m = m;
    set = build_set(d);
  }
  const Point shape = set->shape();
  const std::vector<double> zs = parse_list(z_text);
  if (static_cast<Eigen::Index>(zs.size()) != shape.dim())
    throw DimensionMismatch("z has " + std::to_string(zs.size()) + " entries, the set needs " +
                            std::to_string(shape.dim()));
  const Point z = from_flat(shape, Eigen::Map<const Vec>(zs.data(), shape.dim()));
  if (!(mu >= 0)) throw ConfigInvalid("mu must be nonnegative");
  const SmoothingEval e = smooth_project(*set, z, mu);
  json j{{"set", to_string(set->kind())}, {"mu", mu},
         {"value", flat(e.value)},        {"exact", flat(set->exact_project(z))},
         {"residual", e.residual},        {"min_margin", e.min_margin},
         {"inner_iterations", e.inner_newton_iters}};
  std::cout << j.dump(2) << "\n";
  return kOk;
}

int cmd_check(const std::string& filter, bool list, const std::string& format) {
  auto suite = verify::check_suite();
  if (list) {
    for (const auto& c : suite) std::cout << c.name << "\n";
    return kOk;
  }
  std::vector<std::string> wanted;
  std::stringstream ss(filter);
  for (std::string w; std::getline(ss, w, ',');)
    if (!w.empty()) wanted.push_back(w);
  for (const auto& w : wanted) {
    if (std::none_of(suite.begin(), suite.end(), [&](const auto& c) { return c.name == w; })) {
      std::cerr << "error: unknown check '" << w << "' (see --list)\n";
      return kUsage;
    }
  }
  bool all_pass = true;
  json rows = json::array();
  for (const auto& c : suite) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.name) == wanted.end()) continue;
    const verify::CheckResult r = c.run();
    all_pass = all_pass && r.pass;
    if (format == "json") {
      rows.push_back({{"check", c.name}, {"pass", r.pass}, {"details", r.details}});
    } else {
      for (const auto& d : r.details) std::cout << "    " << d << "\n";
      std::cout << (r.pass ? "PASS " : "FAIL ") << c.name << std::endl;
    }
  }
  if (format == "json") std::cout << rows.dump(2) << "\n";
  return all_pass ? kOk : kCheckFailed;
}

struct FamilyInstance {
  ProblemManifest man;
  std::string shape;
};

// Maps a family and size to a generator call.
FamilyInstance make_instance(const std::string& family, int size, bool strict, std::uint64_t seed) {
  if (family == "lcp") return {generate_lcp(size, true, strict, seed), std::to_string(size)};
  if (family == "sdcp") {
    const int r = std::max(1, 2 * size / 5);
    return {generate_sdcp(size, std::min(r, size - 1), strict, seed), std::to_string(size)};
  }
  if (family == "polyhedral") return {generate_polyhedral_vi(size, size + 2, strict, seed), std::to_string(size)};
  if (family == "opnorm") {
    const int m = std::max(1, size - 1);
    return {generate_opnorm_vi(m, size, strict, seed), std::to_string(m) + "x" + std::to_string(size)};
  }
  if (family == "nuclear") {
    const int m = std::max(2, size - 1);
    return {generate_nuclear_vi(m, std::max(m, size), strict, seed),
            std::to_string(m) + "x" + std::to_string(std::max(m, size))};
  }
  throw ConfigInvalid("unknown family '" + family + "'");
}

int cmd_bench(const std::string& family, const std::vector<int>& sizes, int reps, bool degenerate,
              std::uint64_t seed, const Overrides& ov, const std::string& format, const fs::path& out) {
  if (sizes.empty()) throw ConfigInvalid("--sizes must list at least one size");
  if (reps < 1) throw ConfigInvalid("--reps must be >= 1");
  const SolverConfig cfg = ov.apply(SolverConfig{});
  cfg.validate();
  json rows = json::array();
  int failed = 0, total = 0;
  for (int n : sizes) {
    for (int rep = 0; rep < reps; ++rep) {
      const std::uint64_t s = seed + static_cast<std::uint64_t>(rep);
      const FamilyInstance in = make_instance(family, n, !degenerate, s);
      const VIProblem prob = build_problem(in.man);
      const auto t0 = std::chrono::steady_clock::now();
      const SolveReport r = solve(prob, cfg);
      const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      ++total;
      if (r.status != SolveStatus::Solved) ++failed;
      rows.push_back({{"family", family},
                      {"size", in.shape},
                      {"rep", rep},
                      {"seed", s},
                      {"strict", !degenerate},
                      {"status", to_string(r.status)},
                      {"outer_iterations", r.outer_iterations()},
                      {"krylov_iterations", r.total_krylov()},
                      {"h0_norm", r.trace.back().h0_norm},
                      {"order_estimate", std::isfinite(r.order_estimate) ? json(r.order_estimate) : json(nullptr)},
                      {"wall_ms", ms}});
    }
  }
  std::ostringstream text;
  if (format == "json") {
    text << rows.dump(2) << "\n";
  } else {
    text << "family,size,rep,seed,strict,status,outer_iterations,krylov_iterations,h0_norm,order_estimate,wall_ms\n";
    text.precision(6);
    for (const auto& r : rows) {
      text << r["family"].get<std::string>() << "," << r["size"].get<std::string>() << "," << r["rep"] << ","
           << r["seed"] << "," << (r["strict"].get<bool>() ? "true" : "false") << ","
           << r["status"].get<std::string>() << "," << r["outer_iterations"] << "," << r["krylov_iterations"] << ","
           << r["h0_norm"].get<double>() << ",";
      if (!r["order_estimate"].is_null()) text << r["order_estimate"].get<double>();
      text << "," << r["wall_ms"].get<double>() << "\n";
    }
  }
  std::cout << text.str();
  fs::create_directories(out);
  std::ofstream(out / ("bench_" + family + (format == "json" ? ".json" : ".csv"))) << text.str();
  if (failed * 10 > total) {
    std::cerr << failed << " of " << total << " runs failed\n";
    return kSolverFailure;
  }
  return kOk;
}

int cmd_generate(const std::string& family, int size, bool degenerate, std::uint64_t seed,
                 const std::string& nonlinear, double scale, const fs::path& out, std::string stem) {
  FamilyInstance in = make_instance(family, size, !degenerate, seed);
  if (!nonlinear.empty()) in.man = with_nonlinear_map(in.man, map_type_from_string(nonlinear), scale);
  if (stem.empty()) stem = in.man.name;
  const fs::path path = save_manifest(in.man, out, stem);
  std::cout << path.string() << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ncvi: variational inequalities by smoothing and non-interior continuation"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string out_text;
  app.add_option("--out", out_text, "output directory (default: $NCVI_OUTPUT_DIR or .)");

  Overrides ov;
  std::optional<std::uint64_t> seed;
  std::string manifest, format = "csv";

  CLI::App* solve_cmd = app.add_subcommand("solve", "solve a manifest and write trace.csv and report.json");
  solve_cmd->add_option("manifest", manifest, "problem manifest (JSON)")->required();
  ov.add(solve_cmd);
  solve_cmd->add_option("--seed", seed, "seed recorded in the report (default: the manifest seed)");

  CLI::App* project_cmd = app.add_subcommand("project", "evaluate the smoothed projection at a point");
  std::string kind, z_text;
  int pn = 0, pm = 0;
  double mu = 0.0;
  project_cmd->add_option("--manifest", manifest, "take the set from a manifest");
  project_cmd->add_option("--set", kind, "orthant, psd, linf, opnorm, nuclear or soc3");
  project_cmd->add_option("--n", pn, "dimension");
  project_cmd->add_option("--m", pm, "matrix rows for the epigraph sets");
  project_cmd->add_option("--z", z_text, "comma-separated point in flat coordinates")->required();
  project_cmd->add_option("--mu", mu, "smoothing parameter (0 gives the exact projection)");

  CLI::App* check_cmd = app.add_subcommand("check", "run the verification suite");
  std::string filter;
  bool list = false;
  check_cmd->add_option("--filter", filter, "comma-separated check names");
  check_cmd->add_flag("--list", list, "list the check names");
  std::string check_format = "text";
  check_cmd->add_option("--format", check_format, "text or json")->check(CLI::IsMember({"text", "json"}));

  CLI::App* bench_cmd = app.add_subcommand("bench", "solve generated instances and tabulate convergence");
  std::string family;
  std::vector<int> sizes;
  int reps = 1;
  bool degenerate = false;
  std::uint64_t bench_seed = 1;
  bench_cmd->add_option("--family", family, "lcp, sdcp, polyhedral, opnorm or nuclear")->required();
  bench_cmd->add_option("--sizes", sizes, "comma-separated sizes")->delimiter(',')->required();
  bench_cmd->add_option("--reps", reps, "repetitions per size, seeds seed..seed+reps-1");
  bench_cmd->add_flag("--degenerate", degenerate, "generate non-strictly complementary instances");
  bench_cmd->add_option("--seed", bench_seed, "first seed");
  bench_cmd->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  ov.add(bench_cmd);

  CLI::App* gen_cmd = app.add_subcommand("generate", "write a generated instance as a manifest");
  int gsize = 10;
  std::string nonlinear, stem;
  double scale = 1.0;
  gen_cmd->add_option("--family", family, "lcp, sdcp, polyhedral, opnorm or nuclear")->required();
  gen_cmd->add_option("--size", gsize, "instance size");
  gen_cmd->add_flag("--degenerate", degenerate, "non-strictly complementary instance");
  gen_cmd->add_option("--seed", bench_seed, "generator seed");
  gen_cmd->add_option("--nonlinear", nonlinear, "affine_plus_logsumexp or affine_plus_arctan");
  gen_cmd->add_option("--scale", scale, "weight of the nonlinear term");
  gen_cmd->add_option("--name", stem, "file stem (default: the instance name)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }
  const fs::path out = out_text.empty() ? default_output_dir() : fs::path(out_text);

  if (*solve_cmd) return guarded([&] { return cmd_solve(manifest, ov, seed, out); });
  if (*project_cmd) {
    if (manifest.empty() && kind.empty()) {
      std::cerr << "error: project needs --manifest or --set\n";
      return kUsage;
    }
    return guarded([&] { return cmd_project(manifest, kind, pn, pm, z_text, mu); });
  }
  if (*check_cmd) return guarded([&] { return cmd_check(filter, list, check_format); });
  if (*bench_cmd)
    return guarded([&] { return cmd_bench(family, sizes, reps, degenerate, bench_seed, ov, format, out); });
  if (*gen_cmd)
    return guarded([&] { return cmd_generate(family, gsize, degenerate, bench_seed, nonlinear, scale, out, stem); });
  return kUsage;
}
