#include "homfield/errors.hpp"
#include "homfield/scenario.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>

using namespace homfield;

namespace {

struct Overrides {
  std::optional<double> tol;
  std::optional<int> max_iter;
  std::optional<std::string> precond;
  std::optional<std::string> blocks;
  std::optional<int> threads;
  bool deterministic = false;
  std::optional<std::string> cache;
};

Index3 parse_blocks(const std::string &text) {
  Index3 b{};
  char c1 = 0, c2 = 0;
  std::istringstream in(text);
  if (!(in >> b[0] >> c1 >> b[1] >> c2 >> b[2]) || c1 != ',' || c2 != ',' || b[0] < 1 || b[1] < 1 || b[2] < 1)
    throw ConfigError("--blocks", 0, "expected NX,NY,NZ with positive integers");
  return b;
}

void apply(const Overrides &o, ScenarioConfig &c) {
  if (o.tol) c.solver.tol = *o.tol;
  if (o.max_iter) c.solver.max_iter = *o.max_iter;
  if (o.precond) {
    try {
      c.solver.precond = preconditioner_from_string(*o.precond);
    } catch (const InvalidArgumentError &e) {
      throw ConfigError("--precond", 0, e.what());
    }
  }
  if (o.blocks) c.solver.blocks = parse_blocks(*o.blocks);
  if (o.threads) c.threads = *o.threads;
  if (o.deterministic) c.solver.deterministic = true;
  if (o.cache) c.cache_dir = *o.cache;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"homfield: two-photon interference from dielectric scatterers"};
  app.set_version_flag("--version", std::string(version_string()));
  app.require_subcommand(1);
  app.fallthrough();

  Overrides o;
  std::string out_dir;
  double threshold = 0.05;
  app.add_option("--tol", o.tol, "relative residual target");
  app.add_option("--max-iter", o.max_iter, "iteration cap");
  app.add_option("--precond", o.precond, "none, diagonal or block");
  app.add_option("--blocks", o.blocks, "block partition NX,NY,NZ");
  app.add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--deterministic", o.deterministic, "bit-reproducible reductions and FFT plans");
  app.add_option("--out", out_dir, "output directory (default homfield_out/<config name>)");
  app.add_option("--cache", o.cache, "solve cache directory");

  std::string config_path;
  auto *run = app.add_subcommand("run", "solve and emit every requested table");
  run->add_option("config", config_path, "scenario file")->required()->check(CLI::ExistingFile);
  auto *sweep = app.add_subcommand("sweep", "solve and emit the g2 (and p2) maps only");
  sweep->add_option("config", config_path, "scenario file")->required()->check(CLI::ExistingFile);
  auto *check = app.add_subcommand("oracle-check", "compare VIE and Mie g2 maps for a sphere");
  check->add_option("config", config_path, "scenario file")->required()->check(CLI::ExistingFile);
  check->add_option("--threshold", threshold, "maximum relative L2 distance");

  CLI11_PARSE(app, argc, argv);

  try {
    ScenarioConfig config = load_scenario(config_path);
    apply(o, config);
    if (out_dir.empty()) out_dir = "homfield_out/" + std::filesystem::path(config_path).stem().string();

    RunKind kind = RunKind::run;
    if (sweep->parsed()) kind = RunKind::sweep;
    if (check->parsed()) kind = RunKind::oracle_check;

    const ScenarioResult r = run_scenario(config, out_dir, kind);
    if (!r.ok) {
      std::cerr << "homfield: run failed: " << r.failure << "\n"
                << "homfield: manifest written to " << (r.run_dir / "manifest.json").string() << "\n";
      return 2;
    }
    for (const auto &t : r.tables) std::cout << t.string() << "\n";
    if (r.oracle_l2) {
      std::printf("g2 relative L2 (vie vs mie): %.6g\n", *r.oracle_l2);
      if (kind == RunKind::oracle_check && !(*r.oracle_l2 <= threshold)) {
        std::fprintf(stderr, "homfield: oracle distance above threshold %.6g\n", threshold);
        return 3;
      }
    }
    return 0;
  } catch (const ConfigError &e) {
    std::cerr << "homfield: " << e.what() << "\n";
    return 1;
  } catch (const std::exception &e) {
    std::cerr << "homfield: " << e.what() << "\n";
    return 1;
  }
}
