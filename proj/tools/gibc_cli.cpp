// SPDX-License-Identifier: Apache-2.0
//
// gibc run <config.json> [--out DIR] [--workers N] [--seed S] [--override key=value]...
// gibc emit-plot <manifest.json> <artifact> [--output FILE]
// gibc validate <config.json>

#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "gibc/harness.hpp"

namespace h = gibc::harness;

namespace
{

int load_config(const std::string &path, gibc::json &out)
{
  try
  {
    out = gibc::read_json_file(path);
    return h::kExitPass;
  }
  catch (const std::exception &e)
  {
    std::cerr << "error: " << path << ": " << e.what() << "\n";
    return h::kExitInvalidConfig;
  }
}

void print_errors(const std::vector<std::string> &errors)
{
  for (const auto &e : errors)
  {
    std::cerr << "  " << e << "\n";
  }
}

}  // namespace

int main(int argc, char **argv)
{
  CLI::App app{"Generalized impedance boundary condition experiments"};
  app.set_version_flag("--version", std::string(h::kToolVersion));
  app.require_subcommand(1);

  std::string config_path;
  h::RunOptions ro;
  std::string out_dir;
  int workers = 0;
  std::uint64_t seed = 0;
  auto *run = app.add_subcommand("run", "Run an experiment and write artifacts plus manifest.json");
  run->add_option("config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  auto *out_opt = run->add_option("--out", out_dir, "Output directory (overrides output_dir)");
  auto *workers_opt = run->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
  auto *seed_opt = run->add_option("--seed", seed, "Global seed");
  run->add_option("--override", ro.overrides, "Dotted key=value override, repeatable");

  std::string manifest_path;
  std::string artifact;
  std::string plot_out;
  auto *emit = app.add_subcommand("emit-plot", "Write long-format plot data (series,x,y) for an artifact");
  emit->add_option("manifest", manifest_path, "manifest.json of a finished run")->required()->check(CLI::ExistingFile);
  emit->add_option("artifact", artifact, "Artifact id")->required();
  emit->add_option("--output,-o", plot_out, "Output file (default: stdout)");

  std::string validate_path;
  auto *validate = app.add_subcommand("validate", "Check a config without running it");
  validate->add_option("config", validate_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  if (*run)
  {
    if (*out_opt)
    {
      ro.output_dir = out_dir;
    }
    if (*workers_opt)
    {
      ro.workers = workers;
    }
    if (*seed_opt)
    {
      ro.seed = seed;
    }
    gibc::json cfg;
    if (const int rc = load_config(config_path, cfg); rc != h::kExitPass)
    {
      return rc;
    }
    const h::RunResult res = h::run(cfg, ro);
    if (res.exit_code == h::kExitInvalidConfig)
    {
      std::cerr << "invalid config:\n";
      print_errors(res.errors);
      return res.exit_code;
    }
    for (const auto &a : res.manifest.at("assertions"))
    {
      std::cout << (a.at("passed").get<bool>() ? "PASS " : "FAIL ") << a.at("name").get<std::string>() << ": "
                << a.at("detail").get<std::string>() << "\n";
    }
    if (res.exit_code == h::kExitRuntime)
    {
      std::cerr << "runtime error: " << res.manifest.at("runtime_error").get<std::string>() << "\n";
    }
    std::cout << "manifest: " << res.manifest_path.string() << "\n";
    return res.exit_code;
  }

  if (*emit)
  {
    try
    {
      if (plot_out.empty())
      {
        h::emit_plotdata(manifest_path, artifact, std::cout);
      }
      else
      {
        std::ofstream os(plot_out);
        h::emit_plotdata(manifest_path, artifact, os);
      }
      return h::kExitPass;
    }
    catch (const gibc::InvalidArgument &e)
    {
      std::cerr << "error: " << e.what() << "\n";
      return h::kExitInvalidConfig;
    }
    catch (const std::exception &e)
    {
      std::cerr << "error: " << e.what() << "\n";
      return h::kExitRuntime;
    }
  }

  gibc::json cfg;
  if (const int rc = load_config(validate_path, cfg); rc != h::kExitPass)
  {
    return rc;
  }
  const auto errors = h::validate_config(cfg);
  if (errors.empty())
  {
    std::cout << "ok\n";
    return h::kExitPass;
  }
  std::cerr << errors.size() << " problem(s):\n";
  print_errors(errors);
  return h::kExitInvalidConfig;
}
