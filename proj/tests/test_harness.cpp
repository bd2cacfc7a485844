// SPDX-License-Identifier: Apache-2.0

#include <sstream>

#include <gtest/gtest.h>

#include "gibc/harness.hpp"

using namespace gibc;
using namespace gibc::harness;

namespace
{

fs::path scratch_dir(const std::string &name)
{
  const fs::path p = fs::temp_directory_path() / ("gibc_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

json weyl_config(const fs::path &out)
{
  return json{{"schema_version", 1},
              {"experiment", "weyl"},
              {"geometry", {{"builtin", "circle"}, {"radius", 1.0}}},
              {"params", {{"count", 120}, {"fit_first", 21}, {"fit_last", 120}}},
              {"output_dir", out.string()},
              {"seed", 3},
              {"workers", 1}};
}

std::string sample(const std::string &name) { return read_file(fs::path(GIBC_SAMPLE_DIR) / name); }

}  // namespace

TEST(Sha256, KnownDigests)
{
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(Overrides, SetNestedValues)
{
  json cfg = weyl_config("x");
  apply_override(cfg, "params.count=300");
  apply_override(cfg, "params.note=hello");
  apply_override(cfg, "tolerances.halfplane=1e-9");
  apply_override(cfg, "mesh.alpha=[1,0,1]");
  EXPECT_EQ(cfg["params"]["count"], 300);
  EXPECT_EQ(cfg["params"]["note"], "hello");
  EXPECT_EQ(cfg["tolerances"]["halfplane"], 1e-9);
  EXPECT_EQ(cfg["mesh"]["alpha"], json::array({1, 0, 1}));
  EXPECT_THROW(apply_override(cfg, "novalue"), InvalidArgument);
  EXPECT_THROW(apply_override(cfg, "params..x=1"), InvalidArgument);
}

TEST(Config, JsonRoundTrip)
{
  const ExperimentConfig c = ExperimentConfig::from_json(weyl_config("somewhere"));
  EXPECT_EQ(ExperimentConfig::from_json(c.to_json()), c);
  EXPECT_EQ(c.output_dir, "somewhere");
  EXPECT_EQ(c.seed, 3u);
}

TEST(Validator, ReportsEveryProblemAtOnce)
{
  const json bad{{"schema_version", 2},
                 {"experiment", "fgf_convergence"},
                 {"geometry", {{"builtin", "triangle"}}},
                 {"params", {{"s", json::array({1.0})}, {"seeds", 5}, {"checkpoints", json::array({8, 16})}}},
                 {"tolerances", {{"halfplane", 2.0}}},
                 {"colour", "red"}};
  const auto errs = validate_config(bad);
  EXPECT_GE(errs.size(), 6u);
  auto mentions = [&](const std::string &needle) {
    return std::any_of(errs.begin(), errs.end(), [&](const std::string &e) { return e.find(needle) != std::string::npos; });
  };
  EXPECT_TRUE(mentions("schema_version"));
  EXPECT_TRUE(mentions("colour"));
  EXPECT_TRUE(mentions("seeds"));
  EXPECT_TRUE(mentions("checkpoints"));
  EXPECT_TRUE(mentions("halfplane"));
  EXPECT_TRUE(mentions("triangle"));
}

TEST(Validator, AcceptsShippedSamples)
{
  for (const auto &f : fs::directory_iterator(GIBC_SAMPLE_DIR))
  {
    if (f.path().extension() == ".json")
    {
      EXPECT_TRUE(validate_config(json::parse(read_file(f.path()))).empty()) << f.path();
    }
  }
}

TEST(Run, InvalidConfigExitsWithTwo)
{
  json cfg = weyl_config(scratch_dir("invalid"));
  cfg["params"]["fit_last"] = 500;
  const RunResult r = run(cfg);
  EXPECT_EQ(r.exit_code, kExitInvalidConfig);
  EXPECT_FALSE(r.errors.empty());
}

TEST(Run, FailedAssertionExitsWithOne)
{
  const fs::path out = scratch_dir("assert");
  json cfg = weyl_config(out);
  cfg["params"]["expected_slope"] = 3.0;
  const RunResult r = run(cfg);
  EXPECT_EQ(r.exit_code, kExitAssertion);
  EXPECT_FALSE(r.manifest["passed"].get<bool>());
  fs::remove_all(out);
}

TEST(Run, ManifestChecksumsMatchAndRerunIsReproducible)
{
  const fs::path out = scratch_dir("weyl");
  const RunResult first = run(weyl_config(out));
  ASSERT_EQ(first.exit_code, kExitPass) << first.manifest.dump(2);
  const json &m = first.manifest;
  EXPECT_EQ(m["tool"], "gibc");
  EXPECT_EQ(m["experiment"], "weyl");
  EXPECT_EQ(m["cache_misses"], 1);
  std::map<std::string, std::string> sums;
  for (const auto &a : m["artifacts"])
  {
    const std::string file = a["file"];
    EXPECT_EQ(sha256_file(out / file), a["sha256"].get<std::string>()) << file;
    sums[file] = a["sha256"];
  }
  EXPECT_TRUE(sums.count("spectrum.csv"));
  EXPECT_TRUE(sums.count("weyl.json"));
  const RunResult second = run(weyl_config(out));
  EXPECT_EQ(second.manifest["cache_hits"], 1);
  EXPECT_EQ(second.manifest["cache_misses"], 0);
  for (const auto &a : second.manifest["artifacts"])
  {
    EXPECT_EQ(sums[a["file"].get<std::string>()], a["sha256"].get<std::string>()) << a["file"];
  }
  EXPECT_EQ(second.manifest["config_sha256"], m["config_sha256"]);
  fs::remove_all(out);
}

TEST(Run, CorruptCacheIsRebuilt)
{
  const fs::path out = scratch_dir("corrupt");
  ASSERT_EQ(run(weyl_config(out)).exit_code, kExitPass);
  for (const auto &f : fs::directory_iterator(out / "cache"))
  {
    if (f.path().extension() == ".bin")
    {
      std::ofstream(f.path(), std::ios::app) << "garbage";
    }
  }
  const RunResult r = run(weyl_config(out));
  EXPECT_EQ(r.exit_code, kExitPass);
  EXPECT_EQ(r.manifest["cache_hits"], 0);
  fs::remove_all(out);
}

TEST(Run, OptionsOverrideConfig)
{
  const fs::path out = scratch_dir("opts");
  RunOptions ro;
  ro.output_dir = out.string();
  ro.seed = 99;
  ro.overrides = {"params.count=150", "params.fit_last=150"};
  const RunResult r = run(weyl_config("ignored"), ro);
  ASSERT_EQ(r.exit_code, kExitPass);
  const json cfg = json::parse(read_file(out / "config.json"));
  EXPECT_EQ(cfg["seed"], 99);
  EXPECT_EQ(cfg["params"]["count"], 150);
  EXPECT_FALSE(fs::exists("ignored"));
  fs::remove_all(out);
}

TEST(PlotData, EmitsLongFormatAndRejectsUnknownIds)
{
  const fs::path out = scratch_dir("plot");
  const RunResult r = run(weyl_config(out));
  ASSERT_EQ(r.exit_code, kExitPass);
  std::ostringstream os;
  emit_plotdata(r.manifest_path, "spectrum", os);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "series,x,y");
  int rows = 0;
  while (std::getline(is, line))
  {
    ++rows;
  }
  EXPECT_GE(rows, 119);
  std::ostringstream sink;
  EXPECT_THROW(emit_plotdata(r.manifest_path, "no_such_artifact", sink), InvalidArgument);
  fs::remove_all(out);
}

TEST(Run, ImpedanceSampleAgreesThreeWays)
{
  const fs::path out = scratch_dir("imp");
  RunOptions ro;
  ro.output_dir = out.string();
  const RunResult r = run(json::parse(sample("impedance_symbol.json")), ro);
  EXPECT_EQ(r.exit_code, kExitPass) << r.manifest.dump(2);
  fs::remove_all(out);
}
