#include "mrt/scenario.hpp"
#include "mrt/wigner_field.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

using namespace mrt;
namespace fs = std::filesystem;

namespace {

std::string config_error(const std::string& text) {
  try {
    parse_scenario(text, "case.yaml");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

std::string replace(std::string s, const std::string& from, const std::string& to) {
  const auto at = s.find(from);
  if (at != std::string::npos) s.replace(at, from.size(), to);
  return s;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("mrt_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string write(const std::string& name, const std::string& text) const {
    const fs::path p = dir_ / name;
    std::ofstream(p) << text;
    return p.string();
  }

  int run(const std::string& args) const {
    const std::string cmd = std::string(MRT_CLI) + " " + args + " > " + (dir_ / "log.txt").string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
  }

  fs::path dir_;
};

}  // namespace

TEST(Scenario, ParsesTheEmbeddedBase) {
  const Scenario s = parse_scenario(test::kBaseYaml);
  EXPECT_EQ(s.d, 1);
  EXPECT_DOUBLE_EQ(s.wn.k_o, 100.0);
  EXPECT_TRUE(s.source.harmonic);
  EXPECT_DOUBLE_EQ(s.source.sigma_s, 1.0 / std::sqrt(20.0));
  EXPECT_DOUBLE_EQ(s.grids.z_hi, 500.0);
}

TEST(Scenario, MalformedYamlReportsLineAndColumn) {
  const std::string e = config_error("dimension: 1\nmedium: {c0: 1500\n  sigma_c: [\n");
  EXPECT_NE(e.find("case.yaml:"), std::string::npos) << e;
  EXPECT_NE(e.find("malformed"), std::string::npos) << e;
}

TEST(Scenario, UnknownKeyIsNamedWithItsPath) {
  const std::string e = config_error(replace(test::kBaseYaml, "ell: 5.0", "ell: 5.0, colour: red"));
  EXPECT_NE(e.find("colour"), std::string::npos) << e;
  EXPECT_NE(e.find("unknown key"), std::string::npos) << e;
}

TEST(Scenario, MissingRequiredKey) {
  const std::string e = config_error(replace(test::kBaseYaml, "range: {z: 60.0}", "range: {}"));
  EXPECT_NE(e.find("missing required key 'z'"), std::string::npos) << e;
}

TEST(Scenario, RejectsInconsistentValues) {
  EXPECT_FALSE(config_error(replace(test::kBaseYaml, "dimension: 1", "dimension: 3")).empty());
  EXPECT_FALSE(config_error(replace(test::kBaseYaml, "v_perp: [0.5]", "v_perp: [0.5, 0.1]")).empty());
  EXPECT_FALSE(config_error(replace(test::kBaseYaml, "kappa: 50.0", "kappa: -1")).empty());
  EXPECT_FALSE(config_error(replace(test::kBaseYaml, "k0: 100.0", "k0: 100.0, frequency: 20.0")).empty());
}

TEST(Scenario, InfiniteCorrelationTimeMeansFrozen) {
  const Scenario s = parse_scenario(replace(test::kBaseYaml, "T_corr: 2.0", "T_corr: .inf"));
  EXPECT_TRUE(s.medium.frozen());
}

TEST(Scenario, RegimeDiagnostics) {
  const Scenario s = parse_scenario(test::kBaseYaml);
  const RegimeDiagnostics r = regime_diagnostics(s);
  EXPECT_NEAR(r.gamma, s.wn.lambda_o() / s.medium.ell, 1e-15);
  EXPECT_NEAR(r.mach, 0.5 / 1500.0, 1e-15);
  EXPECT_GT(r.strong_scattering, 0.0);
}

TEST(WignerFieldIo, SaveLoadRoundTrip) {
  WignerField f;
  f.d = 1;
  f.z = 3.5;
  f.axes = {Axis{"omega", "rad/s", -1, 1, 3}, Axis{"k", "rad/m", -2, 2, 4}, Axis{"x", "m", 0, 1, 2}};
  f.values.resize(f.cells());
  for (std::size_t i = 0; i < f.values.size(); ++i) f.values[i] = 0.25 * i;
  f.errors = f.values;
  f.metadata["solver"] = "test";
  const fs::path p = fs::temp_directory_path() / "mrt_roundtrip.mrtw";
  f.save(p.string());
  const WignerField g = WignerField::load(p.string());
  fs::remove(p);
  EXPECT_EQ(g.values, f.values);
  EXPECT_EQ(g.errors, f.errors);
  EXPECT_EQ(g.shape(), f.shape());
  EXPECT_EQ(g.z, f.z);
  EXPECT_EQ(g.metadata["solver"], "test");
  EXPECT_NEAR(g.total_mass(), f.total_mass(), 1e-15);
}

TEST_F(Cli, VerifyPassesOnTheDefaultScenario) {
  EXPECT_EQ(run("verify -o " + (dir_ / "out").string()), 0) << slurp(dir_ / "log.txt");
  EXPECT_TRUE(fs::exists(dir_ / "out" / "manifest.json"));
  EXPECT_TRUE(fs::exists(dir_ / "out" / "verify.json"));
}

TEST_F(Cli, ConfigurationErrorsExitWithTwo) {
  const std::string bad = write("bad.yaml", "dimension: 1\nmedium: [\n");
  EXPECT_EQ(run("kernels -s " + bad + " -o " + (dir_ / "out").string()), 2);
  EXPECT_NE(slurp(dir_ / "log.txt").find("bad.yaml:"), std::string::npos);
  EXPECT_EQ(run("no-such-command"), 2);
}

TEST_F(Cli, FrozenRangeImagingExitsWithFour) {
  const std::string frozen = write("frozen.yaml", replace(test::kBaseYaml, "T_corr: 2.0", "T_corr: .inf"));
  EXPECT_EQ(run("image-range -s " + frozen + " -o " + (dir_ / "out").string()), 4) << slurp(dir_ / "log.txt");
}

TEST_F(Cli, SameSeedGivesIdenticalOutput) {
  const std::string a = (dir_ / "a").string(), b = (dir_ / "b").string();
  ASSERT_EQ(run("propagate --mc --particles 20000 --seed 3 -o " + a), 0) << slurp(dir_ / "log.txt");
  ASSERT_EQ(run("propagate --mc --particles 20000 --seed 3 -j 2 -o " + b), 0);
  EXPECT_EQ(slurp(dir_ / "a" / "wigner.mrtw"), slurp(dir_ / "b" / "wigner.mrtw"));
  const std::string ma = slurp(dir_ / "a" / "manifest.json");
  EXPECT_NE(ma.find("config_fnv1a64"), std::string::npos);
  EXPECT_NE(ma.find("\"seed\": 3"), std::string::npos) << ma;
}
