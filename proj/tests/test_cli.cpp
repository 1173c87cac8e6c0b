#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "radiant/experiment.hpp"

using namespace radiant;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("radiant_cli_" + std::to_string(::getpid())) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

struct CliRun {
  int status;
  std::string err;
};

CliRun run_cli(const std::string& command, const std::string& config_text, const fs::path& dir,
               const std::string& extra = "") {
  const auto cfg = dir / "run.cfg";
  std::ofstream(cfg, std::ios::binary) << config_text;
  const auto err = dir / "stderr.txt";
  const std::string cmd = std::string(RADIANT_CLI) + " " + command + " --config " + cfg.string() + " --out " +
                          (dir / "out").string() + " " + extra + " > /dev/null 2> " + err.string();
  const int raw = std::system(cmd.c_str());
  return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, slurp(err)};
}

ValidationError validation_error_of(const std::string& command, const std::string& text) {
  try {
    prepare_experiment(command, Config::parse_string(text), ExperimentContext{});
  } catch (const ValidationError& e) {
    return e;
  }
  ADD_FAILURE() << "no ValidationError for " << command;
  return ValidationError("", "");
}

}  // namespace

TEST(Config, ParsesKeyValueLinesAndComments) {
  const auto c = Config::parse_string("# header\n n = 4 \n\np=2.5   # trailing\r\neps_list = 0.1, 0.2,0.4\nflag = yes\n");
  EXPECT_EQ(c.get_int("n"), 4);
  EXPECT_DOUBLE_EQ(c.get_double("p"), 2.5);
  EXPECT_EQ(c.get_list("eps_list"), (std::vector<double>{0.1, 0.2, 0.4}));
  EXPECT_TRUE(c.get_bool("flag", false));
  EXPECT_DOUBLE_EQ(c.get_double("absent", 7.0), 7.0);
  EXPECT_NO_THROW(c.reject_unused());
}

TEST(Config, RejectsMalformedInput) {
  EXPECT_THROW(Config::parse_string("n 4\n"), ValidationError);
  EXPECT_THROW(Config::parse_string("n = 4\nn = 5\n"), ValidationError);
  const auto c = Config::parse_string("n = four\np = 2.5x\nextra = 1\n");
  try {
    c.get_int("n");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.key(), "n");
  }
  EXPECT_THROW(c.get_double("p"), ValidationError);
  try {
    c.reject_unused();
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.key(), "extra");
  }
}

TEST(Config, ProblemFromKeys) {
  const auto prob = problem_from_config(Config::parse_string(
      "n = 5\np = 2.5\nk = 3\npsi = decay\nepsilon = 1e-3\npotential = power-tail\nV0 = 1e-3\nkappa = 3\nT = 10\n"));
  EXPECT_EQ(prob.dims.n, 5);
  EXPECT_DOUBLE_EQ(prob.nonlinearity.p, 2.5);
  EXPECT_DOUBLE_EQ(prob.potential(2.0), 1e-3 * std::pow(3.0, -3.0));
  EXPECT_DOUBLE_EQ(prob.psi(1.0), std::pow(2.0, -2.0));
  EXPECT_DOUBLE_EQ(prob.horizon_T, 10.0);
  const auto linear = problem_from_config(Config::parse_string("n = 3\npsi = one\n"));
  EXPECT_EQ(linear.nonlinearity.kind, Nonlinearity::Kind::Zero);
}

TEST(Experiment, FailFastValidationNamesTheKey) {
  EXPECT_EQ(validation_error_of("picard", "n = 3\np = 1\npsi = decay\n").key(), "p");
  EXPECT_EQ(validation_error_of("picard", "n = 3\np = 3\nnr = 2\n").key(), "nr");
  EXPECT_EQ(validation_error_of("picard", "n = 4\np = 3\nengine = prefix\n").key(), "engine");
  EXPECT_EQ(validation_error_of("kernel-table", "n = 4\nz_step = 0\n").key(), "z_step");
  EXPECT_EQ(validation_error_of("kernel-table", "n = 4\ntypo = 1\n").key(), "typo");
  EXPECT_EQ(validation_error_of("lifespan", "n = 4\np = 2.5\npsi = decay\neps_list = 0.1, 0.2\n").key(), "eps_list");
  EXPECT_EQ(validation_error_of("lifespan", "n = 4\np = 2.5\npsi = decay\ncfl = 2\n").key(), "cfl");
  EXPECT_EQ(validation_error_of("spectral-blowup", "n = 3\npsi = bump\n").key(), "nonlinearity");
  EXPECT_EQ(validation_error_of("positivity-scan", "n = 3\nsamples = 0\n").key(), "samples");
  EXPECT_EQ(validation_error_of("picard", "command = lifespan\nn = 3\np = 3\n").key(), "command");
  EXPECT_EQ(validation_error_of("no-such-command", "n = 3\n").key(), "command");
}

TEST(Experiment, KernelTableRows) {
  const auto dir = scratch("kernel_lib");
  ExperimentContext ctx;
  ctx.out_dir = dir;
  const auto out = prepare_experiment("kernel-table", Config::parse_string("n = 4\n"), ctx)();
  std::istringstream csv(slurp(dir / "kernel_table.csv"));
  std::string line, last;
  std::getline(csv, line);
  EXPECT_EQ(line, "z,U");
  std::getline(csv, line);
  EXPECT_EQ(line, "-1,-inf");
  int rows = 1;
  while (std::getline(csv, line)) last = line, ++rows;
  EXPECT_EQ(rows, 201);
  EXPECT_EQ(last, "1,1");
  EXPECT_EQ(out.summary["kernel"], "U_m");
}

TEST(Experiment, PositivityScanIsSeeded) {
  const auto a = positivity_scan(3, 20, 1.0, 5.0, 2.0, 3, 7);
  const auto b = positivity_scan(3, 20, 1.0, 5.0, 2.0, 3, 7, {}, 4);
  const auto c = positivity_scan(3, 20, 1.0, 5.0, 2.0, 3, 8);
  for (size_t i = 0; i < a.samples.size(); ++i) {
    EXPECT_EQ(a.samples[i].value, b.samples[i].value);
    EXPECT_GE(a.samples[i].r, std::max(a.beta_n * a.samples[i].t, a.samples[i].t + 1.0));
    EXPECT_GE(a.samples[i].value, -1e-9);
  }
  EXPECT_NE(a.samples[0].r, c.samples[0].r);
}

TEST(Cli, InvalidExponentExitsWithStatusTwo) {
  const auto dir = scratch("invalid_p");
  const auto res = run_cli("picard", "n = 3\np = 1\npsi = decay\n", dir);
  EXPECT_EQ(res.status, 2);
  EXPECT_NE(res.err.find("\"p\""), std::string::npos) << res.err;
  EXPECT_FALSE(fs::exists(dir / "out" / "manifest.json"));
}

TEST(Cli, UnknownCommandAndMissingConfig) {
  const auto dir = scratch("usage");
  EXPECT_EQ(run_cli("frobnicate", "n = 3\n", dir).status, 2);
  const int raw = std::system((std::string(RADIANT_CLI) + " picard --config /nonexistent.cfg 2> /dev/null").c_str());
  EXPECT_EQ(WEXITSTATUS(raw), 2);
}

TEST(Cli, RuntimeErrorExitsWithStatusOne) {
  const auto dir = scratch("runtime");
  const auto res = run_cli("spectral-blowup", "n = 3\np = 2\npsi = bump\nspectral_r_max = 20\nmesh_size = 2000\nhorizon = 1\n",
                           dir);
  EXPECT_EQ(res.status, 1) << res.err;
  EXPECT_NE(res.err.find("negative"), std::string::npos) << res.err;
  EXPECT_TRUE(!fs::exists(dir / "out") || fs::is_empty(dir / "out"));
}

TEST(Cli, ManifestListsEveryFileAndRunsReproduce) {
  const std::string cfg =
      "command = oracle-compare\nn = 3\np = 3\nk = 0.5\npsi = bump\npsi_lo = 0\npsi_hi = 4\nepsilon = 0.05\nT = 2\n"
      "r_max = 6\nnr = 40\nnt = 20\ndr = 0.01\nseed = 3\n";
  const auto a = scratch("repro_a"), b = scratch("repro_b");
  ASSERT_EQ(run_cli("oracle-compare", cfg, a, "--jobs 2").status, 0) << slurp(a / "stderr.txt");
  ASSERT_EQ(run_cli("oracle-compare", cfg, b, "--jobs 1").status, 0);

  const auto manifest = nlohmann::json::parse(slurp(a / "out" / "manifest.json"));
  EXPECT_EQ(manifest["command"], "oracle-compare");
  EXPECT_EQ(manifest["config_sha256"].get<std::string>().size(), 64u);
  EXPECT_EQ(manifest["seed"], 3);
  EXPECT_EQ(manifest["jobs"], 2);
  EXPECT_GT(manifest["wall_seconds"].get<double>(), 0.0);
  EXPECT_TRUE(manifest["tolerances"].contains("abs_tol"));
  EXPECT_TRUE(manifest["summary"]["oracle"]["within_tolerance"].get<bool>());

  std::set<std::string> listed;
  for (const auto& f : manifest["files"]) listed.insert(f.get<std::string>());
  std::set<std::string> present;
  for (const auto& e : fs::directory_iterator(a / "out"))
    if (e.path().filename() != "manifest.json") present.insert(e.path().filename().string());
  EXPECT_EQ(listed, present);
  EXPECT_TRUE(listed.count("picard_field.csv") && listed.count("oracle_compare.csv"));

  for (const auto& f : listed)
    if (fs::path(f).extension() == ".csv") EXPECT_EQ(slurp(a / "out" / f), slurp(b / "out" / f)) << f;
  EXPECT_EQ(manifest["config_sha256"], nlohmann::json::parse(slurp(b / "out" / "manifest.json"))["config_sha256"]);
}

TEST(Cli, ToleranceScaleReachesTheManifest) {
  const auto dir = scratch("tol_scale");
  const std::string cmd = "RADIANT_TOL_SCALE=10 " + std::string(RADIANT_CLI) + " kernel-table --config " +
                          (dir / "run.cfg").string() + " --out " + (dir / "out").string() + " > /dev/null";
  std::ofstream(dir / "run.cfg") << "n = 6\n";
  ASSERT_EQ(WEXITSTATUS(std::system(cmd.c_str())), 0);
  const auto manifest = nlohmann::json::parse(slurp(dir / "out" / "manifest.json"));
  EXPECT_DOUBLE_EQ(manifest["tolerance_scale"].get<double>(), 10.0);
  EXPECT_DOUBLE_EQ(manifest["tolerances"]["kernel_tol"].get<double>(), 1e-8);
  const std::string bad = "RADIANT_TOL_SCALE=-1 " + std::string(RADIANT_CLI) + " kernel-table --config " +
                          (dir / "run.cfg").string() + " --out " + (dir / "out2").string() + " > /dev/null 2>&1";
  EXPECT_EQ(WEXITSTATUS(std::system(bad.c_str())), 2);
}
