#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include "radiant/experiment.hpp"

namespace {

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw radiant::Error("SHA-256 digest failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return os.str();
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

int run(const std::string& command, const std::string& config_path, int jobs_flag, const std::string& out_flag) {
  std::ifstream is(config_path, std::ios::binary);
  if (!is) throw radiant::ValidationError("config", "cannot open " + config_path);
  const std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  const auto cfg = radiant::Config::parse_string(text);

  radiant::ExperimentContext ctx;
  ctx.tol_scale = radiant::tolerance_scale();
  const long seed = cfg.get_int("seed", 0);
  if (seed < 0) throw radiant::ValidationError("seed", "must be non-negative");
  ctx.seed = static_cast<unsigned long long>(seed);
  ctx.jobs = static_cast<int>(jobs_flag > 0 ? jobs_flag : cfg.get_int("jobs", 1));
  if (ctx.jobs < 1) throw radiant::ValidationError("jobs", "must be at least 1");
  ctx.out_dir = out_flag.empty() ? cfg.get_string("output_dir", ".") : out_flag;

  const auto runner = radiant::prepare_experiment(command, cfg, ctx);
  std::filesystem::create_directories(ctx.out_dir);

  const auto start = std::chrono::steady_clock::now();
  auto out = runner();
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  nlohmann::json manifest = {{"command", command},
                             {"config_file", config_path},
                             {"config_sha256", sha256_hex(text)},
                             {"config", cfg.entries()},
                             {"tolerance_scale", ctx.tol_scale},
                             {"tolerances", out.tolerances},
                             {"seed", ctx.seed},
                             {"jobs", ctx.jobs},
                             {"wall_seconds", wall},
                             {"timestamp", utc_timestamp()},
                             {"files", out.files},
                             {"summary", out.summary}};
  std::ofstream mf(ctx.out_dir / "manifest.json", std::ios::binary);
  mf << manifest.dump(2) << '\n';
  if (!mf) throw radiant::Error("cannot write manifest.json");
  std::cout << out.summary.dump() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Radial wave equation experiments"};
  std::string command, config_path, out_dir;
  int jobs = 0;
  app.add_option("command", command, "Experiment to run")
      ->required()
      ->check(CLI::IsMember(radiant::experiment_commands()));
  app.add_option("--config", config_path, "Key-value configuration file")->required();
  app.add_option("--jobs", jobs, "Worker threads (overrides the config)")->check(CLI::PositiveNumber);
  app.add_option("--out", out_dir, "Output directory (overrides the config)");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  try {
    return run(command, config_path, jobs, out_dir);
  } catch (const radiant::ValidationError& e) {
    std::cerr << "radiant: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "radiant: " << e.what() << '\n';
    return 1;
  }
}
