#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "rdfpp/cli.hpp"

using namespace rdfpp;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

int run(const std::string& command, const json& config, const fs::path& out, const cli::Overrides& o = {}) {
  std::ostringstream log, err;
  int rc = cli::run(cli::make_config(command, config, out.string(), out.string(), o), log, err);
  return rc;
}

const json tk = {{"family", "tversky_kahneman"}, {"delta", 0.69}};
const json kernel = {{"kernel", "lognormal"}, {"lambda", 0.4}};

}  // namespace

TEST_CASE("reruns are byte identical") {
  TempDir d("rdfpp_cli_rerun");
  json cfg = {{"weighting", tk},
              {"kernel", kernel},
              {"forward",
               {{"paths", 300},
                {"marginal", {{"type", "power_law"}, {"gamma", 2.0}}},
                {"periods", {{{"weighting", tk}, {"lambda", 0.4}}}}}},
              {"marginal", {{"type", "power_law"}, {"gamma", 2.0}}},
              {"seed", 5}};
  for (const char* cmd : {"phi", "envelope", "solve", "forward"}) {
    CHECK(run(cmd, cfg, d.path / "a") == cli::kOk);
    CHECK(run(cmd, cfg, d.path / "b") == cli::kOk);
  }
  int files = 0;
  for (const auto& e : fs::directory_iterator(d.path / "a")) {
    ++files;
    CHECK(slurp(e.path()) == slurp(d.path / "b" / e.path().filename()));
  }
  CHECK(files >= 6);
  std::string hash = cli::make_config("solve", cfg, "", "", {}).hash();
  CHECK(slurp(d.path / "a" / "solve.json").find(hash) != std::string::npos);
  CHECK(slurp(d.path / "a" / "solution.csv").find("config_hash=" + hash) != std::string::npos);
}

TEST_CASE("overrides change the hash") {
  json cfg = {{"weighting", tk}, {"kernel", kernel}};
  cli::Overrides o;
  o.seed = 9;
  CHECK(cli::make_config("phi", cfg, "", "", {}).hash() != cli::make_config("phi", cfg, "", "", o).hash());
  CHECK(cli::make_config("phi", cfg, "", "", o).config.at("seed") == 9);
}

TEST_CASE("exit codes") {
  TempDir d("rdfpp_cli_codes");
  json bad = {{"weighting", {{"family", "unknown"}}}, {"kernel", kernel}};
  CHECK(run("phi", bad, d.path) == cli::kConfigError);
  CHECK(run("solve", {{"weighting", tk}, {"kernel", kernel}}, d.path) == cli::kConfigError);

  json prelec = {{"weighting", {{"family", "prelec"}, {"alpha", 0.65}, {"beta", 0.74}}},
                 {"kernel", kernel},
                 {"marginal", {{"type", "power_law"}, {"gamma", 0.5}}}};
  CHECK(run("solve", prelec, d.path) == cli::kNumericalError);

  json strict = {{"weighting", tk}, {"kernel", kernel}, {"marginal", {{"type", "power_law"}, {"gamma", 0.5}}}};
  cli::Overrides o;
  o.tol = 1e-16;
  CHECK(run("solve", strict, d.path, o) == cli::kVerificationFailure);
  CHECK(run("solve", strict, d.path) == cli::kOk);
  CHECK_THROWS(cli::make_config("solve", strict, "", "", cli::Overrides{{}, -1.0, {}, {}}));
}
