#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rdfpp/descriptors.hpp"

namespace rdfpp::cli {

enum ExitCode : int { kOk = 0, kConfigError = 2, kNumericalError = 3, kVerificationFailure = 4 };

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;
  std::optional<int> grid;
  std::optional<unsigned> threads;
};

struct RunConfig {
  std::string command;
  json config;          // effective configuration, overrides applied
  std::string out_dir;
  std::string base_dir;  // relative paths in the config resolve against this
  std::string hash() const;
};

// Merges the flag overrides into the config and validates the common fields.
RunConfig make_config(const std::string& command, json config, const std::string& out_dir,
                      const std::string& base_dir, const Overrides& o);

int run(const RunConfig& cfg, std::ostream& log, std::ostream& err);

// Entry point used by the executable
int main(int argc, char** argv);

}  // namespace rdfpp::cli
