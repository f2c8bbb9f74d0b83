#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "integamp/config.hpp"

namespace integamp {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitValidation = 2,
  kExitProtocol = 3,
};

/// Runs one protocol (or "reproduce-all") for a validated config, writing CSVs under
/// cfg.out_dir and a summary to `out`. Throws on failure; files written so far are removed.
void dispatch(const std::string& protocol, const RunConfig& cfg, std::ostream& out);

/// Full command line handling. args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

const std::vector<std::string>& protocol_names();

}  // namespace integamp
