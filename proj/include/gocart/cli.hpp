#pragma once

#include <map>
#include <string>
#include <vector>

namespace gocart::cli {

/// Exit codes: 0 success, 1 usage, 2 data error, 3 numerical failure.
enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

/// Flat `key = value` configuration; '#' starts a comment.
std::map<std::string, std::string> parse_config(const std::string& text);

/// Entry point of the `gocart` executable. Subcommands: generate, fit, eval, export.
int run(int argc, char** argv);
int run(const std::vector<std::string>& args);

}  // namespace gocart::cli
