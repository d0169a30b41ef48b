#pragma once

#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"

namespace covfunc::cli {

/// Flat "key = value" lines; '#' starts a comment, blank lines are skipped.
/// Keys are long option names without the leading dashes.
std::vector<std::pair<std::string, std::string>> read_config(const std::string& path);

/// Applies config entries to options of `sub` (or of `root`) that were not
/// given on the command line. Keys that belong to no subcommand are an error;
/// keys of other subcommands are ignored.
void apply_config(const std::vector<std::pair<std::string, std::string>>& entries, CLI::App& root,
                  CLI::App& sub);

}  // namespace covfunc::cli
