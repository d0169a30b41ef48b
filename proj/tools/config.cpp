#include "config.hpp"

#include <fstream>
#include <sstream>

#include "covfunc/types.hpp"

namespace covfunc::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

CLI::Option* find_long(CLI::App& app, const std::string& key) {
  try {
    return app.get_option("--" + key);
  } catch (const CLI::OptionNotFound&) {
    return nullptr;
  }
}

}  // namespace

std::vector<std::pair<std::string, std::string>> read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    if (key.empty()) throw ConfigError(path + ":" + std::to_string(lineno) + ": empty key");
    out.emplace_back(std::move(key), std::move(value));
  }
  return out;
}

void apply_config(const std::vector<std::pair<std::string, std::string>>& entries, CLI::App& root,
                  CLI::App& sub) {
  for (const auto& [key, value] : entries) {
    if (key == "config") continue;
    CLI::Option* opt = find_long(sub, key);
    if (!opt) opt = find_long(root, key);
    if (!opt) {
      bool elsewhere = false;
      for (CLI::App* other : root.get_subcommands([](CLI::App*) { return true; }))
        elsewhere = elsewhere || find_long(*other, key) != nullptr;
      if (!elsewhere) throw ConfigError("config: unknown key '" + key + "'");
      continue;
    }
    if (opt->count() > 0) continue;  // command-line flags win
    if (opt->get_type_size() == 0) {
      if (value == "true" || value == "1" || value == "yes" || value == "on") {
        opt->add_result(std::string("true"));
      } else if (value != "false" && value != "0" && value != "no" && value != "off") {
        throw ConfigError("config: '" + key + "' expects true or false");
      }
    } else if (opt->get_expected_max() > 1) {
      // list-valued options take comma-separated values
      std::string item;
      std::stringstream ss(value);
      while (std::getline(ss, item, ',')) opt->add_result(trim(item));
    } else {
      opt->add_result(value);
    }
    if (opt->count() > 0) opt->run_callback();
  }
}

}  // namespace covfunc::cli
