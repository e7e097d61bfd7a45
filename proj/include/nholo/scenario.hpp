#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nholo/fields.hpp"
#include "nholo/solution_engine.hpp"

namespace nholo {

// Line-oriented `[section]` / `key = value` file; `#` and `;` start comments.
struct ConfigEntry {
  std::string value;
  int line = 0;
  int column = 0;  // 1-based column of the first value character
};

class Config {
 public:
  static Config parse(const std::string& text);
  static Config load(const std::string& path);

  const ConfigEntry* find(const std::string& section, const std::string& key) const;
  std::vector<std::string> keys(const std::string& section) const;
  void set(const std::string& section, const std::string& key, const std::string& value);
  const std::string& text() const { return text_; }

 private:
  std::map<std::string, std::map<std::string, ConfigEntry>> sections_;
  std::string text_;
};

// Parsed scenario: family, chart grid, parameters, tolerances and field expressions.
struct Scenario {
  Config config;
  std::string path;
  std::string name;
  std::string family;
  Grid grid;
  ParamMap params;  // first value of every parameter
  std::map<std::string, std::vector<double>> lists;
  DiffOptions diff;
  std::optional<double> tol_override;

  bool has_field(const std::string& key) const;
  ScalarField field(const std::string& key, const ScalarField& fallback, const ParamMap& p) const;
  ScalarField field(const std::string& key, const ScalarField& fallback) const { return field(key, fallback, params); }
  std::string setting(const std::string& key, const std::string& fallback = "") const;  // [scenario]
  double param(const std::string& key, double fallback) const;
  std::vector<double> values(const std::string& key) const;  // list parameter, empty if absent
  double tolerance(const std::string& key, double fallback) const;
};

Scenario parse_scenario(const std::string& text, const std::string& path = "<memory>");
Scenario load_scenario(const std::string& path);

// Command-line overrides applied after parsing.
struct ScenarioOverrides {
  std::optional<std::string> backend;  // dual | fd
  std::optional<double> tol;
  std::optional<std::array<int, 3>> grid;
  std::optional<std::vector<double>> theta;  // replaces the [scenario] sweep parameter, theta by default
};
void apply_overrides(Scenario& sc, const ScenarioOverrides& o);

// "0.1, 0.2 0.3" -> {0.1, 0.2, 0.3}; throws ConfigError on junk.
std::vector<double> parse_number_list(const std::string& text);
std::array<int, 3> parse_grid_size(const std::string& text);  // "NxNxN" or "N N N"

}  // namespace nholo
