#include "nholo/scenario.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "nholo/errors.hpp"
#include "nholo/expression.hpp"

namespace nholo {

namespace {

const std::set<std::string> kSections = {"scenario", "grid", "fields", "params", "tolerances"};

std::string trim(const std::string& s, std::size_t* lead = nullptr) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  if (lead) *lead = a;
  return s.substr(a, b - a);
}

[[noreturn]] void syntax(const std::string& what, int line, int column) {
  throw ParseError(what + " at line " + std::to_string(line) + ", column " + std::to_string(column), line, column);
}

bool parse_number(const std::string& tok, double& out) {
  const char* b = tok.data();
  const char* e = b + tok.size();
  auto [ptr, ec] = std::from_chars(b, e, out);
  return ec == std::errc() && ptr == e;
}

double entry_number(const ConfigEntry& e, const std::string& key) {
  double x;
  if (!parse_number(trim(e.value), x)) syntax("'" + key + "' expects a number", e.line, e.column);
  return x;
}

std::vector<double> entry_list(const ConfigEntry& e, const std::string& key) {
  try {
    return parse_number_list(e.value);
  } catch (const ConfigError&) {
    syntax("'" + key + "' expects numbers", e.line, e.column);
  }
}

}  // namespace

std::vector<double> parse_number_list(const std::string& text) {
  std::string s = text;
  for (char& c : s)
    if (c == ',') c = ' ';
  std::istringstream is(s);
  std::vector<double> out;
  std::string tok;
  while (is >> tok) {
    double x;
    if (!parse_number(tok, x)) throw ConfigError("not a number: '" + tok + "'");
    out.push_back(x);
  }
  if (out.empty()) throw ConfigError("empty number list");
  return out;
}

std::array<int, 3> parse_grid_size(const std::string& text) {
  std::string s = text;
  for (char& c : s)
    if (c == 'x' || c == 'X' || c == ',') c = ' ';
  const std::vector<double> v = parse_number_list(s);
  std::array<int, 3> n{};
  if (v.size() == 1) n.fill(static_cast<int>(v[0]));
  else if (v.size() == 3) for (int k = 0; k < 3; ++k) n[k] = static_cast<int>(v[k]);
  else throw ConfigError("grid size must be N or NxNxN");
  for (int k = 0; k < 3; ++k)
    if (n[k] != v[v.size() == 1 ? 0 : k]) throw ConfigError("grid sizes must be integers");
  return n;
}

Config Config::parse(const std::string& text) {
  Config c;
  c.text_ = text;
  std::istringstream is(text);
  std::string raw, section;
  int line = 0;
  while (std::getline(is, raw)) {
    ++line;
    std::size_t lead;
    const std::string s = trim(raw, &lead);
    if (s.empty() || s[0] == '#' || s[0] == ';') continue;
    if (s[0] == '[') {
      const std::size_t close = s.find(']');
      if (close == std::string::npos) syntax("missing ']'", line, static_cast<int>(lead + s.size() + 1));
      section = trim(s.substr(1, close - 1));
      if (!kSections.count(section)) syntax("unknown section [" + section + "]", line, static_cast<int>(lead + 2));
      if (!trim(s.substr(close + 1)).empty()) syntax("text after section header", line, static_cast<int>(lead + close + 2));
      c.sections_[section];
      continue;
    }
    const std::size_t eq = s.find('=');
    if (eq == std::string::npos) syntax("expected 'key = value'", line, static_cast<int>(lead + 1));
    if (section.empty()) syntax("key outside of a section", line, static_cast<int>(lead + 1));
    const std::string key = trim(s.substr(0, eq));
    if (key.empty()) syntax("empty key", line, static_cast<int>(lead + 1));
    std::string rest = s.substr(eq + 1);
    const std::size_t hash = rest.find('#');
    if (hash != std::string::npos) rest = rest.substr(0, hash);
    std::size_t vlead;
    const std::string value = trim(rest, &vlead);
    if (value.empty()) syntax("missing value for '" + key + "'", line, static_cast<int>(lead + eq + 2));
    auto& sec = c.sections_[section];
    if (sec.count(key)) syntax("duplicate key '" + key + "'", line, static_cast<int>(lead + 1));
    sec[key] = ConfigEntry{value, line, static_cast<int>(lead + eq + 1 + vlead + 1)};
  }
  return c;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return parse(os.str());
}

const ConfigEntry* Config::find(const std::string& section, const std::string& key) const {
  const auto s = sections_.find(section);
  if (s == sections_.end()) return nullptr;
  const auto k = s->second.find(key);
  return k == s->second.end() ? nullptr : &k->second;
}

std::vector<std::string> Config::keys(const std::string& section) const {
  std::vector<std::string> out;
  const auto s = sections_.find(section);
  if (s != sections_.end())
    for (const auto& [k, e] : s->second) out.push_back(k);
  return out;
}

void Config::set(const std::string& section, const std::string& key, const std::string& value) {
  sections_[section][key] = ConfigEntry{value, 0, 0};
}

bool Scenario::has_field(const std::string& key) const { return config.find("fields", key) != nullptr; }

ScalarField Scenario::field(const std::string& key, const ScalarField& fallback, const ParamMap& p) const {
  const ConfigEntry* e = config.find("fields", key);
  if (!e) return fallback;
  try {
    return parse_expression(e->value, p, e->line);
  } catch (const ParseError& err) {
    std::string what = err.what();
    const std::size_t at = what.rfind(" at line ");
    if (at != std::string::npos) what.resize(at);
    syntax("in field '" + key + "': " + what, e->line, e->column + err.column() - 1);
  }
}

std::string Scenario::setting(const std::string& key, const std::string& fallback) const {
  const ConfigEntry* e = config.find("scenario", key);
  return e ? e->value : fallback;
}

double Scenario::param(const std::string& key, double fallback) const {
  const auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

std::vector<double> Scenario::values(const std::string& key) const {
  const auto it = lists.find(key);
  return it == lists.end() ? std::vector<double>{} : it->second;
}

double Scenario::tolerance(const std::string& key, double fallback) const {
  if (tol_override) return *tol_override;
  if (const ConfigEntry* e = config.find("tolerances", key)) return entry_number(*e, key);
  if (const ConfigEntry* e = config.find("tolerances", "default")) return entry_number(*e, "default");
  return fallback;
}

Scenario parse_scenario(const std::string& text, const std::string& path) {
  Scenario sc;
  sc.config = Config::parse(text);
  sc.path = path;
  sc.family = sc.setting("family");
  if (sc.family.empty()) throw ConfigError("[scenario] needs a 'family'");
  sc.name = sc.setting("name", sc.family);

  for (const std::string& k : sc.config.keys("params")) {
    const ConfigEntry& e = *sc.config.find("params", k);
    const std::vector<double> v = entry_list(e, k);
    sc.params[k] = v.front();
    sc.lists[k] = v;
  }

  static const char* axes[3] = {"x1", "x2", "v"};
  for (int a = 0; a < 3; ++a)
    if (const ConfigEntry* e = sc.config.find("grid", axes[a])) {
      const std::vector<double> v = entry_list(*e, axes[a]);
      if (v.size() != 2 || !(v[1] > v[0])) syntax(std::string(axes[a]) + " expects 'lo hi' with lo < hi", e->line, e->column);
      sc.grid.lo[a] = v[0];
      sc.grid.hi[a] = v[1];
    }
  if (const ConfigEntry* e = sc.config.find("grid", "y4")) sc.grid.y4 = entry_number(*e, "y4");
  sc.grid.n = {17, 17, 17};
  if (const ConfigEntry* e = sc.config.find("grid", "n")) {
    try {
      sc.grid.n = parse_grid_size(e->value);
    } catch (const ConfigError& err) {
      syntax(err.what(), e->line, e->column);
    }
  }
  for (int a = 0; a < 3; ++a)
    if (sc.grid.n[a] < 9) throw ConfigError("grid needs at least 9 nodes per axis");

  const std::string backend = sc.setting("backend", "dual");
  if (backend == "fd") sc.diff.backend = Backend::FiniteDifference;
  else if (backend != "dual") throw ConfigError("backend must be 'dual' or 'fd'");
  sc.diff.step = sc.param("fd_step", 1e-3);
  return sc;
}

Scenario load_scenario(const std::string& path) {
  const Config c = Config::load(path);
  return parse_scenario(c.text(), path);
}

void apply_overrides(Scenario& sc, const ScenarioOverrides& o) {
  if (o.backend) {
    if (*o.backend == "fd") sc.diff.backend = Backend::FiniteDifference;
    else if (*o.backend == "dual") sc.diff.backend = Backend::Dual;
    else throw ConfigError("backend must be 'dual' or 'fd'");
  }
  if (o.tol) sc.tol_override = *o.tol;
  if (o.grid) {
    for (int a = 0; a < 3; ++a)
      if ((*o.grid)[a] < 9) throw ConfigError("grid needs at least 9 nodes per axis");
    sc.grid.n = *o.grid;
  }
  if (o.theta) {
    if (o.theta->empty()) throw ConfigError("--theta needs at least one value");
    const std::string key = sc.setting("sweep", "theta");
    sc.params[key] = o.theta->front();
    sc.lists[key] = *o.theta;
  }
}

}  // namespace nholo
