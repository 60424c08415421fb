#include "horomix/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "horomix/errors.hpp"

#ifndef HOROMIX_VERSION
#define HOROMIX_VERSION "unknown"
#endif

namespace horomix {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

const char* const kDefaults = R"(
[run]
seed = 20240601
threads = 0

[clock]
tol = 1e-8
step_init = 0.01
max_steps = 50000000
horizon = 10000
segment = 1

[tau]
radius = 0.35
amplitude = 1
c = 0.4
normalizer_samples = 100000

[observables]
kind = bumps
radius = 1.0
count = 3
centered = true
zero_mean_samples = 200000

[model]
beta = 0.45

[flow]
renorm_t = -1000,-100,-10,-1,1,10,100,1000
renorm_s = -5,-1,-0.5,0.5,1,5
renorm_tol = 1e-10
additivity_samples = 1000
additivity_tmax = 50
additivity_tol = 1e-6
invariance_n = 100000
invariance_t = 10,100
shear_samples = 30
shear_tol = 1e-6

[correlate]
k = 2
gaps = 10,30,100,300
n = 200000
window = 300
window_step = 0.5
noise_floor = 2
confidence_z = 2

[shear]
s = 0.1
T = 10,30,100,300,1000
samples = 50

[deviation]
s = 0.1
T = 10,30,100,300,1000
samples = 50

[vdc]
N = 50,100,200
L = 5,10,20
n = 100000
step = 0.25

[l2avg]
K = 0.5
m = 0
windows = 25,50,100,200,400
n = 20000
steps = 512

[cluster]
zetas = 0.5,0.5
times = 0,500,1000

[plan]
t1 = 10
t2 = 10000
times =
zetas =

[sample]
n = 10
measure = haar
)";

Config parse_into(Config base, std::string_view text, bool allow_new) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::string section;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string s = trim(line);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']' || s.size() < 3) {
        throw ConfigError("config line " + std::to_string(number) + ": malformed section header");
      }
      section = trim(std::string_view(s).substr(1, s.size() - 2));
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(number) + ": expected key = value");
    }
    if (section.empty()) {
      throw ConfigError("config line " + std::to_string(number) + ": key outside a section");
    }
    const std::string key = section + "." + trim(std::string_view(s).substr(0, eq));
    const std::string value = trim(std::string_view(s).substr(eq + 1));
    if (!allow_new && !base.has(key)) {
      throw ConfigError("config line " + std::to_string(number) + ": unknown key '" + key + "'");
    }
    base.set(key, value);
  }
  return base;
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* begin = text.data();
  const char* end = begin + text.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("config: '" + key + "' = '" + text + "' is not a valid number");
  }
  return value;
}

}  // namespace

Config Config::defaults() { return parse_into(Config(), kDefaults, true); }

Config Config::parse(std::string_view text) { return parse_into(defaults(), text, false); }

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void Config::override_with(std::string_view assignment) {
  if (assignment.substr(0, 2) == "--") assignment.remove_prefix(2);
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw ConfigError("override '" + std::string(assignment) + "': expected section.key=value");
  }
  const std::string key = trim(assignment.substr(0, eq));
  if (!has(key)) throw ConfigError("override: unknown key '" + key + "'");
  set(key, trim(assignment.substr(eq + 1)));
}

void Config::set(const std::string& key, const std::string& value) {
  if (key.find('.') == std::string::npos) throw ConfigError("config: key '" + key + "' has no section");
  if (value.find('\n') != std::string::npos || value.find('#') != std::string::npos) {
    throw ConfigError("config: value for '" + key + "' contains '#' or a newline");
  }
  values_[key] = value;
}

const std::string& Config::text(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("config: missing key '" + key + "'");
  return it->second;
}

double Config::real(const std::string& key) const {
  return parse_number<double>(key, text(key));
}

std::int64_t Config::integer(const std::string& key) const {
  return parse_number<std::int64_t>(key, text(key));
}

std::uint64_t Config::count(const std::string& key) const {
  const std::string& t = text(key);
  if (!t.empty() && t.front() == '-') throw ConfigError("config: '" + key + "' must be non-negative");
  return parse_number<std::uint64_t>(key, t);
}

bool Config::flag(const std::string& key) const {
  const std::string& t = text(key);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw ConfigError("config: '" + key + "' = '" + t + "' is not a boolean");
}

std::vector<double> Config::reals(const std::string& key) const {
  std::vector<double> out;
  const std::string& t = text(key);
  if (trim(t).empty()) return out;
  std::size_t start = 0;
  while (start <= t.size()) {
    const auto comma = t.find(',', start);
    const std::string item = trim(std::string_view(t).substr(start, comma - start));
    out.push_back(parse_number<double>(key, item));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string Config::to_text() const {
  std::ostringstream out;
  std::string section;
  for (const auto& [key, value] : values_) {
    const auto dot = key.find('.');
    const std::string sec = key.substr(0, dot);
    if (sec != section) {
      if (!section.empty()) out << '\n';
      out << '[' << sec << "]\n";
      section = sec;
    }
    out << key.substr(dot + 1) << " = " << value << '\n';
  }
  return out.str();
}

std::string version_string() { return std::string("horomix ") + HOROMIX_VERSION; }

}  // namespace horomix
