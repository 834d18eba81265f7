#include "corrugate/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace corrugate {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad(int line, const std::string& msg) {
  fail(ErrorKind::config_invalid, "line " + std::to_string(line) + ": " + msg);
}

double to_double(const std::string& v, int line) {
  double x = 0.0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) bad(line, "expected a number, got '" + v + "'");
  return x;
}

long long to_int(const std::string& v, int line) {
  long long x = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) bad(line, "expected an integer, got '" + v + "'");
  return x;
}

bool to_bool(const std::string& v, int line) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  bad(line, "expected true or false, got '" + v + "'");
}

using Setter = std::function<void(RunConfig&, const std::string&, int)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> m = {
      {"n", [](RunConfig& c, const std::string& v, int l) { c.schedule.n = static_cast<int>(to_int(v, l)); }},
      {"metric", [](RunConfig& c, const std::string& v, int) { c.metric.kind = metric_kind_from_string(v); }},
      {"metric.c", [](RunConfig& c, const std::string& v, int l) { c.metric.c = to_double(v, l); }},
      {"metric.alpha", [](RunConfig& c, const std::string& v, int l) { c.metric.alpha = to_double(v, l); }},
      {"metric.eps", [](RunConfig& c, const std::string& v, int l) { c.metric.eps = to_double(v, l); }},
      {"grid", [](RunConfig& c, const std::string& v, int l) { c.grid = static_cast<int>(to_int(v, l)); }},
      {"omega.lo", [](RunConfig& c, const std::string& v, int l) { c.omega_lo = to_double(v, l); }},
      {"omega.hi", [](RunConfig& c, const std::string& v, int l) { c.omega_hi = to_double(v, l); }},
      {"theta", [](RunConfig& c, const std::string& v, int l) { c.schedule.theta = to_double(v, l); }},
      {"J", [](RunConfig& c, const std::string& v, int l) { c.schedule.J = static_cast<int>(to_int(v, l)); }},
      {"a", [](RunConfig& c, const std::string& v, int l) { c.schedule.a = to_double(v, l); }},
      {"b", [](RunConfig& c, const std::string& v, int l) { c.schedule.b = to_double(v, l); }},
      {"tau", [](RunConfig& c, const std::string& v, int l) { c.schedule.tau = to_double(v, l); }},
      {"Lambda", [](RunConfig& c, const std::string& v, int l) { c.schedule.Lambda = to_double(v, l); }},
      {"delta0", [](RunConfig& c, const std::string& v, int l) { c.schedule.delta0 = to_double(v, l); }},
      {"lambda0", [](RunConfig& c, const std::string& v, int l) { c.schedule.lambda0 = to_double(v, l); }},
      {"Q", [](RunConfig& c, const std::string& v, int l) { c.schedule.Q = static_cast<int>(to_int(v, l)); }},
      {"dist0", [](RunConfig& c, const std::string& v, int l) { c.schedule.dist0 = to_double(v, l); }},
      {"r", [](RunConfig& c, const std::string& v, int l) { c.options.r = to_double(v, l); }},
      {"r_star", [](RunConfig& c, const std::string& v, int l) { c.options.r_star = to_double(v, l); }},
      {"rho", [](RunConfig& c, const std::string& v, int l) { c.options.rho = to_double(v, l); }},
      {"C_hat", [](RunConfig& c, const std::string& v, int l) { c.options.C_hat = to_double(v, l); }},
      {"C_tilde", [](RunConfig& c, const std::string& v, int l) { c.options.C_tilde = to_double(v, l); }},
      {"delta_star", [](RunConfig& c, const std::string& v, int l) { c.options.delta_star = to_double(v, l); }},
      {"K_star", [](RunConfig& c, const std::string& v, int l) { c.options.K_star = to_double(v, l); }},
      {"N_K", [](RunConfig& c, const std::string& v, int l) { c.options.N_K = static_cast<int>(to_int(v, l)); }},
      {"bootstrap_budget",
       [](RunConfig& c, const std::string& v, int l) { c.options.bootstrap_budget = static_cast<int>(to_int(v, l)); }},
      {"verify_ibp", [](RunConfig& c, const std::string& v, int l) { c.options.verify_ibp = to_bool(v, l); }},
      {"snapshots", [](RunConfig& c, const std::string& v, int l) { c.snapshots = to_bool(v, l); }},
      {"seed",
       [](RunConfig& c, const std::string& v, int l) { c.options.seed = static_cast<std::uint64_t>(to_int(v, l)); }},
      {"out", [](RunConfig& c, const std::string& v, int) { c.out = v; }},
  };
  return m;
}

void validate(const RunConfig& c) {
  auto need = [](bool ok, const std::string& msg) {
    if (!ok) fail(ErrorKind::config_invalid, msg);
  };
  need(c.schedule.n >= 2 && c.schedule.n <= kMaxDim, "n must be 2, 3 or 4");
  need(c.grid >= 8, "grid must be at least 8 cells per unit");
  need(c.omega_hi > c.omega_lo, "omega.hi must exceed omega.lo");
  need(c.metric.c > 0.0, "metric.c must be positive");
  need(c.metric.kind != MetricKind::bump || c.schedule.n == 2, "the bump metric is two-dimensional");
  need(c.options.r > 0.0, "r must be positive");
  need(c.options.rho >= 1.0, "rho must be at least 1");
  need(c.options.C_hat > 0.0 && c.options.C_tilde > 0.0, "C_hat and C_tilde must be positive");
  need(c.options.N_K >= 0, "N_K must be nonnegative");
  need(!c.out.empty(), "out must name a directory");
  make_schedule(c.schedule);
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  RunConfig c;
  std::istringstream in(text);
  std::string raw;
  std::set<std::string> seen;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos) bad(line, "expected key = value");
    const std::string key = trim(s.substr(0, eq));
    const std::string val = trim(s.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) bad(line, "unknown key '" + key + "'");
    if (!seen.insert(key).second) bad(line, "duplicate key '" + key + "'");
    if (val.empty()) bad(line, "empty value for '" + key + "'");
    try {
      it->second(c, val, line);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::config_invalid) throw;
      bad(line, e.what());
    }
  }
  validate(c);
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) fail(ErrorKind::io_error, "cannot read config '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

Schedule config_schedule(const RunConfig& c) { return make_schedule(c.schedule); }

RunInputs config_inputs(const RunConfig& c) {
  RunInputs in;
  in.metric = c.metric;
  in.h = 1.0 / c.grid;
  for (int k = 0; k < c.schedule.n; ++k) {
    in.omega_lo[k] = c.omega_lo;
    in.omega_hi[k] = c.omega_hi;
  }
  return in;
}

std::string to_text(const RunConfig& c) {
  std::ostringstream os;
  os.precision(17);
  os << "n = " << c.schedule.n << "\n"
     << "metric = " << to_string(c.metric.kind) << "\n"
     << "metric.c = " << c.metric.c << "\n"
     << "metric.alpha = " << c.metric.alpha << "\n"
     << "metric.eps = " << c.metric.eps << "\n"
     << "grid = " << c.grid << "\n"
     << "omega.lo = " << c.omega_lo << "\n"
     << "omega.hi = " << c.omega_hi << "\n"
     << "theta = " << c.schedule.theta << "\n"
     << "J = " << c.schedule.J << "\n"
     << "a = " << c.schedule.a << "\n"
     << "b = " << c.schedule.b << "\n"
     << "tau = " << c.schedule.tau << "\n"
     << "Lambda = " << c.schedule.Lambda << "\n"
     << "delta0 = " << c.schedule.delta0 << "\n"
     << "lambda0 = " << c.schedule.lambda0 << "\n"
     << "Q = " << c.schedule.Q << "\n"
     << "dist0 = " << c.schedule.dist0 << "\n"
     << "r = " << c.options.r << "\n"
     << "r_star = " << c.options.r_star << "\n"
     << "rho = " << c.options.rho << "\n"
     << "C_hat = " << c.options.C_hat << "\n"
     << "C_tilde = " << c.options.C_tilde << "\n"
     << "delta_star = " << c.options.delta_star << "\n"
     << "K_star = " << c.options.K_star << "\n"
     << "N_K = " << c.options.N_K << "\n"
     << "bootstrap_budget = " << c.options.bootstrap_budget << "\n"
     << "verify_ibp = " << (c.options.verify_ibp ? "true" : "false") << "\n"
     << "snapshots = " << (c.snapshots ? "true" : "false") << "\n"
     << "seed = " << c.options.seed << "\n"
     << "out = " << c.out << "\n";
  return os.str();
}

}  // namespace corrugate
