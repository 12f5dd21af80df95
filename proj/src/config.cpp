#include "strom/config.hpp"

#include <fstream>
#include <sstream>

namespace strom {

namespace {
std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}
}  // namespace

KeyValueFile KeyValueFile::parse_text(const std::string& text) {
  KeyValueFile f;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw UsageError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty()) throw UsageError("config line " + std::to_string(lineno) + ": empty key");
    if (f.kv_.count(key))
      throw UsageError("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    f.kv_[key] = val;
  }
  return f;
}

KeyValueFile KeyValueFile::parse_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw UsageError("cannot open config: " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_text(ss.str());
}

bool KeyValueFile::has(const std::string& key) const { return kv_.count(key) > 0; }

std::string KeyValueFile::get_string(const std::string& key, const std::string& fallback) {
  used_[key] = true;
  auto it = kv_.find(key);
  return it == kv_.end() ? fallback : it->second;
}

double KeyValueFile::get_double(const std::string& key, double fallback) {
  used_[key] = true;
  auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  try {
    std::size_t pos = 0;
    const double v = std::stod(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("");
    return v;
  } catch (...) {
    throw UsageError("config key '" + key + "': expected a real number, got '" + it->second + "'");
  }
}

int KeyValueFile::get_int(const std::string& key, int fallback) {
  used_[key] = true;
  auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  try {
    std::size_t pos = 0;
    const int v = std::stoi(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("");
    return v;
  } catch (...) {
    throw UsageError("config key '" + key + "': expected an integer, got '" + it->second + "'");
  }
}

std::uint64_t KeyValueFile::get_u64(const std::string& key, std::uint64_t fallback) {
  used_[key] = true;
  auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  try {
    return std::stoull(it->second);
  } catch (...) {
    throw UsageError("config key '" + key + "': expected an unsigned integer");
  }
}

bool KeyValueFile::get_bool(const std::string& key, bool fallback) {
  used_[key] = true;
  auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  if (it->second == "true" || it->second == "1" || it->second == "on") return true;
  if (it->second == "false" || it->second == "0" || it->second == "off") return false;
  throw UsageError("config key '" + key + "': expected true/false");
}

std::vector<std::string> KeyValueFile::get_tokens(const std::string& key,
                                                  const std::vector<std::string>& fallback) {
  used_[key] = true;
  auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  std::vector<std::string> out;
  std::istringstream is(it->second);
  std::string tok;
  while (is >> tok) {
    // allow comma separators
    std::string piece;
    std::istringstream ts(tok);
    while (std::getline(ts, piece, ','))
      if (!piece.empty()) out.push_back(piece);
  }
  return out;
}

void KeyValueFile::finish() const {
  std::string unknown;
  for (const auto& [k, v] : kv_) {
    (void)v;
    if (!used_.count(k)) unknown += (unknown.empty() ? "" : ", ") + k;
  }
  if (!unknown.empty()) throw UsageError("config: unknown keys: " + unknown);
}

RunConfig RunConfig::from_file(const std::string& path, const std::string& mode_override) {
  return from_kv(KeyValueFile::parse_file(path), mode_override);
}

RunConfig RunConfig::from_kv(KeyValueFile kv, const std::string& mode_override) {
  RunConfig c;
  c.schema_version = kv.get_int("schema_version", 1);
  if (c.schema_version != 1) throw UsageError("config: unsupported schema_version");
  c.mode = kv.get_string("mode", mode_override);
  if (!mode_override.empty()) c.mode = mode_override;
  c.seed = kv.get_u64("seed", 0);
  c.threads = kv.get_int("threads", 1);
  c.out_dir = kv.get_string("out", "out");

  c.lattice_n = kv.get_int("lattice.n", 8);
  const auto axes = kv.get_tokens("lattice.axes", {"x1", "y1"});
  c.active_axes.fill(false);
  for (const auto& name : axes) {
    bool found = false;
    for (int a = 0; a < 6; ++a)
      if (name == kAxisNames[a]) {
        c.active_axes[a] = true;
        found = true;
      }
    if (!found) throw UsageError("config lattice.axes: unknown axis '" + name + "'");
  }
  const auto ptext = kv.get_tokens("lattice.periods", {});
  if (!ptext.empty()) {
    if (ptext.size() == 1) {
      c.periods.fill(std::stod(ptext[0]));
    } else if (ptext.size() == 6) {
      for (int a = 0; a < 6; ++a) c.periods[a] = std::stod(ptext[a]);
    } else {
      throw UsageError("config lattice.periods: expected 1 or 6 values");
    }
  }

  c.metric_spec = kv.get_string("metric.g_hat", "identity");
  c.f_re = kv.get_double("volform.f_re", 1.0);
  c.f_im = kv.get_double("volform.f_im", 0.0);
  c.rank = kv.get_int("bundle.rank", 2);

  c.continuation.alpha_start = kv.get_double("alpha.start", 0.0);
  c.continuation.alpha_target = kv.get_double("alpha.target", 1e-2);
  c.continuation.step = kv.get_double("alpha.step", 2.5e-3);
  c.continuation.min_step = kv.get_double("alpha.min_step", 1e-8);
  c.continuation.grow = kv.get_double("alpha.grow", 1.5);
  c.continuation.shrink = kv.get_double("alpha.shrink", 0.5);
  const std::string pred = kv.get_string("predictor", "secant");
  if (pred == "secant")
    c.continuation.secant_predictor = true;
  else if (pred == "previous")
    c.continuation.secant_predictor = false;
  else
    throw UsageError("config predictor: expected secant|previous");
  c.continuation.newton.tol = kv.get_double("newton.tol", 1e-9);
  c.continuation.newton.max_iters = kv.get_int("newton.max_iters", 25);
  const std::string nm = kv.get_string("newton.mode", "chord");
  if (nm == "chord")
    c.continuation.newton.mode = NewtonOptions::Mode::Chord;
  else if (nm == "jfnk")
    c.continuation.newton.mode = NewtonOptions::Mode::Jfnk;
  else
    throw UsageError("config newton.mode: expected chord|jfnk");
  c.continuation.newton.fd_step = kv.get_double("newton.fd_step", 1e-5);
  c.continuation.newton.gmres_restart = kv.get_int("newton.gmres_restart", 30);
  c.continuation.newton.gmres_max_iters = kv.get_int("newton.gmres_max_iters", 200);
  c.continuation.newton.min_positivity_margin = kv.get_double("ansatz.min_margin", 0.0);
  c.continuation.monitor_epsilon = kv.get_double("monitor.epsilon", 0.1);

  c.manufactured_enabled = kv.get_bool("manufactured.enabled", false);
  c.manufactured_amplitude = kv.get_double("manufactured.amplitude", 1e-2);
  c.manufactured_max_mode = kv.get_int("manufactured.max_mode", 1);

  c.fault_lambda_scale = kv.get_double("faults.lambda_scale", 1.0);

  c.input_state = kv.get_string("input.state", "");
  c.input_form = kv.get_string("input.form", "");

  kv.finish();

  if (c.continuation.alpha_start < 0 || c.continuation.newton.tol <= 0)
    throw UsageError("config: tolerances and alpha range must be positive");
  return c;
}

LatticePtr RunConfig::make_lattice() const {
  return Lattice::create(lattice_n, active_axes, periods);
}

Eigen::Matrix3cd RunConfig::make_g_hat() const {
  if (metric_spec == "identity") return Eigen::Matrix3cd::Identity();
  if (metric_spec.rfind("scale:", 0) == 0) {
    const double c = std::stod(metric_spec.substr(6));
    if (c <= 0) throw UsageError("config metric.g_hat: scale must be positive");
    return c * Eigen::Matrix3cd::Identity();
  }
  if (metric_spec.rfind("diag:", 0) == 0) {
    std::istringstream is(metric_spec.substr(5));
    std::string tok;
    Eigen::Matrix3cd g = Eigen::Matrix3cd::Zero();
    int i = 0;
    while (std::getline(is, tok, ',') && i < 3) g(i, i) = std::stod(tok), ++i;
    if (i != 3) throw UsageError("config metric.g_hat: diag needs 3 entries");
    return g;
  }
  throw UsageError("config metric.g_hat: expected identity | scale:<c> | diag:<a,b,c>");
}

Testbed RunConfig::make_testbed() const {
  return Testbed::make(make_lattice(), make_g_hat(), HolVolForm{cplx(f_re, f_im)}, rank);
}

}  // namespace strom
