#include "chaoslab/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace chaoslab {

namespace {

std::string join(const std::vector<std::string>& errs) {
  std::string s = "config errors:";
  for (const auto& e : errs) s += "\n  " + e;
  return s;
}

// ---------------------------------------------------------------- scanner

struct Value {
  enum Kind { String, Number, Boolean } kind = Number;
  std::string str;   // string payload, or the raw numeric token
  double num = 0.0;
  bool boolean = false;
};

struct Parser {
  std::map<std::string, Value> flat;  // "table.key" -> value
  std::vector<std::string> errors;

  void fail(const std::string& where, const std::string& what) {
    errors.push_back(where + ": " + what);
  }

  static std::string strip(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
  }

  bool parse_value(const std::string& raw, const std::string& path, Value& out) {
    std::string v = strip(raw);
    if (v.empty()) {
      fail(path, "empty value");
      return false;
    }
    if (v.front() == '"') {
      if (v.size() < 2 || v.back() != '"') {
        fail(path, "unterminated string");
        return false;
      }
      out.kind = Value::String;
      out.str = v.substr(1, v.size() - 2);
      return true;
    }
    if (v == "true" || v == "false") {
      out.kind = Value::Boolean;
      out.boolean = v == "true";
      return true;
    }
    out.kind = Value::Number;
    out.str = v;
    char* end = nullptr;
    out.num = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0') {
      fail(path, "cannot parse value '" + v + "'");
      return false;
    }
    return true;
  }

  // splits "a = 1, b = 2" at top-level commas
  void parse_inline_table(const std::string& body, const std::string& prefix) {
    size_t start = 0;
    int depth = 0;
    bool in_str = false;
    for (size_t i = 0; i <= body.size(); ++i) {
      if (i < body.size()) {
        char c = body[i];
        if (c == '"') in_str = !in_str;
        if (in_str) continue;
        if (c == '{') ++depth;
        if (c == '}') --depth;
        if (!(c == ',' && depth == 0)) continue;
      }
      std::string item = strip(body.substr(start, i - start));
      start = i + 1;
      if (item.empty()) continue;
      size_t eq = item.find('=');
      if (eq == std::string::npos) {
        fail(prefix, "inline-table entry without '='");
        continue;
      }
      std::string key = strip(item.substr(0, eq));
      Value v;
      if (parse_value(item.substr(eq + 1), prefix + "." + key, v)) flat[prefix + "." + key] = v;
    }
  }

  void parse(const std::string& text) {
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      size_t hash = std::string::npos;
      bool in_str = false;
      for (size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') in_str = !in_str;
        if (line[i] == '#' && !in_str) {
          hash = i;
          break;
        }
      }
      if (hash != std::string::npos) line = line.substr(0, hash);
      line = strip(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']') {
          fail("line " + std::to_string(lineno), "unterminated table header");
          continue;
        }
        section = strip(line.substr(1, line.size() - 2));
        continue;
      }
      size_t eq = line.find('=');
      if (eq == std::string::npos) {
        fail("line " + std::to_string(lineno), "expected key = value");
        continue;
      }
      std::string key = strip(line.substr(0, eq));
      std::string path = section.empty() ? key : section + "." + key;
      std::string rhs = strip(line.substr(eq + 1));
      if (!rhs.empty() && rhs.front() == '{') {
        if (rhs.back() != '}') {
          fail(path, "unterminated inline table");
          continue;
        }
        parse_inline_table(rhs.substr(1, rhs.size() - 2), path);
        continue;
      }
      Value v;
      if (parse_value(rhs, path, v)) flat[path] = v;
    }
  }
};

// --------------------------------------------------------------- builder

struct Builder {
  std::map<std::string, Value>& flat;
  std::vector<std::string>& errors;
  std::map<std::string, bool> used;

  void fail(const std::string& path, const std::string& what) {
    errors.push_back(path + ": " + what);
  }

  const Value* get(const std::string& path) {
    auto it = flat.find(path);
    if (it == flat.end()) return nullptr;
    used[path] = true;
    return &it->second;
  }

  void number(const std::string& path, double& out) {
    const Value* v = get(path);
    if (!v) return;
    if (v->kind != Value::Number) return fail(path, "expected a number");
    out = v->num;
  }
  void integer(const std::string& path, int& out) {
    const Value* v = get(path);
    if (!v) return;
    if (v->kind != Value::Number || v->num != std::floor(v->num))
      return fail(path, "expected an integer");
    out = int(v->num);
  }
  void u64(const std::string& path, uint64_t& out) {
    const Value* v = get(path);
    if (!v) return;
    if (v->kind != Value::Number) return fail(path, "expected a nonnegative integer");
    uint64_t parsed = 0;
    auto [ptr, ec] = std::from_chars(v->str.data(), v->str.data() + v->str.size(), parsed);
    if (ec != std::errc{} || ptr != v->str.data() + v->str.size())
      return fail(path, "expected a nonnegative integer");
    out = parsed;
  }
  void str(const std::string& path, std::string& out) {
    const Value* v = get(path);
    if (!v) return;
    if (v->kind != Value::String) return fail(path, "expected a string");
    out = v->str;
  }

  void unknown_keys() {
    for (const auto& [k, v] : flat)
      if (!used.count(k)) fail(k, "unknown key");
  }
};

}  // namespace

ConfigError::ConfigError(std::vector<std::string> errs)
    : std::runtime_error(join(errs)), errors_(std::move(errs)) {}

ExperimentConfig parse_config(const std::string& text) {
  Parser p;
  p.parse(text);
  ExperimentConfig c;
  Builder b{p.flat, p.errors, {}};

  std::string family = "log", table = "zero", form = "quadratic", kind = c.dynamics.kind;
  b.str("kernel.family", family);
  b.number("kernel.s", c.kernel.s);
  b.integer("kernel.d", c.kernel.d);
  b.str("kernel.table", table);
  b.number("kernel.constant", c.kernel.constant);
  b.str("confinement.form", form);
  b.number("confinement.kappa", c.confinement.kappa);
  b.number("confinement.a", c.confinement.a);
  b.number("confinement.b", c.confinement.b);
  b.number("beta", c.beta);
  b.number("grid.lo", c.grid.lo);
  b.number("grid.hi", c.grid.hi);
  b.integer("grid.n_cells", c.grid.n);
  b.str("dynamics.kind", kind);
  b.number("dynamics.dt", c.dynamics.dt);
  b.number("dynamics.t_end", c.dynamics.t_end);
  b.number("dynamics.snapshot_dt", c.dynamics.snapshot_dt);
  b.integer("ensemble.N", c.ensemble.N);
  b.integer("ensemble.M", c.ensemble.M);
  b.u64("ensemble.master_seed", c.ensemble.master_seed);
  b.number("constants.c_riesz", c.constants.c_riesz);
  b.number("constants.c_re", c.constants.c_re);
  b.number("constants.c_me", c.constants.c_me);
  b.number("constants.c_beta_assm", c.constants.c_beta_assm);
  b.number("tolerances.equilibrium", c.tolerances.equilibrium);
  b.number("tolerances.disc_c", c.tolerances.disc_c);
  b.number("tolerances.audit", c.tolerances.audit);
  b.str("output_dir", c.output_dir);
  b.integer("threads", c.threads);
  b.unknown_keys();

  // semantic validation, all errors reported with their paths
  if (family == "log")
    c.kernel.family = KernelFamily::Log;
  else if (family == "riesz")
    c.kernel.family = KernelFamily::Riesz;
  else if (family == "smooth")
    c.kernel.family = KernelFamily::SmoothBounded;
  else
    b.fail("kernel.family", "must be log, riesz, or smooth");

  if (table == "zero")
    c.kernel.table = SmoothTable::Zero;
  else if (table == "constant")
    c.kernel.table = SmoothTable::Constant;
  else if (table == "gaussian_bump")
    c.kernel.table = SmoothTable::GaussianBump;
  else if (table == "cosine")
    c.kernel.table = SmoothTable::Cosine;
  else
    b.fail("kernel.table", "must be zero, constant, gaussian_bump, or cosine");

  if (c.kernel.d < 1 || c.kernel.d > 3) b.fail("kernel.d", "must be 1, 2, or 3");
  if (c.kernel.family == KernelFamily::Riesz) {
    if (!(c.kernel.s > 0.0)) b.fail("kernel.s", "riesz exponent must be > 0");
    if (c.kernel.d >= 1 && !(c.kernel.s < double(c.kernel.d)))
      b.fail("kernel.s", "riesz exponent must satisfy s < d");
  } else if (c.kernel.s != 0.0) {
    b.fail("kernel.s", "only the riesz family takes an exponent");
  }

  if (form == "quadratic")
    c.confinement.form = ConfinementForm::Quadratic;
  else if (form == "quartic")
    c.confinement.form = ConfinementForm::Quartic;
  else
    b.fail("confinement.form", "must be quadratic or quartic");
  c.confinement.d = c.kernel.d;

  if (!(c.beta > 0.0)) b.fail("beta", "must be > 0");
  if (!(c.grid.lo < c.grid.hi)) b.fail("grid.lo", "must satisfy lo < hi");
  if (c.grid.n < 16) b.fail("grid.n_cells", "must be >= 16");
  if (kind == "sde" || kind == "mala_gibbs" || kind == "mala_modulated")
    c.dynamics.kind = kind;
  else
    b.fail("dynamics.kind", "must be sde, mala_gibbs, or mala_modulated");
  if (!(c.dynamics.dt > 0.0)) b.fail("dynamics.dt", "must be > 0");
  if (!(c.dynamics.t_end > 0.0)) b.fail("dynamics.t_end", "must be > 0");
  if (!(c.dynamics.snapshot_dt > 0.0)) b.fail("dynamics.snapshot_dt", "must be > 0");
  if (c.ensemble.N < 1) b.fail("ensemble.N", "must be >= 1");
  if (c.ensemble.M < 1) b.fail("ensemble.M", "must be >= 1");
  if (!(c.constants.c_riesz > 0.0)) b.fail("constants.c_riesz", "must be > 0");
  if (!(c.constants.c_beta_assm * c.beta < 1.0))
    b.fail("constants.c_beta_assm", "must satisfy c_beta_assm * beta < 1");
  if (!(c.tolerances.equilibrium > 0.0)) b.fail("tolerances.equilibrium", "must be > 0");
  if (c.threads < 0) b.fail("threads", "must be >= 0");
  if (c.output_dir.empty()) b.fail("output_dir", "must be nonempty");

  if (!p.errors.empty()) throw ConfigError(p.errors);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({path + ": cannot open config file"});
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

namespace {

std::string fmt(double v) {
  std::ostringstream ss;
  ss.precision(17);
  ss << v;
  return ss.str();
}

}  // namespace

std::string print_config(const ExperimentConfig& c) {
  std::ostringstream o;
  const char* family = c.kernel.family == KernelFamily::Log      ? "log"
                       : c.kernel.family == KernelFamily::Riesz ? "riesz"
                                                                 : "smooth";
  const char* table = c.kernel.table == SmoothTable::Zero           ? "zero"
                      : c.kernel.table == SmoothTable::Constant     ? "constant"
                      : c.kernel.table == SmoothTable::GaussianBump ? "gaussian_bump"
                                                                    : "cosine";
  const char* form = c.confinement.form == ConfinementForm::Quadratic ? "quadratic" : "quartic";
  o << "beta = " << fmt(c.beta) << "\n";
  o << "output_dir = \"" << c.output_dir << "\"\n";
  o << "threads = " << c.threads << "\n";
  o << "kernel = {family=\"" << family << "\", s=" << fmt(c.kernel.s) << ", d=" << c.kernel.d
    << ", table=\"" << table << "\", constant=" << fmt(c.kernel.constant) << "}\n";
  o << "confinement = {form=\"" << form << "\", kappa=" << fmt(c.confinement.kappa)
    << ", a=" << fmt(c.confinement.a) << ", b=" << fmt(c.confinement.b) << "}\n";
  o << "grid = {lo=" << fmt(c.grid.lo) << ", hi=" << fmt(c.grid.hi) << ", n_cells=" << c.grid.n
    << "}\n";
  o << "dynamics = {kind=\"" << c.dynamics.kind << "\", dt=" << fmt(c.dynamics.dt)
    << ", t_end=" << fmt(c.dynamics.t_end) << ", snapshot_dt=" << fmt(c.dynamics.snapshot_dt)
    << "}\n";
  o << "ensemble = {N=" << c.ensemble.N << ", M=" << c.ensemble.M
    << ", master_seed=" << c.ensemble.master_seed << "}\n";
  o << "constants = {c_riesz=" << fmt(c.constants.c_riesz) << ", c_re=" << fmt(c.constants.c_re)
    << ", c_me=" << fmt(c.constants.c_me) << ", c_beta_assm=" << fmt(c.constants.c_beta_assm)
    << "}\n";
  o << "tolerances = {equilibrium=" << fmt(c.tolerances.equilibrium)
    << ", disc_c=" << fmt(c.tolerances.disc_c) << ", audit=" << fmt(c.tolerances.audit) << "}\n";
  return o.str();
}

}  // namespace chaoslab
