#include "slipfsi/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace slipfsi {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

[[noreturn]] void bad(const std::string& key, const std::string& v, const char* what) {
  throw Error(ErrorKind::Config, "bad value for " + key + ": '" + v + "' (expected " + what + ")");
}

double to_double(const std::string& key, const std::string& v) {
  double x = 0.0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size() || !std::isfinite(x)) bad(key, v, "a number");
  return x;
}

long long to_int(const std::string& key, const std::string& v) {
  long long x = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) bad(key, v, "an integer");
  return x;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad(key, v, "true or false");
}

Vec3 to_vec3(const std::string& key, const std::string& v) {
  const auto items = split_list(v);
  if (items.size() != 3) bad(key, v, "three comma-separated numbers");
  return Vec3(to_double(key, items[0]), to_double(key, items[1]), to_double(key, items[2]));
}

std::string fmt(double x) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}
std::string fmt(bool b) { return b ? "true" : "false"; }
std::string fmt(const Vec3& v) { return fmt(v.x()) + ", " + fmt(v.y()) + ", " + fmt(v.z()); }
template <class T>
std::string fmt_list(const std::vector<T>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) s += ", ";
    if constexpr (std::is_integral_v<T>) s += std::to_string(xs[i]);
    else s += fmt(static_cast<double>(xs[i]));
  }
  return s;
}

struct KeySpec {
  std::string key;
  std::function<void(Config&, const std::string&)> set;
  std::function<std::string(const Config&)> get;
};

#define SLIPFSI_DOUBLE(name, field)                                                     \
  KeySpec{name, [](Config& c, const std::string& v) { c.field = to_double(name, v); }, \
          [](const Config& c) { return fmt(c.field); }}
#define SLIPFSI_INT(name, field)                                                                   \
  KeySpec{name, [](Config& c, const std::string& v) { c.field = static_cast<int>(to_int(name, v)); }, \
          [](const Config& c) { return std::to_string(c.field); }}
#define SLIPFSI_BOOL(name, field)                                                     \
  KeySpec{name, [](Config& c, const std::string& v) { c.field = to_bool(name, v); }, \
          [](const Config& c) { return fmt(c.field); }}
#define SLIPFSI_STRING(name, field)                                       \
  KeySpec{name, [](Config& c, const std::string& v) { c.field = v; }, \
          [](const Config& c) { return c.field; }}
#define SLIPFSI_VEC3(name, field)                                                     \
  KeySpec{name, [](Config& c, const std::string& v) { c.field = to_vec3(name, v); }, \
          [](const Config& c) { return fmt(c.field); }}

const std::vector<KeySpec>& key_table() {
  static const std::vector<KeySpec> table = {
      SLIPFSI_STRING("body.shape", body_shape),
      SLIPFSI_DOUBLE("body.radius", body_radius),
      SLIPFSI_DOUBLE("body.density", body_density),
      SLIPFSI_INT("body.mesh_level", body_mesh_level),
      SLIPFSI_DOUBLE("domain.R", domain_R),
      SLIPFSI_INT("domain.resolution", domain_resolution),
      KeySpec{"domain.quadrature",
              [](Config& c, const std::string& v) {
                if (v == "spherical") c.domain_quadrature = QuadratureScheme::Spherical;
                else if (v == "lattice") c.domain_quadrature = QuadratureScheme::Lattice;
                else bad("domain.quadrature", v, "spherical or lattice");
              },
              [](const Config& c) {
                return std::string(c.domain_quadrature == QuadratureScheme::Spherical ? "spherical" : "lattice");
              }},
      SLIPFSI_INT("basis.N", basis_N),
      SLIPFSI_INT("basis.potential_order", basis_potential_order),
      SLIPFSI_STRING("basis.cache_dir", basis_cache_dir),
      KeySpec{"transport.eps_shift",
              [](Config& c, const std::string& v) {
                if (v == "auto") c.transport_eps_shift.reset();
                else c.transport_eps_shift = to_double("transport.eps_shift", v);
              },
              [](const Config& c) {
                return c.transport_eps_shift ? fmt(*c.transport_eps_shift) : std::string("auto");
              }},
      SLIPFSI_DOUBLE("transport.dt_sub_factor", transport_dt_sub_factor),
      SLIPFSI_DOUBLE("fluid.nu", fluid_nu),
      SLIPFSI_DOUBLE("fluid.nu1", fluid_nu1),
      SLIPFSI_DOUBLE("fluid.nu2", fluid_nu2),
      SLIPFSI_BOOL("fluid.variable_viscosity", fluid_variable_viscosity),
      SLIPFSI_DOUBLE("coupling.alpha", coupling_alpha),
      SLIPFSI_DOUBLE("time.T", time_T),
      SLIPFSI_DOUBLE("time.dt", time_dt),
      SLIPFSI_DOUBLE("picard.tol", picard_tol),
      SLIPFSI_INT("picard.max_iter", picard_max_iter),
      SLIPFSI_BOOL("picard.resweep", picard_resweep),
      SLIPFSI_BOOL("mode.positive_density", mode_positive_density),
      KeySpec{"propulsion.family",
              [](Config& c, const std::string& v) { c.propulsion_family = parse_flux_family(v); },
              [](const Config& c) { return to_string(c.propulsion_family); }},
      SLIPFSI_DOUBLE("propulsion.amplitude", propulsion_amplitude),
      KeySpec{"propulsion.profile",
              [](Config& c, const std::string& v) { c.propulsion_profile = parse_time_profile(v); },
              [](const Config& c) { return to_string(c.propulsion_profile); }},
      SLIPFSI_DOUBLE("propulsion.period", propulsion_period),
      SLIPFSI_DOUBLE("propulsion.ramp_time", propulsion_ramp_time),
      SLIPFSI_STRING("density.profile", density_profile),
      SLIPFSI_DOUBLE("density.value", density_value),
      SLIPFSI_DOUBLE("density.lo", density_lo),
      SLIPFSI_DOUBLE("density.hi", density_hi),
      SLIPFSI_DOUBLE("density.width", density_width),
      SLIPFSI_VEC3("density.axis", density_axis),
      SLIPFSI_DOUBLE("density.inner", density_inner),
      SLIPFSI_DOUBLE("density.outer", density_outer),
      SLIPFSI_DOUBLE("density.radius", density_radius),
      SLIPFSI_STRING("initial.family", initial_family),
      SLIPFSI_VEC3("initial.ell", initial_ell),
      SLIPFSI_VEC3("initial.rot", initial_rot),
      SLIPFSI_DOUBLE("initial.amplitude", initial_amplitude),
      KeySpec{"seed",
              [](Config& c, const std::string& v) {
                const long long s = to_int("seed", v);
                if (s < 0) bad("seed", v, "a nonnegative integer");
                c.seed = static_cast<std::uint64_t>(s);
              },
              [](const Config& c) { return std::to_string(c.seed); }},
      SLIPFSI_INT("output.grid", output_grid),
      SLIPFSI_INT("output.every", output_every),
      KeySpec{"sweep.R",
              [](Config& c, const std::string& v) {
                c.sweep_R.clear();
                for (const auto& s : split_list(v)) c.sweep_R.push_back(to_double("sweep.R", s));
              },
              [](const Config& c) { return fmt_list(c.sweep_R); }},
      KeySpec{"sweep.N",
              [](Config& c, const std::string& v) {
                c.sweep_N.clear();
                for (const auto& s : split_list(v)) c.sweep_N.push_back(static_cast<int>(to_int("sweep.N", s)));
              },
              [](const Config& c) { return fmt_list(c.sweep_N); }},
      KeySpec{"sweep.dt",
              [](Config& c, const std::string& v) {
                c.sweep_dt.clear();
                for (const auto& s : split_list(v)) c.sweep_dt.push_back(to_double("sweep.dt", s));
              },
              [](const Config& c) { return fmt_list(c.sweep_dt); }},
  };
  return table;
}

#undef SLIPFSI_DOUBLE
#undef SLIPFSI_INT
#undef SLIPFSI_BOOL
#undef SLIPFSI_STRING
#undef SLIPFSI_VEC3

}  // namespace

double Config::eps_shift() const {
  if (mode_positive_density) return 0.0;
  if (transport_eps_shift) return *transport_eps_shift;
  return 1.0 / basis_N;
}

int Config::steps() const { return static_cast<int>(std::llround(time_T / time_dt)); }

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& s : key_table()) k.push_back(s.key);
    return k;
  }();
  return keys;
}

Config parse_config(const std::string& text, const std::string& origin) {
  std::map<std::string, const KeySpec*> index;
  for (const auto& s : key_table()) index[s.key] = &s;

  Config c;
  std::vector<std::string> unknown;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorKind::Config, origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = index.find(key);
    if (it == index.end()) {
      unknown.push_back(key);
      continue;
    }
    if (!seen.insert(key).second)
      throw Error(ErrorKind::Config, origin + ":" + std::to_string(lineno) + ": duplicate key " + key);
    it->second->set(c, value);
  }
  if (!unknown.empty()) {
    std::string msg = origin + ": unknown keys:";
    for (const auto& k : unknown) msg += " " + k;
    throw Error(ErrorKind::Config, msg);
  }
  validate(c);
  return c;
}

Config load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorKind::Io, "cannot open config file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), path);
}

void validate(const Config& c) {
  const auto fail = [](const std::string& m) { throw Error(ErrorKind::Config, m); };
  if (c.body_shape != "sphere" && c.body_shape != "icosphere")
    fail("body.shape must be sphere or icosphere");
  if (!(c.body_radius > 0.0)) fail("body.radius must be positive");
  if (!(c.body_density > 0.0)) fail("body.density must be positive");
  if (c.body_mesh_level < 0 || c.body_mesh_level > 6) fail("body.mesh_level must lie in [0, 6]");
  if (!(c.domain_R > 2.0 * c.body_radius)) fail("domain.R must exceed twice body.radius");
  if (c.domain_resolution < 2) fail("domain.resolution must be at least 2");
  if (c.basis_N < 1) fail("basis.N must be at least 1");
  if (c.basis_potential_order < 0 || c.basis_potential_order > 2)
    fail("basis.potential_order must lie in [0, 2]");
  if (c.transport_eps_shift && *c.transport_eps_shift < 0.0) fail("transport.eps_shift must be nonnegative");
  if (!(c.transport_dt_sub_factor > 0.0 && c.transport_dt_sub_factor <= 1.0))
    fail("transport.dt_sub_factor must lie in (0, 1]");
  if (!(c.fluid_nu > 0.0)) fail("fluid.nu must be positive");
  if (!(c.fluid_nu1 > 0.0 && c.fluid_nu2 >= c.fluid_nu1)) fail("fluid.nu1, fluid.nu2 must satisfy 0 < nu1 <= nu2");
  if (c.coupling_alpha < 0.0) fail("coupling.alpha must be nonnegative");
  if (!(c.time_T > 0.0)) fail("time.T must be positive");
  if (!(c.time_dt > 0.0 && c.time_dt <= c.time_T)) fail("time.dt must lie in (0, time.T]");
  if (std::abs(c.steps() * c.time_dt - c.time_T) > 1e-9 * c.time_T)
    fail("time.T must be an integer multiple of time.dt");
  if (!(c.picard_tol > 0.0)) fail("picard.tol must be positive");
  if (c.picard_max_iter < 1) fail("picard.max_iter must be at least 1");
  if (!(c.propulsion_amplitude >= 0.0)) fail("propulsion.amplitude must be nonnegative");
  if (!(c.propulsion_period > 0.0)) fail("propulsion.period must be positive");
  if (!(c.propulsion_ramp_time > 0.0)) fail("propulsion.ramp_time must be positive");
  const std::string& dp = c.density_profile;
  if (dp != "constant" && dp != "stratified" && dp != "radial" && dp != "two_layer")
    fail("density.profile must be constant, stratified, radial or two_layer");
  if (dp == "constant" && c.density_value < 0.0) fail("density.value must be nonnegative");
  if (dp == "stratified" || dp == "radial") {
    if (!(c.density_lo >= 0.0 && c.density_hi >= c.density_lo)) fail("density.lo, density.hi must satisfy 0 <= lo <= hi");
    if (!(c.density_width > 0.0)) fail("density.width must be positive");
  }
  if (dp == "stratified" && !(c.density_axis.norm() > 0.0)) fail("density.axis must be nonzero");
  if (dp == "radial" && !(c.density_radius > 0.0)) fail("density.radius must be positive");
  if (dp == "two_layer") {
    if (c.density_inner < 0.0 || c.density_outer < 0.0) fail("density.inner, density.outer must be nonnegative");
    if (!(c.density_radius > 0.0)) fail("density.radius must be positive");
  }
  if (!c.mode_positive_density && c.eps_shift() == 0.0) {
    const double lo = dp == "constant" ? c.density_value
                      : dp == "stratified" || dp == "radial" ? c.density_lo
                                           : std::min(c.density_inner, c.density_outer);
    if (lo == 0.0) fail("vacuum initial density needs transport.eps_shift > 0");
  }
  if (c.mode_positive_density) {
    const double lo = dp == "constant" ? c.density_value
                      : dp == "stratified" || dp == "radial" ? c.density_lo
                                           : std::min(c.density_inner, c.density_outer);
    if (!(lo > 0.0)) fail("mode.positive_density needs a density bounded away from zero");
  }
  const std::string& f = c.initial_family;
  if (f != "zero" && f != "rigid" && f != "spin" && f != "vortex" && f != "random")
    fail("initial.family must be zero, rigid, spin, vortex or random");
  if (c.output_grid < 2) fail("output.grid must be at least 2");
  if (c.output_every < 1) fail("output.every must be at least 1");
  for (double R : c.sweep_R)
    if (!(R > 2.0 * c.body_radius)) fail("every sweep.R entry must exceed twice body.radius");
  if (!std::is_sorted(c.sweep_R.begin(), c.sweep_R.end()) ||
      std::adjacent_find(c.sweep_R.begin(), c.sweep_R.end()) != c.sweep_R.end())
    fail("sweep.R must be strictly increasing");
  for (std::size_t i = 1; i < c.sweep_N.size(); ++i)
    if (c.sweep_N[i] <= c.sweep_N[i - 1]) fail("sweep.N must be strictly increasing");
  for (int n : c.sweep_N)
    if (n < 1) fail("sweep.N entries must be positive");
  for (std::size_t i = 1; i < c.sweep_dt.size(); ++i)
    if (c.sweep_dt[i] >= c.sweep_dt[i - 1]) fail("sweep.dt must be strictly decreasing");
  for (double dt : c.sweep_dt)
    if (!(dt > 0.0)) fail("sweep.dt entries must be positive");
}

std::string to_text(const Config& c) {
  std::string s;
  for (const auto& k : key_table()) s += k.key + " = " + k.get(c) + "\n";
  return s;
}

}  // namespace slipfsi
