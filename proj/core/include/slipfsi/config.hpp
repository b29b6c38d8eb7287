#pragma once

#include "slipfsi/geometry.hpp"
#include "slipfsi/propulsion.hpp"
#include "slipfsi/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace slipfsi {

/// Scenario configuration. Text form is one `key = value` per line, `#`
/// starts a comment, lists are comma separated. Every key is optional.
struct Config {
  // body
  std::string body_shape = "sphere";  // sphere | icosphere
  double body_radius = 1.0;
  double body_density = 1.0;
  int body_mesh_level = 3;

  // domain
  double domain_R = 4.0;
  int domain_resolution = 10;
  QuadratureScheme domain_quadrature = QuadratureScheme::Spherical;

  // basis
  int basis_N = 20;
  int basis_potential_order = 2;
  std::string basis_cache_dir;  // empty disables the cache

  // transport
  std::optional<double> transport_eps_shift;  // default 1/N, 0 in positive-density mode
  double transport_dt_sub_factor = 0.25;

  // fluid and coupling
  double fluid_nu = 1.0;
  double fluid_nu1 = 0.5;
  double fluid_nu2 = 2.0;
  bool fluid_variable_viscosity = false;
  double coupling_alpha = 1.0;

  // time stepping
  double time_T = 1.0;
  double time_dt = 5e-3;
  double picard_tol = 1e-8;
  int picard_max_iter = 50;
  bool picard_resweep = true;

  bool mode_positive_density = false;

  // propulsion
  FluxFamily propulsion_family = FluxFamily::Swirl;
  double propulsion_amplitude = 1.0;
  TimeProfile propulsion_profile = TimeProfile::Constant;
  double propulsion_period = 1.0;
  double propulsion_ramp_time = 0.25;

  // initial density: constant | stratified | radial | two_layer
  std::string density_profile = "stratified";
  double density_value = 1.0;
  double density_lo = 1.0;
  double density_hi = 2.0;
  double density_width = 1.0;
  Vec3 density_axis = Vec3::UnitZ();
  double density_inner = 2.0;
  double density_outer = 1.0;
  double density_radius = 2.5;

  // initial velocity: zero | rigid | spin | vortex | random
  std::string initial_family = "zero";
  Vec3 initial_ell = Vec3::Zero();
  Vec3 initial_rot = Vec3::Zero();
  double initial_amplitude = 0.0;

  std::uint64_t seed = 0;

  // outputs
  int output_grid = 24;          // density snapshot points per axis
  int output_every = 1;          // trajectory and ledger row stride

  // sweeps
  std::vector<double> sweep_R{3.0, 4.0, 6.0};
  std::vector<int> sweep_N;
  std::vector<double> sweep_dt;

  /// Shift actually applied to the density.
  double eps_shift() const;
  int steps() const;
};

/// Parses config text; `origin` names the source in error messages. Unknown
/// keys are collected and reported together.
Config parse_config(const std::string& text, const std::string& origin = "<config>");
Config load_config(const std::string& path);

/// Range and consistency checks; throws Error(Config, ...).
void validate(const Config& c);

/// Canonical text form (every key, fixed formatting), parseable by parse_config.
std::string to_text(const Config& c);

/// All recognised keys, in canonical order.
const std::vector<std::string>& config_keys();

}  // namespace slipfsi
