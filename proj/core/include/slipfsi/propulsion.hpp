#pragma once

#include "slipfsi/geometry.hpp"
#include "slipfsi/types.hpp"

#include <string>

namespace slipfsi {

enum class FluxFamily { None, Swirl, Squirmer };
enum class TimeProfile { Constant, Ramp, Sinusoid };

FluxFamily parse_flux_family(const std::string& s);
TimeProfile parse_time_profile(const std::string& s);
std::string to_string(FluxFamily f);
std::string to_string(TimeProfile p);

/// Tangential flux w(y, t) = g(t) * samples(y) on the body surface nodes.
struct PropulsionFlux {
  Points samples;  // 3 x m, tangential
  TimeProfile profile = TimeProfile::Constant;
  double period = 1.0;     // sinusoid period
  double ramp_time = 1.0;  // ramp reaches 1 at this time

  double g(double t) const;
  Points at(double t) const { return g(t) * samples; }
  bool zero() const { return samples.size() == 0 || samples.cwiseAbs().maxCoeff() == 0.0; }
};

/// w = raw - (raw . n) n at each node.
PropulsionFlux make_tangential_flux(const Points& raw, const SurfaceQuadrature& surface);

/// Built-in families: swirl ~ e3 x n, squirmer ~ tangential part of e3.
PropulsionFlux make_flux(FluxFamily family, double amplitude, TimeProfile profile,
                         const SurfaceQuadrature& surface);

/// Throws "flux not tangential" when |w . n| exceeds tol at any node.
void check_tangential(const Points& w, const SurfaceQuadrature& surface, double tol = 1e-10);

/// int_S |w(t)|^2 dGamma, weighted node-wise by `nu_nodes` when non-empty.
double flux_square_integral(const PropulsionFlux& w, const SurfaceQuadrature& surface, double t,
                            const VecX& nu_nodes = VecX());

/// nu alpha int_0^t int_S |w|^2 by surface quadrature and a time trapezoid with `steps` intervals.
double propulsion_budget(const PropulsionFlux& w, const SurfaceQuadrature& surface, double nu,
                         double alpha, double t, int steps);

}  // namespace slipfsi
