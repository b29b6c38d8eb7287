#include "slipfsi/propulsion.hpp"

#include <cmath>
#include <numbers>

namespace slipfsi {

FluxFamily parse_flux_family(const std::string& s) {
  if (s == "none") return FluxFamily::None;
  if (s == "swirl") return FluxFamily::Swirl;
  if (s == "squirmer") return FluxFamily::Squirmer;
  throw Error(ErrorKind::Config, "unknown propulsion.family '" + s + "' (none, swirl, squirmer)");
}

TimeProfile parse_time_profile(const std::string& s) {
  if (s == "constant") return TimeProfile::Constant;
  if (s == "ramp") return TimeProfile::Ramp;
  if (s == "sinusoid") return TimeProfile::Sinusoid;
  throw Error(ErrorKind::Config, "unknown propulsion.profile '" + s + "' (constant, ramp, sinusoid)");
}

std::string to_string(FluxFamily f) {
  switch (f) {
    case FluxFamily::None: return "none";
    case FluxFamily::Swirl: return "swirl";
    case FluxFamily::Squirmer: return "squirmer";
  }
  return "none";
}

std::string to_string(TimeProfile p) {
  switch (p) {
    case TimeProfile::Constant: return "constant";
    case TimeProfile::Ramp: return "ramp";
    case TimeProfile::Sinusoid: return "sinusoid";
  }
  return "constant";
}

double PropulsionFlux::g(double t) const {
  switch (profile) {
    case TimeProfile::Constant: return 1.0;
    case TimeProfile::Ramp: return std::min(1.0, std::max(0.0, t / ramp_time));
    case TimeProfile::Sinusoid: return std::sin(2.0 * std::numbers::pi * t / period);
  }
  return 1.0;
}

PropulsionFlux make_tangential_flux(const Points& raw, const SurfaceQuadrature& surface) {
  if (raw.cols() != surface.size())
    throw Error(ErrorKind::Config, "flux samples must cover every surface node");
  PropulsionFlux w;
  w.samples = raw;
  for (Eigen::Index p = 0; p < raw.cols(); ++p) {
    const Vec3 n = surface.normals.col(p);
    w.samples.col(p) -= raw.col(p).dot(n) * n;
  }
  return w;
}

PropulsionFlux make_flux(FluxFamily family, double amplitude, TimeProfile profile,
                         const SurfaceQuadrature& surface) {
  Points raw = Points::Zero(3, surface.size());
  const Vec3 e3 = Vec3::UnitZ();
  for (Eigen::Index p = 0; p < surface.size(); ++p) {
    const Vec3 n = surface.normals.col(p);
    if (family == FluxFamily::Swirl) raw.col(p) = amplitude * e3.cross(n);
    if (family == FluxFamily::Squirmer) raw.col(p) = amplitude * e3;
  }
  PropulsionFlux w = make_tangential_flux(raw, surface);
  w.profile = profile;
  return w;
}

void check_tangential(const Points& w, const SurfaceQuadrature& surface, double tol) {
  for (Eigen::Index p = 0; p < w.cols(); ++p) {
    const double wn = std::abs(w.col(p).dot(surface.normals.col(p)));
    if (wn > tol * std::max(1.0, w.col(p).norm()))
      throw Error(ErrorKind::FluxNotTangential,
                  "flux not tangential at surface node " + std::to_string(p) +
                      ": |w.n| = " + std::to_string(wn));
  }
}

double flux_square_integral(const PropulsionFlux& w, const SurfaceQuadrature& surface, double t,
                            const VecX& nu_nodes) {
  if (w.samples.size() == 0) return 0.0;
  const double g = w.g(t);
  double s = 0.0;
  for (Eigen::Index p = 0; p < surface.size(); ++p) {
    const double nu = nu_nodes.size() ? nu_nodes[p] : 1.0;
    s += surface.weights[p] * nu * w.samples.col(p).squaredNorm();
  }
  return g * g * s;
}

double propulsion_budget(const PropulsionFlux& w, const SurfaceQuadrature& surface, double nu,
                         double alpha, double t, int steps) {
  if (steps < 1 || !(t > 0.0)) return 0.0;
  const double h = t / steps;
  double acc = 0.0;
  for (int k = 0; k <= steps; ++k) {
    const double f = flux_square_integral(w, surface, k * h);
    acc += (k == 0 || k == steps ? 0.5 : 1.0) * f;
  }
  return nu * alpha * h * acc;
}

}  // namespace slipfsi
