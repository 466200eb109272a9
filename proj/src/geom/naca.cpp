#include <cctype>
#include <cmath>

#include "wingfea/geometry.hpp"

namespace wingfea::geom {

const char* region_name(Region r) {
  switch (r) {
    case Region::exterior: return "exterior";
    case Region::shell: return "shell";
    case Region::spar: return "spar";
    case Region::rib: return "rib";
    default: return "void_interior";
  }
}

namespace {

// Half-thickness polynomial of the 4-digit series, open trailing edge.
double thickness_open(double t, double x) {
  return (t / 0.2) * (0.2969 * std::sqrt(x) - 0.1260 * x - 0.3516 * x * x +
                      0.2843 * x * x * x - 0.1015 * x * x * x * x);
}

}  // namespace

double AirfoilProfile::camber(double xn) const {
  double m = max_camber, p = camber_station;
  if (m == 0.0 || p == 0.0) return 0.0;
  if (xn < p) return m / (p * p) * (2.0 * p * xn - xn * xn);
  return m / ((1.0 - p) * (1.0 - p)) * ((1.0 - 2.0 * p) + 2.0 * p * xn - xn * xn);
}

double AirfoilProfile::camber_slope(double xn) const {
  double m = max_camber, p = camber_station;
  if (m == 0.0 || p == 0.0) return 0.0;
  if (xn < p) return 2.0 * m / (p * p) * (p - xn);
  return 2.0 * m / ((1.0 - p) * (1.0 - p)) * (p - xn);
}

double AirfoilProfile::half_thickness(double xn) const {
  double yt = thickness_open(thickness_ratio, xn);
  // Close the finite trailing-edge gap by ramping it out over the last 1% of chord.
  if (xn > 0.99) {
    double yte = thickness_open(thickness_ratio, 1.0);
    yt -= yte * (xn - 0.99) / 0.01;
    if (yt < 0.0) yt = 0.0;
  }
  return yt;
}

double AirfoilProfile::max_full_thickness() const {
  double best = 0.0;
  for (std::size_t i = 0; i < upper.size(); ++i) {
    double t = upper[i].z - lower[i].z;
    if (t > best) best = t;
  }
  return best;
}

AirfoilProfile naca4_profile(const std::string& code, double chord, int n) {
  if (code.size() != 4) throw CodeError("NACA code must have exactly 4 digits: '" + code + "'");
  for (char c : code)
    if (!std::isdigit(static_cast<unsigned char>(c)))
      throw CodeError("NACA code must be numeric: '" + code + "'");
  if (chord <= 0.0) throw GeometryError("chord must be positive");
  if (n < 32) throw SamplingError("need at least 32 profile samples, got " + std::to_string(n));

  AirfoilProfile prof;
  prof.code = code;
  prof.chord = chord;
  prof.samples = n;
  prof.max_camber = (code[0] - '0') / 100.0;
  prof.camber_station = (code[1] - '0') / 10.0;
  prof.thickness_ratio = ((code[2] - '0') * 10 + (code[3] - '0')) / 100.0;
  if (prof.thickness_ratio <= 0.0) throw CodeError("zero-thickness section: '" + code + "'");

  prof.upper.reserve(n + 1);
  prof.lower.reserve(n + 1);
  for (int j = 0; j <= n; ++j) {
    // cosine clustering resolves the nose
    double xn = 0.5 * (1.0 - std::cos(M_PI * j / n));
    double yt = prof.half_thickness(xn);
    double yc = prof.camber(xn);
    double theta = std::atan(prof.camber_slope(xn));
    double s = std::sin(theta), c = std::cos(theta);
    prof.upper.push_back({(xn - yt * s) * chord, 0.0, (yc + yt * c) * chord});
    prof.lower.push_back({(xn + yt * s) * chord, 0.0, (yc - yt * c) * chord});
  }
  // LE and (closed) TE coincide exactly by construction: yt(0) = yt(1) = 0.
  return prof;
}

}  // namespace wingfea::geom
