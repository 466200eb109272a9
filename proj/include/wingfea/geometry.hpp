#pragma once

#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "wingfea/common.hpp"

namespace wingfea::geom {

struct CodeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SamplingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct GeometryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct UnknownLocationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Region { exterior, shell, spar, rib, void_interior };

inline bool is_material(Region r) {
  return r == Region::shell || r == Region::spar || r == Region::rib;
}

const char* region_name(Region r);

// NACA 4-digit section. Coordinates are normalized by chord until scaled;
// x runs chordwise, z is the thickness direction.
struct AirfoilProfile {
  std::string code;
  double chord = 0.0;   // m
  int samples = 0;
  double max_camber = 0.0;       // m digit / 100
  double camber_station = 0.0;   // p digit / 10
  double thickness_ratio = 0.0;  // tt digits / 100

  // Ordered LE->TE, already scaled by chord. upper[0] == lower[0] (LE point)
  // and the trailing edge is closed exactly.
  std::vector<Vec3> upper;  // y unused (0)
  std::vector<Vec3> lower;

  double camber(double xn) const;          // normalized chord in, normalized out
  double camber_slope(double xn) const;
  double half_thickness(double xn) const;  // Eq-form thickness with TE closure
  double max_full_thickness() const;       // m, over the sampled section
};

// code must be 4 digits, n >= 32 sample stations (cosine-clustered).
AirfoilProfile naca4_profile(const std::string& code, double chord, int n = 256);

struct RegionSelector {
  std::string descriptor;
  // tol is a local length scale supplied by the caller (e.g. mesh size).
  std::function<bool(const Vec3&, double tol)> contains;
};

// Interface the mesher consumes: point classification, conservative cell
// probes, boundary projection for node snapping, and the size-field feature
// distance d(x).
class SolidModel {
 public:
  virtual ~SolidModel() = default;

  virtual Region classify(const Vec3& p) const = 0;
  virtual Aabb bounds() const = 0;

  // True if a cube of half-diagonal `radius` centered at p may intersect material.
  virtual bool may_contain_material(const Vec3& p, double radius) const = 0;

  // Smallest material feature thickness a cube at p (half-diagonal `radius`)
  // can intersect; +inf if it cannot touch material at all.
  virtual double local_feature_size(const Vec3& p, double radius) const = 0;

  // Minimum feature thickness over the whole model (drives level auto-upgrade).
  virtual double min_feature() const = 0;

  // Distance to the critical feature set (size-field input).
  virtual double feature_distance(const Vec3& p) const = 0;

  // Nearest point on the material boundary.
  virtual Vec3 project_to_boundary(const Vec3& p) const = 0;

  virtual std::vector<std::string> location_names() const = 0;
  virtual RegionSelector resolve_semantic_location(const std::string& descriptor) const = 0;
};

struct WingParams {
  std::string naca_code = "4412";
  double chord = 0.2;
  double span = 0.2;
  double shell_thickness = 1.5e-3;
  int spar_count = 2;
  double spar_width = 1.5e-3;
  int rib_count = 2;
  double rib_thickness = 1.5e-3;
};

// Extruded NACA wing: outer skin of constant thickness, chordwise spars and
// spanwise ribs filling the interior. Immutable after construction; all
// queries are concurrency-safe.
class WingModel : public SolidModel {
 public:
  explicit WingModel(const WingParams& params, int profile_samples = 2048);

  const WingParams& params() const { return p_; }
  const AirfoilProfile& profile() const { return profile_; }
  const std::vector<double>& spar_stations() const { return spar_stations_; }  // chord fractions
  const std::vector<double>& rib_stations() const { return rib_stations_; }    // m along span

  Region classify(const Vec3& p) const override;
  Aabb bounds() const override;
  bool may_contain_material(const Vec3& p, double radius) const override;
  double local_feature_size(const Vec3& p, double radius) const override;
  double min_feature() const override;
  double feature_distance(const Vec3& p) const override;
  Vec3 project_to_boundary(const Vec3& p) const override;
  std::vector<std::string> location_names() const override;
  RegionSelector resolve_semantic_location(const std::string& descriptor) const override;

  // Outer-surface triangulation for visualization (STL).
  void export_surface_stl(const std::string& path, bool binary = true) const;

 private:
  struct Section;  // cross-section classifier (envelopes + contour)

  WingParams p_;
  AirfoilProfile profile_;
  std::vector<double> spar_stations_;
  std::vector<double> rib_stations_;
  std::shared_ptr<const Section> section_;

  bool in_spar_slab(double x) const;
  bool in_rib_slab(double y) const;
};

// Axis-aligned solid box; used for solver calibration cases and as the
// simplest meshable model.
class BoxSolid : public SolidModel {
 public:
  BoxSolid(Vec3 lo, Vec3 hi);

  Region classify(const Vec3& p) const override;
  Aabb bounds() const override;
  bool may_contain_material(const Vec3& p, double radius) const override;
  double local_feature_size(const Vec3& p, double radius) const override;
  double min_feature() const override;
  double feature_distance(const Vec3& p) const override;  // distance to edges
  Vec3 project_to_boundary(const Vec3& p) const override;
  std::vector<std::string> location_names() const override;
  RegionSelector resolve_semantic_location(const std::string& descriptor) const override;

 private:
  Vec3 lo_, hi_;
};

}  // namespace wingfea::geom
