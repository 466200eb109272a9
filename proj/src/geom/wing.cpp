#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>

#include "wingfea/geometry.hpp"

namespace wingfea::geom {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct P2 {
  double x = 0.0, z = 0.0;
};

double dist2(P2 a, P2 b) {
  double dx = a.x - b.x, dz = a.z - b.z;
  return dx * dx + dz * dz;
}

P2 nearest_on_segment(P2 a, P2 b, P2 q) {
  double vx = b.x - a.x, vz = b.z - a.z;
  double len2 = vx * vx + vz * vz;
  double t = len2 > 0.0 ? ((q.x - a.x) * vx + (q.z - a.z) * vz) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return {a.x + t * vx, a.z + t * vz};
}

// x-binned segment index for nearest-point queries against a polyline.
class Polyline2 {
 public:
  Polyline2() = default;

  void build(std::vector<P2> pts, bool closed, int nbins = 512) {
    pts_ = std::move(pts);
    closed_ = closed;
    if (pts_.size() < 2) return;
    x0_ = kInf;
    double x1 = -kInf;
    for (const auto& p : pts_) {
      x0_ = std::min(x0_, p.x);
      x1 = std::max(x1, p.x);
    }
    nbins_ = nbins;
    dx_ = std::max((x1 - x0_) / nbins_, 1e-300);
    bins_.assign(nbins_, {});
    int nseg = static_cast<int>(pts_.size()) - (closed_ ? 0 : 1);
    for (int s = 0; s < nseg; ++s) {
      P2 a = pts_[s], b = pts_[(s + 1) % pts_.size()];
      int lo = bin_of(std::min(a.x, b.x)), hi = bin_of(std::max(a.x, b.x));
      for (int i = lo; i <= hi; ++i) bins_[i].push_back(s);
    }
  }

  bool empty() const { return pts_.size() < 2; }

  // Exact nearest point on the polyline.
  P2 nearest(P2 q, double* dist_out = nullptr) const {
    int qb = bin_of(q.x);
    double best = kInf;
    P2 bp = pts_[0];
    for (int ring = 0; ring < nbins_; ++ring) {
      bool any = false;
      for (int side = 0; side < (ring == 0 ? 1 : 2); ++side) {
        int i = ring == 0 ? qb : (side == 0 ? qb - ring : qb + ring);
        if (i < 0 || i >= nbins_) continue;
        any = true;
        for (int s : bins_[i]) {
          P2 p = nearest_on_segment(pts_[s], pts_[(s + 1) % pts_.size()], q);
          double d2 = dist2(p, q);
          if (d2 < best) {
            best = d2;
            bp = p;
          }
        }
      }
      // Min possible distance from q.x to the next ring of bins.
      double ring_dx = ring * dx_ - std::abs(q.x - (x0_ + (qb + 0.5) * dx_)) - dx_;
      if (best < kInf && ring_dx > 0.0 && ring_dx * ring_dx > best) break;
      if (!any && ring > 0 && qb - ring < 0 && qb + ring >= nbins_) break;
    }
    if (dist_out) *dist_out = std::sqrt(best);
    return bp;
  }

  const std::vector<P2>& points() const { return pts_; }

 private:
  int bin_of(double x) const {
    int i = static_cast<int>((x - x0_) / dx_);
    return std::clamp(i, 0, nbins_ - 1);
  }

  std::vector<P2> pts_;
  std::vector<std::vector<int>> bins_;
  bool closed_ = false;
  double x0_ = 0.0, dx_ = 1.0;
  int nbins_ = 1;
};

// Linear envelope sampled on a uniform x-grid; +/-inf marks unset samples.
struct Envelope {
  double x0 = 0.0, dx = 1.0;
  std::vector<double> up, lo;  // z bounds per grid sample

  void init(double xa, double xb, int n) {
    x0 = xa;
    dx = (xb - xa) / n;
    up.assign(n + 1, -kInf);
    lo.assign(n + 1, kInf);
  }

  void rasterize(P2 a, P2 b, bool fill_up, bool fill_lo) {
    double xa = std::min(a.x, b.x), xb = std::max(a.x, b.x);
    int i0 = static_cast<int>(std::ceil((xa - x0) / dx - 1e-12));
    int i1 = static_cast<int>(std::floor((xb - x0) / dx + 1e-12));
    i0 = std::max(i0, 0);
    i1 = std::min(i1, static_cast<int>(up.size()) - 1);
    for (int i = i0; i <= i1; ++i) {
      double x = x0 + i * dx;
      double t = b.x != a.x ? (x - a.x) / (b.x - a.x) : 0.0;
      t = std::clamp(t, 0.0, 1.0);
      double z = a.z + t * (b.z - a.z);
      if (fill_up) up[i] = std::max(up[i], z);
      if (fill_lo) lo[i] = std::min(lo[i], z);
    }
  }

  // Interpolated bounds at x; false when the envelope is unset there.
  bool bounds(double x, double& zu, double& zl) const {
    double f = (x - x0) / dx;
    int i = static_cast<int>(std::floor(f));
    if (i < 0 || i + 1 >= static_cast<int>(up.size())) return false;
    double t = f - i;
    if (up[i] == -kInf || up[i + 1] == -kInf || lo[i] == kInf || lo[i + 1] == kInf) return false;
    zu = up[i] + t * (up[i + 1] - up[i]);
    zl = lo[i] + t * (lo[i + 1] - lo[i]);
    return zu >= zl;
  }
};

// For the inner (void) boundary the two offset curves are kept separate so a
// self-intersecting offset near the trailing edge collapses the void cleanly:
// the upper envelope takes min(), the lower takes max().
struct InnerEnvelope {
  double x0 = 0.0, dx = 1.0;
  std::vector<double> up, lo;

  void init(double xa, double xb, int n) {
    x0 = xa;
    dx = (xb - xa) / n;
    up.assign(n + 1, kInf);
    lo.assign(n + 1, -kInf);
  }

  void rasterize(P2 a, P2 b, bool is_upper) {
    double xa = std::min(a.x, b.x), xb = std::max(a.x, b.x);
    int i0 = static_cast<int>(std::ceil((xa - x0) / dx - 1e-12));
    int i1 = static_cast<int>(std::floor((xb - x0) / dx + 1e-12));
    i0 = std::max(i0, 0);
    i1 = std::min(i1, static_cast<int>(up.size()) - 1);
    for (int i = i0; i <= i1; ++i) {
      double x = x0 + i * dx;
      double t = b.x != a.x ? (x - a.x) / (b.x - a.x) : 0.0;
      t = std::clamp(t, 0.0, 1.0);
      double z = a.z + t * (b.z - a.z);
      if (is_upper) {
        if (up[i] == kInf) up[i] = z; else up[i] = std::min(up[i], z);
      } else {
        if (lo[i] == -kInf) lo[i] = z; else lo[i] = std::max(lo[i], z);
      }
    }
  }

  bool bounds(double x, double& zu, double& zl) const {
    double f = (x - x0) / dx;
    int i = static_cast<int>(std::floor(f));
    if (i < 0 || i + 1 >= static_cast<int>(up.size())) return false;
    if (up[i] == kInf || up[i + 1] == kInf || lo[i] == -kInf || lo[i + 1] == -kInf) return false;
    double t = f - i;
    zu = up[i] + t * (up[i + 1] - up[i]);
    zl = lo[i] + t * (lo[i + 1] - lo[i]);
    return zu > zl;
  }
};

}  // namespace

// Cross-section classifier: outer contour envelope, offset void envelope, and
// binned polylines for exact distance/projection queries.
struct WingModel::Section {
  double chord = 0.0;
  double shell_t = 0.0;
  Envelope outer;
  InnerEnvelope inner;
  Polyline2 outer_line;
  Polyline2 inner_line;
  P2 le{0.0, 0.0};
  double max_full_t = 0.0;
  double z_min = 0.0, z_max = 0.0;
  double x_min = 0.0;

  bool inside_outer(double x, double z) const {
    double zu, zl;
    if (!outer.bounds(x, zu, zl)) return false;
    return z >= zl && z <= zu;
  }

  bool in_void(double x, double z) const {
    double zu, zl;
    if (!inner.bounds(x, zu, zl)) return false;
    return z > zl && z < zu;
  }

  // Signed 2D distance to the outer contour, negative inside.
  double signed_outer_distance(double x, double z) const {
    double d;
    outer_line.nearest({x, z}, &d);
    return inside_outer(x, z) ? -d : d;
  }
};

WingModel::WingModel(const WingParams& params, int profile_samples) : p_(params) {
  if (p_.span <= 0.0) throw GeometryError("span must be positive");
  if (p_.shell_thickness <= 0.0 || p_.spar_width <= 0.0 || p_.rib_thickness <= 0.0)
    throw GeometryError("member thicknesses must be positive");
  if (p_.spar_count < 2 || p_.spar_count > 3) throw GeometryError("spar count must be 2 or 3");
  if (p_.rib_count < 2 || p_.rib_count > 3) throw GeometryError("rib count must be 2 or 3");

  profile_ = naca4_profile(p_.naca_code, p_.chord, profile_samples);

  if (p_.shell_thickness >= profile_.max_full_thickness())
    throw GeometryError("shell thickness " + std::to_string(p_.shell_thickness * 1e3) +
                        " mm exceeds the maximum airfoil thickness " +
                        std::to_string(profile_.max_full_thickness() * 1e3) + " mm");

  spar_stations_ = p_.spar_count == 2 ? std::vector<double>{0.33, 0.65}
                                      : std::vector<double>{0.25, 0.50, 0.75};
  // Ribs uniform over [0.05b, 0.95b] so the root/tip faces stay clean.
  rib_stations_.clear();
  for (int i = 0; i < p_.rib_count; ++i) {
    double f = p_.rib_count == 1 ? 0.5 : 0.05 + 0.9 * i / (p_.rib_count - 1);
    rib_stations_.push_back(f * p_.span);
  }

  auto sec = std::make_shared<Section>();
  sec->chord = p_.chord;
  sec->shell_t = p_.shell_thickness;
  sec->max_full_t = profile_.max_full_thickness();

  // Closed outer loop: upper LE->TE, lower TE->LE.
  std::vector<P2> loop;
  const auto& up = profile_.upper;
  const auto& lo = profile_.lower;
  for (const auto& q : up) loop.push_back({q.x, q.z});
  for (std::size_t i = lo.size() - 1; i >= 1; --i) loop.push_back({lo[i].x, lo[i].z});
  // (lower[0] == upper[0]: loop closes implicitly)

  double xa = kInf, xb = -kInf;
  sec->z_min = kInf;
  sec->z_max = -kInf;
  for (const auto& q : loop) {
    xa = std::min(xa, q.x);
    xb = std::max(xb, q.x);
    sec->z_min = std::min(sec->z_min, q.z);
    sec->z_max = std::max(sec->z_max, q.z);
  }
  sec->x_min = xa;
  sec->le = loop[0];
  for (const auto& q : loop)
    if (q.x < sec->le.x) sec->le = q;

  const int grid_n = 4096;
  sec->outer.init(xa, xb, grid_n);
  for (std::size_t s = 0; s < loop.size(); ++s)
    sec->outer.rasterize(loop[s], loop[(s + 1) % loop.size()], true, true);

  // Inward offsets of the two sides (outward normal of the clockwise loop is
  // direction rotated +90: (-dz, dx)).
  auto offset_curve = [&](const std::vector<Vec3>& side, bool is_upper) {
    std::vector<P2> out;
    out.reserve(side.size());
    for (std::size_t i = 0; i < side.size(); ++i) {
      std::size_t i0 = i > 0 ? i - 1 : i, i1 = i + 1 < side.size() ? i + 1 : i;
      double dx = side[i1].x - side[i0].x, dz = side[i1].z - side[i0].z;
      if (!is_upper) {
        dx = -dx;  // lower curve runs LE->TE too; loop direction there is TE->LE
        dz = -dz;
      }
      double nx = -dz, nz = dx;
      double nn = std::sqrt(nx * nx + nz * nz);
      if (nn == 0.0) continue;
      out.push_back({side[i].x - p_.shell_thickness * nx / nn,
                     side[i].z - p_.shell_thickness * nz / nn});
    }
    return out;
  };
  std::vector<P2> inner_up = offset_curve(up, true);
  std::vector<P2> inner_lo = offset_curve(lo, false);

  sec->inner.init(xa, xb, grid_n);
  for (std::size_t s = 0; s + 1 < inner_up.size(); ++s)
    sec->inner.rasterize(inner_up[s], inner_up[s + 1], true);
  for (std::size_t s = 0; s + 1 < inner_lo.size(); ++s)
    sec->inner.rasterize(inner_lo[s], inner_lo[s + 1], false);

  sec->outer_line.build(loop, true);
  std::vector<P2> inner_pts = inner_up;
  inner_pts.insert(inner_pts.end(), inner_lo.rbegin(), inner_lo.rend());
  sec->inner_line.build(inner_pts, true);

  section_ = std::move(sec);
}

bool WingModel::in_spar_slab(double x) const {
  for (double s : spar_stations_)
    if (std::abs(x - s * p_.chord) <= p_.spar_width / 2) return true;
  return false;
}

bool WingModel::in_rib_slab(double y) const {
  for (double s : rib_stations_)
    if (std::abs(y - s) <= p_.rib_thickness / 2) return true;
  return false;
}

Region WingModel::classify(const Vec3& p) const {
  if (p.y < 0.0 || p.y > p_.span) return Region::exterior;
  if (!section_->inside_outer(p.x, p.z)) return Region::exterior;
  if (in_spar_slab(p.x)) return Region::spar;
  if (in_rib_slab(p.y)) return Region::rib;
  if (section_->in_void(p.x, p.z)) return Region::void_interior;
  return Region::shell;
}

Aabb WingModel::bounds() const {
  return {{section_->x_min, 0.0, section_->z_min}, {p_.chord, p_.span, section_->z_max}};
}

bool WingModel::may_contain_material(const Vec3& p, double radius) const {
  if (p.y < -radius || p.y > p_.span + radius) return false;
  double sd = section_->signed_outer_distance(p.x, p.z);
  if (sd > radius) return false;  // fully outside the section
  if (sd > -radius) return true;  // straddles the outer boundary
  // Deep inside the section: material only near the skin, spars or ribs.
  if (sd > -(p_.shell_thickness + radius) - 1e-12) return true;
  for (double s : spar_stations_)
    if (std::abs(p.x - s * p_.chord) <= p_.spar_width / 2 + radius) return true;
  for (double s : rib_stations_)
    if (std::abs(p.y - s) <= p_.rib_thickness / 2 + radius) return true;
  if (p.y < radius || p.y > p_.span - radius) return true;  // root/tip faces
  // Interior of the void (or a solid pocket the envelope treats as material).
  double zu, zl;
  if (!section_->inner.bounds(p.x, zu, zl)) return true;  // solid here (LE/TE pockets)
  return !(p.z > zl + radius && p.z < zu - radius);
}

double WingModel::local_feature_size(const Vec3& p, double radius) const {
  if (p.y < -radius || p.y > p_.span + radius) return kInf;
  double sd = section_->signed_outer_distance(p.x, p.z);
  if (sd > radius) return kInf;
  double f = kInf;
  if (sd >= -(p_.shell_thickness + radius)) f = std::min(f, p_.shell_thickness);
  for (double s : spar_stations_)
    if (std::abs(p.x - s * p_.chord) <= p_.spar_width / 2 + radius)
      f = std::min(f, p_.spar_width);
  for (double s : rib_stations_)
    if (std::abs(p.y - s) <= p_.rib_thickness / 2 + radius)
      f = std::min(f, p_.rib_thickness);
  if (f == kInf) f = p_.shell_thickness;  // deep solid pockets (LE/TE fill)
  return f;
}

double WingModel::min_feature() const {
  return std::min({p_.shell_thickness, p_.spar_width, p_.rib_thickness});
}

double WingModel::feature_distance(const Vec3& p) const {
  // Critical set: spar-rib intersection lines, the root plane, the LE curve.
  double d = std::abs(p.y);  // root plane
  double dle = std::hypot(p.x - section_->le.x, p.z - section_->le.z);
  d = std::min(d, dle);
  for (double sx : spar_stations_)
    for (double ry : rib_stations_)
      d = std::min(d, std::hypot(p.x - sx * p_.chord, p.y - ry));
  return d;
}

Vec3 WingModel::project_to_boundary(const Vec3& p) const {
  double yc = std::clamp(p.y, 0.0, p_.span);
  double best = kInf;
  Vec3 out = p;
  auto consider = [&](const Vec3& q) {
    double d2 = (q - p).dot(q - p);
    if (d2 < best) {
      best = d2;
      out = q;
    }
  };

  // Outer skin (with span clamp; covers edges and corners).
  {
    double d;
    P2 q = section_->outer_line.nearest({p.x, p.z}, &d);
    consider({q.x, yc, q.z});
  }
  // Root/tip planes where the cross-section point is material.
  if (is_material(classify({p.x, 1e-9, p.z}))) consider({p.x, 0.0, p.z});
  if (is_material(classify({p.x, p_.span - 1e-9, p.z}))) consider({p.x, p_.span, p.z});

  const double eps = 1e-7 * p_.chord;
  // Void-facing inner skin.
  if (!section_->inner_line.empty()) {
    double d;
    P2 q = section_->inner_line.nearest({p.x, p.z}, &d);
    Vec3 cand{q.x, yc, q.z};
    // Valid only where the void actually borders it.
    Vec3 probe{q.x, yc, q.z + (p.z > q.z ? eps : -eps)};
    if (classify(probe) == Region::void_interior ||
        classify({q.x, yc, q.z - (p.z > q.z ? eps : -eps)}) == Region::void_interior)
      consider(cand);
  }
  // Spar and rib side planes facing the void.
  for (double s : spar_stations_) {
    for (int side = -1; side <= 1; side += 2) {
      double px = s * p_.chord + side * p_.spar_width / 2;
      Vec3 cand{px, yc, p.z};
      if (classify({px + side * eps, yc, p.z}) == Region::void_interior) consider(cand);
    }
  }
  for (double s : rib_stations_) {
    for (int side = -1; side <= 1; side += 2) {
      double py = s + side * p_.rib_thickness / 2;
      if (py < 0.0 || py > p_.span) continue;
      Vec3 cand{p.x, py, p.z};
      if (classify({p.x, py + side * eps, p.z}) == Region::void_interior) consider(cand);
    }
  }
  return out;
}

std::vector<std::string> WingModel::location_names() const {
  std::vector<std::string> names = {"wing_root",    "wing_tip",      "left_edge",
                                    "right_edge",   "leading_edge",  "trailing_edge",
                                    "shell_surface"};
  for (int i = 1; i <= p_.spar_count; ++i) names.push_back("spar_" + std::to_string(i));
  for (int i = 1; i <= p_.rib_count; ++i) names.push_back("rib_" + std::to_string(i));
  return names;
}

RegionSelector WingModel::resolve_semantic_location(const std::string& descriptor) const {
  std::string d = canonical_token(descriptor);
  auto sec = section_;
  double span = p_.span, chord = p_.chord;
  Aabb bb = bounds();

  if (d == "wing_root")
    return {d, [](const Vec3& p, double tol) { return std::abs(p.y) <= 0.51 * tol; }};
  if (d == "wing_tip")
    return {d, [span](const Vec3& p, double tol) { return std::abs(p.y - span) <= 0.51 * tol; }};
  if (d == "left_edge")
    return {d, [bb](const Vec3& p, double tol) { return p.x <= bb.lo.x + 1.5 * tol; }};
  if (d == "right_edge")
    return {d, [bb](const Vec3& p, double tol) { return p.x >= bb.hi.x - 1.5 * tol; }};
  if (d == "leading_edge")
    return {d, [sec](const Vec3& p, double tol) {
              return std::hypot(p.x - sec->le.x, p.z - sec->le.z) <= 1.5 * tol;
            }};
  if (d == "trailing_edge")
    return {d, [chord](const Vec3& p, double tol) { return p.x >= chord - 1.5 * tol; }};
  if (d == "shell_surface")
    return {d, [sec](const Vec3& p, double tol) {
              double dd;
              sec->outer_line.nearest({p.x, p.z}, &dd);
              return dd <= 0.05 * tol + 1e-9 * sec->chord;
            }};

  auto indexed = [&](const char* prefix, int count, double center_of_index) -> int {
    (void)count;
    (void)center_of_index;
    std::string pre(prefix);
    if (d.rfind(pre, 0) != 0) return 0;
    int idx = std::atoi(d.substr(pre.size()).c_str());
    return idx;
  };
  if (int i = indexed("spar_", p_.spar_count, 0); i > 0) {
    if (i > p_.spar_count)
      throw UnknownLocationError("spar_" + std::to_string(i) + " out of range (" +
                                 std::to_string(p_.spar_count) + " spars)");
    double cx = spar_stations_[i - 1] * chord, hw = p_.spar_width / 2;
    return {d, [cx, hw](const Vec3& p, double tol) {
              return std::abs(p.x - cx) <= hw + 0.01 * tol + 1e-12;
            }};
  }
  if (int i = indexed("rib_", p_.rib_count, 0); i > 0) {
    if (i > p_.rib_count)
      throw UnknownLocationError("rib_" + std::to_string(i) + " out of range (" +
                                 std::to_string(p_.rib_count) + " ribs)");
    double cy = rib_stations_[i - 1], ht = p_.rib_thickness / 2;
    return {d, [cy, ht](const Vec3& p, double tol) {
              return std::abs(p.y - cy) <= ht + 0.01 * tol + 1e-12;
            }};
  }
  throw UnknownLocationError("unknown semantic location '" + descriptor + "'");
}

void WingModel::export_surface_stl(const std::string& path, bool binary) const {
  // Decimate the outer loop and extrude along the span.
  const auto& up = profile_.upper;
  const auto& lo = profile_.lower;
  std::vector<P2> ring;
  int step = std::max<int>(1, static_cast<int>(up.size()) / 128);
  for (std::size_t i = 0; i < up.size(); i += step) ring.push_back({up[i].x, up[i].z});
  ring.push_back({up.back().x, up.back().z});
  for (std::size_t i = lo.size() - 1;; i -= step) {
    ring.push_back({lo[i].x, lo[i].z});
    if (i < static_cast<std::size_t>(step)) break;
  }

  const int spans = 32;
  std::vector<std::array<Vec3, 3>> tris;
  for (int j = 0; j < spans; ++j) {
    double y0 = p_.span * j / spans, y1 = p_.span * (j + 1) / spans;
    for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
      Vec3 a{ring[i].x, y0, ring[i].z}, b{ring[i + 1].x, y0, ring[i + 1].z};
      Vec3 c{ring[i + 1].x, y1, ring[i + 1].z}, dpt{ring[i].x, y1, ring[i].z};
      tris.push_back({a, b, c});
      tris.push_back({a, c, dpt});
    }
  }

  std::ofstream out(path, std::ios::binary);
  if (!out) throw GeometryError("cannot write surface file '" + path + "'");
  if (binary) {
    char header[80] = {};
    std::snprintf(header, sizeof(header), "wingfea NACA%s surface", p_.naca_code.c_str());
    out.write(header, 80);
    std::uint32_t n = static_cast<std::uint32_t>(tris.size());
    out.write(reinterpret_cast<const char*>(&n), 4);
    for (const auto& t : tris) {
      Vec3 nrm = (t[1] - t[0]).cross(t[2] - t[0]).normalized();
      float buf[12] = {static_cast<float>(nrm.x), static_cast<float>(nrm.y),
                       static_cast<float>(nrm.z)};
      for (int k = 0; k < 3; ++k) {
        buf[3 + 3 * k] = static_cast<float>(t[k].x);
        buf[4 + 3 * k] = static_cast<float>(t[k].y);
        buf[5 + 3 * k] = static_cast<float>(t[k].z);
      }
      out.write(reinterpret_cast<const char*>(buf), 48);
      std::uint16_t attr = 0;
      out.write(reinterpret_cast<const char*>(&attr), 2);
    }
  } else {
    out << "solid wing\n";
    for (const auto& t : tris) {
      Vec3 nrm = (t[1] - t[0]).cross(t[2] - t[0]).normalized();
      out << "facet normal " << nrm.x << " " << nrm.y << " " << nrm.z << "\n outer loop\n";
      for (int k = 0; k < 3; ++k)
        out << "  vertex " << t[k].x << " " << t[k].y << " " << t[k].z << "\n";
      out << " endloop\nendfacet\n";
    }
    out << "endsolid wing\n";
  }
}

// --- BoxSolid ----------------------------------------------------------------

BoxSolid::BoxSolid(Vec3 lo, Vec3 hi) : lo_(lo), hi_(hi) {
  if (!(hi.x > lo.x && hi.y > lo.y && hi.z > lo.z))
    throw GeometryError("box extents must be positive");
}

Region BoxSolid::classify(const Vec3& p) const {
  bool in = p.x >= lo_.x && p.x <= hi_.x && p.y >= lo_.y && p.y <= hi_.y && p.z >= lo_.z &&
            p.z <= hi_.z;
  return in ? Region::shell : Region::exterior;
}

Aabb BoxSolid::bounds() const { return {lo_, hi_}; }

bool BoxSolid::may_contain_material(const Vec3& p, double radius) const {
  return p.x >= lo_.x - radius && p.x <= hi_.x + radius && p.y >= lo_.y - radius &&
         p.y <= hi_.y + radius && p.z >= lo_.z - radius && p.z <= hi_.z + radius;
}

double BoxSolid::local_feature_size(const Vec3& p, double radius) const {
  if (!may_contain_material(p, radius)) return kInf;
  Vec3 e = hi_ - lo_;
  return std::min({e.x, e.y, e.z});
}

double BoxSolid::min_feature() const {
  Vec3 e = hi_ - lo_;
  return std::min({e.x, e.y, e.z});
}

double BoxSolid::feature_distance(const Vec3& p) const {
  // Distance to the box edge skeleton.
  double dx0 = std::abs(p.x - lo_.x), dx1 = std::abs(p.x - hi_.x);
  double dy0 = std::abs(p.y - lo_.y), dy1 = std::abs(p.y - hi_.y);
  double dz0 = std::abs(p.z - lo_.z), dz1 = std::abs(p.z - hi_.z);
  double dx = std::min(dx0, dx1), dy = std::min(dy0, dy1), dz = std::min(dz0, dz1);
  // Edges are where two of the three face distances vanish.
  double exy = std::hypot(dx, dy), eyz = std::hypot(dy, dz), ezx = std::hypot(dz, dx);
  return std::min({exy, eyz, ezx});
}

Vec3 BoxSolid::project_to_boundary(const Vec3& p) const {
  Vec3 q{std::clamp(p.x, lo_.x, hi_.x), std::clamp(p.y, lo_.y, hi_.y),
         std::clamp(p.z, lo_.z, hi_.z)};
  if (classify(p) == Region::exterior) return q;
  // Inside: push out through the nearest face.
  double d[6] = {q.x - lo_.x, hi_.x - q.x, q.y - lo_.y, hi_.y - q.y, q.z - lo_.z, hi_.z - q.z};
  int k = 0;
  for (int i = 1; i < 6; ++i)
    if (d[i] < d[k]) k = i;
  switch (k) {
    case 0: q.x = lo_.x; break;
    case 1: q.x = hi_.x; break;
    case 2: q.y = lo_.y; break;
    case 3: q.y = hi_.y; break;
    case 4: q.z = lo_.z; break;
    default: q.z = hi_.z; break;
  }
  return q;
}

std::vector<std::string> BoxSolid::location_names() const {
  return {"left_edge", "right_edge", "front_face", "back_face", "bottom_face", "top_face"};
}

RegionSelector BoxSolid::resolve_semantic_location(const std::string& descriptor) const {
  std::string d = canonical_token(descriptor);
  Vec3 lo = lo_, hi = hi_;
  if (d == "left_edge")
    return {d, [lo](const Vec3& p, double tol) { return p.x <= lo.x + 0.51 * tol; }};
  if (d == "right_edge")
    return {d, [hi](const Vec3& p, double tol) { return p.x >= hi.x - 0.51 * tol; }};
  if (d == "front_face")
    return {d, [lo](const Vec3& p, double tol) { return p.y <= lo.y + 0.51 * tol; }};
  if (d == "back_face")
    return {d, [hi](const Vec3& p, double tol) { return p.y >= hi.y - 0.51 * tol; }};
  if (d == "bottom_face")
    return {d, [lo](const Vec3& p, double tol) { return p.z <= lo.z + 0.51 * tol; }};
  if (d == "top_face")
    return {d, [hi](const Vec3& p, double tol) { return p.z >= hi.z - 0.51 * tol; }};
  throw UnknownLocationError("unknown semantic location '" + descriptor + "'");
}

}  // namespace wingfea::geom
