#include "wingfea/mesher.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <unordered_map>
#include <unordered_set>

namespace wingfea::mesh {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// ---- level table -------------------------------------------------------------

}  // namespace

double level_h_min(MeshLevel level) {
  switch (level) {
    case MeshLevel::ultra_fine: return 0.2e-3;
    case MeshLevel::fine: return 1.0e-3;
    case MeshLevel::medium: return 2.0e-3;
    default: return 5.0e-3;
  }
}

SizeFieldParams derive_size_params(MeshLevel level) {
  SizeFieldParams p;
  p.h_min = level_h_min(level);
  p.h_max = 6.0 * p.h_min;
  p.d_min = 2.0 * p.h_min;
  p.d_max = 10.0 * p.h_max;
  return p;
}

double size_field(double d, const SizeFieldParams& p) {
  if (d < p.d_min) return p.h_min;
  if (d > p.d_max) return p.h_max;
  return p.h_min + (p.h_max - p.h_min) / (p.d_max - p.d_min) * (d - p.d_min);
}

MeshLevel choose_level(const geom::SolidModel& model, MeshLevel requested) {
  // Features thinner than 0.5mm need the ultra-fine table entry to keep two
  // elements through the thickness.
  if (model.min_feature() < 0.5e-3) return MeshLevel::ultra_fine;
  return requested;
}

// ---- lattice helpers ----------------------------------------------------------

namespace {

struct CellId {
  int level;
  int i, j, k;
};

inline std::uint64_t pack_cell(int level, int i, int j, int k) {
  return (static_cast<std::uint64_t>(level) << 60) | (static_cast<std::uint64_t>(i) << 40) |
         (static_cast<std::uint64_t>(j) << 20) | static_cast<std::uint64_t>(k);
}

inline std::uint64_t pack_coord(std::int64_t x, std::int64_t y, std::int64_t z) {
  return (static_cast<std::uint64_t>(x) << 42) | (static_cast<std::uint64_t>(y) << 21) |
         static_cast<std::uint64_t>(z);
}

struct ICoord {
  std::int64_t x, y, z;
  std::uint64_t key() const { return pack_coord(x, y, z); }
  bool operator<(const ICoord& o) const {
    if (x != o.x) return x < o.x;
    if (y != o.y) return y < o.y;
    return z < o.z;
  }
  bool operator==(const ICoord& o) const { return x == o.x && y == o.y && z == o.z; }
};

struct Lattice {
  Vec3 origin;
  double unit = 0.0;  // length of one integer step

  Vec3 at(const ICoord& c) const {
    return {origin.x + c.x * unit, origin.y + c.y * unit, origin.z + c.z * unit};
  }
};

class Builder {
 public:
  Builder(const geom::SolidModel& model, const SizeFieldParams& field,
          const std::vector<geom::RegionSelector>& refine_zones, const MesherOptions& opts,
          double cap_factor)
      : model_(model), field_(field), zones_(refine_zones), opts_(opts), cap_(cap_factor) {}

  enum class Result { ok, empty, fragmented };

  Result build(Mesh& out);

 private:
  struct Leaf {
    CellId id;
  };

  void refine(const CellId& cell);
  double cell_size(int level) const { return root_size_ / (1 << level); }
  Vec3 cell_center(const CellId& c) const {
    double s = cell_size(c.level);
    return {root_origin_.x + (c.i + 0.5) * s, root_origin_.y + (c.j + 0.5) * s,
            root_origin_.z + (c.k + 0.5) * s};
  }

  double target_size(const Vec3& center, double half_diag) const {
    double h = size_field(model_.feature_distance(center), field_);
    for (const auto& z : zones_)
      if (z.contains(center, half_diag)) h = field_.h_min;
    double cap = cap_ * model_.local_feature_size(center, half_diag);
    return std::min(h, cap);
  }

  void balance();
  int node_id(const ICoord& c);
  bool has_node(const ICoord& c) const;
  void emit_cell(const CellId& c, std::vector<std::array<ICoord, 4>>& tets);
  void triangulate_piece(const std::array<ICoord, 4>& quad,
                         std::vector<std::array<ICoord, 3>>& tris);
  bool face_is_split(const CellId& c, int face) const;

  const geom::SolidModel& model_;
  SizeFieldParams field_;
  const std::vector<geom::RegionSelector>& zones_;
  MesherOptions opts_;
  double cap_;

  Vec3 root_origin_;
  double root_size_ = 0.0;
  int max_level_ = 0;

  std::unordered_map<std::uint64_t, CellId> leaves_;
  std::unordered_map<std::uint64_t, ICoord> node_coords_;  // registry, key -> coord
  Lattice lattice_;
};

Builder::Result Builder::build(Mesh& out) {
  Aabb bb = model_.bounds();
  double ext = bb.max_extent();
  // Root side: power-of-two millimetres, so level sizes land on 2/1/0.5mm.
  double mm = std::ceil(std::log2(std::max(ext * 1e3 * 1.05, 1.0)));
  root_size_ = std::pow(2.0, mm) * 1e-3;
  Vec3 c = bb.center();
  root_origin_ = {c.x - root_size_ / 2, c.y - root_size_ / 2, c.z - root_size_ / 2};

  leaves_.clear();
  refine({0, 0, 0, 0});
  if (leaves_.empty()) return Result::empty;
  balance();

  max_level_ = 0;
  for (const auto& [key, cell] : leaves_) max_level_ = std::max(max_level_, cell.level);
  lattice_.unit = root_size_ / (1 << (max_level_ + 1));
  lattice_.origin = root_origin_;

  // Deterministic traversal order.
  std::vector<CellId> order;
  order.reserve(leaves_.size());
  for (const auto& [key, cell] : leaves_) order.push_back(cell);
  std::sort(order.begin(), order.end(), [](const CellId& a, const CellId& b) {
    if (a.level != b.level) return a.level < b.level;
    if (a.i != b.i) return a.i < b.i;
    if (a.j != b.j) return a.j < b.j;
    return a.k < b.k;
  });

  // Corner registry first: face/edge hanging entities are detected by lookup.
  node_coords_.clear();
  for (const auto& cell : order) {
    std::int64_t s = 1ll << (max_level_ + 1 - cell.level);
    ICoord o{cell.i * s, cell.j * s, cell.k * s};
    for (int dx = 0; dx <= 1; ++dx)
      for (int dy = 0; dy <= 1; ++dy)
        for (int dz = 0; dz <= 1; ++dz) {
          ICoord cc{o.x + dx * s, o.y + dy * s, o.z + dz * s};
          node_coords_.emplace(cc.key(), cc);
        }
  }
  // Split faces contribute their centers and edge midpoints.
  for (const auto& cell : order) {
    for (int f = 0; f < 6; ++f) {
      if (!face_is_split(cell, f)) continue;
      std::int64_t s = 1ll << (max_level_ + 1 - cell.level);
      ICoord o{cell.i * s, cell.j * s, cell.k * s};
      int axis = f / 2, side = f % 2;
      ICoord base = o;
      if (axis == 0) base.x += side * s;
      if (axis == 1) base.y += side * s;
      if (axis == 2) base.z += side * s;
      int ua = axis == 0 ? 1 : 0, va = axis == 2 ? 1 : 2;
      auto add = [&](std::int64_t du, std::int64_t dv) {
        ICoord p = base;
        (ua == 0 ? p.x : (ua == 1 ? p.y : p.z)) += du;
        (va == 0 ? p.x : (va == 1 ? p.y : p.z)) += dv;
        node_coords_.emplace(p.key(), p);
      };
      add(s / 2, s / 2);
      add(s / 2, 0);
      add(s / 2, s);
      add(0, s / 2);
      add(s, s / 2);
    }
  }

  // Tetrahedra in lattice coordinates.
  std::vector<std::array<ICoord, 4>> raw;
  raw.reserve(order.size() * 8);
  for (const auto& cell : order) emit_cell(cell, raw);
  if (raw.empty()) return Result::empty;

  // Final node numbering: sorted lattice coords (construction-order free).
  std::vector<ICoord> coords;
  coords.reserve(node_coords_.size());
  for (const auto& [k, c] : node_coords_) coords.push_back(c);
  std::sort(coords.begin(), coords.end());
  std::unordered_map<std::uint64_t, int> ids;
  ids.reserve(coords.size());
  for (std::size_t i = 0; i < coords.size(); ++i) ids[coords[i].key()] = static_cast<int>(i);

  std::vector<Vec3> nodes(coords.size());
  for (std::size_t i = 0; i < coords.size(); ++i) nodes[i] = lattice_.at(coords[i]);

  // Keep rule: a tetrahedron stays when its centroid or any vertex classifies
  // as material; vertex-kept fringe tets get pulled onto the surface by the
  // snapping pass and recover staircase corners.
  std::vector<std::array<int, 4>> tets;
  std::vector<double> tet_size;
  tets.reserve(raw.size());
  for (auto& t : raw) {
    Vec3 p[4];
    int id[4];
    for (int v = 0; v < 4; ++v) {
      id[v] = ids.at(t[v].key());
      p[v] = nodes[id[v]];
    }
    Vec3 centroid = (p[0] + p[1] + p[2] + p[3]) * 0.25;
    bool keep = geom::is_material(model_.classify(centroid));
    for (int v = 0; v < 4 && !keep; ++v) keep = geom::is_material(model_.classify(p[v]));
    if (!keep) continue;
    // Positive orientation.
    if (tet_volume(p[0], p[1], p[2], p[3]) < 0.0) std::swap(id[2], id[3]);
    tets.push_back({id[0], id[1], id[2], id[3]});
    // Bounding-box extent stands in for the originating lattice size; it feeds
    // snap bands and node-set tolerances.
    Vec3 lo = p[0], hi = p[0];
    for (int v = 1; v < 4; ++v) {
      lo = {std::min(lo.x, p[v].x), std::min(lo.y, p[v].y), std::min(lo.z, p[v].z)};
      hi = {std::max(hi.x, p[v].x), std::max(hi.y, p[v].y), std::max(hi.z, p[v].z)};
    }
    tet_size.push_back(std::max({hi.x - lo.x, hi.y - lo.y, hi.z - lo.z}));
  }
  if (tets.empty()) return Result::empty;

  // Largest connected component (orphan droplets are meshing noise).
  {
    std::vector<int> parent(nodes.size());
    for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = static_cast<int>(i);
    std::function<int(int)> find = [&](int a) {
      while (parent[a] != a) a = parent[a] = parent[parent[a]];
      return a;
    };
    for (const auto& t : tets)
      for (int v = 1; v < 4; ++v) {
        int a = find(t[0]), b = find(t[v]);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
      }
    std::unordered_map<int, double> comp_vol;
    for (const auto& t : tets)
      comp_vol[find(t[0])] +=
          tet_volume(nodes[t[0]], nodes[t[1]], nodes[t[2]], nodes[t[3]]);
    int best = -1;
    double best_vol = -1.0, total = 0.0;
    for (auto& [root, vol] : comp_vol) {
      total += vol;
      if (vol > best_vol || (vol == best_vol && root < best)) {
        best_vol = vol;
        best = root;
      }
    }
    if (comp_vol.size() > 1) {
      if (total - best_vol > 0.005 * total) return Result::fragmented;  // retry finer
      std::vector<std::array<int, 4>> kept;
      std::vector<double> kept_size;
      for (std::size_t t = 0; t < tets.size(); ++t)
        if (find(tets[t][0]) == best) {
          kept.push_back(tets[t]);
          kept_size.push_back(tet_size[t]);
        }
      tets.swap(kept);
      tet_size.swap(kept_size);
    }
  }

  // Node -> local size and incidence.
  std::vector<double> node_h(nodes.size(), kInf);
  std::vector<std::vector<int>> incident(nodes.size());
  for (std::size_t t = 0; t < tets.size(); ++t)
    for (int v = 0; v < 4; ++v) {
      node_h[tets[t][v]] = std::min(node_h[tets[t][v]], tet_size[t]);
      incident[tets[t][v]].push_back(static_cast<int>(t));
    }

  // Boundary nodes: nodes of facets that appear exactly once.
  std::unordered_map<std::uint64_t, int> facet_count;
  facet_count.reserve(tets.size() * 4);
  auto facet_key = [](int a, int b, int c) {
    int v[3] = {a, b, c};
    std::sort(v, v + 3);
    std::uint64_t h = 0xcbf29ce484222325ull;
    h = fnv1a64(v, sizeof(v), h);
    return h;
  };
  static const int kFace[4][3] = {{1, 2, 3}, {0, 3, 2}, {0, 1, 3}, {0, 2, 1}};
  for (const auto& t : tets)
    for (const auto& f : kFace) facet_count[facet_key(t[f[0]], t[f[1]], t[f[2]])]++;
  std::vector<char> on_boundary(nodes.size(), 0);
  for (const auto& t : tets)
    for (const auto& f : kFace)
      if (facet_count[facet_key(t[f[0]], t[f[1]], t[f[2]])] == 1)
        for (int v = 0; v < 3; ++v) on_boundary[t[f[v]]] = 1;

  // Snap boundary nodes to the analytic boundary. Non-material nodes always
  // snap; material nodes snap within the band. Inverted or collapsed tets are
  // repaired by reverting their snapped vertices.
  std::vector<Vec3> original = nodes;
  std::vector<char> snapped(nodes.size(), 0);
  for (std::size_t n = 0; n < nodes.size(); ++n) {
    if (!on_boundary[n] || incident[n].empty()) continue;
    bool material = geom::is_material(model_.classify(nodes[n]));
    Vec3 q = model_.project_to_boundary(nodes[n]);
    double d = (q - nodes[n]).norm();
    double band = material ? opts_.snap_band * node_h[n] : 2.0 * node_h[n];
    if (d <= band) {
      nodes[n] = q;
      snapped[n] = 1;
    }
  }
  auto tet_vol_of = [&](std::size_t t) {
    const auto& e = tets[t];
    return tet_volume(nodes[e[0]], nodes[e[1]], nodes[e[2]], nodes[e[3]]);
  };
  for (int round = 0; round < 4; ++round) {
    bool changed = false;
    for (std::size_t t = 0; t < tets.size(); ++t) {
      double floor_vol = 1e-4 * tet_size[t] * tet_size[t] * tet_size[t];
      if (tet_vol_of(t) > floor_vol) continue;
      for (int v = 0; v < 4; ++v) {
        int n = tets[t][v];
        if (snapped[n] && geom::is_material(model_.classify(original[n]))) {
          nodes[n] = original[n];  // prefer reverting interior-origin snaps
          snapped[n] = 0;
          changed = true;
        }
      }
      if (tet_vol_of(t) <= floor_vol) {
        for (int v = 0; v < 4; ++v) {
          int n = tets[t][v];
          if (snapped[n]) {
            nodes[n] = original[n];
            snapped[n] = 0;
            changed = true;
          }
        }
      }
    }
    if (!changed) break;
  }

  // Drop collapsed or no-longer-material tets, then compact nodes.
  std::vector<std::array<int, 4>> final_tets;
  std::vector<geom::Region> labels;
  std::vector<double> final_size;
  for (std::size_t t = 0; t < tets.size(); ++t) {
    const auto& e = tets[t];
    double v = tet_vol_of(t);
    if (v <= 1e-7 * tet_size[t] * tet_size[t] * tet_size[t]) continue;
    Vec3 centroid = (nodes[e[0]] + nodes[e[1]] + nodes[e[2]] + nodes[e[3]]) * 0.25;
    geom::Region r = model_.classify(centroid);
    if (!geom::is_material(r)) continue;
    final_tets.push_back(e);
    labels.push_back(r);
    final_size.push_back(tet_size[t]);
  }
  if (final_tets.empty()) return Result::empty;

  std::vector<int> remap(nodes.size(), -1);
  int next = 0;
  for (const auto& t : final_tets)
    for (int v = 0; v < 4; ++v)
      if (remap[t[v]] < 0) remap[t[v]] = 1;
  for (std::size_t n = 0; n < nodes.size(); ++n)
    if (remap[n] > 0) remap[n] = next++;
  out.nodes.assign(next, Vec3{});
  out.node_size.assign(next, 0.0);
  for (std::size_t n = 0; n < nodes.size(); ++n)
    if (remap[n] >= 0) {
      out.nodes[remap[n]] = nodes[n];
      out.node_size[remap[n]] = node_h[n];
    }
  out.tets.clear();
  out.tets.reserve(final_tets.size());
  for (auto& t : final_tets)
    out.tets.push_back({remap[t[0]], remap[t[1]], remap[t[2]], remap[t[3]]});
  out.labels = std::move(labels);

  // Auto node sets for every supported semantic location.
  out.node_sets.clear();
  for (const auto& name : model_.location_names()) {
    geom::RegionSelector sel = model_.resolve_semantic_location(name);
    std::vector<int> set;
    for (int n = 0; n < next; ++n)
      if (sel.contains(out.nodes[n], out.node_size[n])) set.push_back(n);
    out.node_sets[sel.descriptor] = std::move(set);
  }
  out.element_sets.clear();
  for (std::size_t t = 0; t < out.tets.size(); ++t)
    out.element_sets[geom::region_name(out.labels[t])].push_back(static_cast<int>(t));

  return Result::ok;
}

void Builder::refine(const CellId& cell) {
  double s = cell_size(cell.level);
  Vec3 center = cell_center(cell);
  double half_diag = s * 0.8660254037844386 + 1e-12;
  if (!model_.may_contain_material(center, half_diag)) return;
  double target = target_size(center, half_diag);
  if (s > target * (1.0 + 1e-12) && cell.level < opts_.max_depth &&
      leaves_.size() < opts_.max_cells) {
    for (int d = 0; d < 8; ++d)
      refine({cell.level + 1, cell.i * 2 + (d & 1), cell.j * 2 + ((d >> 1) & 1),
              cell.k * 2 + ((d >> 2) & 1)});
    return;
  }
  leaves_.emplace(pack_cell(cell.level, cell.i, cell.j, cell.k), cell);
}

void Builder::balance() {
  // Strong 2:1 balance: any two leaves sharing a face, edge or corner differ
  // by at most one level. Coarse offenders are split; children keep only the
  // material-possible subset.
  bool changed = true;
  while (changed) {
    changed = false;
    std::vector<CellId> snapshot;
    snapshot.reserve(leaves_.size());
    for (const auto& [k, c] : leaves_) snapshot.push_back(c);
    for (const auto& cell : snapshot) {
      if (!leaves_.count(pack_cell(cell.level, cell.i, cell.j, cell.k))) continue;
      for (int dx = -1; dx <= 1; ++dx)
        for (int dy = -1; dy <= 1; ++dy)
          for (int dz = -1; dz <= 1; ++dz) {
            if (!dx && !dy && !dz) continue;
            int ni = cell.i + dx, nj = cell.j + dy, nk = cell.k + dz;
            int side = 1 << cell.level;
            if (ni < 0 || nj < 0 || nk < 0 || ni >= side || nj >= side || nk >= side) continue;
            // Find the leaf covering the neighbor; split it if 2+ levels coarser.
            for (int lv = cell.level - 2; lv >= 0; --lv) {
              int sh = cell.level - lv;
              std::uint64_t key = pack_cell(lv, ni >> sh, nj >> sh, nk >> sh);
              auto it = leaves_.find(key);
              if (it == leaves_.end()) continue;
              CellId coarse = it->second;
              leaves_.erase(it);
              for (int d = 0; d < 8; ++d) {
                CellId ch{coarse.level + 1, coarse.i * 2 + (d & 1), coarse.j * 2 + ((d >> 1) & 1),
                          coarse.k * 2 + ((d >> 2) & 1)};
                double cs = cell_size(ch.level);
                if (model_.may_contain_material(cell_center(ch), cs * 0.8660254 + 1e-12))
                  leaves_.emplace(pack_cell(ch.level, ch.i, ch.j, ch.k), ch);
              }
              changed = true;
              break;
            }
          }
    }
  }
}

bool Builder::face_is_split(const CellId& c, int face) const {
  int axis = face / 2, side = face % 2;
  // The four across-cells one level finer that share this face.
  int ai = c.i, aj = c.j, ak = c.k;
  if (axis == 0) ai += side ? 1 : -1;
  if (axis == 1) aj += side ? 1 : -1;
  if (axis == 2) ak += side ? 1 : -1;
  if (ai < 0 || aj < 0 || ak < 0) return false;
  int fi = ai * 2, fj = aj * 2, fk = ak * 2;
  if (axis == 0 && !side) fi = ai * 2 + 1;
  if (axis == 1 && !side) fj = aj * 2 + 1;
  if (axis == 2 && !side) fk = ak * 2 + 1;
  if (axis == 0) {
    if (!side) fi = ai * 2 + 1; else fi = ai * 2;
    for (int u = 0; u <= 1; ++u)
      for (int v = 0; v <= 1; ++v)
        if (leaves_.count(pack_cell(c.level + 1, fi, fj + u, fk + v))) return true;
    return false;
  }
  if (axis == 1) {
    if (!side) fj = aj * 2 + 1; else fj = aj * 2;
    for (int u = 0; u <= 1; ++u)
      for (int v = 0; v <= 1; ++v)
        if (leaves_.count(pack_cell(c.level + 1, fi + u, fj, fk + v))) return true;
    return false;
  }
  if (!side) fk = ak * 2 + 1; else fk = ak * 2;
  for (int u = 0; u <= 1; ++u)
    for (int v = 0; v <= 1; ++v)
      if (leaves_.count(pack_cell(c.level + 1, fi + u, fj + v, fk))) return true;
  return false;
}

bool Builder::has_node(const ICoord& c) const { return node_coords_.count(c.key()) != 0; }

namespace {

// Deterministic triangulation of a planar lattice quad with optional known
// midpoints: plain quads split along the diagonal from the lexicographic
// minimum (which matches the Freudenthal face diagonal); anything with
// hanging midpoints fans from the quad center.
struct QuadTriangulator {
  const std::function<bool(const ICoord&)>& exists;

  void run(const std::array<ICoord, 4>& corners, std::vector<std::array<ICoord, 3>>& out,
           std::vector<ICoord>* created) const {
    std::array<ICoord, 4> mids;
    bool any_mid = false;
    for (int e = 0; e < 4; ++e) {
      const ICoord& a = corners[e];
      const ICoord& b = corners[(e + 1) % 4];
      mids[e] = {(a.x + b.x) / 2, (a.y + b.y) / 2, (a.z + b.z) / 2};
      if (!exists(mids[e])) mids[e].x = std::numeric_limits<std::int64_t>::min();
      else any_mid = true;
    }
    if (!any_mid) {
      int lex = 0;
      for (int i = 1; i < 4; ++i)
        if (corners[i] < corners[lex]) lex = i;
      out.push_back({corners[lex], corners[(lex + 1) % 4], corners[(lex + 2) % 4]});
      out.push_back({corners[lex], corners[(lex + 2) % 4], corners[(lex + 3) % 4]});
      return;
    }
    ICoord center{(corners[0].x + corners[2].x) / 2, (corners[0].y + corners[2].y) / 2,
                  (corners[0].z + corners[2].z) / 2};
    if (created) created->push_back(center);
    std::vector<ICoord> ring;
    for (int e = 0; e < 4; ++e) {
      ring.push_back(corners[e]);
      if (mids[e].x != std::numeric_limits<std::int64_t>::min()) ring.push_back(mids[e]);
    }
    for (std::size_t i = 0; i < ring.size(); ++i)
      out.push_back({center, ring[i], ring[(i + 1) % ring.size()]});
  }
};

}  // namespace

void Builder::emit_cell(const CellId& c, std::vector<std::array<ICoord, 4>>& tets) {
  std::int64_t s = 1ll << (max_level_ + 1 - c.level);
  ICoord o{c.i * s, c.j * s, c.k * s};
  ICoord center{o.x + s / 2, o.y + s / 2, o.z + s / 2};

  auto corner = [&](int dx, int dy, int dz) {
    return ICoord{o.x + dx * s, o.y + dy * s, o.z + dz * s};
  };

  // Freudenthal eligibility: no split faces, no hanging midpoints on any edge.
  bool plain = true;
  for (int f = 0; f < 6 && plain; ++f) plain = !face_is_split(c, f);
  if (plain) {
    static const int kEdges[12][2][3] = {
        {{0, 0, 0}, {1, 0, 0}}, {{0, 1, 0}, {1, 1, 0}}, {{0, 0, 1}, {1, 0, 1}},
        {{0, 1, 1}, {1, 1, 1}}, {{0, 0, 0}, {0, 1, 0}}, {{1, 0, 0}, {1, 1, 0}},
        {{0, 0, 1}, {0, 1, 1}}, {{1, 0, 1}, {1, 1, 1}}, {{0, 0, 0}, {0, 0, 1}},
        {{1, 0, 0}, {1, 0, 1}}, {{0, 1, 0}, {0, 1, 1}}, {{1, 1, 0}, {1, 1, 1}}};
    for (const auto& e : kEdges) {
      ICoord a = corner(e[0][0], e[0][1], e[0][2]);
      ICoord b = corner(e[1][0], e[1][1], e[1][2]);
      ICoord m{(a.x + b.x) / 2, (a.y + b.y) / 2, (a.z + b.z) / 2};
      if (has_node(m)) {
        plain = false;
        break;
      }
    }
  }

  if (plain) {
    // Kuhn subdivision along the main diagonal; face diagonals run from each
    // face's lexicographic minimum, matching neighboring fan cells.
    static const int kPerm[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                                    {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
    for (const auto& p : kPerm) {
      ICoord v0 = corner(0, 0, 0);
      int step[3] = {0, 0, 0};
      std::array<ICoord, 4> t;
      t[0] = v0;
      for (int k = 0; k < 3; ++k) {
        step[p[k]] = 1;
        t[k + 1] = corner(step[0], step[1], step[2]);
      }
      tets.push_back(t);
    }
    return;
  }

  node_coords_.emplace(center.key(), center);

  std::function<bool(const ICoord&)> exists = [this](const ICoord& ic) { return has_node(ic); };
  QuadTriangulator tri{exists};

  for (int f = 0; f < 6; ++f) {
    int axis = f / 2, side = f % 2;
    // Face frame: base corner plus the two in-plane axes.
    ICoord base = o;
    if (axis == 0) base.x += side * s;
    if (axis == 1) base.y += side * s;
    if (axis == 2) base.z += side * s;
    auto fp = [&](std::int64_t du, std::int64_t dv) {
      ICoord p = base;
      if (axis == 0) {
        p.y += du;
        p.z += dv;
      } else if (axis == 1) {
        p.x += du;
        p.z += dv;
      } else {
        p.x += du;
        p.y += dv;
      }
      return p;
    };

    std::vector<std::array<ICoord, 3>> tris;
    std::vector<ICoord> created;
    if (face_is_split(c, f)) {
      std::int64_t h = s / 2;
      for (int qu = 0; qu < 2; ++qu)
        for (int qv = 0; qv < 2; ++qv) {
          std::array<ICoord, 4> quad = {fp(qu * h, qv * h), fp(qu * h + h, qv * h),
                                        fp(qu * h + h, qv * h + h), fp(qu * h, qv * h + h)};
          tri.run(quad, tris, &created);
        }
    } else {
      std::array<ICoord, 4> quad = {fp(0, 0), fp(s, 0), fp(s, s), fp(0, s)};
      tri.run(quad, tris, &created);
    }
    for (const auto& ic : created) node_coords_.emplace(ic.key(), ic);
    for (const auto& tr : tris) tets.push_back({center, tr[0], tr[1], tr[2]});
  }
}

}  // namespace

namespace {

Mesh generate_with_zones(const geom::SolidModel& model, MeshLevel requested,
                         const std::vector<geom::RegionSelector>& zones,
                         const MesherOptions& opts) {
  MeshLevel eff = choose_level(model, requested);
  SizeFieldParams field = derive_size_params(eff);

  // Retry ladder: if the background grid fragments the material (thin walls at
  // the coarse cap), halve the cap and regenerate.
  bool saw_material = false;
  for (double cap : {opts.cell_per_thickness, opts.cell_per_thickness / 2,
                     opts.cell_per_thickness / 4}) {
    Builder b(model, field, zones, opts, cap);
    Mesh m;
    Builder::Result r = b.build(m);
    if (r == Builder::Result::ok) {
      m.level = eff;
      return m;
    }
    if (r == Builder::Result::fragmented) saw_material = true;
  }
  if (!saw_material) throw EmptyMeshError("model contains no meshable material");
  throw ResolutionError("could not mesh the model at level " +
                        std::string(spec::density_name(eff)) +
                        ": material too thin for the background grid");
}

}  // namespace

Mesh generate_mesh(const geom::SolidModel& model, MeshLevel level, const MesherOptions& opts) {
  return generate_with_zones(model, level, {}, opts);
}

Mesh generate_mesh(const geom::SolidModel& model, const spec::MeshSpec& mesh_spec,
                   const MesherOptions& opts) {
  std::vector<geom::RegionSelector> zones;
  for (const auto& z : mesh_spec.refinement_zones)
    zones.push_back(model.resolve_semantic_location(z));
  return generate_with_zones(model, mesh_spec.density, zones, opts);
}

double Mesh::volume() const {
  double v = 0.0;
  for (const auto& t : tets)
    v += tet_volume(nodes[t[0]], nodes[t[1]], nodes[t[2]], nodes[t[3]]);
  return v;
}

std::uint64_t Mesh::content_hash() const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  h = fnv1a64(nodes.data(), nodes.size() * sizeof(Vec3), h);
  h = fnv1a64(tets.data(), tets.size() * sizeof(tets[0]), h);
  return h;
}

MeshQualityReport validate_mesh(const Mesh& mesh) {
  MeshQualityReport r;
  r.element_count = mesh.tets.size();
  r.node_count = mesh.nodes.size();
  if (mesh.tets.empty()) return r;

  r.min_jacobian = kInf;
  r.max_jacobian = -kInf;
  for (const auto& t : mesh.tets) {
    double j = 6.0 * tet_volume(mesh.nodes[t[0]], mesh.nodes[t[1]], mesh.nodes[t[2]],
                                mesh.nodes[t[3]]);
    r.min_jacobian = std::min(r.min_jacobian, j);
    r.max_jacobian = std::max(r.max_jacobian, j);
    if (j <= 0.0) r.nonpositive_jacobians++;
    r.total_volume += j / 6.0;
  }

  // Connected components over node-sharing adjacency.
  std::vector<int> parent(mesh.nodes.size());
  for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = static_cast<int>(i);
  std::function<int(int)> find = [&](int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  std::vector<char> used(mesh.nodes.size(), 0);
  for (const auto& t : mesh.tets) {
    for (int v = 0; v < 4; ++v) used[t[v]] = 1;
    for (int v = 1; v < 4; ++v) {
      int a = find(t[0]), b = find(t[v]);
      if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
  }
  std::unordered_set<int> roots;
  for (std::size_t n = 0; n < mesh.nodes.size(); ++n)
    if (used[n]) roots.insert(find(static_cast<int>(n)));
  r.connected_components = roots.size();

  // Closure: every facet appears once (boundary) or twice (interior).
  std::map<std::array<int, 3>, int> facets;
  static const int kFace[4][3] = {{1, 2, 3}, {0, 3, 2}, {0, 1, 3}, {0, 2, 1}};
  for (const auto& t : mesh.tets)
    for (const auto& f : kFace) {
      std::array<int, 3> key = {t[f[0]], t[f[1]], t[f[2]]};
      std::sort(key.begin(), key.end());
      facets[key]++;
    }
  r.boundary_closed = true;
  for (const auto& [key, count] : facets)
    if (count > 2) r.boundary_closed = false;

  // Hanging nodes: a mesh node coinciding with the midpoint of an element edge
  // it does not belong to.
  double diag = 0.0;
  {
    Aabb bb{mesh.nodes[0], mesh.nodes[0]};
    for (const auto& p : mesh.nodes) {
      bb.lo = {std::min(bb.lo.x, p.x), std::min(bb.lo.y, p.y), std::min(bb.lo.z, p.z)};
      bb.hi = {std::max(bb.hi.x, p.x), std::max(bb.hi.y, p.y), std::max(bb.hi.z, p.z)};
    }
    diag = (bb.hi - bb.lo).norm();
  }
  double eps = 1e-9 * std::max(diag, 1e-30);
  auto qkey = [&](const Vec3& p) {
    auto q = [&](double v) { return static_cast<std::int64_t>(std::floor(v / eps / 16)); };
    return pack_coord(q(p.x) & 0x1fffff, q(p.y) & 0x1fffff, q(p.z) & 0x1fffff);
  };
  std::unordered_map<std::uint64_t, std::vector<int>> buckets;
  for (std::size_t n = 0; n < mesh.nodes.size(); ++n)
    if (used[n]) buckets[qkey(mesh.nodes[n])].push_back(static_cast<int>(n));
  std::unordered_set<int> hanging;
  static const int kEdge[6][2] = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
  for (const auto& t : mesh.tets)
    for (const auto& e : kEdge) {
      Vec3 mid = (mesh.nodes[t[e[0]]] + mesh.nodes[t[e[1]]]) * 0.5;
      auto it = buckets.find(qkey(mid));
      if (it == buckets.end()) continue;
      for (int n : it->second) {
        if (n == t[0] || n == t[1] || n == t[2] || n == t[3]) continue;
        if ((mesh.nodes[n] - mid).norm() < eps) hanging.insert(n);
      }
    }
  r.hanging_nodes = hanging.size();
  return r;
}

void write_mesh_text(const Mesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw EmptyMeshError("cannot write mesh file '" + path + "'");
  char buf[160];
  out << "# wingfea mesh v1\n# nodes " << mesh.nodes.size() << "\n# elements "
      << mesh.tets.size() << "\n";
  out << "NODES " << mesh.nodes.size() << "\n";
  for (std::size_t i = 0; i < mesh.nodes.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu %.17g %.17g %.17g\n", i + 1, mesh.nodes[i].x,
                  mesh.nodes[i].y, mesh.nodes[i].z);
    out << buf;
  }
  out << "TETS " << mesh.tets.size() << "\n";
  for (std::size_t t = 0; t < mesh.tets.size(); ++t) {
    std::snprintf(buf, sizeof(buf), "%zu %d %d %d %d %s\n", t + 1, mesh.tets[t][0] + 1,
                  mesh.tets[t][1] + 1, mesh.tets[t][2] + 1, mesh.tets[t][3] + 1,
                  geom::region_name(mesh.labels[t]));
    out << buf;
  }
  for (const auto& [name, set] : mesh.node_sets) {
    out << "NSET " << name << " " << set.size() << "\n";
    for (std::size_t i = 0; i < set.size(); ++i)
      out << set[i] + 1 << ((i + 1) % 16 == 0 || i + 1 == set.size() ? "\n" : " ");
  }
}

}  // namespace wingfea::mesh
