#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "wingfea/geometry.hpp"
#include "wingfea/spec.hpp"

namespace wingfea::mesh {

struct ResolutionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct EmptyMeshError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using MeshLevel = spec::MeshDensity;

struct SizeFieldParams {
  double h_min = 0.0;  // m
  double h_max = 0.0;
  double d_min = 0.0;
  double d_max = 0.0;
};

// Level table: ultra_fine 0.2mm, fine 1.0mm, medium 2.0mm, coarse 5.0mm,
// with h_max = 6*h_min, d_min = 2*h_min, d_max = 10*h_max.
double level_h_min(MeshLevel level);
SizeFieldParams derive_size_params(MeshLevel level);

// Piecewise-linear threshold size function of the feature distance d.
double size_field(double d, const SizeFieldParams& params);

// Auto-upgrade: features thinner than 0.5mm force ultra_fine.
MeshLevel choose_level(const geom::SolidModel& model, MeshLevel requested);

struct Mesh {
  std::vector<Vec3> nodes;
  std::vector<std::array<int, 4>> tets;
  std::vector<geom::Region> labels;            // per element, from its centroid
  std::vector<double> node_size;               // local lattice size per node (m)
  std::map<std::string, std::vector<int>> node_sets;
  std::map<std::string, std::vector<int>> element_sets;  // per region
  MeshLevel level = MeshLevel::medium;

  double volume() const;
  std::uint64_t content_hash() const;  // nodes + connectivity, bit-stable
};

struct MeshQualityReport {
  std::size_t element_count = 0;
  std::size_t node_count = 0;
  double min_jacobian = 0.0;   // signed 6*V
  double max_jacobian = 0.0;
  std::size_t nonpositive_jacobians = 0;
  std::size_t connected_components = 0;
  bool boundary_closed = false;
  std::size_t hanging_nodes = 0;
  double total_volume = 0.0;

  bool valid() const {
    return element_count > 0 && nonpositive_jacobians == 0 &&
           connected_components == 1 && boundary_closed && hanging_nodes == 0;
  }
};

struct MesherOptions {
  double cell_per_thickness = 2.0;  // background cell size cap, in local feature sizes
  double snap_band = 0.45;          // snap inside nodes within this fraction of local h
  int max_depth = 11;
  std::size_t max_cells = 4'000'000;
};

Mesh generate_mesh(const geom::SolidModel& model, MeshLevel level,
                   const MesherOptions& opts = {});

Mesh generate_mesh(const geom::SolidModel& model, const spec::MeshSpec& mesh_spec,
                   const MesherOptions& opts = {});

MeshQualityReport validate_mesh(const Mesh& mesh);

// Neutral text format: header, node table, element table, node sets.
void write_mesh_text(const Mesh& mesh, const std::string& path);

}  // namespace wingfea::mesh
