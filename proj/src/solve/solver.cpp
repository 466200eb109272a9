#include "wingfea/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace wingfea::solve {

namespace {

// Outward-facing faces of a positively oriented tet.
constexpr int kFace[4][3] = {{1, 2, 3}, {0, 3, 2}, {0, 1, 3}, {0, 2, 1}};

struct Csr {
  std::vector<int> row_ptr;
  std::vector<int> col;
  std::vector<double> val;
  int n = 0;

  void spmv(const std::vector<double>& x, std::vector<double>& y) const {
    for (int r = 0; r < n; ++r) {
      double acc = 0.0;
      for (int k = row_ptr[r]; k < row_ptr[r + 1]; ++k) acc += val[k] * x[col[k]];
      y[r] = acc;
    }
  }
};

struct ElementMatrices {
  double grad[4][3];  // shape-function gradients
  double volume = 0.0;
};

bool element_gradients(const mesh::Mesh& m, const std::array<int, 4>& t, ElementMatrices& em) {
  const Vec3& a = m.nodes[t[0]];
  Vec3 e1 = m.nodes[t[1]] - a, e2 = m.nodes[t[2]] - a, e3 = m.nodes[t[3]] - a;
  double det = e1.dot(e2.cross(e3));
  if (det <= 0.0) return false;
  em.volume = det / 6.0;
  // Rows of the inverse of [e1;e2;e3]^T give the gradients of L1..L3.
  Vec3 g1 = e2.cross(e3) * (1.0 / det);
  Vec3 g2 = e3.cross(e1) * (1.0 / det);
  Vec3 g3 = e1.cross(e2) * (1.0 / det);
  em.grad[1][0] = g1.x; em.grad[1][1] = g1.y; em.grad[1][2] = g1.z;
  em.grad[2][0] = g2.x; em.grad[2][1] = g2.y; em.grad[2][2] = g2.z;
  em.grad[3][0] = g3.x; em.grad[3][1] = g3.y; em.grad[3][2] = g3.z;
  em.grad[0][0] = -g1.x - g2.x - g3.x;
  em.grad[0][1] = -g1.y - g2.y - g3.y;
  em.grad[0][2] = -g1.z - g2.z - g3.z;
  return true;
}

struct Elastic {
  double lambda = 0.0, mu = 0.0;
};

Elastic lame(const kb::MaterialRecord& mat) {
  double e = mat.youngs_modulus, nu = mat.poissons_ratio;
  if (e <= 0.0 || nu <= 0.0 || nu >= 0.5)
    throw SingularSystemError("material constants out of range (E=" + std::to_string(e) +
                              ", nu=" + std::to_string(nu) + ")");
  return {e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu)), e / (2.0 * (1.0 + nu))};
}

// Ke = V * B^T D B for the constant-strain tet, accumulated directly.
void element_stiffness(const ElementMatrices& em, const Elastic& el, double ke[12][12]) {
  double l = el.lambda, mu = el.mu;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      const double* ga = em.grad[a];
      const double* gb = em.grad[b];
      double dot = ga[0] * gb[0] + ga[1] * gb[1] + ga[2] * gb[2];
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
          double v = l * ga[i] * gb[j] + mu * ga[j] * gb[i];
          if (i == j) v += mu * dot;
          ke[3 * a + i][3 * b + j] = em.volume * v;
        }
    }
}

void element_stress(const mesh::Mesh& m, const std::array<int, 4>& t, const Elastic& el,
                    const std::vector<double>& u, std::array<double, 6>& s) {
  ElementMatrices em;
  element_gradients(m, t, em);
  double exx = 0, eyy = 0, ezz = 0, gxy = 0, gyz = 0, gzx = 0;
  for (int a = 0; a < 4; ++a) {
    double ux = u[3 * t[a]], uy = u[3 * t[a] + 1], uz = u[3 * t[a] + 2];
    const double* g = em.grad[a];
    exx += g[0] * ux;
    eyy += g[1] * uy;
    ezz += g[2] * uz;
    gxy += g[1] * ux + g[0] * uy;
    gyz += g[2] * uy + g[1] * uz;
    gzx += g[0] * uz + g[2] * ux;
  }
  double tr = el.lambda * (exx + eyy + ezz);
  s[0] = tr + 2.0 * el.mu * exx;
  s[1] = tr + 2.0 * el.mu * eyy;
  s[2] = tr + 2.0 * el.mu * ezz;
  s[3] = el.mu * gxy;
  s[4] = el.mu * gyz;
  s[5] = el.mu * gzx;
}

// Boundary facets (appear exactly once) with their owner-orientation kept.
std::vector<std::array<int, 3>> boundary_facets(const mesh::Mesh& m) {
  std::map<std::array<int, 3>, std::pair<int, std::array<int, 3>>> count;
  for (const auto& t : m.tets)
    for (const auto& f : kFace) {
      std::array<int, 3> tri = {t[f[0]], t[f[1]], t[f[2]]};
      std::array<int, 3> key = tri;
      std::sort(key.begin(), key.end());
      auto it = count.find(key);
      if (it == count.end()) count[key] = {1, tri};
      else it->second.first++;
    }
  std::vector<std::array<int, 3>> out;
  for (const auto& [key, v] : count)
    if (v.first == 1) out.push_back(v.second);
  return out;
}

double facet_area(const mesh::Mesh& m, const std::array<int, 3>& f, Vec3* normal = nullptr) {
  Vec3 n = (m.nodes[f[1]] - m.nodes[f[0]]).cross(m.nodes[f[2]] - m.nodes[f[0]]);
  double a2 = n.norm();
  if (normal && a2 > 0.0) *normal = n * (1.0 / a2);
  return a2 / 2.0;
}

Vec3 axis_vector(spec::Axis a, int sign) {
  Vec3 v{};
  switch (a) {
    case spec::Axis::X: v.x = sign; break;
    case spec::Axis::Y: v.y = sign; break;
    default: v.z = sign; break;
  }
  return v;
}

}  // namespace

std::vector<LoadStep> standard_load_spectrum() {
  static const char* names[8] = {"cruise_1.0g",  "maneuver_2.5g", "gust_1.8g",
                                 "landing_3.0g", "gag_0.50g",     "gag_1.50g",
                                 "gag_0.75g",    "gag_1.25g"};
  std::vector<LoadStep> steps;
  for (int i = 0; i < 8; ++i) steps.push_back({names[i], kLoadSpectrum[i], i + 1});
  return steps;
}

double von_mises(const std::array<double, 6>& s) {
  double dxy = s[0] - s[1], dyz = s[1] - s[2], dzx = s[2] - s[0];
  return std::sqrt(0.5 * (dxy * dxy + dyz * dyz + dzx * dzx) +
                   3.0 * (s[3] * s[3] + s[4] * s[4] + s[5] * s[5]));
}

double structural_mass(const mesh::Mesh& m, const kb::MaterialRecord& mat) {
  return mat.density * m.volume();
}

double FieldSolution::max_displacement() const {
  double best = 0.0;
  for (std::size_t n = 0; n * 3 + 2 < displacement.size(); ++n) {
    double dx = displacement[3 * n], dy = displacement[3 * n + 1], dz = displacement[3 * n + 2];
    best = std::max(best, std::sqrt(dx * dx + dy * dy + dz * dz));
  }
  return best;
}

double FieldSolution::max_von_mises() const {
  double best = 0.0;
  for (double v : von_mises) best = std::max(best, v);
  return best;
}

LoadCase build_load_case(const mesh::Mesh& m, const kb::MaterialRecord& mat,
                         const std::vector<spec::LoadSpec>& loads,
                         const std::vector<spec::BcSpec>& bcs) {
  LoadCase lc;
  lc.forces.assign(3 * m.nodes.size(), 0.0);
  lc.fixed.assign(3 * m.nodes.size(), 0);

  auto set_of = [&](const std::string& location) -> const std::vector<int>& {
    auto it = m.node_sets.find(canonical_token(location));
    if (it == m.node_sets.end() || it->second.empty())
      throw EmptySetError("semantic location '" + location + "' resolves to an empty node set");
    return it->second;
  };

  std::vector<std::array<int, 3>> bfacets = boundary_facets(m);

  for (const auto& load : loads) {
    if (load.kind == spec::LoadKind::acceleration_factor) {
      Vec3 dir = axis_vector(load.axis, load.sign);
      double accel = load.magnitude * 9.80665;
      for (const auto& t : m.tets) {
        double v = tet_volume(m.nodes[t[0]], m.nodes[t[1]], m.nodes[t[2]], m.nodes[t[3]]);
        double f = mat.density * v * accel / 4.0;
        for (int a = 0; a < 4; ++a) {
          lc.forces[3 * t[a]] += f * dir.x;
          lc.forces[3 * t[a] + 1] += f * dir.y;
          lc.forces[3 * t[a] + 2] += f * dir.z;
        }
      }
      continue;
    }

    const std::vector<int>& nodes = set_of(load.location);
    std::vector<char> in_set(m.nodes.size(), 0);
    for (int n : nodes) in_set[n] = 1;

    if (load.kind == spec::LoadKind::force) {
      // Tributary-area weights over the loaded surface patch; falls back to
      // uniform weights when the set has no boundary facets of its own.
      std::vector<double> w(m.nodes.size(), 0.0);
      double total = 0.0;
      for (const auto& f : bfacets) {
        if (!(in_set[f[0]] && in_set[f[1]] && in_set[f[2]])) continue;
        double a = facet_area(m, f);
        for (int v = 0; v < 3; ++v) w[f[v]] += a / 3.0;
        total += a;
      }
      if (total <= 0.0) {
        for (int n : nodes) w[n] = 1.0;
        total = static_cast<double>(nodes.size());
      }
      Vec3 dir = axis_vector(load.axis, load.sign);
      for (int n : nodes) {
        double f = load.magnitude * w[n] / total;
        lc.forces[3 * n] += f * dir.x;
        lc.forces[3 * n + 1] += f * dir.y;
        lc.forces[3 * n + 2] += f * dir.z;
      }
    } else {  // pressure: positive pushes against the outward normal
      bool any = false;
      for (const auto& f : bfacets) {
        if (!(in_set[f[0]] && in_set[f[1]] && in_set[f[2]])) continue;
        Vec3 n;
        double a = facet_area(m, f, &n);
        any = true;
        for (int v = 0; v < 3; ++v) {
          lc.forces[3 * f[v]] -= load.magnitude * a / 3.0 * n.x;
          lc.forces[3 * f[v] + 1] -= load.magnitude * a / 3.0 * n.y;
          lc.forces[3 * f[v] + 2] -= load.magnitude * a / 3.0 * n.z;
        }
      }
      if (!any)
        throw EmptySetError("pressure location '" + load.location +
                            "' has no boundary facets");
    }
  }

  for (const auto& bc : bcs) {
    const std::vector<int>& nodes = set_of(bc.location);
    for (int n : nodes)
      for (spec::Axis a : bc.constrained_dofs)
        lc.fixed[3 * n + static_cast<int>(a)] = 1;
  }
  return lc;
}

void add_tip_gravity_load(const mesh::Mesh& m, const kb::MaterialRecord& mat, double gain,
                          LoadCase& lc) {
  double total = structural_mass(m, mat) * 9.80665 * gain;
  spec::LoadSpec tip;
  tip.kind = spec::LoadKind::force;
  tip.magnitude = total;
  tip.axis = spec::Axis::Z;
  tip.sign = -1;
  tip.location = "wing_tip";
  LoadCase extra = build_load_case(m, mat, {tip}, {});
  for (std::size_t i = 0; i < lc.forces.size(); ++i) lc.forces[i] += extra.forces[i];
}

FieldSolution assemble_and_solve(const mesh::Mesh& m, const kb::MaterialRecord& mat,
                                 const LoadCase& lc, const SolverOptions& opts) {
  const std::size_t n_nodes = m.nodes.size();
  const int n_dof = static_cast<int>(3 * n_nodes);
  if (lc.forces.size() != static_cast<std::size_t>(n_dof) ||
      lc.fixed.size() != static_cast<std::size_t>(n_dof))
    throw SingularSystemError("load case does not match the mesh");

  int n_fixed = 0;
  for (unsigned char f : lc.fixed) n_fixed += f;
  if (n_fixed < 3) throw SingularSystemError("fewer than 3 constrained DOFs: rigid-body modes");

  Elastic el = lame(mat);

  // Free-DOF numbering.
  std::vector<int> free_id(n_dof, -1);
  int n_free = 0;
  for (int d = 0; d < n_dof; ++d)
    if (!lc.fixed[d]) free_id[d] = n_free++;

  // Node adjacency -> CSR sparsity over free DOFs.
  std::vector<std::vector<int>> adj(n_nodes);
  for (const auto& t : m.tets)
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) adj[t[a]].push_back(t[b]);
  for (auto& v : adj) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }

  Csr k;
  k.n = n_free;
  k.row_ptr.assign(n_free + 1, 0);
  for (std::size_t a = 0; a < n_nodes; ++a)
    for (int i = 0; i < 3; ++i) {
      int row = free_id[3 * a + i];
      if (row < 0) continue;
      int cnt = 0;
      for (int b : adj[a])
        for (int j = 0; j < 3; ++j)
          if (free_id[3 * b + j] >= 0) cnt++;
      k.row_ptr[row + 1] = cnt;
    }
  for (int r = 0; r < n_free; ++r) k.row_ptr[r + 1] += k.row_ptr[r];
  k.col.assign(k.row_ptr[n_free], 0);
  k.val.assign(k.row_ptr[n_free], 0.0);
  {
    std::vector<int> cursor(n_free, 0);
    for (std::size_t a = 0; a < n_nodes; ++a)
      for (int i = 0; i < 3; ++i) {
        int row = free_id[3 * a + i];
        if (row < 0) continue;
        int at = k.row_ptr[row];
        for (int b : adj[a])
          for (int j = 0; j < 3; ++j) {
            int cc = free_id[3 * b + j];
            if (cc >= 0) k.col[at++] = cc;
          }
        // columns are ascending because adj is sorted and free ids are monotone
      }
  }
  auto entry = [&](int row, int col) -> double& {
    int lo = k.row_ptr[row], hi = k.row_ptr[row + 1];
    int* base = k.col.data();
    int* it = std::lower_bound(base + lo, base + hi, col);
    return k.val[it - base];
  };

  // Assembly; fixed DOFs contribute nothing to the reduced RHS (homogeneous).
  double ke[12][12];
  ElementMatrices em;
  for (const auto& t : m.tets) {
    if (!element_gradients(m, t, em))
      throw SingularSystemError("inverted element in the mesh");
    element_stiffness(em, el, ke);
    for (int a = 0; a < 4; ++a)
      for (int i = 0; i < 3; ++i) {
        int row = free_id[3 * t[a] + i];
        if (row < 0) continue;
        for (int b = 0; b < 4; ++b)
          for (int j = 0; j < 3; ++j) {
            int col = free_id[3 * t[b] + j];
            if (col >= 0) entry(row, col) += ke[3 * a + i][3 * b + j];
          }
      }
  }

  std::vector<double> rhs(n_free, 0.0);
  for (int d = 0; d < n_dof; ++d)
    if (free_id[d] >= 0) rhs[free_id[d]] = lc.forces[d];

  FieldSolution sol;
  sol.displacement.assign(n_dof, 0.0);

  double rhs_norm = std::sqrt(std::inner_product(rhs.begin(), rhs.end(), rhs.begin(), 0.0));
  if (rhs_norm == 0.0) {
    sol.converged = true;  // zero load, zero displacement
  } else {
    // Jacobi-preconditioned conjugate gradients.
    std::vector<double> dinv(n_free, 0.0);
    for (int r = 0; r < n_free; ++r) {
      double d = entry(r, r);
      if (d <= 0.0) throw SingularSystemError("non-positive diagonal in the stiffness matrix");
      dinv[r] = 1.0 / d;
    }
    std::vector<double> x(n_free, 0.0), r(rhs), z(n_free), p(n_free), ap(n_free);
    for (int i = 0; i < n_free; ++i) z[i] = dinv[i] * r[i];
    p = z;
    double rz = std::inner_product(r.begin(), r.end(), z.begin(), 0.0);
    double res = 1.0;
    int it = 0;
    for (; it < opts.max_iterations; ++it) {
      k.spmv(p, ap);
      double pap = std::inner_product(p.begin(), p.end(), ap.begin(), 0.0);
      if (pap <= 0.0) throw SingularSystemError("stiffness matrix lost positive-definiteness");
      double alpha = rz / pap;
      for (int i = 0; i < n_free; ++i) x[i] += alpha * p[i];
      for (int i = 0; i < n_free; ++i) r[i] -= alpha * ap[i];
      double rn = std::sqrt(std::inner_product(r.begin(), r.end(), r.begin(), 0.0));
      res = rn / rhs_norm;
      if (res <= opts.tolerance) {
        ++it;
        break;
      }
      for (int i = 0; i < n_free; ++i) z[i] = dinv[i] * r[i];
      double rz_new = std::inner_product(r.begin(), r.end(), z.begin(), 0.0);
      double beta = rz_new / rz;
      rz = rz_new;
      for (int i = 0; i < n_free; ++i) p[i] = z[i] + beta * p[i];
    }
    sol.iterations = it;
    sol.residual = res;
    sol.converged = res <= opts.tolerance;
    if (!sol.converged)
      throw NonConvergenceError("CG stalled at relative residual " + std::to_string(res) +
                                " after " + std::to_string(it) + " iterations");
    for (int d = 0; d < n_dof; ++d)
      if (free_id[d] >= 0) sol.displacement[d] = x[free_id[d]];
  }

  sol.stress.resize(m.tets.size());
  sol.von_mises.resize(m.tets.size());
  for (std::size_t t = 0; t < m.tets.size(); ++t) {
    element_stress(m, m.tets[t], el, sol.displacement, sol.stress[t]);
    sol.von_mises[t] = von_mises(sol.stress[t]);
  }
  return sol;
}

std::vector<double> reaction_forces(const mesh::Mesh& m, const kb::MaterialRecord& mat,
                                    const LoadCase& lc, const FieldSolution& sol) {
  Elastic el = lame(mat);
  std::vector<double> ku(3 * m.nodes.size(), 0.0);
  double ke[12][12];
  ElementMatrices em;
  for (const auto& t : m.tets) {
    element_gradients(m, t, em);
    element_stiffness(em, el, ke);
    for (int a = 0; a < 4; ++a)
      for (int i = 0; i < 3; ++i) {
        double acc = 0.0;
        for (int b = 0; b < 4; ++b)
          for (int j = 0; j < 3; ++j) acc += ke[3 * a + i][3 * b + j] * sol.displacement[3 * t[b] + j];
        ku[3 * t[a] + i] += acc;
      }
  }
  std::vector<double> reactions(ku.size(), 0.0);
  for (std::size_t d = 0; d < ku.size(); ++d)
    if (lc.fixed[d]) reactions[d] = ku[d] - lc.forces[d];
  return reactions;
}

CaseMetrics run_load_spectrum(const mesh::Mesh& m, const kb::MaterialRecord& mat,
                              const LoadCase& baseline, const SolverOptions& opts) {
  FieldSolution base = assemble_and_solve(m, mat, baseline, opts);

  CaseMetrics cm;
  cm.mass_kg = structural_mass(m, mat);
  cm.iterations = base.iterations;
  cm.residual = base.residual;

  double base_vm = base.max_von_mises();
  double base_disp = base.max_displacement();
  cm.per_step_max_vm_pa.clear();
  double overall_vm = 0.0, overall_factor = 0.0;
  for (double f : kLoadSpectrum) {
    cm.per_step_max_vm_pa.push_back(f * base_vm);
    if (f > overall_factor) overall_factor = f;
    overall_vm = std::max(overall_vm, f * base_vm);
  }
  cm.max_vm_stress_pa = overall_vm;
  cm.max_disp_m = overall_factor * base_disp;

  // Linearity audit: one full re-solve at 2.5g must match the scaled baseline.
  LoadCase scaled = baseline;
  for (double& f : scaled.forces) f *= kLoadSpectrum[1];
  FieldSolution check = assemble_and_solve(m, mat, scaled, opts);
  double expect = kLoadSpectrum[1] * base_vm;
  cm.scaling_check_rel_err =
      expect > 0.0 ? std::abs(check.max_von_mises() - expect) / expect : 0.0;

  cm.converged = base.converged && check.converged;
  return cm;
}

CaseMetrics extract_results(const mesh::Mesh& m, const kb::MaterialRecord& mat,
                            const FieldSolution& sol) {
  CaseMetrics cm;
  cm.converged = sol.converged;
  cm.mass_kg = structural_mass(m, mat);
  cm.iterations = sol.iterations;
  cm.residual = sol.residual;
  if (sol.converged) {
    cm.max_vm_stress_pa = sol.max_von_mises();
    cm.max_disp_m = sol.max_displacement();
  }
  return cm;
}

}  // namespace wingfea::solve
