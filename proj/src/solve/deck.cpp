#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "wingfea/solver.hpp"

namespace wingfea::solve {

namespace {

// Deck unit system is MPa-mm-tonne (forces stay in N).
constexpr double kLenScale = 1e3;       // m -> mm
constexpr double kStressScale = 1e-6;   // Pa -> MPa
constexpr double kDensityScale = 1e-12; // kg/m^3 -> tonne/mm^3

std::string sci9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.8e", v);
  return buf;
}

// Compact material-constant format with a guaranteed decimal point
// (71700 -> "71700.0").
std::string compact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  std::string s(buf);
  if (s.find('.') == std::string::npos && s.find('e') == std::string::npos &&
      s.find("inf") == std::string::npos && s.find("nan") == std::string::npos)
    s += ".0";
  return s;
}

std::string upper(std::string s) {
  for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

std::string write_inp(const mesh::Mesh& m, const kb::MaterialRecord& mat, const LoadCase& lc,
                      const std::vector<spec::BcSpec>& bcs, const std::vector<LoadStep>& steps,
                      const DeckOptions& opts) {
  std::ostringstream out;
  out << "*HEADING\n" << opts.heading << "\n";

  // Second-order elements are emitted by midside insertion at write time.
  bool quadratic = opts.order == spec::ElementOrder::second_order_tet;
  std::vector<Vec3> extra_nodes;
  std::map<std::pair<int, int>, int> midside;
  auto mid_id = [&](int a, int b) {
    auto key = std::minmax(a, b);
    auto it = midside.find(key);
    if (it != midside.end()) return it->second;
    int id = static_cast<int>(m.nodes.size() + extra_nodes.size());
    extra_nodes.push_back((m.nodes[a] + m.nodes[b]) * 0.5);
    midside[key] = id;
    return id;
  };
  std::vector<std::array<int, 10>> elems(m.tets.size());
  for (std::size_t t = 0; t < m.tets.size(); ++t) {
    const auto& e = m.tets[t];
    elems[t] = {e[0], e[1], e[2], e[3], 0, 0, 0, 0, 0, 0};
    if (quadratic) {
      elems[t][4] = mid_id(e[0], e[1]);
      elems[t][5] = mid_id(e[1], e[2]);
      elems[t][6] = mid_id(e[0], e[2]);
      elems[t][7] = mid_id(e[0], e[3]);
      elems[t][8] = mid_id(e[1], e[3]);
      elems[t][9] = mid_id(e[2], e[3]);
    }
  }

  out << "*NODE\n";
  auto node_line = [&](std::size_t id, const Vec3& p) {
    out << id + 1 << ", " << sci9(p.x * kLenScale) << ", " << sci9(p.y * kLenScale) << ", "
        << sci9(p.z * kLenScale) << "\n";
  };
  for (std::size_t n = 0; n < m.nodes.size(); ++n) node_line(n, m.nodes[n]);
  for (std::size_t n = 0; n < extra_nodes.size(); ++n)
    node_line(m.nodes.size() + n, extra_nodes[n]);

  out << "*ELEMENT, TYPE=" << (quadratic ? "C3D10" : "C3D4") << ", ELSET=EALL\n";
  for (std::size_t t = 0; t < elems.size(); ++t) {
    out << t + 1;
    for (int v = 0; v < (quadratic ? 10 : 4); ++v) out << ", " << elems[t][v] + 1;
    out << "\n";
  }

  for (const auto& [name, ids] : m.element_sets) {
    out << "*ELSET, ELSET=" << upper(name) << "\n";
    for (std::size_t i = 0; i < ids.size(); ++i)
      out << ids[i] + 1 << ((i + 1) % 16 == 0 || i + 1 == ids.size() ? "\n" : ", ");
  }

  for (const auto& [name, ids] : m.node_sets) {
    if (ids.empty()) continue;
    out << "*NSET, NSET=" << upper(name) << "\n";
    for (std::size_t i = 0; i < ids.size(); ++i)
      out << ids[i] + 1 << ((i + 1) % 16 == 0 || i + 1 == ids.size() ? "\n" : ", ");
  }

  std::string mat_name = upper(opts.material_name);
  out << "*MATERIAL, NAME=" << mat_name << "\n*ELASTIC\n"
      << compact(mat.youngs_modulus * kStressScale) << ", " << compact(mat.poissons_ratio)
      << "\n*DENSITY\n"
      << compact(mat.density * kDensityScale) << "\n";
  out << "*SOLID SECTION, ELSET=EALL, MATERIAL=" << mat_name << "\n";

  out << "*BOUNDARY\n";
  for (const auto& bc : bcs) {
    std::array<bool, 3> on{false, false, false};
    for (spec::Axis a : bc.constrained_dofs) on[static_cast<int>(a)] = true;
    std::string set = upper(canonical_token(bc.location));
    // contiguous DOF runs: "SET, first, last"
    for (int d = 0; d < 3;) {
      if (!on[d]) {
        ++d;
        continue;
      }
      int e = d;
      while (e + 1 < 3 && on[e + 1]) ++e;
      out << set << ", " << d + 1 << ", " << e + 1 << "\n";
      d = e + 1;
    }
  }

  for (const auto& step : steps) {
    out << "*STEP\n*STATIC\n*CLOAD\n";
    for (std::size_t n = 0; n < m.nodes.size(); ++n)
      for (int d = 0; d < 3; ++d) {
        double f = lc.forces[3 * n + d] * step.factor;
        if (f != 0.0) out << n + 1 << ", " << d + 1 << ", " << sci9(f) << "\n";
      }
    out << "*NODE FILE\nU\n*EL FILE\nS\n*END STEP\n";
  }
  return out.str();
}

DeckSummary parse_inp(const std::string& deck) {
  DeckSummary s;
  std::istringstream in(deck);
  std::string line;
  enum class Section { none, node, element, nset, other };
  Section sec = Section::none;
  std::string current_set;

  auto keyword_of = [](const std::string& l) {
    std::string u = upper(l);
    return u;
  };

  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.rfind("**", 0) == 0) continue;
    if (line[0] == '*') {
      std::string u = keyword_of(line);
      if (u.rfind("*NODE FILE", 0) == 0 || u.rfind("*EL FILE", 0) == 0) {
        sec = Section::other;
      } else if (u.rfind("*NODE", 0) == 0) {
        sec = Section::node;
      } else if (u.rfind("*ELEMENT", 0) == 0) {
        sec = Section::element;
        auto pos = u.find("TYPE=");
        if (pos != std::string::npos) {
          std::string t = u.substr(pos + 5);
          s.element_type = t.substr(0, t.find_first_of(", \t"));
        }
      } else if (u.rfind("*NSET", 0) == 0) {
        sec = Section::nset;
        auto pos = u.find("NSET=");
        current_set = pos != std::string::npos
                          ? u.substr(pos + 5, u.find_first_of(", \t", pos + 5) - (pos + 5))
                          : "";
        s.nset_sizes[current_set];  // ensure presence even if empty
      } else {
        if (u.rfind("*STEP", 0) == 0) s.step_count++;
        sec = Section::other;
      }
      continue;
    }
    switch (sec) {
      case Section::node: {
        s.node_count++;
        Vec3 p;
        std::sscanf(line.c_str(), "%*d , %lf , %lf , %lf", &p.x, &p.y, &p.z);
        s.nodes.push_back(p);
        break;
      }
      case Section::element:
        s.element_count++;
        break;
      case Section::nset: {
        std::stringstream ls(line);
        std::string tok;
        while (std::getline(ls, tok, ','))
          if (tok.find_first_not_of(" \t") != std::string::npos) s.nset_sizes[current_set]++;
        break;
      }
      default:
        break;
    }
  }
  return s;
}

FrdResult parse_frd(const std::string& frd_text) {
  FrdResult r;
  std::istringstream in(frd_text);
  std::string line;
  enum class Block { none, disp, stress };
  Block block = Block::none;
  std::map<int, Vec3> disp;
  std::map<int, std::array<double, 6>> stress;

  auto field = [&](const std::string& l, int idx) {
    // " -1" + 10-char node id + 12-char floats
    std::size_t pos = 13 + static_cast<std::size_t>(idx) * 12;
    if (pos + 12 > l.size()) return 0.0;
    return std::atof(l.substr(pos, 12).c_str());
  };

  while (std::getline(in, line)) {
    if (line.rfind(" -4", 0) == 0) {
      if (line.find("DISP") != std::string::npos) {
        block = Block::disp;
        disp.clear();  // keep the last step only
      } else if (line.find("STRESS") != std::string::npos) {
        block = Block::stress;
        stress.clear();
      } else {
        block = Block::none;
      }
      continue;
    }
    if (line.rfind(" -3", 0) == 0) {
      block = Block::none;
      continue;
    }
    if (block == Block::none || line.rfind(" -1", 0) != 0) continue;
    int node = std::atoi(line.substr(3, 10).c_str());
    if (block == Block::disp) {
      disp[node] = {field(line, 0), field(line, 1), field(line, 2)};
    } else {
      stress[node] = {field(line, 0), field(line, 1), field(line, 2),
                      field(line, 3), field(line, 4), field(line, 5)};
    }
  }
  for (const auto& [id, d] : disp) {
    r.node_ids.push_back(id);
    r.displacement.push_back(d);
    auto it = stress.find(id);
    r.stress.push_back(it != stress.end() ? it->second : std::array<double, 6>{});
  }
  return r;
}

std::optional<FrdResult> run_calculix(const std::string& ccx_binary,
                                      const std::string& deck_path) {
  if (ccx_binary.empty()) return std::nullopt;
  std::string base = deck_path;
  if (base.size() > 4 && base.substr(base.size() - 4) == ".inp") base.resize(base.size() - 4);
  std::string dir = ".", name = base;
  auto slash = base.find_last_of('/');
  if (slash != std::string::npos) {
    dir = base.substr(0, slash);
    name = base.substr(slash + 1);
  }
  std::string cmd = "cd '" + dir + "' && '" + ccx_binary + "' -i '" + name + "' > ccx.log 2>&1";
  if (std::system(cmd.c_str()) != 0) return std::nullopt;
  std::ifstream frd(base + ".frd");
  if (!frd) return std::nullopt;
  std::ostringstream ss;
  ss << frd.rdbuf();
  return parse_frd(ss.str());
}

}  // namespace wingfea::solve
