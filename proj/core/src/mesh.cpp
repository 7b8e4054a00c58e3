#include "isoq/mesh.hpp"

#include "isoq/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>

namespace isoq {

AffineMap SimplicialMesh::affine_map(int elem) const {
  const auto& e = elements[elem];
  AffineMap map;
  map.origin = vertices[e[0]];
  map.A.col(0) = vertices[e[1]] - vertices[e[0]];
  map.A.col(1) = vertices[e[2]] - vertices[e[0]];
  return map;
}

double SimplicialMesh::element_area(int elem) const {
  const auto& e = elements[elem];
  return signed_area(vertices[e[0]], vertices[e[1]], vertices[e[2]]);
}

double SimplicialMesh::element_diameter(int elem) const {
  const auto& e = elements[elem];
  double d = 0.0;
  for (int i = 0; i < 3; ++i)
    d = std::max(d, (vertices[e[i]] - vertices[e[(i + 1) % 3]]).norm());
  return d;
}

double SimplicialMesh::max_diameter() const {
  double d = 0.0;
  for (int e = 0; e < num_elements(); ++e) d = std::max(d, element_diameter(e));
  return d;
}

double SimplicialMesh::min_diameter() const {
  double d = std::numeric_limits<double>::infinity();
  for (int e = 0; e < num_elements(); ++e) d = std::min(d, element_diameter(e));
  return d;
}

void SimplicialMesh::finalize() {
  const int nv = num_vertices();
  const int nt = num_elements();
  if (generation.empty()) generation.assign(nt, 0);

  for (int t = 0; t < nt; ++t) {
    for (int i = 0; i < 3; ++i) {
      const int v = elements[t][i];
      if (v < 0 || v >= nv) throw ContractViolation("mesh: vertex index out of range");
    }
    if (!(element_area(t) > 0.0)) throw ContractViolation("mesh: non-positive element area");
  }

  edges.clear();
  element_edges.assign(nt, {-1, -1, -1});
  std::map<std::pair<int, int>, int> edge_ids;
  std::vector<std::array<int, 2>> edge_elems; // up to two incident elements
  for (int t = 0; t < nt; ++t) {
    for (int le = 0; le < 3; ++le) {
      // local edge le is opposite vertex le
      int a = elements[t][(le + 1) % 3];
      int b = elements[t][(le + 2) % 3];
      if (a > b) std::swap(a, b);
      auto [it, inserted] = edge_ids.try_emplace({a, b}, static_cast<int>(edges.size()));
      if (inserted) {
        edges.push_back({a, b});
        edge_elems.push_back({t, -1});
      } else {
        auto& inc = edge_elems[it->second];
        if (inc[1] != -1) throw ContractViolation("mesh: edge shared by more than two elements");
        inc[1] = t;
      }
      element_edges[t][le] = it->second;
    }
  }

  boundary_edges.clear();
  for (int ge = 0; ge < num_edges(); ++ge) {
    if (edge_elems[ge][1] != -1) continue;
    const int t = edge_elems[ge][0];
    for (int le = 0; le < 3; ++le)
      if (element_edges[t][le] == ge) boundary_edges.emplace_back(t, le);
  }

  vertex_elements.assign(nv, {});
  for (int t = 0; t < nt; ++t)
    for (int i = 0; i < 3; ++i) vertex_elements[elements[t][i]].push_back(t);
}

SimplicialMesh make_rect_mesh(const Vec2& lower, const Vec2& upper, int n) {
  if (n < 1) throw std::invalid_argument("make_rect_mesh: n must be >= 1");
  if (!(lower.x() < upper.x()) || !(lower.y() < upper.y()))
    throw std::invalid_argument("make_rect_mesh: lower must be below upper componentwise");

  SimplicialMesh mesh;
  mesh.domain_lower = lower;
  mesh.domain_upper = upper;
  const double hx = (upper.x() - lower.x()) / n;
  const double hy = (upper.y() - lower.y()) / n;
  mesh.vertices.reserve((n + 1) * (n + 1));
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i)
      mesh.vertices.emplace_back(lower.x() + i * hx, lower.y() + j * hy);

  auto vid = [n](int i, int j) { return j * (n + 1) + i; };
  mesh.elements.reserve(2 * n * n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int a = vid(i, j), b = vid(i + 1, j), c = vid(i + 1, j + 1), d = vid(i, j + 1);
      // diagonal a-c is the refinement edge of both triangles
      mesh.elements.push_back({b, c, a});
      mesh.elements.push_back({d, a, c});
    }
  }
  mesh.generation.assign(mesh.elements.size(), 0);
  mesh.finalize();
  return mesh;
}

namespace {

// Working state for a refine() call.
struct Bisector {
  std::vector<Vec2> vertices;
  std::vector<std::array<int, 3>> elems;
  std::vector<int> gen;
  std::vector<char> alive;
  std::map<std::pair<int, int>, std::array<int, 2>> edge_elems; // edge -> incident alive elements
  std::map<std::pair<int, int>, int> midpoints;

  static std::pair<int, int> key(int a, int b) { return a < b ? std::make_pair(a, b) : std::make_pair(b, a); }

  void link(int t) {
    for (int le = 0; le < 3; ++le) {
      auto k = key(elems[t][(le + 1) % 3], elems[t][(le + 2) % 3]);
      auto [it, inserted] = edge_elems.try_emplace(k, std::array<int, 2>{-1, -1});
      auto& inc = it->second;
      if (inc[0] == t || inc[1] == t) continue;
      if (inc[0] == -1) inc[0] = t;
      else if (inc[1] == -1) inc[1] = t;
      else throw ContractViolation("refine: edge shared by more than two elements");
    }
  }

  void unlink(int t) {
    for (int le = 0; le < 3; ++le) {
      auto k = key(elems[t][(le + 1) % 3], elems[t][(le + 2) % 3]);
      auto it = edge_elems.find(k);
      if (it == edge_elems.end()) continue;
      auto& inc = it->second;
      if (inc[0] == t) inc[0] = -1;
      if (inc[1] == t) inc[1] = -1;
    }
  }

  int neighbor_across(int t, int a, int b) const {
    auto it = edge_elems.find(key(a, b));
    if (it == edge_elems.end()) return -1;
    const auto& inc = it->second;
    if (inc[0] == t) return inc[1];
    if (inc[1] == t) return inc[0];
    return -1;
  }

  int midpoint(int a, int b) {
    auto k = key(a, b);
    auto it = midpoints.find(k);
    if (it != midpoints.end()) return it->second;
    const int m = static_cast<int>(vertices.size());
    vertices.push_back(0.5 * (vertices[k.first] + vertices[k.second]));
    midpoints.emplace(k, m);
    return m;
  }

  // Splits t across its refinement edge (v1,v2) into two children with the
  // midpoint as the new peak.
  void split(int t, int m) {
    const auto v = elems[t];
    unlink(t);
    alive[t] = 0;
    const int g = gen[t] + 1;
    const int c1 = static_cast<int>(elems.size());
    elems.push_back({m, v[2], v[0]});
    gen.push_back(g);
    alive.push_back(1);
    link(c1);
    const int c2 = static_cast<int>(elems.size());
    elems.push_back({m, v[0], v[1]});
    gen.push_back(g);
    alive.push_back(1);
    link(c2);
  }

  // Recursive compatibility bisection: an element is bisected together with
  // its neighbor across the refinement edge; incompatible neighbors are
  // bisected first.
  void bisect(int t, int depth) {
    if (depth > 4096) throw EvaluationError("refine: bisection recursion did not terminate");
    if (!alive[t]) return;
    while (true) {
      const int a = elems[t][1], b = elems[t][2];
      const int n = neighbor_across(t, a, b);
      if (n == -1) break;
      const int na = elems[n][1], nb = elems[n][2];
      if (key(na, nb) == key(a, b)) break;
      bisect(n, depth + 1);
    }
    const int a = elems[t][1], b = elems[t][2];
    const int n = neighbor_across(t, a, b);
    const int m = midpoint(a, b);
    split(t, m);
    if (n != -1) split(n, m);
  }
};

} // namespace

SimplicialMesh refine(const SimplicialMesh& mesh, std::span<const int> marked) {
  for (int t : marked)
    if (t < 0 || t >= mesh.num_elements()) throw ContractViolation("refine: marked element out of range");
  if (marked.empty()) return mesh;

  Bisector w;
  w.vertices = mesh.vertices;
  w.elems = mesh.elements;
  w.gen = mesh.generation;
  w.alive.assign(mesh.elements.size(), 1);
  for (int t = 0; t < mesh.num_elements(); ++t) w.link(t);

  std::vector<int> order(marked.begin(), marked.end());
  std::sort(order.begin(), order.end());
  order.erase(std::unique(order.begin(), order.end()), order.end());
  for (int t : order)
    if (w.alive[t]) w.bisect(t, 0);

  SimplicialMesh out;
  out.domain_lower = mesh.domain_lower;
  out.domain_upper = mesh.domain_upper;
  out.vertices = std::move(w.vertices);
  for (std::size_t t = 0; t < w.elems.size(); ++t) {
    if (!w.alive[t]) continue;
    out.elements.push_back(w.elems[t]);
    out.generation.push_back(w.gen[t]);
  }
  out.finalize();
  return out;
}

SimplicialMesh refine_all(const SimplicialMesh& mesh) {
  std::vector<int> all(mesh.num_elements());
  for (int t = 0; t < mesh.num_elements(); ++t) all[t] = t;
  return refine(mesh, all);
}

bool is_conforming(const SimplicialMesh& mesh) {
  // finalize() already guarantees edge multiplicity <= 2; check that every
  // single-sided edge lies on the rectangular domain boundary.
  std::vector<int> count(mesh.num_edges(), 0);
  for (int t = 0; t < mesh.num_elements(); ++t)
    for (int le = 0; le < 3; ++le) count[mesh.element_edges[t][le]]++;
  const double tol = 1e-12 * (mesh.domain_upper - mesh.domain_lower).norm();
  auto on_boundary = [&](const Vec2& p) {
    return std::abs(p.x() - mesh.domain_lower.x()) < tol || std::abs(p.x() - mesh.domain_upper.x()) < tol ||
           std::abs(p.y() - mesh.domain_lower.y()) < tol || std::abs(p.y() - mesh.domain_upper.y()) < tol;
  };
  for (int ge = 0; ge < mesh.num_edges(); ++ge) {
    if (count[ge] > 2) return false;
    if (count[ge] == 1) {
      const Vec2& a = mesh.vertices[mesh.edges[ge][0]];
      const Vec2& b = mesh.vertices[mesh.edges[ge][1]];
      if (!on_boundary(a) || !on_boundary(b) || !on_boundary(0.5 * (a + b))) return false;
    }
  }
  return true;
}

double min_angle(const SimplicialMesh& mesh) {
  double amin = std::numeric_limits<double>::infinity();
  for (int t = 0; t < mesh.num_elements(); ++t) {
    for (int i = 0; i < 3; ++i) {
      const Vec2 u = mesh.vertex(t, (i + 1) % 3) - mesh.vertex(t, i);
      const Vec2 v = mesh.vertex(t, (i + 2) % 3) - mesh.vertex(t, i);
      amin = std::min(amin, std::acos(std::clamp(u.dot(v) / (u.norm() * v.norm()), -1.0, 1.0)));
    }
  }
  return amin;
}

void write_mesh_txt(const SimplicialMesh& mesh, const std::string& path,
                    const std::vector<Vec2>* vertex_displacement) {
  std::ofstream out(path);
  if (!out) throw EvaluationError("write_mesh_txt: cannot open " + path);
  out.precision(17);
  out << "vertices " << mesh.num_vertices() << "\n";
  for (int v = 0; v < mesh.num_vertices(); ++v)
    out << v << " " << mesh.vertices[v].x() << " " << mesh.vertices[v].y() << "\n";
  out << "elements " << mesh.num_elements() << "\n";
  for (int t = 0; t < mesh.num_elements(); ++t)
    out << t << " " << mesh.elements[t][0] << " " << mesh.elements[t][1] << " " << mesh.elements[t][2] << "\n";
  if (vertex_displacement) {
    out << "displacement " << mesh.num_vertices() << "\n";
    for (int v = 0; v < mesh.num_vertices(); ++v)
      out << v << " " << (*vertex_displacement)[v].x() << " " << (*vertex_displacement)[v].y() << "\n";
  }
}

} // namespace isoq
