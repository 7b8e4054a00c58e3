#pragma once

#include "isoq/geometry.hpp"

#include <array>
#include <span>
#include <string>
#include <vector>

namespace isoq {

/// Conforming 2D triangulation with positively oriented elements.
///
/// Element vertex order carries the bisection state: edge (v1,v2) is the
/// refinement edge (the peak v0 is the newest vertex). Meshes are immutable
/// after construction; refine() returns a new mesh.
struct SimplicialMesh {
  std::vector<Vec2> vertices;
  std::vector<std::array<int, 3>> elements;
  std::vector<int> generation;                      // refinement level per element
  std::vector<std::pair<int, int>> boundary_edges;  // (element, local edge)

  // connectivity, built at construction
  std::vector<std::array<int, 2>> edges;          // unique edges, smaller vertex first
  std::vector<std::array<int, 3>> element_edges;  // global edge id per local edge
  std::vector<std::vector<int>> vertex_elements;  // vertex -> incident elements

  // domain bounding box (rectangular domains only; used by conformity scan)
  Vec2 domain_lower{0, 0};
  Vec2 domain_upper{0, 0};

  int num_vertices() const { return static_cast<int>(vertices.size()); }
  int num_elements() const { return static_cast<int>(elements.size()); }
  int num_edges() const { return static_cast<int>(edges.size()); }

  const Vec2& vertex(int elem, int local) const { return vertices[elements[elem][local]]; }

  AffineMap affine_map(int elem) const;
  double element_area(int elem) const;
  double element_diameter(int elem) const;
  double max_diameter() const;
  double min_diameter() const;

  /// Validates orientation/index invariants and builds the connectivity
  /// tables. Must be called after filling vertices/elements.
  void finalize();
};

/// Structured triangulation of a rectangle: 2*n^2 triangles, (n+1)^2 vertices.
/// Each cell is split along its diagonal; refinement edges are the diagonals.
SimplicialMesh make_rect_mesh(const Vec2& lower, const Vec2& upper, int n);

/// Newest-vertex bisection of all marked elements plus the conformity
/// closure. Children inherit generation+1.
SimplicialMesh refine(const SimplicialMesh& mesh, std::span<const int> marked);

/// One bisection sweep of every element. Two sweeps halve all diameters on
/// structured meshes.
SimplicialMesh refine_all(const SimplicialMesh& mesh);

/// Edge-matching scan: every edge is shared by at most two elements and
/// single-sided edges lie on the (rectangular) domain boundary.
bool is_conforming(const SimplicialMesh& mesh);

double min_angle(const SimplicialMesh& mesh);

/// Plain-text export: vertex block, element block, optional per-vertex
/// displacement block. Format documented in the README.
void write_mesh_txt(const SimplicialMesh& mesh, const std::string& path,
                    const std::vector<Vec2>* vertex_displacement = nullptr);

} // namespace isoq
