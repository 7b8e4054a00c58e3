#pragma once

#include "isoq/geometry.hpp"
#include "isoq/mesh.hpp"

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace isoq {

/// Nodal Lagrange basis of degree k on the reference triangle, uniformly
/// spaced nodes. Local node order: the 3 vertices, then k-1 nodes per edge
/// (edge i opposite vertex i, directed (v1,v2), (v2,v0), (v0,v1)), then the
/// interior lattice in lexicographic order.
///
/// Evaluation is valid at any point of the plane: the basis polynomials are
/// global, which is what the element-wise polynomial extension needs.
namespace lagrange {

int size(int degree);
const std::vector<Vec2>& nodes(int degree);

/// values != nullptr: fills size(degree) basis values.
/// grads  != nullptr: fills size(degree) reference gradients.
void eval(int degree, const Vec2& ref, double* values, Vec2* grads);

} // namespace lagrange

/// Continuous degree-k Lagrange space on a mesh, scalar or 2-vector valued.
/// Vector components are interleaved per scalar dof: coefficient index of
/// component c of scalar dof i is i*components + c.
class FeSpace {
public:
  FeSpace(std::shared_ptr<const SimplicialMesh> mesh, int degree, int components = 1);

  const SimplicialMesh& mesh() const { return *mesh_; }
  const std::shared_ptr<const SimplicialMesh>& mesh_ptr() const { return mesh_; }
  int degree() const { return degree_; }
  int components() const { return components_; }
  int num_scalar_dofs() const { return num_scalar_dofs_; }
  int num_dofs() const { return num_scalar_dofs_ * components_; }
  int local_size() const { return local_size_; }

  /// Global scalar dof ids of an element, in local node order.
  std::span<const int> element_dofs(int elem) const {
    return {element_dofs_.data() + static_cast<std::size_t>(elem) * local_size_,
            static_cast<std::size_t>(local_size_)};
  }

  /// Physical position of a scalar dof's node.
  Vec2 dof_point(int scalar_dof) const;

  /// Scalar dofs whose node lies on the domain boundary.
  std::vector<int> boundary_scalar_dofs() const;

private:
  std::shared_ptr<const SimplicialMesh> mesh_;
  int degree_;
  int components_;
  int local_size_;
  int num_scalar_dofs_;
  std::vector<int> element_dofs_;
  std::vector<Vec2> dof_points_;
};

/// Coefficient vector over an FeSpace.
struct FeFunction {
  std::shared_ptr<const FeSpace> space;
  Eigen::VectorXd coeffs;

  explicit FeFunction(std::shared_ptr<const FeSpace> s)
      : space(std::move(s)), coeffs(Eigen::VectorXd::Zero(space->num_dofs())) {}

  // scalar evaluation
  double value(int elem, const Vec2& ref) const;
  Vec2 gradient(int elem, const Vec2& ref) const;      // physical, undeformed mesh
  Vec2 ref_gradient(int elem, const Vec2& ref) const;

  // 2-vector evaluation (components == 2)
  Vec2 vec_value(int elem, const Vec2& ref) const;
  Mat2 vec_ref_jacobian(int elem, const Vec2& ref) const; // (i,j) = d v_i / d ref_j

  double max_abs() const { return coeffs.size() ? coeffs.cwiseAbs().maxCoeff() : 0.0; }
};

/// Nodal interpolation of an analytic function.
FeFunction interpolate(std::shared_ptr<const FeSpace> space, const std::function<double(const Vec2&)>& f);

/// Piecewise-linear nodal interpolant on the same mesh (matches f at all
/// mesh vertices).
FeFunction interpolate_p1(const FeFunction& f);

/// Coefficient dump, one "index,value" row per line.
void dump_coeffs_csv(const FeFunction& f, const std::string& path);

} // namespace isoq
