#pragma once

#include "isoq/levelset.hpp"

#include <vector>

namespace isoq {

/// Quasi-normal search directions: a continuous piecewise linear vector field
/// approximating grad(phi) near the interface, built by the Oswald projection
/// over the cut elements.
struct SearchField {
  FeFunction field; // P1, 2 components

  Vec2 at(int elem, const Vec2& ref) const { return field.vec_value(elem, ref); }
};

SearchField build_search_field(const FeFunction& phi, const LevelSetView& view);

/// Mesh transformation Psi_h = id + d_h with d_h in the continuous degree-k
/// vector space, zero outside the one-ring neighborhood of the cut elements
/// and zero at every mesh vertex.
struct Deformation {
  FeFunction displacement;       // degree k, 2 components
  std::vector<char> active;      // element may carry nonzero displacement
  std::vector<int> active_set;   // ascending element ids
  long limited_count = 0;        // quadrature samples clipped by the barrier
  long failed_count = 0;         // samples where the Newton fallback fired
  double max_kappa = 1.0;        // sampled max condition number of grad(ref Psi)
  std::vector<long> newton_histogram; // index = iteration count of a sample

  Vec2 value(int elem, const Vec2& ref) const {
    if (!active[elem]) return Vec2::Zero();
    return displacement.vec_value(elem, ref);
  }

  /// Reference Jacobian of the displacement, (i,j) = d d_i / d ref_j.
  Mat2 ref_jacobian(int elem, const Vec2& ref) const {
    if (!active[elem]) return Mat2::Zero();
    return displacement.vec_ref_jacobian(elem, ref);
  }

  /// Mapped physical point Psi_h(Phi(ref)).
  Vec2 map_point(int elem, const Vec2& ref) const {
    return displacement.space->mesh().affine_map(elem).apply(ref) + value(elem, ref);
  }

  /// F = D Psi_h = I + grad_x d_h at the point (physical coordinates of the
  /// undeformed mesh).
  Mat2 physical_jacobian(int elem, const Vec2& ref) const {
    if (!active[elem]) return Mat2::Identity();
    const Mat2 A = displacement.space->mesh().affine_map(elem).A;
    return Mat2::Identity() + displacement.vec_ref_jacobian(elem, ref) * A.inverse();
  }

  double median_newton_iterations() const;
};

/// Zero displacement on the given space (tests and fallbacks).
Deformation identity_deformation(std::shared_ptr<const FeSpace> vec_space);

/// Pointwise displaced sample of the element-local transformation.
struct PointDisplacement {
  Vec2 displaced = Vec2::Zero();
  bool limited = false;   // barrier clipped the step
  bool failed = false;    // Newton fallback (zero displacement) used
  int newton_iterations = 0;
};

/// Solves I_h phi(x) = E_T(phi)(x + r s(x)) for r by a damped Newton
/// iteration on the element polynomial extension E_T(phi), then applies the
/// barrier: displacements longer than gamma * h_T are rescaled to that
/// length, direction preserved. x is given by its reference coordinates in
/// the cut element.
PointDisplacement psi_T_pointwise(const LevelSetView& view, const SearchField& s, int elem, const Vec2& ref,
                                  double gamma);

/// Newton parameters of the line search (shared with tests).
constexpr double kNewtonRelTol = 1e-14;
constexpr int kNewtonMaxIter = 100;
constexpr double kNewtonMinSlope = 1e-13;

/// Builds the deformation: per cut element, the limited displacement sampled
/// at quadrature points, an element-local L2 fit with vertex dofs pinned to
/// zero, scatter-add with dof counters, then dof-wise averaging. Elements
/// outside the one-ring of the cut set keep exact zeros.
Deformation build_deformation(const LevelSetView& view, std::shared_ptr<const FeSpace> vec_space,
                              double gamma, int quad_order = -1, int threads = 1);

struct RegularityReport {
  double max_kappa_ref = 1.0;   // kappa(grad ref-Psi), worst sample
  int elem_ref = -1;
  double max_kappa_theta = 1.0; // kappa(grad Theta), worst sample
  int elem_theta = -1;
  double min_det_theta = 1.0;   // min det(grad Theta)/det(A) over samples (sign check)
  bool singular = false;
};

/// Samples kappa(grad ref-Psi) and kappa(grad Theta) at quadrature nodes of
/// the active elements. Singular Jacobians report kappa = inf instead of
/// throwing.
RegularityReport regularity_report(const Deformation& d, int quad_order = -1);

/// Isoparametric evaluation of an FE function on the deformed mesh: value by
/// reference pullback, gradient with respect to the deformed coordinates.
/// Throws SingularDeformation when det(grad Theta) <= 0 at the point.
double eval_deformed_value(const FeFunction& f, const Deformation& d, int elem, const Vec2& ref);
Vec2 eval_deformed_gradient(const FeFunction& f, const Deformation& d, int elem, const Vec2& ref);

} // namespace isoq
