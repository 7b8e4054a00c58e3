#pragma once

#include "isoq/levelset.hpp"
#include "isoq/quadrature.hpp"

#include <optional>
#include <string>

namespace isoq {

struct Deformation; // deform.hpp

/// Quadrature for one cut element. Points are reference coordinates of the
/// (undeformed) element; weights carry the physical measure: volume weights
/// sum per side to the side's area, interface weights to the planar segment
/// length. The planar interface of a P1 cut is a straight segment, so normal
/// and tangent are single vectors with normal == rotate90(tangent) pointing
/// from NEG to POS.
struct CutRule {
  int element = -1;
  std::vector<Vec2> neg_points;
  std::vector<double> neg_weights;
  std::vector<Vec2> pos_points;
  std::vector<double> pos_weights;
  std::vector<Vec2> iface_points;
  std::vector<double> iface_weights;
  Vec2 iface_normal = Vec2::Zero();
  Vec2 iface_tangent = Vec2::Zero();

  const std::vector<Vec2>& points(Side s) const { return s == Side::NEG ? neg_points : pos_points; }
  const std::vector<double>& weights(Side s) const { return s == Side::NEG ? neg_weights : pos_weights; }
  double area(Side s) const;
  double iface_length() const;
};

/// Rule for a cut triangle given its physical vertices and the P1 vertex
/// values. The zero line splits the triangle into a sub-triangle and a
/// quadrilateral (split into two triangles); mapped Gauss rules give strictly
/// positive weights on every piece. Throws ContractViolation unless the
/// values classify as CUT.
CutRule cut_rule_from_values(const std::array<Vec2, 3>& verts, const std::array<double, 3>& values, int order);

/// Same on a mesh element, taking the vertex values from I_h phi.
CutRule cut_element_rule(const SimplicialMesh& mesh, int elem, const FeFunction& phi_lin, int order);

/// Whole-element convenience: CUT elements get the genuine cut rule; uncut
/// elements get the full-element rule on their side and empty lists elsewhere.
CutRule element_rule(const LevelSetView& view, int elem, int order);

/// All cut rules of a view, indexed like view.cut_set.
struct CutQuadrature {
  int order = 0;
  std::vector<CutRule> rules;
  std::vector<int> cut_index; // element -> index into rules, -1 if uncut

  const CutRule* rule_for(int elem) const {
    return cut_index[elem] >= 0 ? &rules[cut_index[elem]] : nullptr;
  }
};

CutQuadrature build_cut_quadrature(const LevelSetView& view, int order);

/// Integral over the deformed side of one element:
///   sum_i w_i |det DPsi(x_i)| f(Psi(x_i)).
/// f takes the mapped physical point. Non-finite integrand values raise
/// EvaluationError.
double mapped_volume_integral(const std::function<double(const Vec2&)>& f, int elem,
                              std::span<const Vec2> ref_points, std::span<const double> weights,
                              const Deformation& deformation);

/// Integral over the deformed interface segment of one cut element:
///   sum_i w_i ||DPsi(x_i) t|| f(Psi(x_i), n_i)
/// with the mapped unit normal n_i = rotate90(DPsi t)/||DPsi t|| (NEG -> POS
/// orientation preserved). A collapsed tangent raises SingularDeformation.
double mapped_interface_integral(const std::function<double(const Vec2&, const Vec2&)>& f,
                                 const CutRule& rule, const Deformation& deformation);

/// Debug dump: element id, side, physical point, weight, normal.
void dump_cut_rules_csv(const SimplicialMesh& mesh, const CutQuadrature& quad, const std::string& path);

} // namespace isoq
