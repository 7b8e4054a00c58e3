#include "isoq/cutquad.hpp"

#include "isoq/deform.hpp"
#include "isoq/errors.hpp"

#include <cmath>
#include <fstream>
#include <numeric>

namespace isoq {

double CutRule::area(Side s) const {
  const auto& w = weights(s);
  return std::accumulate(w.begin(), w.end(), 0.0);
}

double CutRule::iface_length() const {
  return std::accumulate(iface_weights.begin(), iface_weights.end(), 0.0);
}

namespace {

// Appends a mapped Gauss rule for the sub-triangle (q0,q1,q2) given in
// reference coordinates of the parent element; physical_det scales reference
// areas to physical ones. Zero-measure slivers are dropped.
void append_subtriangle(const Vec2& q0, const Vec2& q1, const Vec2& q2, double physical_det, int order,
                        std::vector<Vec2>& points, std::vector<double>& weights) {
  const double ref_area = std::abs(signed_area(q0, q1, q2));
  if (ref_area * physical_det < 1e-15) return;
  const TriangleRule base = gauss_rule_triangle(order);
  const double scale = 2.0 * ref_area * physical_det;
  for (std::size_t q = 0; q < base.points.size(); ++q) {
    const Vec2& xi = base.points[q];
    points.push_back(q0 + xi.x() * (q1 - q0) + xi.y() * (q2 - q0));
    weights.push_back(base.weights[q] * scale);
  }
}

} // namespace

CutRule cut_rule_from_values(const std::array<Vec2, 3>& verts, const std::array<double, 3>& values, int order) {
  if (classify_values(values[0], values[1], values[2]) != CutClass::CUT)
    throw ContractViolation("cut_rule_from_values: element is not cut");

  CutRule rule;
  Mat2 A;
  A.col(0) = verts[1] - verts[0];
  A.col(1) = verts[2] - verts[0];
  const double det = std::abs(A.determinant());

  const Vec2 ref[3] = {Vec2(0, 0), Vec2(1, 0), Vec2(0, 1)};

  // single odd vertex a: the side containing only a is a triangle, the other
  // side is a quadrilateral split into two triangles
  int a = -1;
  bool odd_is_neg = false;
  int neg_count = 0;
  for (int i = 0; i < 3; ++i)
    if (values[i] < 0.0) neg_count++;
  if (neg_count == 1) {
    odd_is_neg = true;
    for (int i = 0; i < 3; ++i)
      if (values[i] < 0.0) a = i;
  } else {
    odd_is_neg = false;
    for (int i = 0; i < 3; ++i)
      if (values[i] >= 0.0) a = i;
  }
  const int b = (a + 1) % 3;
  const int c = (a + 2) % 3;

  auto cut_point = [&](int i, int j) {
    const double t = values[i] / (values[i] - values[j]);
    return Vec2(ref[i] + t * (ref[j] - ref[i]));
  };
  const Vec2 pab = cut_point(a, b);
  const Vec2 pac = cut_point(a, c);

  auto& tri_pts = odd_is_neg ? rule.neg_points : rule.pos_points;
  auto& tri_wts = odd_is_neg ? rule.neg_weights : rule.pos_weights;
  auto& quad_pts = odd_is_neg ? rule.pos_points : rule.neg_points;
  auto& quad_wts = odd_is_neg ? rule.pos_weights : rule.neg_weights;
  append_subtriangle(ref[a], pab, pac, det, order, tri_pts, tri_wts);
  append_subtriangle(pab, ref[b], ref[c], det, order, quad_pts, quad_wts);
  append_subtriangle(pab, ref[c], pac, det, order, quad_pts, quad_wts);

  // planar interface segment between the two edge intersections
  const Vec2 P0 = A * pab + verts[0];
  const Vec2 P1 = A * pac + verts[0];
  const double len = (P1 - P0).norm();
  if (len > 1e-14) {
    const Vec2 ghat(values[1] - values[0], values[2] - values[0]);
    const Vec2 g = A.transpose().inverse() * ghat; // gradient of the P1 level set
    rule.iface_normal = g.normalized();
    rule.iface_tangent = Vec2(rule.iface_normal.y(), -rule.iface_normal.x());
    const SegmentRule seg = gauss_rule_segment(order);
    for (std::size_t q = 0; q < seg.points.size(); ++q) {
      rule.iface_points.push_back(pab + seg.points[q] * (pac - pab));
      rule.iface_weights.push_back(seg.weights[q] * len);
    }
  }
  return rule;
}

CutRule cut_element_rule(const SimplicialMesh& mesh, int elem, const FeFunction& phi_lin, int order) {
  if (elem < 0 || elem >= mesh.num_elements()) throw ContractViolation("cut_element_rule: element out of range");
  const auto& ev = mesh.elements[elem];
  const std::array<Vec2, 3> verts = {mesh.vertices[ev[0]], mesh.vertices[ev[1]], mesh.vertices[ev[2]]};
  const std::array<double, 3> values = {phi_lin.coeffs[ev[0]], phi_lin.coeffs[ev[1]], phi_lin.coeffs[ev[2]]};
  CutRule rule = cut_rule_from_values(verts, values, order);
  rule.element = elem;
  return rule;
}

CutRule element_rule(const LevelSetView& view, int elem, int order) {
  const SimplicialMesh& mesh = *view.mesh;
  if (view.is_cut(elem)) return cut_element_rule(mesh, elem, view.phi_lin, order);
  CutRule rule;
  rule.element = elem;
  const TriangleRule base = gauss_rule_triangle(order);
  const double det = std::abs(mesh.affine_map(elem).det());
  auto& pts = view.classification[elem] == CutClass::NEG ? rule.neg_points : rule.pos_points;
  auto& wts = view.classification[elem] == CutClass::NEG ? rule.neg_weights : rule.pos_weights;
  pts = base.points;
  wts.resize(base.weights.size());
  for (std::size_t q = 0; q < base.weights.size(); ++q) wts[q] = base.weights[q] * det;
  return rule;
}

CutQuadrature build_cut_quadrature(const LevelSetView& view, int order) {
  CutQuadrature quad;
  quad.order = order;
  quad.cut_index.assign(view.mesh->num_elements(), -1);
  quad.rules.reserve(view.cut_set.size());
  for (std::size_t i = 0; i < view.cut_set.size(); ++i) {
    const int elem = view.cut_set[i];
    quad.cut_index[elem] = static_cast<int>(i);
    quad.rules.push_back(cut_element_rule(*view.mesh, elem, view.phi_lin, order));
  }
  return quad;
}

double mapped_volume_integral(const std::function<double(const Vec2&)>& f, int elem,
                              std::span<const Vec2> ref_points, std::span<const double> weights,
                              const Deformation& deformation) {
  double sum = 0.0;
  for (std::size_t q = 0; q < ref_points.size(); ++q) {
    const Vec2 y = deformation.map_point(elem, ref_points[q]);
    const double detF = deformation.physical_jacobian(elem, ref_points[q]).determinant();
    const double fy = f(y);
    if (!std::isfinite(fy)) throw EvaluationError("mapped_volume_integral: non-finite integrand");
    sum += weights[q] * std::abs(detF) * fy;
  }
  return sum;
}

double mapped_interface_integral(const std::function<double(const Vec2&, const Vec2&)>& f,
                                 const CutRule& rule, const Deformation& deformation) {
  double sum = 0.0;
  for (std::size_t q = 0; q < rule.iface_points.size(); ++q) {
    const Vec2& ref = rule.iface_points[q];
    const Vec2 y = deformation.map_point(rule.element, ref);
    const Mat2 F = deformation.physical_jacobian(rule.element, ref);
    const Vec2 m = F * rule.iface_tangent;
    const double stretch = m.norm();
    if (stretch < 1e-14) throw SingularDeformation("mapped_interface_integral: collapsed tangent");
    const Vec2 n = rotate90(m) / stretch;
    const double fy = f(y, n);
    if (!std::isfinite(fy)) throw EvaluationError("mapped_interface_integral: non-finite integrand");
    sum += rule.iface_weights[q] * stretch * fy;
  }
  return sum;
}

void dump_cut_rules_csv(const SimplicialMesh& mesh, const CutQuadrature& quad, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw EvaluationError("dump_cut_rules_csv: cannot open " + path);
  out.precision(17);
  out << "element,side,x,y,weight,nx,ny\n";
  for (const CutRule& rule : quad.rules) {
    const AffineMap map = mesh.affine_map(rule.element);
    auto emit = [&](const char* side, const std::vector<Vec2>& pts, const std::vector<double>& wts,
                    const Vec2& n) {
      for (std::size_t q = 0; q < pts.size(); ++q) {
        const Vec2 x = map.apply(pts[q]);
        out << rule.element << "," << side << "," << x.x() << "," << x.y() << "," << wts[q] << "," << n.x()
            << "," << n.y() << "\n";
      }
    };
    emit("neg", rule.neg_points, rule.neg_weights, Vec2::Zero());
    emit("pos", rule.pos_points, rule.pos_weights, Vec2::Zero());
    emit("iface", rule.iface_points, rule.iface_weights, rule.iface_normal);
  }
}

} // namespace isoq
