#include "isoq/levelset.hpp"

#include "isoq/errors.hpp"
#include "isoq/projection.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace isoq {

AnalyticLevelSet plane_level_set(const Vec2& normal, double offset) {
  AnalyticLevelSet ls;
  ls.name = "plane";
  ls.value = [normal, offset](const Vec2& x) { return normal.dot(x) - offset; };
  ls.gradient = [normal](const Vec2&) { return normal; };
  return ls;
}

AnalyticLevelSet circle_level_set(double radius) {
  AnalyticLevelSet ls;
  ls.name = "circle";
  ls.value = [radius](const Vec2& x) { return x.norm() - radius; };
  ls.gradient = [](const Vec2& x) {
    const double r = x.norm();
    return r > 0.0 ? Vec2(x / r) : Vec2(1.0, 0.0);
  };
  return ls;
}

AnalyticLevelSet flower_level_set() {
  // r - R(theta), R(theta) = 0.5 + 0.1 sin(8 theta), theta = atan2(y, x)
  AnalyticLevelSet ls;
  ls.name = "flower";
  ls.value = [](const Vec2& x) {
    const double theta = std::atan2(x.y(), x.x());
    return x.norm() - (0.5 + 0.1 * std::sin(8.0 * theta));
  };
  ls.gradient = [](const Vec2& x) {
    const double r = x.norm();
    if (r < 1e-12) return Vec2(1.0, 0.0);
    const double theta = std::atan2(x.y(), x.x());
    const double dR = 0.8 * std::cos(8.0 * theta);
    // grad r = x/r, grad theta = (-y, x)/r^2
    return Vec2(x / r - dR * Vec2(-x.y(), x.x()) / (r * r));
  };
  return ls;
}

AnalyticLevelSet level_set_by_name(const std::string& name) {
  if (name == "plane") return plane_level_set(Vec2(1, 0), 0.3);
  if (name == "circle") return circle_level_set(0.6);
  if (name == "flower") return flower_level_set();
  throw std::invalid_argument("level_set_by_name: unknown level set '" + name + "'");
}

CutClass classify_values(double v0, double v1, double v2) {
  const bool neg = (v0 < 0.0) || (v1 < 0.0) || (v2 < 0.0);
  const bool pos = (v0 >= 0.0) || (v1 >= 0.0) || (v2 >= 0.0);
  if (neg && pos) return CutClass::CUT;
  return neg ? CutClass::NEG : CutClass::POS;
}

std::array<double, 3> LevelSetView::vertex_values(int elem) const {
  const auto& ev = mesh->elements[elem];
  return {phi_lin.coeffs[ev[0]], phi_lin.coeffs[ev[1]], phi_lin.coeffs[ev[2]]};
}

FeFunction project_levelset(const AnalyticLevelSet& ls, std::shared_ptr<const FeSpace> space,
                            LevelSetProjector projector, int quad_order) {
  if (space->components() != 1) throw ContractViolation("project_levelset: scalar space expected");
  if (projector == LevelSetProjector::Nodal) return interpolate(space, ls.value);
  const SimplicialMesh& mesh = space->mesh();
  std::vector<int> all(mesh.num_elements());
  for (int t = 0; t < mesh.num_elements(); ++t) all[t] = t;
  LocalField g = [&](int elem, const Vec2& ref, double* out) {
    out[0] = ls.value(mesh.affine_map(elem).apply(ref));
  };
  return oswald_project(std::move(space), all, g, quad_order);
}

void classify(const FeFunction& phi_lin, std::vector<CutClass>& classification,
              std::vector<int>& cut_set, std::vector<int>& extended_set) {
  const FeSpace& sp = *phi_lin.space;
  if (sp.degree() != 1 || sp.components() != 1) throw ContractViolation("classify: P1 scalar level set expected");
  const SimplicialMesh& mesh = sp.mesh();
  const int nt = mesh.num_elements();
  classification.assign(nt, CutClass::POS);
  cut_set.clear();
  for (int t = 0; t < nt; ++t) {
    const auto& ev = mesh.elements[t];
    classification[t] = classify_values(phi_lin.coeffs[ev[0]], phi_lin.coeffs[ev[1]], phi_lin.coeffs[ev[2]]);
    if (classification[t] == CutClass::CUT) cut_set.push_back(t);
  }
  std::vector<char> in_ext(nt, 0);
  for (int t : cut_set)
    for (int i = 0; i < 3; ++i)
      for (int n : mesh.vertex_elements[mesh.elements[t][i]]) in_ext[n] = 1;
  extended_set.clear();
  for (int t = 0; t < nt; ++t)
    if (in_ext[t]) extended_set.push_back(t);
}

LevelSetView build_level_set_view(const AnalyticLevelSet& ls, std::shared_ptr<const SimplicialMesh> mesh,
                                  int degree, LevelSetProjector projector, int quad_order) {
  auto space = std::make_shared<FeSpace>(mesh, degree, 1);
  LevelSetView view{std::move(mesh), project_levelset(ls, space, projector, quad_order),
                    FeFunction(space), {}, {}, {}};
  view.phi_lin = interpolate_p1(view.phi);
  classify(view.phi_lin, view.classification, view.cut_set, view.extended_set);
  return view;
}

} // namespace isoq
