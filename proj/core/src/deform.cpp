#include "isoq/deform.hpp"

#include "isoq/errors.hpp"
#include "isoq/parallel.hpp"
#include "isoq/projection.hpp"
#include "isoq/quadrature.hpp"

#include <algorithm>
#include <cmath>

namespace isoq {

double Deformation::median_newton_iterations() const {
  long total = 0;
  for (long c : newton_histogram) total += c;
  if (total == 0) return 0.0;
  long seen = 0;
  for (std::size_t i = 0; i < newton_histogram.size(); ++i) {
    seen += newton_histogram[i];
    if (2 * seen >= total) return static_cast<double>(i);
  }
  return static_cast<double>(newton_histogram.size() - 1);
}

Deformation identity_deformation(std::shared_ptr<const FeSpace> vec_space) {
  if (vec_space->components() != 2) throw ContractViolation("identity_deformation: vector space expected");
  Deformation d{FeFunction(vec_space), {}, {}, 0, 0, 1.0, {}};
  d.active.assign(d.displacement.space->mesh().num_elements(), 0);
  return d;
}

SearchField build_search_field(const FeFunction& phi, const LevelSetView& view) {
  const FeSpace& sp = *phi.space;
  auto p1vec = std::make_shared<FeSpace>(sp.mesh_ptr(), 1, 2);
  LocalField grad = [&phi](int elem, const Vec2& ref, double* out) {
    const Vec2 g = phi.gradient(elem, ref);
    out[0] = g.x();
    out[1] = g.y();
  };
  SearchField s{oswald_project(p1vec, view.cut_set, grad, 2 * sp.degree())};

  const TriangleRule rule = gauss_rule_triangle(2 * sp.degree() + 2);
  for (int t : view.cut_set)
    for (const Vec2& q : rule.points)
      if (s.at(t, q).norm() < 1e-8)
        throw DegenerateLevelSet("build_search_field: vanishing search direction on cut element");
  return s;
}

PointDisplacement psi_T_pointwise(const LevelSetView& view, const SearchField& s, int elem, const Vec2& ref,
                                  double gamma) {
  const SimplicialMesh& mesh = *view.mesh;
  PointDisplacement out;
  const AffineMap map = mesh.affine_map(elem);
  const Vec2 x = map.apply(ref);
  const double h_t = mesh.element_diameter(elem);
  const double target = view.phi_lin.value(elem, ref);
  const Vec2 dir = s.at(elem, ref);

  // scale of the level set on this element, for the relative tolerance
  const auto vv = view.vertex_values(elem);
  const double scale = std::max({std::abs(vv[0]), std::abs(vv[1]), std::abs(vv[2]), 1e-30});
  const double tol = kNewtonRelTol * scale;

  // E_T(phi) along x + r*dir, expressed through reference coordinates
  const Vec2 delta = map.A.inverse() * dir;
  auto value_at = [&](double r) { return view.phi.value(elem, ref + r * delta); };
  auto slope_at = [&](double r) { return view.phi.ref_gradient(elem, ref + r * delta).dot(delta); };

  double r = 0.0;
  double residual = value_at(0.0) - target;
  bool converged = std::abs(residual) <= tol;
  int iters = 0;
  while (!converged && iters < kNewtonMaxIter) {
    const double slope = slope_at(r);
    if (std::abs(slope) < kNewtonMinSlope) break;
    double step = -residual / slope;
    double r_next = r + step;
    double res_next = value_at(r_next) - target;
    // damping: halve the step while the residual grows
    for (int halving = 0; halving < 40 && std::abs(res_next) > std::abs(residual); ++halving) {
      step *= 0.5;
      r_next = r + step;
      res_next = value_at(r_next) - target;
    }
    r = r_next;
    residual = res_next;
    ++iters;
    if (std::abs(residual) <= tol) converged = true;
  }
  out.newton_iterations = iters;

  if (!converged) {
    // robustness over accuracy: flag the sample and keep the point in place
    out.failed = true;
    out.displaced = x;
    return out;
  }

  Vec2 d = r * dir;
  const double cap = gamma * h_t;
  const double len = d.norm();
  if (len > cap) {
    d *= cap / len;
    out.limited = true;
  }
  out.displaced = x + d;
  return out;
}

namespace {

// Reference mass matrix restricted to the non-vertex dofs (the deformation
// fit pins vertex dofs to zero).
Eigen::MatrixXd pinned_reference_mass(int degree, const TriangleRule& rule) {
  const int n = lagrange::size(degree);
  Eigen::MatrixXd mass = Eigen::MatrixXd::Zero(n, n);
  std::vector<double> vals(n);
  for (std::size_t q = 0; q < rule.points.size(); ++q) {
    lagrange::eval(degree, rule.points[q], vals.data(), nullptr);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) mass(i, j) += rule.weights[q] * vals[i] * vals[j];
  }
  return mass.block(3, 3, n - 3, n - 3);
}

} // namespace

Deformation build_deformation(const LevelSetView& view, std::shared_ptr<const FeSpace> vec_space,
                              double gamma, int quad_order, int threads) {
  const FeSpace& sp = *vec_space;
  if (sp.components() != 2) throw ContractViolation("build_deformation: vector space expected");
  if (sp.mesh_ptr().get() != view.mesh.get())
    throw ContractViolation("build_deformation: space and view live on different meshes");
  if (!(gamma > 0.0)) throw ContractViolation("build_deformation: gamma must be positive");

  const int k = sp.degree();
  if (quad_order < 0) quad_order = 2 * k + 2;
  const TriangleRule rule = gauss_rule_triangle(quad_order);
  const int nq = static_cast<int>(rule.points.size());
  const int n = sp.local_size();
  const int nfit = n - 3;

  Deformation out = identity_deformation(vec_space);
  out.newton_histogram.assign(kNewtonMaxIter + 1, 0);
  for (int t : view.extended_set) out.active[t] = 1;
  out.active_set = view.extended_set;

  const SearchField s = build_search_field(view.phi, view);

  Eigen::LDLT<Eigen::MatrixXd> solver;
  Eigen::MatrixXd basis(nq, n);
  {
    std::vector<double> vals(n);
    for (int q = 0; q < nq; ++q) {
      lagrange::eval(k, rule.points[q], vals.data(), nullptr);
      for (int i = 0; i < n; ++i) basis(q, i) = vals[i];
    }
  }
  if (nfit > 0) solver.compute(pinned_reference_mass(k, rule));

  struct ElementResult {
    Eigen::MatrixXd coeffs; // nfit x 2
    long limited = 0;
    long failed = 0;
    std::vector<int> iters;
  };
  std::vector<ElementResult> results(view.cut_set.size());

  parallel_for(view.cut_set.size(), threads, [&](std::size_t idx) {
    const int t = view.cut_set[idx];
    ElementResult& res = results[idx];
    res.iters.reserve(nq);
    const AffineMap map = view.mesh->affine_map(t);
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(std::max(nfit, 1), 2);
    for (int q = 0; q < nq; ++q) {
      const PointDisplacement pd = psi_T_pointwise(view, s, t, rule.points[q], gamma);
      res.iters.push_back(pd.newton_iterations);
      if (pd.limited) res.limited++;
      if (pd.failed) res.failed++;
      const Vec2 disp = pd.displaced - map.apply(rule.points[q]);
      for (int i = 0; i < nfit; ++i) {
        rhs(i, 0) += rule.weights[q] * basis(q, i + 3) * disp.x();
        rhs(i, 1) += rule.weights[q] * basis(q, i + 3) * disp.y();
      }
    }
    if (nfit > 0) res.coeffs = solver.solve(rhs.topRows(nfit));
  });

  // ordered reduction keeps the result bitwise independent of `threads`
  Eigen::VectorXi counts = Eigen::VectorXi::Zero(sp.num_scalar_dofs());
  for (std::size_t idx = 0; idx < view.cut_set.size(); ++idx) {
    const int t = view.cut_set[idx];
    const ElementResult& res = results[idx];
    const auto dofs = sp.element_dofs(t);
    for (int i = 0; i < nfit; ++i) {
      out.displacement.coeffs[2 * dofs[i + 3] + 0] += res.coeffs(i, 0);
      out.displacement.coeffs[2 * dofs[i + 3] + 1] += res.coeffs(i, 1);
    }
    for (int i = 0; i < n; ++i) counts[dofs[i]] += 1;
    out.limited_count += res.limited;
    out.failed_count += res.failed;
    for (int it : res.iters) out.newton_histogram[std::min<std::size_t>(it, kNewtonMaxIter)]++;
  }
  for (int i = 0; i < sp.num_scalar_dofs(); ++i) {
    if (counts[i] > 1) {
      out.displacement.coeffs[2 * i + 0] /= counts[i];
      out.displacement.coeffs[2 * i + 1] /= counts[i];
    }
  }

  out.max_kappa = regularity_report(out, quad_order).max_kappa_ref;
  return out;
}

RegularityReport regularity_report(const Deformation& d, int quad_order) {
  const FeSpace& sp = *d.displacement.space;
  const SimplicialMesh& mesh = sp.mesh();
  if (quad_order < 0) quad_order = 2 * sp.degree() + 2;
  const TriangleRule rule = gauss_rule_triangle(quad_order);

  RegularityReport report;
  for (int t : d.active_set) {
    const Mat2 A = mesh.affine_map(t).A;
    const Mat2 Ainv = A.inverse();
    for (const Vec2& q : rule.points) {
      const Mat2 dref = d.displacement.vec_ref_jacobian(t, q);
      const Mat2 grad_psi_hat = Mat2::Identity() + Ainv * dref;
      const Mat2 grad_theta = A + dref;
      const double kr = condition_number(grad_psi_hat);
      const double kt = condition_number(grad_theta);
      if (kr > report.max_kappa_ref) {
        report.max_kappa_ref = kr;
        report.elem_ref = t;
      }
      if (kt > report.max_kappa_theta) {
        report.max_kappa_theta = kt;
        report.elem_theta = t;
      }
      report.min_det_theta = std::min(report.min_det_theta, grad_theta.determinant() / A.determinant());
      if (!std::isfinite(kr) || !std::isfinite(kt)) report.singular = true;
    }
  }
  return report;
}

double eval_deformed_value(const FeFunction& f, const Deformation& d, int elem, const Vec2& ref) {
  (void)d;
  return f.value(elem, ref);
}

Vec2 eval_deformed_gradient(const FeFunction& f, const Deformation& d, int elem, const Vec2& ref) {
  const Mat2 A = f.space->mesh().affine_map(elem).A;
  const Mat2 grad_theta = d.active[elem] ? Mat2(A + d.displacement.vec_ref_jacobian(elem, ref)) : A;
  if (!(grad_theta.determinant() > 0.0))
    throw SingularDeformation("eval_deformed_gradient: non-positive Jacobian determinant");
  return grad_theta.inverse().transpose() * f.ref_gradient(elem, ref);
}

} // namespace isoq
