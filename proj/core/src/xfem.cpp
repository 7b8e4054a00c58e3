#include "isoq/xfem.hpp"

#include "isoq/errors.hpp"

#include <Eigen/SparseLU>

#include <cmath>

namespace isoq {

XfemSpace::XfemSpace(std::shared_ptr<const FeSpace> base, const LevelSetView* view)
    : base_(std::move(base)), view_(view) {
  const FeSpace& sp = *base_;
  if (sp.components() != 1) throw ContractViolation("XfemSpace: scalar base space expected");
  if (sp.mesh_ptr().get() != view_->mesh.get())
    throw ContractViolation("XfemSpace: base space and view live on different meshes");

  const SimplicialMesh& mesh = sp.mesh();
  const int nd = sp.num_scalar_dofs();
  std::vector<char> doubled(nd, 0);
  std::vector<char> side_seen[2];
  side_seen[0].assign(nd, 0);
  side_seen[1].assign(nd, 0);
  for (int t = 0; t < mesh.num_elements(); ++t) {
    const CutClass c = view_->classification[t];
    for (int dof : sp.element_dofs(t)) {
      if (c == CutClass::CUT) doubled[dof] = 1;
      else side_seen[c == CutClass::NEG ? 0 : 1][dof] = 1;
    }
  }

  copies_.assign(nd, {-1, -1});
  int next = 0;
  for (int i = 0; i < nd; ++i) {
    if (doubled[i]) {
      copies_[i][0] = next++;
      copies_[i][1] = next++;
      num_duplicated_++;
    } else if (side_seen[0][i]) {
      copies_[i][0] = next++;
    } else {
      copies_[i][1] = next++;
    }
  }
  num_dofs_ = next;
}

void XfemSpace::element_dofs(int elem, Side side, std::vector<int>& out) const {
  const auto dofs = base_->element_dofs(elem);
  out.resize(dofs.size());
  for (std::size_t i = 0; i < dofs.size(); ++i) out[i] = copy(dofs[i], side);
}

XfemSpace build_xfem_space(std::shared_ptr<const FeSpace> base, const LevelSetView& view) {
  return XfemSpace(std::move(base), &view);
}

namespace {

struct ConstrainedScatter {
  std::vector<Eigen::Triplet<double>> triplets;
  Eigen::VectorXd rhs;
  const std::vector<char>& constrained;
  const Eigen::VectorXd& values;

  void add(int i, int j, double v) {
    if (constrained[i]) return;
    if (constrained[j]) rhs[i] -= v * values[j];
    else triplets.emplace_back(i, j, v);
  }
  void add_rhs(int i, double v) {
    if (!constrained[i]) rhs[i] += v;
  }
};

struct BasisTable {
  Eigen::MatrixXd values;             // nq x n
  std::vector<std::vector<Vec2>> ref_grads; // [q][i]

  BasisTable(int degree, std::span<const Vec2> points) {
    const int n = lagrange::size(degree);
    const int nq = static_cast<int>(points.size());
    values.resize(nq, n);
    ref_grads.assign(nq, std::vector<Vec2>(n));
    std::vector<double> vals(n);
    for (int q = 0; q < nq; ++q) {
      lagrange::eval(degree, points[q], vals.data(), ref_grads[q].data());
      for (int i = 0; i < n; ++i) values(q, i) = vals[i];
    }
  }
};

int side_index(Side s) { return static_cast<int>(s); }

} // namespace

SparseSystem assemble(const InterfaceProblem& problem, const XfemSpace& xspace, const Deformation& d,
                      int quad_order) {
  const FeSpace& base = xspace.base();
  const LevelSetView& view = xspace.view();
  const SimplicialMesh& mesh = base.mesh();
  const int k = base.degree();
  const int nloc = base.local_size();
  if (quad_order < 0) quad_order = 2 * k + 2;

  if (!(problem.alpha[0] > 0.0) || !(problem.alpha[1] > 0.0) || !(problem.beta[0] > 0.0) ||
      !(problem.beta[1] > 0.0))
    throw ContractViolation("assemble: alpha and beta must be positive");
  if (d.displacement.space->mesh_ptr().get() != base.mesh_ptr().get())
    throw ContractViolation("assemble: deformation lives on a different mesh");
  for (int t : view.cut_set)
    if (!d.active[t]) throw ContractViolation("assemble: missing deformation on a cut element");

  const int n = xspace.num_dofs();
  std::vector<char> constrained(n, 0);
  Eigen::VectorXd values = Eigen::VectorXd::Zero(n);
  for (int sd : base.boundary_scalar_dofs()) {
    const Vec2 p = base.dof_point(sd);
    for (Side side : {Side::NEG, Side::POS}) {
      const int c = xspace.copy(sd, side);
      if (c < 0) continue;
      constrained[c] = 1;
      values[c] = problem.dirichlet_sided ? (*problem.dirichlet_sided)[side_index(side)](p)
                                          : problem.dirichlet(p);
    }
  }

  ConstrainedScatter sys{{}, Eigen::VectorXd::Zero(n), constrained, values};
  sys.triplets.reserve(static_cast<std::size_t>(mesh.num_elements()) * nloc * nloc);

  const TriangleRule full = gauss_rule_triangle(quad_order);
  const BasisTable full_table(k, full.points);
  const CutQuadrature cutq = build_cut_quadrature(view, quad_order);
  const double abar = 0.5 * (problem.alpha[0] + problem.alpha[1]);

  std::vector<int> xdofs[2];
  std::vector<Vec2> grads_y(nloc);
  std::vector<double> vals(nloc);
  std::vector<Vec2> rgrads(nloc);

  for (int t = 0; t < mesh.num_elements(); ++t) {
    const AffineMap map = mesh.affine_map(t);
    const Mat2 A = map.A;

    if (!view.is_cut(t)) {
      const Side side = view.classification[t] == CutClass::NEG ? Side::NEG : Side::POS;
      const int si = side_index(side);
      const double coeff = problem.beta[si] * problem.alpha[si];
      xspace.element_dofs(t, side, xdofs[si]);
      const auto& dofs = xdofs[si];
      Eigen::MatrixXd K = Eigen::MatrixXd::Zero(nloc, nloc);
      Eigen::VectorXd F = Eigen::VectorXd::Zero(nloc);
      const bool curved = d.active[t];
      for (std::size_t q = 0; q < full.points.size(); ++q) {
        const Mat2 grad_theta = curved ? Mat2(A + d.displacement.vec_ref_jacobian(t, full.points[q])) : A;
        const double det = grad_theta.determinant();
        const Mat2 G = grad_theta.inverse().transpose();
        const double w = full.weights[q] * std::abs(det);
        for (int i = 0; i < nloc; ++i) grads_y[i] = G * full_table.ref_grads[q][i];
        for (int i = 0; i < nloc; ++i)
          for (int j = 0; j < nloc; ++j) K(i, j) += w * coeff * grads_y[i].dot(grads_y[j]);
        const Vec2 y = curved ? d.map_point(t, full.points[q]) : map.apply(full.points[q]);
        const double fval = problem.rhs[si](y);
        if (!std::isfinite(fval)) throw EvaluationError("assemble: non-finite right-hand side");
        for (int i = 0; i < nloc; ++i) F(i) += w * problem.beta[si] * fval * full_table.values(q, i);
      }
      for (int i = 0; i < nloc; ++i) {
        sys.add_rhs(dofs[i], F(i));
        for (int j = 0; j < nloc; ++j) sys.add(dofs[i], dofs[j], K(i, j));
      }
      continue;
    }

    // cut element: side volumes, then the interface terms
    const CutRule& rule = *cutq.rule_for(t);
    xspace.element_dofs(t, Side::NEG, xdofs[0]);
    xspace.element_dofs(t, Side::POS, xdofs[1]);

    for (Side side : {Side::NEG, Side::POS}) {
      const int si = side_index(side);
      const double coeff = problem.beta[si] * problem.alpha[si];
      const auto& pts = rule.points(side);
      const auto& wts = rule.weights(side);
      const auto& dofs = xdofs[si];
      Eigen::MatrixXd K = Eigen::MatrixXd::Zero(nloc, nloc);
      Eigen::VectorXd F = Eigen::VectorXd::Zero(nloc);
      for (std::size_t q = 0; q < pts.size(); ++q) {
        lagrange::eval(k, pts[q], vals.data(), rgrads.data());
        const Mat2 grad_theta = A + d.displacement.vec_ref_jacobian(t, pts[q]);
        // physical weights carry |det A| already; renormalize to |det grad_theta|
        const double w = wts[q] * std::abs(grad_theta.determinant()) / std::abs(A.determinant());
        const Mat2 G = grad_theta.inverse().transpose();
        for (int i = 0; i < nloc; ++i) grads_y[i] = G * rgrads[i];
        for (int i = 0; i < nloc; ++i)
          for (int j = 0; j < nloc; ++j) K(i, j) += w * coeff * grads_y[i].dot(grads_y[j]);
        const Vec2 y = d.map_point(t, pts[q]);
        const double fval = problem.rhs[si](y);
        if (!std::isfinite(fval)) throw EvaluationError("assemble: non-finite right-hand side");
        for (int i = 0; i < nloc; ++i) F(i) += w * problem.beta[si] * fval * vals[i];
      }
      for (int i = 0; i < nloc; ++i) {
        sys.add_rhs(dofs[i], F(i));
        for (int j = 0; j < nloc; ++j) sys.add(dofs[i], dofs[j], K(i, j));
      }
    }

    // Heaviside averaging from the undeformed cut configuration; ties to NEG
    const double neg_area = rule.area(Side::NEG);
    const double elem_area = mesh.element_area(t);
    const Side heavi = (neg_area >= 0.5 * elem_area) ? Side::NEG : Side::POS;
    const int hi = side_index(heavi);
    const double alpha_h = problem.alpha[hi];
    const double penalty = abar * problem.lambda * k * k / mesh.element_diameter(t);

    const int two_n = 2 * nloc;
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(two_n, two_n);
    Eigen::VectorXd jump(two_n), flux(two_n);
    for (std::size_t q = 0; q < rule.iface_points.size(); ++q) {
      const Vec2& ref = rule.iface_points[q];
      lagrange::eval(k, ref, vals.data(), rgrads.data());
      const Mat2 grad_theta = A + d.displacement.vec_ref_jacobian(t, ref);
      const Mat2 Fj = grad_theta * A.inverse(); // physical deformation gradient
      const Vec2 m = Fj * rule.iface_tangent;
      const double stretch = m.norm();
      if (stretch < 1e-14) throw SingularDeformation("assemble: collapsed interface tangent");
      const Vec2 nrm = rotate90(m) / stretch;
      const double w = rule.iface_weights[q] * stretch;
      const Mat2 G = grad_theta.inverse().transpose();

      for (int i = 0; i < nloc; ++i) {
        const double bi = vals[i];
        const Vec2 gi = G * rgrads[i];
        jump(i) = problem.beta[0] * bi;          // NEG trace
        jump(nloc + i) = -problem.beta[1] * bi;  // POS trace
        const double fluxval = -alpha_h * gi.dot(nrm);
        flux(i) = (heavi == Side::NEG) ? fluxval : 0.0;
        flux(nloc + i) = (heavi == Side::POS) ? fluxval : 0.0;
      }
      for (int i = 0; i < two_n; ++i)
        for (int j = 0; j < two_n; ++j)
          K(i, j) += w * (jump(i) * flux(j) + flux(i) * jump(j) + penalty * jump(i) * jump(j));
    }
    auto xdof = [&](int i) { return i < nloc ? xdofs[0][i] : xdofs[1][i - nloc]; };
    for (int i = 0; i < two_n; ++i)
      for (int j = 0; j < two_n; ++j) sys.add(xdof(i), xdof(j), K(i, j));
  }

  for (int i = 0; i < n; ++i) {
    if (constrained[i]) {
      sys.triplets.emplace_back(i, i, 1.0);
      sys.rhs[i] = values[i];
    }
  }

  SparseSystem out;
  out.matrix.resize(n, n);
  out.matrix.setFromTriplets(sys.triplets.begin(), sys.triplets.end());
  out.matrix.makeCompressed();
  out.rhs = std::move(sys.rhs);
  out.constrained = std::move(constrained);
  out.constraint_values = std::move(values);
  return out;
}

SolveReport solve(const SparseSystem& system) {
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.analyzePattern(system.matrix);
  lu.factorize(system.matrix);
  if (lu.info() != Eigen::Success) throw EvaluationError("solve: sparse factorization failed (singular matrix)");
  SolveReport report;
  report.solution = lu.solve(system.rhs);
  const double bnorm = system.rhs.norm();
  const double rnorm = (system.matrix * report.solution - system.rhs).norm();
  report.relative_residual = bnorm > 0.0 ? rnorm / bnorm : rnorm;
  report.poor_reduction = report.relative_residual > 1e-6;
  return report;
}

namespace {

struct LocalSide {
  std::vector<int> dofs;
  Eigen::VectorXd coeffs;

  void load(const XfemSpace& xspace, const Eigen::VectorXd& u, int elem, Side side) {
    xspace.element_dofs(elem, side, dofs);
    coeffs.resize(static_cast<Eigen::Index>(dofs.size()));
    for (std::size_t i = 0; i < dofs.size(); ++i) coeffs[static_cast<Eigen::Index>(i)] = dofs[i] >= 0 ? u[dofs[i]] : 0.0;
  }
};

} // namespace

ErrorNorms error_norms(const Eigen::VectorXd& u, const InterfaceProblem& problem, const XfemSpace& xspace,
                       const Deformation& d, int quad_order) {
  if (!problem.exact) throw ContractViolation("error_norms: exact solution missing");
  const FeSpace& base = xspace.base();
  const LevelSetView& view = xspace.view();
  const SimplicialMesh& mesh = base.mesh();
  const int k = base.degree();
  const int nloc = base.local_size();
  if (quad_order < 0) quad_order = 2 * k + 2;

  const TriangleRule full = gauss_rule_triangle(quad_order);
  const CutQuadrature cutq = build_cut_quadrature(view, quad_order);
  const auto& exact = *problem.exact;

  double l2 = 0.0, h1 = 0.0, jump2 = 0.0;
  std::vector<double> vals(nloc);
  std::vector<Vec2> rgrads(nloc);
  LocalSide local;

  for (int t = 0; t < mesh.num_elements(); ++t) {
    const AffineMap map = mesh.affine_map(t);
    const Mat2 A = map.A;
    const double detA = std::abs(A.determinant());

    auto accumulate_side = [&](Side side, std::span<const Vec2> pts, std::span<const double> wts,
                               bool physical_weights) {
      const int si = side_index(side);
      local.load(xspace, u, t, side);
      for (std::size_t q = 0; q < pts.size(); ++q) {
        lagrange::eval(k, pts[q], vals.data(), rgrads.data());
        const Mat2 grad_theta = d.active[t] ? Mat2(A + d.displacement.vec_ref_jacobian(t, pts[q])) : A;
        const double det = std::abs(grad_theta.determinant());
        const double w = physical_weights ? wts[q] * det / detA : wts[q] * det;
        const Mat2 G = grad_theta.inverse().transpose();
        double uh = 0.0;
        Vec2 guh = Vec2::Zero();
        for (int i = 0; i < nloc; ++i) {
          uh += local.coeffs[i] * vals[i];
          guh += local.coeffs[i] * (G * rgrads[i]);
        }
        const Vec2 y = d.active[t] ? d.map_point(t, pts[q]) : map.apply(pts[q]);
        const double diff = uh - exact[si].value(y);
        const Vec2 gdiff = guh - exact[si].gradient(y);
        l2 += w * diff * diff;
        h1 += w * gdiff.squaredNorm();
      }
    };

    if (!view.is_cut(t)) {
      const Side side = view.classification[t] == CutClass::NEG ? Side::NEG : Side::POS;
      accumulate_side(side, full.points, full.weights, false);
      continue;
    }

    const CutRule& rule = *cutq.rule_for(t);
    accumulate_side(Side::NEG, rule.neg_points, rule.neg_weights, true);
    accumulate_side(Side::POS, rule.pos_points, rule.pos_weights, true);

    LocalSide neg, pos;
    neg.load(xspace, u, t, Side::NEG);
    pos.load(xspace, u, t, Side::POS);
    for (std::size_t q = 0; q < rule.iface_points.size(); ++q) {
      const Vec2& ref = rule.iface_points[q];
      lagrange::eval(k, ref, vals.data(), nullptr);
      const Mat2 grad_theta = A + d.displacement.vec_ref_jacobian(t, ref);
      const Vec2 m = (grad_theta * A.inverse()) * rule.iface_tangent;
      const double stretch = m.norm();
      double uneg = 0.0, upos = 0.0;
      for (int i = 0; i < nloc; ++i) {
        uneg += neg.coeffs[i] * vals[i];
        upos += pos.coeffs[i] * vals[i];
      }
      const double jb = problem.beta[0] * uneg - problem.beta[1] * upos;
      jump2 += rule.iface_weights[q] * stretch * jb * jb;
    }
  }

  return {std::sqrt(l2), std::sqrt(h1), std::sqrt(jump2)};
}

Eigen::VectorXd interpolate_xfem(const XfemSpace& xspace,
                                 const std::array<std::function<double(const Vec2&)>, 2>& branches) {
  const FeSpace& base = xspace.base();
  Eigen::VectorXd u = Eigen::VectorXd::Zero(xspace.num_dofs());
  for (int i = 0; i < base.num_scalar_dofs(); ++i) {
    for (Side side : {Side::NEG, Side::POS}) {
      const int c = xspace.copy(i, side);
      if (c >= 0) u[c] = branches[side_index(side)](base.dof_point(i));
    }
  }
  return u;
}

InterfaceProblem make_disk_problem(double lambda) {
  constexpr double R = 0.6;
  const double w = M_PI / (R * R);
  InterfaceProblem p;
  p.alpha = {2.0, 1.0};
  p.beta = {1.0, 1.5};
  p.lambda = lambda;

  auto U = [w](double r2) { return std::cos(0.5 * w * r2); };
  // grad u = c * U'(r) x/r = -c * w * sin(w r^2 / 2) * x  (smooth at r=0)
  auto branch_value = [U](double c, double off) {
    return [=](const Vec2& x) { return c * U(x.squaredNorm()) + off; };
  };
  auto branch_gradient = [w](double c) {
    return [=](const Vec2& x) { return Vec2(-c * w * std::sin(0.5 * w * x.squaredNorm()) * x); };
  };
  // u_1 = alpha_2 U + beta_2 inside, u_2 = alpha_1 U + beta_1 outside
  SidedField u1{branch_value(p.alpha[1], p.beta[1]), branch_gradient(p.alpha[1])};
  SidedField u2{branch_value(p.alpha[0], p.beta[0]), branch_gradient(p.alpha[0])};
  p.exact = {u1, u2};

  // f_i = -alpha_i c_i lap U with lap U = -2w sin(w r^2/2) - w^2 r^2 cos(w r^2/2)
  auto make_rhs = [w](double prod) {
    return [=](const Vec2& x) {
      const double r2 = x.squaredNorm();
      return prod * (2.0 * w * std::sin(0.5 * w * r2) + w * w * r2 * std::cos(0.5 * w * r2));
    };
  };
  p.rhs = {make_rhs(p.alpha[0] * p.alpha[1]), make_rhs(p.alpha[1] * p.alpha[0])};
  p.dirichlet = u2.value;
  return p;
}

} // namespace isoq
