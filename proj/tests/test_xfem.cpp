#include "isoq/xfem.hpp"

#include "isoq/errors.hpp"
#include "oracles.hpp"

#include <Eigen/SparseCholesky>

#include <doctest.h>

#include <cmath>

using namespace isoq;

namespace {

std::shared_ptr<const SimplicialMesh> shared_mesh(int n) {
  return std::make_shared<const SimplicialMesh>(make_rect_mesh(Vec2(-1, -1), Vec2(1, 1), n));
}

struct Pipeline {
  std::shared_ptr<const SimplicialMesh> mesh;
  LevelSetView view;
  Deformation deformation;
  std::shared_ptr<const FeSpace> base;
  XfemSpace xspace;

  Pipeline(const AnalyticLevelSet& ls, int n, int k)
      : mesh(shared_mesh(n)),
        view(build_level_set_view(ls, mesh, k)),
        deformation(build_deformation(view, std::make_shared<FeSpace>(mesh, k, 2), 0.1)),
        base(std::make_shared<FeSpace>(mesh, k, 1)),
        xspace(base, &view) {}
};

// piecewise-linear compatible solution across the plane x = 0.3 with
// alpha=(2,1), beta=(1,1.5): u1 = x + 0.6 (NEG), u2 = 2x (POS)
InterfaceProblem patch_problem() {
  InterfaceProblem p;
  p.alpha = {2.0, 1.0};
  p.beta = {1.0, 1.5};
  p.lambda = 20.0;
  p.rhs = {[](const Vec2&) { return 0.0; }, [](const Vec2&) { return 0.0; }};
  SidedField u1{[](const Vec2& x) { return x.x() + 0.6; }, [](const Vec2&) { return Vec2(1.0, 0.0); }};
  SidedField u2{[](const Vec2& x) { return 2.0 * x.x(); }, [](const Vec2&) { return Vec2(2.0, 0.0); }};
  p.exact = {u1, u2};
  p.dirichlet = [](const Vec2& x) { return x.x() < 0.3 ? x.x() + 0.6 : 2.0 * x.x(); };
  p.dirichlet_sided = {u1.value, u2.value}; // the straight interface exits the domain
  return p;
}

} // namespace

TEST_SUITE_BEGIN("xfem");

TEST_CASE("without cut elements the doubled space equals the base space") {
  const Pipeline p(circle_level_set(3.0), 4, 2); // interface outside the domain
  REQUIRE(p.view.cut_set.empty());
  CHECK(p.xspace.num_dofs() == p.base->num_scalar_dofs());
  CHECK(p.xspace.num_duplicated() == 0);
}

TEST_CASE("doubled dofs are exactly those supported on cut elements") {
  const Pipeline p(circle_level_set(0.6), 8, 2);
  std::vector<char> touched(p.base->num_scalar_dofs(), 0);
  for (int t : p.view.cut_set)
    for (int dof : p.base->element_dofs(t)) touched[dof] = 1;
  int doubled = 0;
  for (int i = 0; i < p.base->num_scalar_dofs(); ++i) {
    const bool two = p.xspace.copy(i, Side::NEG) >= 0 && p.xspace.copy(i, Side::POS) >= 0;
    CHECK(two == static_cast<bool>(touched[i]));
    if (two) ++doubled;
  }
  CHECK(p.xspace.num_dofs() == p.base->num_scalar_dofs() + doubled);
}

TEST_CASE("duplicated dof count scales like 1/h") {
  std::vector<double> scaled;
  for (int level = 0; level < 3; ++level) {
    const int n = 8 << level;
    const Pipeline p(circle_level_set(0.6), n, 2);
    scaled.push_back(static_cast<double>(p.xspace.num_duplicated()) / n);
  }
  for (double s : scaled) {
    CHECK(s > 0.5 * scaled.front());
    CHECK(s < 2.0 * scaled.front());
  }
}

TEST_CASE("assembled matrix is symmetric") {
  const Pipeline p(circle_level_set(0.6), 8, 2);
  const SparseSystem sys = assemble(make_disk_problem(), p.xspace, p.deformation);
  const Eigen::SparseMatrix<double> diff = Eigen::SparseMatrix<double>(sys.matrix.transpose()) - sys.matrix;
  double amax = 0.0;
  for (int c = 0; c < sys.matrix.outerSize(); ++c)
    for (Eigen::SparseMatrix<double>::InnerIterator it(sys.matrix, c); it; ++it)
      amax = std::max(amax, std::abs(it.value()));
  double dmax = 0.0;
  for (int c = 0; c < diff.outerSize(); ++c)
    for (Eigen::SparseMatrix<double>::InnerIterator it(diff, c); it; ++it)
      dmax = std::max(dmax, std::abs(it.value()));
  CHECK(dmax / amax <= 1e-10);
}

TEST_CASE("piecewise-linear patch solution is reproduced") {
  const AnalyticLevelSet plane = plane_level_set(Vec2(1, 0), 0.3);
  for (int k : {1, 2}) {
    auto mesh = shared_mesh(5); // 0.3 falls inside elements, not on edges
    const LevelSetView view = build_level_set_view(plane, mesh, k);
    REQUIRE(!view.cut_set.empty());
    const Deformation d = build_deformation(view, std::make_shared<FeSpace>(mesh, k, 2), 0.1);
    CHECK(d.displacement.max_abs() < 1e-12); // planar level set: identity
    auto base = std::make_shared<FeSpace>(mesh, k, 1);
    const XfemSpace xspace(base, &view);
    const InterfaceProblem prob = patch_problem();
    const SolveReport sol = solve(assemble(prob, xspace, d));
    const ErrorNorms err = error_norms(sol.solution, prob, xspace, d);
    CHECK(err.l2 < 1e-10);
    CHECK(err.h1_semi < 1e-9);
    CHECK(err.iface_jump < 1e-10);
  }
}

TEST_CASE("uncut problems match the fitted FEM solution to solver accuracy") {
  const Pipeline p(circle_level_set(3.0), 6, 2);
  REQUIRE(p.view.cut_set.empty());
  InterfaceProblem prob;
  prob.alpha = {1.0, 1.0};
  prob.beta = {1.0, 1.0};
  auto f = [](const Vec2& x) { return std::sin(2.0 * x.x()) * x.y(); };
  auto g = [](const Vec2& x) { return x.x() * x.y(); };
  prob.rhs = {f, f};
  prob.dirichlet = g;
  const SolveReport sol = solve(assemble(prob, p.xspace, p.deformation, 6));

  const Eigen::VectorXd fitted = oracles::fitted_fem_solve(p.base, 1.0, f, g, 6);
  // the doubled space is the base space here; ids may differ only by copy side
  double dmax = 0.0;
  for (int i = 0; i < p.base->num_scalar_dofs(); ++i) {
    const int c = std::max(p.xspace.copy(i, Side::NEG), p.xspace.copy(i, Side::POS));
    dmax = std::max(dmax, std::abs(sol.solution[c] - fitted[i]));
  }
  CHECK(dmax < 1e-10);
}

TEST_CASE("equal-coefficient cut problem matches fitted FEM errors within a percent") {
  // beta_1 = beta_2, alpha = 1: the interface is immaterial, u smooth
  const double R = 0.6;
  const double w = M_PI / (R * R);
  auto uex = [=](const Vec2& x) { return std::cos(0.5 * w * x.squaredNorm()) + 1.0; };
  auto gux = [=](const Vec2& x) { return Vec2(-w * std::sin(0.5 * w * x.squaredNorm()) * x); };
  auto f = [=](const Vec2& x) {
    const double r2 = x.squaredNorm();
    return 2.0 * w * std::sin(0.5 * w * r2) + w * w * r2 * std::cos(0.5 * w * r2);
  };
  const Pipeline p(circle_level_set(R), 16, 2);
  InterfaceProblem prob;
  prob.alpha = {1.0, 1.0};
  prob.beta = {1.0, 1.0};
  prob.rhs = {f, f};
  prob.dirichlet = uex;
  prob.exact = {SidedField{uex, gux}, SidedField{uex, gux}};
  const SolveReport sol = solve(assemble(prob, p.xspace, p.deformation));
  const ErrorNorms err = error_norms(sol.solution, prob, p.xspace, p.deformation);

  const Eigen::VectorXd fitted = oracles::fitted_fem_solve(p.base, 1.0, f, uex, 6);
  FeFunction uf(p.base);
  uf.coeffs = fitted;
  const double fitted_l2 = oracles::fem_l2_error(uf, uex, 8);
  CHECK(err.l2 == doctest::Approx(fitted_l2).epsilon(0.01));
}

TEST_CASE("one-dof systems solve directly") {
  SparseSystem sys;
  sys.matrix.resize(1, 1);
  sys.matrix.insert(0, 0) = 4.0;
  sys.matrix.makeCompressed();
  sys.rhs = Eigen::VectorXd::Constant(1, 2.0);
  sys.constrained.assign(1, 0);
  sys.constraint_values = Eigen::VectorXd::Zero(1);
  const SolveReport sol = solve(sys);
  CHECK(sol.solution[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(sol.relative_residual < 1e-15);
}

TEST_CASE("uncut SPD solve reaches tight residuals") {
  const Pipeline p(circle_level_set(3.0), 8, 1);
  InterfaceProblem prob;
  prob.rhs = {[](const Vec2&) { return 1.0; }, [](const Vec2&) { return 1.0; }};
  prob.dirichlet = [](const Vec2&) { return 0.0; };
  const SolveReport sol = solve(assemble(prob, p.xspace, p.deformation));
  CHECK(sol.relative_residual <= 1e-12);
  CHECK(!sol.poor_reduction);
}

TEST_CASE("structurally broken systems raise a hard error") {
  SparseSystem sys;
  sys.matrix.resize(2, 2);
  sys.matrix.insert(0, 0) = 1.0; // row/col 1 entirely empty
  sys.matrix.makeCompressed();
  sys.rhs = Eigen::VectorXd::Ones(2);
  CHECK_THROWS_AS(solve(sys), EvaluationError);
}

TEST_CASE("interpolated exact branches give interpolation-order errors") {
  const InterfaceProblem prob = make_disk_problem();
  double prev_l2 = 0.0, prev_jump = 0.0;
  for (int level = 0; level < 2; ++level) {
    const Pipeline p(circle_level_set(0.6), 8 << level, 2);
    const Eigen::VectorXd u = interpolate_xfem(
        p.xspace, {(*prob.exact)[0].value, (*prob.exact)[1].value});
    const ErrorNorms err = error_norms(u, prob, p.xspace, p.deformation);
    if (level > 0) {
      CHECK(prev_l2 / err.l2 > 5.0);     // ~2^{k+1}
      CHECK(prev_jump / err.iface_jump > 2.5);
    }
    prev_l2 = err.l2;
    prev_jump = err.iface_jump;
  }
}

TEST_CASE("discrete global polynomials with equal beta have zero errors") {
  const Pipeline p(circle_level_set(0.6), 6, 2);
  InterfaceProblem prob;
  prob.alpha = {1.0, 1.0};
  prob.beta = {1.0, 1.0};
  auto poly = [](const Vec2& x) { return 0.5 + x.x() - 2.0 * x.y() + x.x() * x.y(); };
  auto gpoly = [](const Vec2& x) { return Vec2(1.0 + x.y(), -2.0 + x.x()); };
  prob.exact = {SidedField{poly, gpoly}, SidedField{poly, gpoly}};
  prob.rhs = {[](const Vec2&) { return 0.0; }, [](const Vec2&) { return 0.0; }};
  prob.dirichlet = poly;
  const Eigen::VectorXd u = interpolate_xfem(p.xspace, {poly, poly});
  const Deformation id = identity_deformation(std::make_shared<FeSpace>(p.mesh, 2, 2));
  const ErrorNorms err = error_norms(u, prob, p.xspace, id);
  CHECK(err.l2 < 1e-10);
  CHECK(err.h1_semi < 1e-10);
  CHECK(err.iface_jump < 1e-10);
}

TEST_CASE("no averaging ties occur on the study meshes") {
  for (int level = 0; level < 3; ++level) {
    const Pipeline p(circle_level_set(0.6), 4 << level, 2);
    const CutQuadrature quad = build_cut_quadrature(p.view, 6);
    for (const CutRule& rule : quad.rules) {
      const double neg = rule.area(Side::NEG);
      const double half = 0.5 * p.mesh->element_area(rule.element);
      CHECK(std::abs(neg - half) > 1e-14);
    }
  }
}

TEST_CASE("coercivity probe: no eigenvalue below -1e-10 * scale") {
  const Pipeline p(circle_level_set(0.6), 8, 2);
  const SparseSystem sys = assemble(make_disk_problem(), p.xspace, p.deformation);
  double amax = 0.0;
  for (int c = 0; c < sys.matrix.outerSize(); ++c)
    for (Eigen::SparseMatrix<double>::InnerIterator it(sys.matrix, c); it; ++it)
      amax = std::max(amax, std::abs(it.value()));
  const double shift = 1e-10 * amax;
  Eigen::SparseMatrix<double> shifted = sys.matrix;
  for (int i = 0; i < shifted.rows(); ++i) shifted.coeffRef(i, i) += shift;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(shifted);
  REQUIRE(ldlt.info() == Eigen::Success);
  CHECK(ldlt.vectorD().minCoeff() >= 0.0);
}

TEST_CASE("missing deformation on cut elements is a contract violation") {
  const Pipeline p(circle_level_set(0.6), 6, 2);
  const Deformation id = identity_deformation(std::make_shared<FeSpace>(p.mesh, 2, 2));
  CHECK_THROWS_AS(assemble(make_disk_problem(), p.xspace, id), ContractViolation);
}

TEST_CASE("disk study errors shrink at the expected short-run rate (k=2)") {
  const InterfaceProblem prob = make_disk_problem();
  double prev = 0.0;
  for (int level = 0; level < 2; ++level) {
    const Pipeline p(circle_level_set(0.6), 8 << level, 2);
    const SolveReport sol = solve(assemble(prob, p.xspace, p.deformation));
    const ErrorNorms err = error_norms(sol.solution, prob, p.xspace, p.deformation);
    if (level > 0) CHECK(prev / err.l2 > 5.0);
    prev = err.l2;
  }
}

TEST_SUITE_END();
