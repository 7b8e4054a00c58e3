#include "isoq/projection.hpp"

#include "isoq/errors.hpp"
#include "isoq/quadrature.hpp"

#include <Eigen/Dense>

namespace isoq {

namespace {

// Reference mass matrix of the Lagrange basis; the affine |det A| cancels
// between the local matrix and the local rhs, so one factorization serves
// every element.
Eigen::MatrixXd reference_mass(int degree, const TriangleRule& rule) {
  const int n = lagrange::size(degree);
  Eigen::MatrixXd mass = Eigen::MatrixXd::Zero(n, n);
  std::vector<double> vals(n);
  for (std::size_t q = 0; q < rule.points.size(); ++q) {
    lagrange::eval(degree, rule.points[q], vals.data(), nullptr);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) mass(i, j) += rule.weights[q] * vals[i] * vals[j];
  }
  return mass;
}

FeFunction project_impl(std::shared_ptr<const FeSpace> space, std::span<const int> region,
                        const LocalField& g, int quad_order, bool pin_vertices) {
  const FeSpace& sp = *space;
  const int k = sp.degree();
  const int n = sp.local_size();
  const int nc = sp.components();
  if (quad_order < 0) quad_order = 2 * k + 2;
  const TriangleRule rule = gauss_rule_triangle(quad_order);

  const Eigen::MatrixXd mass = reference_mass(k, rule);
  // Pinned variant: drop the vertex rows/cols (the first three local dofs).
  const int offset = pin_vertices ? 3 : 0;
  const int nfit = n - offset;
  Eigen::LDLT<Eigen::MatrixXd> solver;
  if (nfit > 0) {
    solver.compute(mass.block(offset, offset, nfit, nfit));
    if (solver.info() != Eigen::Success)
      throw EvaluationError("oswald_project: singular local mass matrix");
  }

  const int nq = static_cast<int>(rule.points.size());
  Eigen::MatrixXd basis(nq, n); // basis values at the rule points
  {
    std::vector<double> vals(n);
    for (int q = 0; q < nq; ++q) {
      lagrange::eval(k, rule.points[q], vals.data(), nullptr);
      for (int i = 0; i < n; ++i) basis(q, i) = vals[i];
    }
  }

  FeFunction out(space);
  Eigen::VectorXi counts = Eigen::VectorXi::Zero(sp.num_scalar_dofs());

  std::vector<double> gval(nc);
  Eigen::MatrixXd rhs(std::max(nfit, 1), nc);
  for (int t : region) {
    const auto dofs = sp.element_dofs(t);
    if (nfit > 0) {
      rhs.setZero();
      for (int q = 0; q < nq; ++q) {
        g(t, rule.points[q], gval.data());
        for (int i = 0; i < nfit; ++i)
          for (int c = 0; c < nc; ++c) rhs(i, c) += rule.weights[q] * basis(q, i + offset) * gval[c];
      }
      const Eigen::MatrixXd local = solver.solve(rhs.topRows(nfit));
      for (int i = 0; i < nfit; ++i)
        for (int c = 0; c < nc; ++c) out.coeffs[dofs[i + offset] * nc + c] += local(i, c);
    }
    for (int i = 0; i < n; ++i) counts[dofs[i]] += 1;
  }

  for (int i = 0; i < sp.num_scalar_dofs(); ++i) {
    if (counts[i] > 0)
      for (int c = 0; c < nc; ++c) out.coeffs[i * nc + c] /= counts[i];
  }
  return out;
}

} // namespace

FeFunction oswald_project(std::shared_ptr<const FeSpace> space, std::span<const int> region,
                          const LocalField& g, int quad_order) {
  return project_impl(std::move(space), region, g, quad_order, false);
}

FeFunction oswald_project_vertex_pinned(std::shared_ptr<const FeSpace> space, std::span<const int> region,
                                        const LocalField& g, int quad_order) {
  return project_impl(std::move(space), region, g, quad_order, true);
}

} // namespace isoq
