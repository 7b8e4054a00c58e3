#pragma once

#include "isoq/cutquad.hpp"
#include "isoq/deform.hpp"

#include <Eigen/Sparse>

#include <array>
#include <optional>

namespace isoq {

/// Scalar field with gradient, one branch per subdomain side.
struct SidedField {
  std::function<double(const Vec2&)> value;
  std::function<Vec2(const Vec2&)> gradient;
};

/// Elliptic interface problem
///   -div(alpha_i grad u) = f_i  in Omega_i,
///   [[alpha grad u . n]] = 0,  [[beta u]] = 0  on Gamma,
///   u = g_D on the (fitted) outer boundary.
struct InterfaceProblem {
  std::array<double, 2> alpha{1.0, 1.0};
  std::array<double, 2> beta{1.0, 1.0};
  std::array<std::function<double(const Vec2&)>, 2> rhs;
  std::function<double(const Vec2&)> dirichlet;
  // Per-side boundary data for interfaces that touch the outer boundary
  // (doubled boundary dofs then constrain each copy with its own branch).
  std::optional<std::array<std::function<double(const Vec2&)>, 2>> dirichlet_sided;
  std::optional<std::array<SidedField, 2>> exact;
  double lambda = 20.0; // Nitsche stabilization
};

/// Doubled Lagrange space: base dofs supported on a cut element carry one
/// copy per side; all other dofs exist once, on the side of their (uncut)
/// support. The view must outlive the space.
class XfemSpace {
public:
  XfemSpace(std::shared_ptr<const FeSpace> base, const LevelSetView* view);

  const FeSpace& base() const { return *base_; }
  const std::shared_ptr<const FeSpace>& base_ptr() const { return base_; }
  const LevelSetView& view() const { return *view_; }
  int num_dofs() const { return num_dofs_; }
  int num_duplicated() const { return num_duplicated_; }

  /// Global dof of the side copy of a base scalar dof, -1 when absent.
  int copy(int scalar_dof, Side side) const { return copies_[scalar_dof][static_cast<int>(side)]; }

  /// Side copies of an element's local dofs; entries are -1 when the side is
  /// not present (uncut elements carry only their own side).
  void element_dofs(int elem, Side side, std::vector<int>& out) const;

private:
  std::shared_ptr<const FeSpace> base_;
  const LevelSetView* view_;
  std::vector<std::array<int, 2>> copies_;
  int num_dofs_ = 0;
  int num_duplicated_ = 0;
};

XfemSpace build_xfem_space(std::shared_ptr<const FeSpace> base, const LevelSetView& view);

/// Symmetric sparse system with strongly imposed Dirichlet values
/// (symmetric elimination; constrained rows hold identity).
struct SparseSystem {
  Eigen::SparseMatrix<double> matrix;
  Eigen::VectorXd rhs;
  std::vector<char> constrained;
  Eigen::VectorXd constraint_values;
};

/// Isoparametric Nitsche-XFEM assembly:
///   sum_i int_{Psi(Omega_i,h)} beta_i alpha_i grad u . grad v
///   + int_{Gamma_h} {-alpha grad u . n}[[beta v]] + transpose
///   + int_{Gamma_h} (avg(alpha) lambda k^2 / h) [[beta u]][[beta v]]
///   = sum_i int_{Psi(Omega_i,h)} beta_i f_i v
/// with Heaviside averaging weights from the undeformed cut areas (ties to
/// NEG) and h the undeformed element diameter.
SparseSystem assemble(const InterfaceProblem& problem, const XfemSpace& xspace, const Deformation& d,
                      int quad_order = -1);

struct SolveReport {
  Eigen::VectorXd solution;
  double relative_residual = 0.0;
  bool poor_reduction = false; // residual reduction worse than 1e-6
};

/// Sparse direct solve; a structurally singular matrix is a hard error, a
/// poor residual reduction only sets the warning flag.
SolveReport solve(const SparseSystem& system);

struct ErrorNorms {
  double l2 = 0.0;
  double h1_semi = 0.0;   // broken over the two sides
  double iface_jump = 0.0; // ||[[beta u_h]]||_{L2(Gamma_h)}
};

ErrorNorms error_norms(const Eigen::VectorXd& u, const InterfaceProblem& problem, const XfemSpace& xspace,
                       const Deformation& d, int quad_order = -1);

/// Side-wise nodal interpolation into the doubled space.
Eigen::VectorXd interpolate_xfem(const XfemSpace& xspace,
                                 const std::array<std::function<double(const Vec2&)>, 2>& branches);

/// Manufactured disk problem: alpha=(2,1), beta=(1,3/2), interface radius
/// R=0.6, u_i = alpha_{3-i} U(r) + beta_{3-i} with U(r)=cos(pi r^2/(2R^2)).
InterfaceProblem make_disk_problem(double lambda = 20.0);

} // namespace isoq
