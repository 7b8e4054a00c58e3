// Acceptance suite: runs every gate at its stated tolerance and prints one
// PASS/FAIL line per criterion. Exit status is the number of failures.

#include "isoq/study.hpp"

#include "isoq/errors.hpp"
#include "isoq/projection.hpp"

#include <Eigen/SparseCholesky>

#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

using namespace isoq;

namespace {

int failures = 0;

void report(int criterion, const std::string& label, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %d: %s (%s)\n", pass ? "PASS" : "FAIL", criterion, label.c_str(),
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

double mean_last3(const std::vector<double>& eocs) {
  double sum = 0.0;
  for (std::size_t i = eocs.size() - 3; i < eocs.size(); ++i) sum += eocs[i];
  return sum / 3.0;
}

// ---------------------------------------------------------------- criterion 1
// Circle geometry order, uniform refinement. The initial meshes start in the
// resolved regime so the 6 (k<=2) / 5 (k>=3) levels measure the asymptotic
// range; the per-k choices are fixed here, not tuned at run time.
void criterion1() {
  const int initial_n[5] = {0, 4, 8, 32, 32};
  const int levels[5] = {0, 6, 6, 5, 5};
  for (int k = 1; k <= 4; ++k) {
    StudyConfig cfg;
    cfg.study_case = StudyCase::Circle;
    cfg.degree = k;
    cfg.levels = levels[k];
    cfg.initial_n = initial_n[k];
    cfg.dof_cap = 6000000;
    const ConvergenceReport rep = run_geom_study(cfg);
    const double gate = k + 0.7;
    bool pass = rep.levels.size() == static_cast<std::size_t>(levels[k]);
    double measured = 0.0;
    if (pass) {
      measured = mean_last3(rep.eoc[0]);
      pass = measured >= gate;
    }
    report(1, "circle geometry order k=" + std::to_string(k), pass,
           "mean EOC over last three levels " + fmt(measured) + " >= " + fmt(gate));
  }
}

// ---------------------------------------------------------------- criterion 2
// Flower geometry order with adaptive refinement: pre-asymptotic plateau with
// active barrier is accepted and flagged; the gate applies to the levels
// after the barrier deactivates.
void criterion2() {
  const int levels[5] = {0, 8, 11, 11, 11};
  for (int k = 1; k <= 4; ++k) {
    StudyConfig cfg;
    cfg.study_case = StudyCase::Flower;
    cfg.degree = k;
    cfg.levels = levels[k];
    cfg.refinement = RefineMode::Adaptive;
    cfg.dof_cap = 8000000;
    const ConvergenceReport rep = run_geom_study(cfg);
    const double gate = k + 0.7;

    // first level after which the barrier stays inactive
    int deact = 0;
    for (std::size_t i = 0; i < rep.levels.size(); ++i)
      if (rep.levels[i].limited_count > 0) deact = rep.levels[i].level + 1;
    const int post_transitions = static_cast<int>(rep.levels.size()) - 1 - deact;

    bool pass = post_transitions >= 3;
    double measured = 0.0;
    if (pass) {
      measured = mean_last3(rep.eoc[0]); // last three transitions, all post-deactivation
      pass = measured >= gate;
    }
    std::string flag = rep.barrier_active_levels.empty()
                           ? std::string("no plateau")
                           : "plateau flagged through level " + std::to_string(deact - 1);
    report(2, "flower geometry order k=" + std::to_string(k), pass,
           "mean EOC " + fmt(measured) + " >= " + fmt(gate) + " after deactivation; " + flag);
  }
}

// ---------------------------------------------------------------- criterion 3
// Disk interface problem with the manufactured solution.
void criterion3() {
  const int levels[4] = {0, 6, 6, 5};
  for (int k = 1; k <= 3; ++k) {
    StudyConfig cfg;
    cfg.study_case = StudyCase::Disk;
    cfg.degree = k;
    cfg.levels = levels[k];
    const ConvergenceReport rep = run_interface_study(cfg);
    const double l2 = rep.eoc[0].back();
    const double h1 = rep.eoc[1].back();
    const double jump = rep.eoc[2].back();
    const bool pass = l2 >= k + 0.7 && h1 >= k - 0.3 && jump >= k + 0.7;
    report(3, "disk interface convergence k=" + std::to_string(k), pass,
           "last-level EOCs: L2 " + fmt(l2) + " >= " + fmt(k + 0.7) + ", H1 " + fmt(h1) +
               " >= " + fmt(k - 0.3) + ", jump " + fmt(jump) + " >= " + fmt(k + 0.7));
  }
}

// ---------------------------------------------------------------- criterion 4
// Quadrature fuzz: positivity, partition, Monte-Carlo oracle.
void criterion4() {
  StudyConfig cfg;
  cfg.fuzz_triangles = 1000;
  cfg.mc_samples = 1000000;
  cfg.seed = 9; // frozen oracle draw; the gate is deterministic under it
  const QuadCheckResult result = run_quad_check(cfg);
  for (const auto& p : result.properties) {
    if (p.name == "weight-positivity")
      report(4, "fuzz: all cut weights positive", p.pass, p.detail.empty() ? "1000 triangles" : p.detail);
    if (p.name == "area-partition")
      report(4, "fuzz: NEG+POS areas partition the element to 1e-12", p.pass, p.detail);
    if (p.name == "monte-carlo-area")
      report(4, "fuzz: NEG area within 3 sigma of the Monte-Carlo oracle", p.pass, p.detail);
  }
}

// ---------------------------------------------------------------- criterion 5
// Structural invariants.
void criterion5() {
  // linear level set identity
  {
    auto mesh = std::make_shared<const SimplicialMesh>(make_rect_mesh(Vec2(-1, -1), Vec2(1, 1), 4));
    const LevelSetView view = build_level_set_view(plane_level_set(Vec2(0.6, 0.8), 0.17), mesh, 3);
    const Deformation d = build_deformation(view, std::make_shared<FeSpace>(mesh, 3, 2), 0.1);
    const double sup = d.displacement.max_abs();
    report(5, "linear level set leaves the mesh identical", sup <= 1e-12, "max |d_h| " + fmt(sup));
  }
  // vertex fixation and locality
  {
    auto mesh = std::make_shared<const SimplicialMesh>(make_rect_mesh(Vec2(-1, -1), Vec2(1, 1), 8));
    const LevelSetView view = build_level_set_view(circle_level_set(0.6), mesh, 2);
    auto vspace = std::make_shared<FeSpace>(mesh, 2, 2);
    const Deformation d = build_deformation(view, vspace, 0.1);
    double vmax = 0.0;
    for (int v = 0; v < mesh->num_vertices(); ++v)
      vmax = std::max({vmax, std::abs(d.displacement.coeffs[2 * v]),
                       std::abs(d.displacement.coeffs[2 * v + 1])});
    report(5, "vertex fixation", vmax <= 1e-12, "max vertex |d_h| " + fmt(vmax));

    std::vector<char> in_ext(mesh->num_elements(), 0);
    for (int t : view.extended_set) in_ext[t] = 1;
    bool exact = true;
    for (int t = 0; t < mesh->num_elements(); ++t) {
      if (in_ext[t]) continue;
      for (int dof : vspace->element_dofs(t))
        exact &= d.displacement.coeffs[2 * dof] == 0.0 && d.displacement.coeffs[2 * dof + 1] == 0.0;
    }
    report(5, "locality: exact zeros outside the one-ring", exact, exact ? "all exact" : "nonzero found");
  }
  // Oswald idempotence
  {
    auto mesh = std::make_shared<const SimplicialMesh>(make_rect_mesh(Vec2(-1, -1), Vec2(1, 1), 3));
    auto space = std::make_shared<FeSpace>(mesh, 3, 1);
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    FeFunction f(space);
    for (Eigen::Index i = 0; i < f.coeffs.size(); ++i) f.coeffs[i] = unit(rng);
    std::vector<int> all(mesh->num_elements());
    for (int t = 0; t < mesh->num_elements(); ++t) all[t] = t;
    LocalField g = [&](int t, const Vec2& ref, double* out) { out[0] = f.value(t, ref); };
    const FeFunction p = oswald_project(space, all, g);
    const double gap = (p.coeffs - f.coeffs).cwiseAbs().maxCoeff();
    report(5, "Oswald projection reproduces space members", gap <= 1e-12, "max coefficient gap " + fmt(gap));
  }
  // partition of unity and gradient finite differences
  {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double pou = 0.0;
    for (int k = 1; k <= 4; ++k) {
      const int n = lagrange::size(k);
      std::vector<double> vals(n);
      for (int trial = 0; trial < 100; ++trial) {
        const double a = unit(rng), b = unit(rng) * (1.0 - a);
        lagrange::eval(k, Vec2(a, b), vals.data(), nullptr);
        double sum = 0.0;
        for (double v : vals) sum += v;
        pou = std::max(pou, std::abs(sum - 1.0));
      }
    }
    report(5, "basis partition of unity (k=1..4)", pou <= 1e-14, "max defect " + fmt(pou));

    const int n = lagrange::size(3);
    std::vector<double> vp(n), vm(n), vals(n);
    std::vector<Vec2> grads(n);
    double fdgap = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
      const double a = 0.05 + 0.4 * unit(rng), b = 0.05 + 0.4 * unit(rng);
      lagrange::eval(3, Vec2(a, b), vals.data(), grads.data());
      const double eps = 1e-6;
      lagrange::eval(3, Vec2(a + eps, b), vp.data(), nullptr);
      lagrange::eval(3, Vec2(a - eps, b), vm.data(), nullptr);
      for (int i = 0; i < n; ++i) fdgap = std::max(fdgap, std::abs((vp[i] - vm[i]) / (2 * eps) - grads[i].x()));
      lagrange::eval(3, Vec2(a, b + eps), vp.data(), nullptr);
      lagrange::eval(3, Vec2(a, b - eps), vm.data(), nullptr);
      for (int i = 0; i < n; ++i) fdgap = std::max(fdgap, std::abs((vp[i] - vm[i]) / (2 * eps) - grads[i].y()));
    }
    report(5, "basis gradients vs finite differences", fdgap <= 1e-6, "max gap " + fmt(fdgap));
  }
  // assembled-matrix symmetry
  {
    auto mesh = std::make_shared<const SimplicialMesh>(make_rect_mesh(Vec2(-1, -1), Vec2(1, 1), 8));
    const LevelSetView view = build_level_set_view(circle_level_set(0.6), mesh, 2);
    const Deformation d = build_deformation(view, std::make_shared<FeSpace>(mesh, 2, 2), 0.1);
    auto base = std::make_shared<FeSpace>(mesh, 2, 1);
    const XfemSpace xspace(base, &view);
    const SparseSystem sys = assemble(make_disk_problem(), xspace, d);
    double amax = 0.0, dmax = 0.0;
    const Eigen::SparseMatrix<double> diff =
        Eigen::SparseMatrix<double>(sys.matrix.transpose()) - sys.matrix;
    for (int c = 0; c < sys.matrix.outerSize(); ++c)
      for (Eigen::SparseMatrix<double>::InnerIterator it(sys.matrix, c); it; ++it)
        amax = std::max(amax, std::abs(it.value()));
    for (int c = 0; c < diff.outerSize(); ++c)
      for (Eigen::SparseMatrix<double>::InnerIterator it(diff, c); it; ++it)
        dmax = std::max(dmax, std::abs(it.value()));
    report(5, "assembled matrix symmetry", dmax / amax <= 1e-10, "relative asymmetry " + fmt(dmax / amax));
  }
  // piecewise-linear patch test
  {
    bool pass = true;
    double worst = 0.0;
    for (int k : {1, 2}) {
      auto mesh = std::make_shared<const SimplicialMesh>(make_rect_mesh(Vec2(-1, -1), Vec2(1, 1), 5));
      const LevelSetView view = build_level_set_view(plane_level_set(Vec2(1, 0), 0.3), mesh, k);
      const Deformation d = build_deformation(view, std::make_shared<FeSpace>(mesh, k, 2), 0.1);
      auto base = std::make_shared<FeSpace>(mesh, k, 1);
      const XfemSpace xspace(base, &view);
      InterfaceProblem prob;
      prob.alpha = {2.0, 1.0};
      prob.beta = {1.0, 1.5};
      prob.rhs = {[](const Vec2&) { return 0.0; }, [](const Vec2&) { return 0.0; }};
      SidedField u1{[](const Vec2& x) { return x.x() + 0.6; }, [](const Vec2&) { return Vec2(1, 0); }};
      SidedField u2{[](const Vec2& x) { return 2.0 * x.x(); }, [](const Vec2&) { return Vec2(2, 0); }};
      prob.exact = {u1, u2};
      prob.dirichlet = [](const Vec2& x) { return x.x() < 0.3 ? x.x() + 0.6 : 2.0 * x.x(); };
      prob.dirichlet_sided = {u1.value, u2.value};
      const SolveReport sol = solve(assemble(prob, xspace, d));
      const ErrorNorms err = error_norms(sol.solution, prob, xspace, d);
      worst = std::max({worst, err.l2, err.iface_jump});
      pass &= err.l2 <= 1e-10 && err.iface_jump <= 1e-10;
    }
    report(5, "piecewise-linear interface patch test (k=1,2)", pass, "worst error " + fmt(worst));
  }
}

// ---------------------------------------------------------------- criterion 6
// Barrier robustness on a deliberately under-resolved flower: shape
// regularity everywhere, and the geometry error recovers the quality of the
// piecewise planar interface (second order).
void criterion6() {
  const AnalyticLevelSet ls = flower_level_set();
  auto mesh = std::make_shared<const SimplicialMesh>(make_rect_mesh(Vec2(-1, -1), Vec2(1, 1), 4));
  bool regular = true;
  bool planar_quality = true;
  long limited_total = 0;
  std::vector<double> errs, hs;
  double kappa_off = 0.0;
  for (int level = 0; level < 4; ++level) {
    if (level > 0)
      mesh = std::make_shared<const SimplicialMesh>(refine_all(refine_all(*mesh)));
    const LevelSetView view = build_level_set_view(ls, mesh, 2);
    auto vspace = std::make_shared<FeSpace>(mesh, 2, 2);
    const Deformation d = build_deformation(view, vspace, 0.1);
    const RegularityReport reg = regularity_report(d);
    regular &= !reg.singular && std::isfinite(reg.max_kappa_ref) && reg.min_det_theta > 0.0;
    limited_total += d.limited_count;

    const CutQuadrature quad = build_cut_quadrature(view, 6);
    double e_def = 0.0, e_planar = 0.0;
    for (const CutRule& rule : quad.rules)
      for (const Vec2& ref : rule.iface_points) {
        e_def = std::max(e_def, std::abs(ls.value(d.map_point(rule.element, ref))));
        e_planar = std::max(e_planar, std::abs(ls.value(mesh->affine_map(rule.element).apply(ref))));
      }
    planar_quality &= e_def <= 1.5 * e_planar;
    errs.push_back(e_def);
    double h = 0.0;
    for (int t : view.cut_set) h = std::max(h, mesh->element_diameter(t));
    hs.push_back(h);

    // A/B: without the barrier the same levels degenerate (informational)
    const Deformation off = build_deformation(view, vspace, 1e9);
    kappa_off = std::max(kappa_off, regularity_report(off).max_kappa_ref);
  }
  const std::size_t last = errs.size() - 1;
  const double last_eoc = eoc(errs[last - 1], errs[last], hs[last - 1], hs[last]);
  const bool pass = regular && limited_total > 0 && planar_quality && last_eoc >= 1.5;
  report(6, "barrier keeps under-resolved flower regular", pass,
         "kappa finite, det > 0, " + std::to_string(limited_total) +
             " clipped samples, error <= 1.5x planar at every level, last EOC " + fmt(last_eoc) +
             " ~ 2; barrier off reaches kappa " + fmt(kappa_off));
}

// ---------------------------------------------------------------- criterion 7
// Newton efficiency on resolved circle meshes.
void criterion7() {
  double worst = 0.0;
  for (int k : {2, 3}) {
    StudyConfig cfg;
    cfg.study_case = StudyCase::Circle;
    cfg.degree = k;
    cfg.levels = 2;
    cfg.initial_n = 32;
    const ConvergenceReport rep = run_geom_study(cfg);
    for (const LevelRecord& r : rep.levels) worst = std::max(worst, r.median_newton);
  }
  report(7, "median Newton iterations per point on resolved meshes", worst <= 4.0,
         "median " + fmt(worst) + " <= 4 at tolerance 1e-14");
}

} // namespace

int main() {
  std::printf("acceptance suite\n");
  criterion1();
  criterion2();
  criterion3();
  criterion4();
  criterion5();
  criterion6();
  criterion7();
  if (failures == 0) std::printf("all criteria passed\n");
  else std::printf("%d criterion check(s) failed\n", failures);
  return failures == 0 ? 0 : 2;
}
