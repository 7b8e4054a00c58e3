#include "isoq/study.hpp"

#include "isoq/errors.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

namespace isoq {

using nlohmann::json;

void StudyConfig::validate() const {
  if (degree < 1 || degree > 4) throw std::invalid_argument("config: k must be in [1,4]");
  if (levels < 1) throw std::invalid_argument("config: levels must be >= 1");
  if (!(gamma > 0.0)) throw std::invalid_argument("config: gamma must be positive");
  if (!(lambda > 0.0)) throw std::invalid_argument("config: lambda must be positive");
  if (threads < 1) throw std::invalid_argument("config: threads must be >= 1");
  if (dof_cap < 1) throw std::invalid_argument("config: dof cap must be positive");
  if (fuzz_triangles < 1) throw std::invalid_argument("config: fuzz triangle count must be >= 1");
  if (mc_samples < 100) throw std::invalid_argument("config: Monte-Carlo sample count too small");
  if (initial_n != -1 && initial_n < 1) throw std::invalid_argument("config: initial mesh subdivisions must be >= 1");
}

double eoc(double e_prev, double e_cur, double h_prev, double h_cur) {
  if (!(e_prev > 0.0) || !(e_cur > 0.0) || !(h_prev > h_cur)) return std::numeric_limits<double>::quiet_NaN();
  return std::log(e_prev / e_cur) / std::log(h_prev / h_cur);
}

namespace {

const char* case_name(StudyCase c) {
  switch (c) {
    case StudyCase::Circle: return "circle";
    case StudyCase::Flower: return "flower";
    default: return "disk";
  }
}

const char* refine_name(RefineMode m) { return m == RefineMode::Uniform ? "uniform" : "adaptive"; }

AnalyticLevelSet study_level_set(StudyCase c) {
  switch (c) {
    case StudyCase::Flower: return flower_level_set();
    default: return circle_level_set(0.6);
  }
}

int default_initial_n(StudyCase c) { return c == StudyCase::Flower ? 8 : 4; }

long projected_scalar_dofs(const SimplicialMesh& mesh, int k) {
  return static_cast<long>(mesh.num_vertices()) + static_cast<long>(mesh.num_edges()) * (k - 1) +
         static_cast<long>(mesh.num_elements()) * ((k - 1) * (k - 2) / 2);
}

// One study level = two bisection sweeps, so diameters halve on structured
// meshes. Adaptive sweeps mark the cut elements plus one vertex ring.
std::shared_ptr<const SimplicialMesh> advance_mesh(std::shared_ptr<const SimplicialMesh> mesh,
                                                   const AnalyticLevelSet& ls, const StudyConfig& cfg) {
  for (int sweep = 0; sweep < 2; ++sweep) {
    if (cfg.refinement == RefineMode::Uniform) {
      mesh = std::make_shared<const SimplicialMesh>(refine_all(*mesh));
    } else {
      const LevelSetView view = build_level_set_view(ls, mesh, 1);
      if (view.extended_set.empty()) {
        mesh = std::make_shared<const SimplicialMesh>(refine_all(*mesh));
      } else {
        mesh = std::make_shared<const SimplicialMesh>(refine(*mesh, view.extended_set));
      }
    }
  }
  return mesh;
}

double cut_region_diameter(const LevelSetView& view) {
  double h = 0.0;
  for (int t : view.cut_set) h = std::max(h, view.mesh->element_diameter(t));
  return h;
}

void export_level(const StudyConfig& cfg, int level, const SimplicialMesh& mesh, const Deformation& d) {
  if (!cfg.export_meshes || cfg.output_dir.empty()) return;
  std::filesystem::create_directories(cfg.output_dir);
  std::vector<Vec2> disp(mesh.num_vertices());
  for (int v = 0; v < mesh.num_vertices(); ++v)
    disp[v] = Vec2(d.displacement.coeffs[2 * v], d.displacement.coeffs[2 * v + 1]);
  std::ostringstream base;
  base << cfg.output_dir << "/level" << level;
  write_mesh_txt(mesh, base.str() + "_mesh.txt", &disp);
  write_deformation_nodes(d, base.str() + "_deformation.csv");
}

json config_json(const StudyConfig& c) {
  return json{{"case", case_name(c.study_case)},
              {"k", c.degree},
              {"levels", c.levels},
              {"refine", refine_name(c.refinement)},
              {"gamma", c.gamma},
              {"lambda", c.lambda},
              {"quad_order", c.quad_order},
              {"out", c.output_dir},
              {"export_meshes", c.export_meshes},
              {"seed", c.seed},
              {"threads", c.threads},
              {"dof_cap", c.dof_cap},
              {"initial_n", c.initial_n},
              {"fuzz_triangles", c.fuzz_triangles},
              {"mc_samples", c.mc_samples}};
}

} // namespace

std::string ConvergenceReport::to_json(bool include_timings) const {
  json j;
  j["study"] = study;
  j["config"] = config_json(config);
  json jlevels = json::array();
  for (const LevelRecord& r : levels) {
    json jr{{"level", r.level},
            {"h_max", r.h_max},
            {"h_cut", r.h_cut},
            {"dofs", r.dofs},
            {"cut_elements", r.cut_elements},
            {"solver_residual", r.solver_residual},
            {"limited_count", r.limited_count},
            {"failed_count", r.failed_count},
            {"max_kappa", r.max_kappa},
            {"median_newton", r.median_newton},
            {"wall_seconds", include_timings ? r.wall_seconds : 0.0},
            {"skipped", r.skipped}};
    if (study == "interface") {
      jr["l2"] = r.l2;
      jr["h1"] = r.h1;
      jr["jump"] = r.jump;
    } else {
      jr["geom_error"] = r.geom_error;
    }
    jlevels.push_back(jr);
  }
  j["levels"] = jlevels;
  json jeoc;
  for (std::size_t m = 0; m < eoc_metrics.size(); ++m) jeoc[eoc_metrics[m]] = eoc[m];
  j["eoc"] = jeoc;
  j["barrier_active_levels"] = barrier_active_levels;
  return j.dump(2);
}

std::string ConvergenceReport::to_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "level,h_max,h_cut,dofs,cut_elements";
  if (study == "interface") out << ",l2,h1,jump";
  else out << ",geom_error";
  for (const std::string& m : eoc_metrics) out << ",eoc_" << m;
  out << ",solver_residual,limited_count,failed_count,max_kappa,median_newton,wall_seconds,skipped\n";
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const LevelRecord& r = levels[i];
    out << r.level << "," << r.h_max << "," << r.h_cut << "," << r.dofs << "," << r.cut_elements;
    if (study == "interface") out << "," << r.l2 << "," << r.h1 << "," << r.jump;
    else out << "," << r.geom_error;
    for (std::size_t m = 0; m < eoc_metrics.size(); ++m) {
      out << ",";
      if (i >= 1 && i - 1 < eoc[m].size() && std::isfinite(eoc[m][i - 1])) out << eoc[m][i - 1];
    }
    out << "," << r.solver_residual << "," << r.limited_count << "," << r.failed_count << "," << r.max_kappa
        << "," << r.median_newton << "," << r.wall_seconds << "," << (r.skipped ? 1 : 0) << "\n";
  }
  return out.str();
}

void ConvergenceReport::write(const std::string& dir) const {
  if (dir.empty()) return;
  std::filesystem::create_directories(dir);
  std::ofstream jf(dir + "/report.json");
  jf << to_json() << "\n";
  std::ofstream cf(dir + "/report.csv");
  cf << to_csv();
}

namespace {

void finish_report(ConvergenceReport& report, const std::vector<double>& hs,
                   const std::vector<std::vector<double>>& errors) {
  report.eoc.assign(report.eoc_metrics.size(), {});
  for (std::size_t m = 0; m < report.eoc_metrics.size(); ++m)
    for (std::size_t i = 1; i < hs.size(); ++i)
      report.eoc[m].push_back(eoc(errors[m][i - 1], errors[m][i], hs[i - 1], hs[i]));
  for (const LevelRecord& r : report.levels)
    if (r.limited_count > 0 && !r.skipped) report.barrier_active_levels.push_back(r.level);
}

} // namespace

ConvergenceReport run_geom_study(const StudyConfig& config) {
  config.validate();
  if (config.study_case == StudyCase::Disk)
    throw std::invalid_argument("geom-study expects the circle or flower case");
  const AnalyticLevelSet ls = study_level_set(config.study_case);
  const int k = config.degree;
  const int n0 = config.initial_n > 0 ? config.initial_n : default_initial_n(config.study_case);

  ConvergenceReport report;
  report.study = "geom";
  report.config = config;
  report.eoc_metrics = {"geom"};

  auto mesh = std::make_shared<const SimplicialMesh>(make_rect_mesh(Vec2(-1, -1), Vec2(1, 1), n0));
  std::vector<double> hs;
  std::vector<double> errs;

  for (int level = 0; level < config.levels; ++level) {
    if (level > 0) mesh = advance_mesh(mesh, ls, config);

    LevelRecord rec;
    rec.level = level;
    if (projected_scalar_dofs(*mesh, k) > config.dof_cap) {
      rec.skipped = true;
      report.levels.push_back(rec);
      break;
    }

    const auto t0 = std::chrono::steady_clock::now();
    const LevelSetView view = build_level_set_view(ls, mesh, k);
    auto vspace = std::make_shared<FeSpace>(mesh, k, 2);
    const Deformation d = build_deformation(view, vspace, config.gamma, config.quad_order, config.threads);
    const int order = config.quad_order < 0 ? 2 * k + 2 : config.quad_order;
    const CutQuadrature cutq = build_cut_quadrature(view, order);

    double err = 0.0;
    for (const CutRule& rule : cutq.rules)
      for (const Vec2& ref : rule.iface_points)
        err = std::max(err, std::abs(ls.value(d.map_point(rule.element, ref))));

    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rec.h_max = mesh->max_diameter();
    rec.h_cut = cut_region_diameter(view);
    rec.dofs = vspace->num_dofs();
    rec.cut_elements = static_cast<long>(view.cut_set.size());
    rec.geom_error = err;
    rec.limited_count = d.limited_count;
    rec.failed_count = d.failed_count;
    rec.max_kappa = d.max_kappa;
    rec.median_newton = d.median_newton_iterations();
    report.levels.push_back(rec);
    hs.push_back(rec.h_cut > 0.0 ? rec.h_cut : rec.h_max);
    errs.push_back(err);
    export_level(config, level, *mesh, d);
  }

  finish_report(report, hs, {errs});
  report.write(config.output_dir);
  return report;
}

ConvergenceReport run_interface_study(const StudyConfig& config) {
  config.validate();
  if (config.study_case != StudyCase::Disk)
    throw std::invalid_argument("interface-solve expects the disk case");
  const AnalyticLevelSet ls = circle_level_set(0.6);
  const InterfaceProblem problem = make_disk_problem(config.lambda);
  const int k = config.degree;
  const int n0 = config.initial_n > 0 ? config.initial_n : default_initial_n(config.study_case);

  ConvergenceReport report;
  report.study = "interface";
  report.config = config;
  report.eoc_metrics = {"l2", "h1", "jump"};

  auto mesh = std::make_shared<const SimplicialMesh>(make_rect_mesh(Vec2(-1, -1), Vec2(1, 1), n0));
  std::vector<double> hs;
  std::vector<std::vector<double>> errs(3);

  for (int level = 0; level < config.levels; ++level) {
    if (level > 0) mesh = advance_mesh(mesh, ls, config);

    LevelRecord rec;
    rec.level = level;
    if (projected_scalar_dofs(*mesh, k) > config.dof_cap) {
      rec.skipped = true;
      report.levels.push_back(rec);
      break;
    }

    const auto t0 = std::chrono::steady_clock::now();
    const LevelSetView view = build_level_set_view(ls, mesh, k);
    auto vspace = std::make_shared<FeSpace>(mesh, k, 2);
    const Deformation d = build_deformation(view, vspace, config.gamma, config.quad_order, config.threads);
    auto base = std::make_shared<FeSpace>(mesh, k, 1);
    const XfemSpace xspace = build_xfem_space(base, view);
    const SparseSystem system = assemble(problem, xspace, d, config.quad_order);
    const SolveReport sol = solve(system);
    const ErrorNorms norms = error_norms(sol.solution, problem, xspace, d, config.quad_order);

    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rec.h_max = mesh->max_diameter();
    rec.h_cut = cut_region_diameter(view);
    rec.dofs = xspace.num_dofs();
    rec.cut_elements = static_cast<long>(view.cut_set.size());
    rec.l2 = norms.l2;
    rec.h1 = norms.h1_semi;
    rec.jump = norms.iface_jump;
    rec.solver_residual = sol.relative_residual;
    rec.limited_count = d.limited_count;
    rec.failed_count = d.failed_count;
    rec.max_kappa = d.max_kappa;
    rec.median_newton = d.median_newton_iterations();
    report.levels.push_back(rec);
    hs.push_back(rec.h_max);
    errs[0].push_back(norms.l2);
    errs[1].push_back(norms.h1_semi);
    errs[2].push_back(norms.iface_jump);
    export_level(config, level, *mesh, d);
  }

  finish_report(report, hs, errs);
  report.write(config.output_dir);
  return report;
}

bool QuadCheckResult::all_pass() const {
  for (const auto& p : properties)
    if (!p.pass) return false;
  return true;
}

std::string QuadCheckResult::to_text() const {
  std::ostringstream out;
  for (const auto& p : properties)
    out << (p.pass ? "PASS" : "FAIL") << " " << p.name << (p.detail.empty() ? "" : " (" + p.detail + ")")
        << "\n";
  return out.str();
}

QuadCheckResult run_quad_check(const StudyConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> coord(-1.0, 1.0);
  std::uniform_real_distribution<double> mag(0.01, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int order = config.quad_order < 0 ? 4 : config.quad_order;

  bool positive = true, partition = true, mc_ok = true;
  double worst_partition = 0.0, worst_sigma = 0.0;

  for (int trial = 0; trial < config.fuzz_triangles; ++trial) {
    std::array<Vec2, 3> verts;
    do {
      for (auto& v : verts) v = Vec2(coord(rng), coord(rng));
    } while (std::abs(signed_area(verts[0], verts[1], verts[2])) < 0.05);
    if (signed_area(verts[0], verts[1], verts[2]) < 0.0) std::swap(verts[1], verts[2]);

    std::array<double, 3> values;
    do {
      for (auto& w : values) w = (unit(rng) < 0.5 ? -1.0 : 1.0) * mag(rng);
      if (unit(rng) < 0.05) values[static_cast<int>(unit(rng) * 3.0) % 3] = 0.0;
    } while (classify_values(values[0], values[1], values[2]) != CutClass::CUT);

    CutRule rule = cut_rule_from_values(verts, values, order);
    if (config.inject_negative_weight && trial == 0) {
      if (!rule.neg_weights.empty()) rule.neg_weights[0] = -rule.neg_weights[0];
    }

    for (double w : rule.neg_weights) positive &= (w > 0.0);
    for (double w : rule.pos_weights) positive &= (w > 0.0);
    for (double w : rule.iface_weights) positive &= (w > 0.0);

    const double area = signed_area(verts[0], verts[1], verts[2]);
    const double gap = std::abs(rule.area(Side::NEG) + rule.area(Side::POS) - area);
    worst_partition = std::max(worst_partition, gap);
    if (gap > 1e-12) partition = false;

    // Monte-Carlo oracle for the NEG area (sampling barycentric coordinates
    // uniformly; the P1 sign only needs the vertex values)
    const long nmc = config.mc_samples;
    long count = 0;
    for (long s = 0; s < nmc; ++s) {
      const double su = std::sqrt(unit(rng));
      const double u = 1.0 - su;
      const double v = unit(rng) * su;
      const double val = values[0] * (1.0 - u - v) + values[1] * u + values[2] * v;
      if (val < 0.0) ++count;
    }
    const double phat = static_cast<double>(count) / nmc;
    const double psmooth = (count + 1.0) / (nmc + 2.0);
    const double sigma = area * std::sqrt(psmooth * (1.0 - psmooth) / nmc);
    const double deviation = std::abs(rule.area(Side::NEG) - phat * area);
    if (sigma > 0.0) worst_sigma = std::max(worst_sigma, deviation / sigma);
    if (deviation > 3.0 * sigma) mc_ok = false;
  }

  // deformation invariants on a resolved circle case
  auto mesh = std::make_shared<const SimplicialMesh>(make_rect_mesh(Vec2(-1, -1), Vec2(1, 1), 8));
  const AnalyticLevelSet ls = circle_level_set(0.6);
  const LevelSetView view = build_level_set_view(ls, mesh, 2);
  auto vspace = std::make_shared<FeSpace>(mesh, 2, 2);
  const Deformation d = build_deformation(view, vspace, config.gamma, config.quad_order, config.threads);

  double vertex_max = 0.0;
  for (int v = 0; v < mesh->num_vertices(); ++v)
    vertex_max = std::max({vertex_max, std::abs(d.displacement.coeffs[2 * v]),
                           std::abs(d.displacement.coeffs[2 * v + 1])});
  const bool vertex_ok = vertex_max <= 1e-12;

  std::vector<char> in_ext(mesh->num_elements(), 0);
  for (int t : view.extended_set) in_ext[t] = 1;
  bool locality_ok = true;
  for (int t = 0; t < mesh->num_elements(); ++t) {
    if (in_ext[t]) continue;
    for (int dof : vspace->element_dofs(t))
      locality_ok &= (d.displacement.coeffs[2 * dof] == 0.0 && d.displacement.coeffs[2 * dof + 1] == 0.0);
  }

  QuadCheckResult result;
  auto detail = [](double v) {
    std::ostringstream os;
    os.precision(3);
    os << v;
    return os.str();
  };
  result.properties.push_back({"weight-positivity", positive, ""});
  result.properties.push_back({"area-partition", partition, "max gap " + detail(worst_partition)});
  result.properties.push_back({"monte-carlo-area", mc_ok, "max deviation " + detail(worst_sigma) + " sigma"});
  result.properties.push_back({"vertex-fixation", vertex_ok, "max " + detail(vertex_max)});
  result.properties.push_back({"locality", locality_ok, ""});
  return result;
}

void write_deformation_nodes(const Deformation& d, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw EvaluationError("write_deformation_nodes: cannot open " + path);
  out.precision(17);
  const FeSpace& sp = *d.displacement.space;
  out << "dof,x,y,dx,dy\n";
  for (int i = 0; i < sp.num_scalar_dofs(); ++i) {
    const Vec2 p = sp.dof_point(i);
    out << i << "," << p.x() << "," << p.y() << "," << d.displacement.coeffs[2 * i] << ","
        << d.displacement.coeffs[2 * i + 1] << "\n";
  }
}

} // namespace isoq
