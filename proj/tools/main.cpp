#include "isoq/study.hpp"
#include "isoq/errors.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

using namespace isoq;

void add_common_options(CLI::App* cmd, StudyConfig& cfg, std::string& case_name, std::string& refine_name) {
  cmd->add_option("--case", case_name, "geometry case");
  cmd->add_option("--k", cfg.degree, "polynomial degree (1..4)")->check(CLI::Range(1, 4));
  cmd->add_option("--levels", cfg.levels, "number of refinement levels")->check(CLI::PositiveNumber);
  cmd->add_option("--refine", refine_name, "refinement mode (uniform|adaptive)")
      ->check(CLI::IsMember({"uniform", "adaptive"}));
  cmd->add_option("--gamma", cfg.gamma, "barrier parameter (default 0.1)");
  cmd->add_option("--lambda", cfg.lambda, "Nitsche stabilization (default 20)");
  cmd->add_option("--quad-order", cfg.quad_order, "quadrature order override (default 2k+2)");
  cmd->add_option("--out", cfg.output_dir, "output directory for report.json/report.csv");
  cmd->add_flag("--export-meshes", cfg.export_meshes, "write per-level mesh and deformation dumps");
  cmd->add_option("--seed", cfg.seed, "RNG seed (quad-check)");
  cmd->add_option("--threads", cfg.threads, "worker threads for the deformation build")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--dof-cap", cfg.dof_cap, "skip levels above this scalar dof count");
  cmd->add_option("--initial-n", cfg.initial_n, "initial mesh subdivisions per axis");
}

StudyCase parse_case(const std::string& name) {
  if (name == "circle") return StudyCase::Circle;
  if (name == "flower") return StudyCase::Flower;
  if (name == "disk") return StudyCase::Disk;
  throw CLI::ValidationError("--case", "unknown case '" + name + "' (circle|flower|disk)");
}

void print_geom_report(const ConvergenceReport& rep) {
  std::cout << "level      h_cut          error        eoc   limited  max_kappa\n";
  for (std::size_t i = 0; i < rep.levels.size(); ++i) {
    const LevelRecord& r = rep.levels[i];
    if (r.skipped) {
      std::cout << r.level << "  skipped (dof cap)\n";
      continue;
    }
    char line[160];
    std::snprintf(line, sizeof(line), "%5d  %11.4e  %13.6e  %5.2f  %8ld  %9.3g\n", r.level, r.h_cut,
                  r.geom_error, i >= 1 ? rep.eoc[0][i - 1] : 0.0, r.limited_count, r.max_kappa);
    std::cout << line;
  }
}

void print_interface_report(const ConvergenceReport& rep) {
  std::cout << "level      h_max         L2            eoc     H1            eoc     jump          eoc\n";
  for (std::size_t i = 0; i < rep.levels.size(); ++i) {
    const LevelRecord& r = rep.levels[i];
    if (r.skipped) {
      std::cout << r.level << "  skipped (dof cap)\n";
      continue;
    }
    char line[200];
    std::snprintf(line, sizeof(line), "%5d  %11.4e  %12.5e  %5.2f  %12.5e  %5.2f  %12.5e  %5.2f\n", r.level,
                  r.h_max, r.l2, i >= 1 ? rep.eoc[0][i - 1] : 0.0, r.h1, i >= 1 ? rep.eoc[1][i - 1] : 0.0,
                  r.jump, i >= 1 ? rep.eoc[2][i - 1] : 0.0);
    std::cout << line;
  }
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"unfitted isoparametric FEM studies on level-set geometries"};
  app.require_subcommand(1);

  StudyConfig cfg;
  std::string case_name = "circle";
  std::string refine_name = "uniform";

  CLI::App* geom = app.add_subcommand("geom-study", "interface geometry convergence study");
  add_common_options(geom, cfg, case_name, refine_name);

  CLI::App* inter = app.add_subcommand("interface-solve", "elliptic interface problem convergence study");
  add_common_options(inter, cfg, case_name, refine_name);

  CLI::App* quad = app.add_subcommand("quad-check", "quadrature and deformation property fuzz harness");
  add_common_options(quad, cfg, case_name, refine_name);
  quad->add_option("--fuzz-triangles", cfg.fuzz_triangles, "number of random cut triangles");
  quad->add_option("--mc-samples", cfg.mc_samples, "Monte-Carlo samples per triangle");
  quad->add_flag("--inject-negative-weight", cfg.inject_negative_weight,
                 "test hook: corrupt one weight to verify harness sensitivity")
      ->group(""); // hidden

  CLI11_PARSE(app, argc, argv);

  try {
    cfg.refinement = (refine_name == "adaptive") ? RefineMode::Adaptive : RefineMode::Uniform;
    if (geom->parsed()) {
      cfg.study_case = parse_case(case_name);
      const ConvergenceReport rep = run_geom_study(cfg);
      print_geom_report(rep);
      return 0;
    }
    if (inter->parsed()) {
      if (inter->count("--case") == 0) case_name = "disk";
      cfg.study_case = parse_case(case_name);
      const ConvergenceReport rep = run_interface_study(cfg);
      print_interface_report(rep);
      for (const LevelRecord& r : rep.levels)
        if (r.solver_residual > 1e-6)
          std::cout << "warning: level " << r.level << " residual reduction only " << r.solver_residual
                    << "\n";
      return 0;
    }
    // quad-check
    cfg.study_case = parse_case(case_name);
    const QuadCheckResult result = run_quad_check(cfg);
    std::cout << result.to_text();
    return result.all_pass() ? 0 : 2;
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const ContractViolation& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const SingularDeformation& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const DegenerateLevelSet& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const EvaluationError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  }
}
