#include "isoq/study.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace isoq;

namespace {

std::shared_ptr<const SimplicialMesh> shared_mesh(int n) {
  return std::make_shared<const SimplicialMesh>(make_rect_mesh(Vec2(-1, -1), Vec2(1, 1), n));
}

void BM_CutRules(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> coord(-1.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::array<Vec2, 3>> tris;
  std::vector<std::array<double, 3>> vals;
  for (int i = 0; i < 1000; ++i) {
    std::array<Vec2, 3> v;
    do {
      for (auto& p : v) p = Vec2(coord(rng), coord(rng));
    } while (std::abs(signed_area(v[0], v[1], v[2])) < 0.05);
    if (signed_area(v[0], v[1], v[2]) < 0.0) std::swap(v[1], v[2]);
    std::array<double, 3> w;
    do {
      for (auto& x : w) x = (unit(rng) < 0.5 ? -1.0 : 1.0) * (0.01 + unit(rng));
    } while (classify_values(w[0], w[1], w[2]) != CutClass::CUT);
    tris.push_back(v);
    vals.push_back(w);
  }
  for (auto _ : state) {
    double acc = 0.0;
    for (std::size_t i = 0; i < tris.size(); ++i)
      acc += cut_rule_from_values(tris[i], vals[i], static_cast<int>(state.range(0))).area(Side::NEG);
    benchmark::DoNotOptimize(acc);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(tris.size()));
}
BENCHMARK(BM_CutRules)->Arg(4)->Arg(8);

void BM_BuildDeformation(benchmark::State& state) {
  const int k = static_cast<int>(state.range(0));
  auto mesh = shared_mesh(32);
  const AnalyticLevelSet ls = circle_level_set(0.6);
  const LevelSetView view = build_level_set_view(ls, mesh, k);
  auto vspace = std::make_shared<FeSpace>(mesh, k, 2);
  for (auto _ : state) {
    const Deformation d = build_deformation(view, vspace, 0.1);
    benchmark::DoNotOptimize(d.limited_count);
  }
}
BENCHMARK(BM_BuildDeformation)->Arg(2)->Arg(4);

void BM_LevelSetProjection(benchmark::State& state) {
  auto mesh = shared_mesh(static_cast<int>(state.range(0)));
  const AnalyticLevelSet ls = circle_level_set(0.6);
  auto space = std::make_shared<FeSpace>(mesh, 3, 1);
  for (auto _ : state) {
    const FeFunction phi = project_levelset(ls, space);
    benchmark::DoNotOptimize(phi.coeffs.sum());
  }
}
BENCHMARK(BM_LevelSetProjection)->Arg(16)->Arg(64);

void BM_AssembleDisk(benchmark::State& state) {
  auto mesh = shared_mesh(16);
  const AnalyticLevelSet ls = circle_level_set(0.6);
  const int k = 2;
  const LevelSetView view = build_level_set_view(ls, mesh, k);
  const Deformation d = build_deformation(view, std::make_shared<FeSpace>(mesh, k, 2), 0.1);
  auto base = std::make_shared<FeSpace>(mesh, k, 1);
  const XfemSpace xspace = build_xfem_space(base, view);
  const InterfaceProblem prob = make_disk_problem();
  for (auto _ : state) {
    const SparseSystem sys = assemble(prob, xspace, d);
    benchmark::DoNotOptimize(sys.rhs.sum());
  }
}
BENCHMARK(BM_AssembleDisk);

void BM_UniformRefine(benchmark::State& state) {
  const SimplicialMesh mesh = make_rect_mesh(Vec2(-1, -1), Vec2(1, 1), static_cast<int>(state.range(0)));
  for (auto _ : state) {
    const SimplicialMesh out = refine_all(mesh);
    benchmark::DoNotOptimize(out.num_elements());
  }
}
BENCHMARK(BM_UniformRefine)->Arg(32)->Arg(128);

} // namespace

BENCHMARK_MAIN();
