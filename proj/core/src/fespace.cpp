#include "isoq/fespace.hpp"

#include "isoq/errors.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <stdexcept>

namespace isoq {

namespace lagrange {

int size(int degree) { return (degree + 1) * (degree + 2) / 2; }

namespace {

// Integer lattice coordinates (i,j) of the local nodes, i+j <= k, in the
// documented order. Node position is (i/k, j/k).
std::vector<std::array<int, 2>> make_lattice(int k) {
  std::vector<std::array<int, 2>> idx;
  idx.reserve(size(k));
  idx.push_back({0, 0});
  idx.push_back({k, 0});
  idx.push_back({0, k});
  // edge 0: v1 -> v2, points ((k-t), t)
  for (int t = 1; t < k; ++t) idx.push_back({k - t, t});
  // edge 1: v2 -> v0, points (0, k-t)
  for (int t = 1; t < k; ++t) idx.push_back({0, k - t});
  // edge 2: v0 -> v1, points (t, 0)
  for (int t = 1; t < k; ++t) idx.push_back({t, 0});
  for (int i = 1; i < k; ++i)
    for (int j = 1; i + j < k; ++j) idx.push_back({i, j});
  return idx;
}

const std::vector<std::array<int, 2>>& lattice(int k) {
  static std::mutex m;
  static std::map<int, std::vector<std::array<int, 2>>> cache;
  std::lock_guard<std::mutex> lock(m);
  auto it = cache.find(k);
  if (it == cache.end()) it = cache.emplace(k, make_lattice(k)).first;
  return it->second;
}

// R_n(t) = prod_{m=0}^{n-1} (t - m)/(n - m) and its derivative. R_n(p) is the
// Kronecker delta on integers p in [0, n].
inline void silvester(int n, double t, double& val, double& der) {
  val = 1.0;
  der = 0.0;
  for (int m = 0; m < n; ++m) {
    const double f = 1.0 / (n - m);
    der = der * (t - m) * f + val * f;
    val = val * (t - m) * f;
  }
}

} // namespace

const std::vector<Vec2>& nodes(int degree) {
  static std::mutex m;
  static std::map<int, std::vector<Vec2>> cache;
  std::lock_guard<std::mutex> lock(m);
  auto it = cache.find(degree);
  if (it == cache.end()) {
    std::vector<Vec2> pts;
    for (const auto& ij : lattice(degree))
      pts.emplace_back(static_cast<double>(ij[0]) / degree, static_cast<double>(ij[1]) / degree);
    it = cache.emplace(degree, std::move(pts)).first;
  }
  return it->second;
}

void eval(int degree, const Vec2& ref, double* values, Vec2* grads) {
  if (degree < 1) throw std::invalid_argument("lagrange::eval: degree must be >= 1");
  const auto& idx = lattice(degree);
  const int k = degree;
  const double x = ref.x(), y = ref.y(), z = 1.0 - x - y;
  for (std::size_t n = 0; n < idx.size(); ++n) {
    const int i = idx[n][0], j = idx[n][1], l = k - i - j;
    double ri, dri, rj, drj, rl, drl;
    silvester(i, k * x, ri, dri);
    silvester(j, k * y, rj, drj);
    silvester(l, k * z, rl, drl);
    if (values) values[n] = ri * rj * rl;
    if (grads) {
      grads[n].x() = k * (dri * rj * rl - ri * rj * drl);
      grads[n].y() = k * (ri * drj * rl - ri * rj * drl);
    }
  }
}

} // namespace lagrange

FeSpace::FeSpace(std::shared_ptr<const SimplicialMesh> mesh, int degree, int components)
    : mesh_(std::move(mesh)), degree_(degree), components_(components) {
  if (degree_ < 1 || degree_ > 4) throw std::invalid_argument("FeSpace: degree must be in [1,4]");
  if (components_ != 1 && components_ != 2) throw std::invalid_argument("FeSpace: components must be 1 or 2");
  const SimplicialMesh& m = *mesh_;
  const int k = degree_;
  local_size_ = lagrange::size(k);
  const int per_edge = k - 1;
  const int per_int = (k - 1) * (k - 2) / 2;
  num_scalar_dofs_ = m.num_vertices() + m.num_edges() * per_edge + m.num_elements() * per_int;

  element_dofs_.assign(static_cast<std::size_t>(m.num_elements()) * local_size_, -1);
  dof_points_.assign(num_scalar_dofs_, Vec2::Zero());

  for (int t = 0; t < m.num_elements(); ++t) {
    int* dofs = element_dofs_.data() + static_cast<std::size_t>(t) * local_size_;
    const auto& ev = m.elements[t];
    int pos = 0;
    for (int i = 0; i < 3; ++i) dofs[pos++] = ev[i];
    for (int le = 0; le < 3; ++le) {
      const int ge = m.element_edges[t][le];
      const int p = ev[(le + 1) % 3]; // local edge direction p -> q
      const int q = ev[(le + 2) % 3];
      const int base = m.num_vertices() + ge * per_edge;
      // global edge dofs run from the smaller to the larger vertex id
      for (int s = 1; s < k; ++s) dofs[pos++] = (p < q) ? base + (s - 1) : base + (k - 1 - s);
    }
    const int base = m.num_vertices() + m.num_edges() * per_edge + t * per_int;
    for (int s = 0; s < per_int; ++s) dofs[pos++] = base + s;

    const AffineMap map = m.affine_map(t);
    const auto& ref_nodes = lagrange::nodes(k);
    for (int s = 0; s < local_size_; ++s) dof_points_[dofs[s]] = map.apply(ref_nodes[s]);
  }
}

Vec2 FeSpace::dof_point(int scalar_dof) const { return dof_points_[scalar_dof]; }

std::vector<int> FeSpace::boundary_scalar_dofs() const {
  const SimplicialMesh& m = *mesh_;
  std::vector<char> flag(num_scalar_dofs_, 0);
  const int per_edge = degree_ - 1;
  for (const auto& [t, le] : m.boundary_edges) {
    const auto& ev = m.elements[t];
    flag[ev[(le + 1) % 3]] = 1;
    flag[ev[(le + 2) % 3]] = 1;
    const int ge = m.element_edges[t][le];
    for (int s = 0; s < per_edge; ++s) flag[m.num_vertices() + ge * per_edge + s] = 1;
  }
  std::vector<int> out;
  for (int i = 0; i < num_scalar_dofs_; ++i)
    if (flag[i]) out.push_back(i);
  return out;
}

namespace {

constexpr int kMaxLocal = 15; // degree 4

struct LocalEval {
  double values[kMaxLocal];
  Vec2 grads[kMaxLocal];
};

} // namespace

double FeFunction::value(int elem, const Vec2& ref) const {
  const FeSpace& sp = *space;
  LocalEval ev;
  lagrange::eval(sp.degree(), ref, ev.values, nullptr);
  const auto dofs = sp.element_dofs(elem);
  double sum = 0.0;
  for (int s = 0; s < sp.local_size(); ++s) sum += coeffs[dofs[s]] * ev.values[s];
  return sum;
}

Vec2 FeFunction::ref_gradient(int elem, const Vec2& ref) const {
  const FeSpace& sp = *space;
  LocalEval ev;
  lagrange::eval(sp.degree(), ref, nullptr, ev.grads);
  const auto dofs = sp.element_dofs(elem);
  Vec2 g = Vec2::Zero();
  for (int s = 0; s < sp.local_size(); ++s) g += coeffs[dofs[s]] * ev.grads[s];
  return g;
}

Vec2 FeFunction::gradient(int elem, const Vec2& ref) const {
  const Mat2 A = space->mesh().affine_map(elem).A;
  return A.transpose().inverse() * ref_gradient(elem, ref);
}

Vec2 FeFunction::vec_value(int elem, const Vec2& ref) const {
  const FeSpace& sp = *space;
  LocalEval ev;
  lagrange::eval(sp.degree(), ref, ev.values, nullptr);
  const auto dofs = sp.element_dofs(elem);
  Vec2 v = Vec2::Zero();
  for (int s = 0; s < sp.local_size(); ++s) {
    v.x() += coeffs[2 * dofs[s] + 0] * ev.values[s];
    v.y() += coeffs[2 * dofs[s] + 1] * ev.values[s];
  }
  return v;
}

Mat2 FeFunction::vec_ref_jacobian(int elem, const Vec2& ref) const {
  const FeSpace& sp = *space;
  LocalEval ev;
  lagrange::eval(sp.degree(), ref, nullptr, ev.grads);
  const auto dofs = sp.element_dofs(elem);
  Mat2 J = Mat2::Zero();
  for (int s = 0; s < sp.local_size(); ++s) {
    const Vec2 d(coeffs[2 * dofs[s] + 0], coeffs[2 * dofs[s] + 1]);
    J += d * ev.grads[s].transpose();
  }
  return J;
}

FeFunction interpolate(std::shared_ptr<const FeSpace> space, const std::function<double(const Vec2&)>& f) {
  if (space->components() != 1) throw ContractViolation("interpolate: scalar space expected");
  FeFunction out(space);
  for (int i = 0; i < space->num_scalar_dofs(); ++i) out.coeffs[i] = f(space->dof_point(i));
  return out;
}

FeFunction interpolate_p1(const FeFunction& f) {
  const FeSpace& sp = *f.space;
  if (sp.components() != 1) throw ContractViolation("interpolate_p1: scalar function expected");
  auto p1 = std::make_shared<FeSpace>(sp.mesh_ptr(), 1, 1);
  FeFunction out(p1);
  // vertex dofs of a nodal Lagrange space carry vertex values
  for (int v = 0; v < sp.mesh().num_vertices(); ++v) out.coeffs[v] = f.coeffs[v];
  return out;
}

void dump_coeffs_csv(const FeFunction& f, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw EvaluationError("dump_coeffs_csv: cannot open " + path);
  out.precision(17);
  out << "index,value\n";
  for (Eigen::Index i = 0; i < f.coeffs.size(); ++i) out << i << "," << f.coeffs[i] << "\n";
}

} // namespace isoq
