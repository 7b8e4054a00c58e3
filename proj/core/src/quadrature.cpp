#include "isoq/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace isoq {

namespace {

// Gauss-Legendre nodes/weights on [-1,1] by Newton iteration on P_n.
void legendre_rule(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double t = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = t;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = (n == 1) ? 1.0 : n * (t * p1 - p0) / (t * t - 1.0);
      const double dt = ((n == 1) ? t : p1) / dp;
      t -= dt;
      if (std::abs(dt) < 1e-15) break;
    }
    x[i] = t;
    w[i] = 2.0 / ((1.0 - t * t) * dp * dp);
  }
}

SegmentRule make_segment_rule(int order) {
  const int n = order / 2 + 1; // exact to 2n-1 >= order
  std::vector<double> x, w;
  legendre_rule(n, x, w);
  SegmentRule rule;
  rule.order = order;
  rule.points.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    rule.points[i] = 0.5 * (x[i] + 1.0);
    rule.weights[i] = 0.5 * w[i];
  }
  return rule;
}

// Conical product: (x,y) = (u, v(1-u)) maps [0,1]^2 onto the triangle with
// Jacobian (1-u). The factor is absorbed into the weight, which keeps every
// weight strictly positive at any order.
TriangleRule make_triangle_rule(int order) {
  const SegmentRule gu = make_segment_rule(order + 1);
  const SegmentRule gv = make_segment_rule(order);
  TriangleRule rule;
  rule.order = order;
  rule.points.reserve(gu.points.size() * gv.points.size());
  rule.weights.reserve(gu.points.size() * gv.points.size());
  for (std::size_t i = 0; i < gu.points.size(); ++i) {
    const double u = gu.points[i];
    for (std::size_t j = 0; j < gv.points.size(); ++j) {
      const double v = gv.points[j];
      rule.points.emplace_back(u, v * (1.0 - u));
      rule.weights.push_back(gu.weights[i] * gv.weights[j] * (1.0 - u));
    }
  }
  return rule;
}

std::mutex cache_mutex;

} // namespace

SegmentRule gauss_rule_segment(int order) {
  if (order < 0) throw std::invalid_argument("gauss_rule_segment: order must be >= 0");
  static std::map<int, SegmentRule> cache;
  std::lock_guard<std::mutex> lock(cache_mutex);
  auto it = cache.find(order);
  if (it == cache.end()) it = cache.emplace(order, make_segment_rule(order)).first;
  return it->second;
}

TriangleRule gauss_rule_triangle(int order) {
  if (order < 0) throw std::invalid_argument("gauss_rule_triangle: order must be >= 0");
  static std::map<int, TriangleRule> cache;
  std::lock_guard<std::mutex> lock(cache_mutex);
  auto it = cache.find(order);
  if (it == cache.end()) it = cache.emplace(order, make_triangle_rule(order)).first;
  return it->second;
}

} // namespace isoq
