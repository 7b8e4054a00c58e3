#pragma once

#include "isoq/geometry.hpp"

#include <vector>

namespace isoq {

/// Gauss rule on the reference segment [0,1]. Weights sum to 1.
struct SegmentRule {
  int order = 0; // exact for polynomials of degree <= order
  std::vector<double> points;
  std::vector<double> weights;
};

/// Positive-weight rule on the reference triangle (0,0),(1,0),(0,1).
/// Weights sum to 1/2.
struct TriangleRule {
  int order = 0; // exact for total degree <= order
  std::vector<Vec2> points;
  std::vector<double> weights;
};

SegmentRule gauss_rule_segment(int order);
TriangleRule gauss_rule_triangle(int order);

} // namespace isoq
