#pragma once

#include <Eigen/Dense>

#include <limits>

namespace isoq {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Affine reference map x = A * xhat + origin from the reference triangle
/// with vertices (0,0), (1,0), (0,1). Columns of A are the edge vectors.
struct AffineMap {
  Mat2 A;
  Vec2 origin;

  Vec2 apply(const Vec2& ref) const { return A * ref + origin; }
  Vec2 pull_back(const Vec2& x) const { return A.inverse() * (x - origin); }
  double det() const { return A.determinant(); }
};

/// Counter-clockwise rotation by 90 degrees.
inline Vec2 rotate90(const Vec2& v) { return Vec2(-v.y(), v.x()); }

inline double signed_area(const Vec2& a, const Vec2& b, const Vec2& c) {
  const Vec2 u = b - a;
  const Vec2 v = c - a;
  return 0.5 * (u.x() * v.y() - u.y() * v.x());
}

/// Spectral condition number sigma_max / sigma_min; +inf for singular matrices.
inline double condition_number(const Mat2& m) {
  Eigen::JacobiSVD<Mat2> svd(m);
  const double smin = svd.singularValues()(1);
  if (!(smin > 0.0)) return std::numeric_limits<double>::infinity();
  return svd.singularValues()(0) / smin;
}

} // namespace isoq
