#pragma once

#include "isoq/fespace.hpp"

#include <functional>
#include <span>

namespace isoq {

/// Element-local integrand: writes `components` values for the element/point.
using LocalField = std::function<void(int elem, const Vec2& ref, double* out)>;

/// Oswald-type projection into a continuous space: an element-by-element L2
/// fit on the region followed by dof-wise averaging over the region elements
/// sharing each dof. Dofs not touched by the region are zero.
FeFunction oswald_project(std::shared_ptr<const FeSpace> space, std::span<const int> region,
                          const LocalField& g, int quad_order = -1);

/// Variant used for mesh deformations: the local fits are taken in the
/// subspace of polynomials vanishing at the element vertices, so vertex dofs
/// stay exactly zero. Same averaging.
FeFunction oswald_project_vertex_pinned(std::shared_ptr<const FeSpace> space, std::span<const int> region,
                                        const LocalField& g, int quad_order = -1);

} // namespace isoq
