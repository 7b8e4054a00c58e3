#pragma once

#include "isoq/fespace.hpp"

#include <cstdint>
#include <functional>
#include <string>

namespace isoq {

/// Closed-form level set; gradient may be empty when only values are needed.
struct AnalyticLevelSet {
  std::string name;
  std::function<double(const Vec2&)> value;
  std::function<Vec2(const Vec2&)> gradient;
};

AnalyticLevelSet plane_level_set(const Vec2& normal, double offset); // n.x - c
AnalyticLevelSet circle_level_set(double radius);                   // |x| - R
AnalyticLevelSet flower_level_set();                                // |x| - (0.5 + 0.1 sin(8 atan2(y,x)))

/// Lookup by name: "plane" (n=(1,0), c=0.3), "circle" (R=0.6), "flower".
/// Unknown names raise std::invalid_argument.
AnalyticLevelSet level_set_by_name(const std::string& name);

enum class Side : int { NEG = 0, POS = 1 };
enum class CutClass : std::uint8_t { NEG = 0, POS = 1, CUT = 2 };

/// Sign convention for a vertex value v of the P1 level set: NEG iff v < 0,
/// POS otherwise (zeros count POS). An element is CUT iff both signs occur
/// among its vertex values.
CutClass classify_values(double v0, double v1, double v2);

/// Level set data on a mesh: the degree-k projection phi, its piecewise
/// linear interpolant, the per-element cut classification, the cut elements
/// and their one-ring extension.
struct LevelSetView {
  std::shared_ptr<const SimplicialMesh> mesh;
  FeFunction phi;      // degree k
  FeFunction phi_lin;  // I_h phi
  std::vector<CutClass> classification;
  std::vector<int> cut_set;       // ascending element ids
  std::vector<int> extended_set;  // cut elements plus vertex neighbors, ascending

  bool is_cut(int elem) const { return classification[elem] == CutClass::CUT; }

  /// P1 vertex values of I_h phi on an element.
  std::array<double, 3> vertex_values(int elem) const;
};

enum class LevelSetProjector { Oswald, Nodal };

/// Projection of the analytic level set into the degree-k space. The default
/// is the element-local L2 fit followed by dof averaging; nodal interpolation
/// is the configuration alternative.
FeFunction project_levelset(const AnalyticLevelSet& ls, std::shared_ptr<const FeSpace> space,
                            LevelSetProjector projector = LevelSetProjector::Oswald,
                            int quad_order = -1);

/// Classification of all elements from the P1 level set.
void classify(const FeFunction& phi_lin, std::vector<CutClass>& classification,
              std::vector<int>& cut_set, std::vector<int>& extended_set);

LevelSetView build_level_set_view(const AnalyticLevelSet& ls, std::shared_ptr<const SimplicialMesh> mesh,
                                  int degree, LevelSetProjector projector = LevelSetProjector::Oswald,
                                  int quad_order = -1);

} // namespace isoq
