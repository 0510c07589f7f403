#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "lamfe/element.hpp"
#include "lamfe/geometry.hpp"
#include "lamfe/materials.hpp"

namespace lamfe {

/// Discretisation parameters. Counts are per direction; bias ratios are
/// largest/smallest element width and must be >= 1.
struct MeshSpec {
  int n_elems_arc = 8;        // curved section, s direction
  int n_elems_limb = 2;       // each limb, s direction
  int n_elems_width = 8;      // l direction
  int n_elems_per_ply = 1;    // r direction, per fibrous layer
  int n_elems_per_interface = 1;
  double bias_width = 1.0;    // graded toward both width edges
  double bias_layer = 1.0;    // graded toward the layer interfaces
  double bias_defect = 1.0;   // graded toward the defect centre (s direction)
  int stiff_layer_columns = 0;  // element columns tagged stiff at the loaded end

  void validate() const;
  bool operator==(const MeshSpec&) const = default;
  int n_elems_s() const { return n_elems_arc + 2 * n_elems_limb; }
};

struct MeshTangling : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct PeriodicityMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Structured 20-node hexahedral mesh. Elements are indexed lexicographically
/// by (ir, il, is); nodes are corner nodes followed by the three midside-node
/// families. All node coordinates are in the final mapped frame; the flat
/// (s, l, r) coordinates are retained per node and per element centre.
struct StructuredMesh {
  int n_s = 0, n_l = 0, n_r = 0;  // element counts per direction

  std::vector<std::array<double, 3>> nodes;       // mapped coordinates
  std::vector<std::array<double, 3>> nodes_flat;  // (s_par, l, r)
  std::vector<std::array<int, 20>> connectivity;
  std::vector<MaterialTag> material;               // per element
  std::vector<std::array<double, 3>> elem_center;  // flat-frame centres
  std::vector<std::array<int, 3>> elem_index;      // (is, il, ir)

  // Boundary node sets (include midside nodes).
  std::vector<int> clamped_nodes;  // s = start end
  std::vector<int> loaded_nodes;   // s = far end
  // Loaded-end element faces as element ids (face xi = +1 of each).
  std::vector<int> loaded_face_elems;
  // Node pairs (l = 0, l = W) for periodic identification.
  std::vector<std::array<int, 2>> width_pairs;

  CornerGeometry geometry;  // as built (flat builds store equivalent data)

  int n_elems() const { return static_cast<int>(connectivity.size()); }
  int n_nodes() const { return static_cast<int>(nodes.size()); }
  int elem_id(int is, int il, int ir) const {
    return (ir * n_l + il) * n_s + is;
  }
  ElementCoords coords_of(int elem) const;

  /// All nodes lying on the outer surface of the structured block.
  std::vector<int> boundary_nodes() const;
};

/// Builds the corner-unfolding mesh: graded flat block, optional wrinkle
/// perturbation of the radial coordinates, curved mapping, material tags.
/// Throws MeshTangling if any element Jacobian is non-positive.
StructuredMesh build_mesh(const CornerGeometry& geom, const MeshSpec& spec,
                          const std::optional<WrinkleParams>& wrinkle,
                          const StackingSequence& stacking);

/// Flat layered plate (no curvature, no limbs) with the same layer
/// structure; x = length, y = width, z = thickness. Used for beam-type
/// studies and tests.
StructuredMesh build_flat_laminate(const CornerGeometry& geom,
                                   const MeshSpec& spec, double length,
                                   const StackingSequence& stacking);

/// Legacy VTK unstructured-grid export (8-node hexahedra).
void write_vtk_mesh(const StructuredMesh& mesh, const std::string& path);

}  // namespace lamfe
