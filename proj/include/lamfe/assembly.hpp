#pragma once

#include <vector>

#include "lamfe/element.hpp"
#include "lamfe/materials.hpp"
#include "lamfe/mesh.hpp"
#include "lamfe/sparse.hpp"

namespace lamfe {

struct ConstraintConflict : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Node-to-dof map with periodic master/slave identification and Dirichlet
/// bookkeeping. Three displacement components per (representative) node.
struct DofMap {
  int n_nodes = 0;
  int n_dofs = 0;
  std::vector<int> master;       // node -> representative node
  std::vector<int> node_dof;     // representative node -> first dof, -1 on slaves
  std::vector<char> constrained; // per dof
  std::vector<double> prescribed;

  int dof(int node, int comp) const { return node_dof[master[node]] + comp; }
  bool is_slave(int node) const { return master[node] != node; }
};

/// Builds the dof map; with periodic_width the nodes on the two width faces
/// are identified (l = 0 masters, l = W slaves).
DofMap build_dofmap(const StructuredMesh& mesh, bool periodic_width = false);

struct SparseSystem {
  SparseMatrix K;
  std::vector<double> f;
  DofMap dofs;
};

/// Element stiffness for a mesh element, with the material stiffness rotated
/// to the geometry-following laminate frame at each quadrature point.
ElementMatrix mesh_element_matrix(const StructuredMesh& mesh, int elem,
                                  const StackingSequence& stacking,
                                  const MaterialCatalog& catalog,
                                  const QuadratureRule& q);

/// Assembles the global stiffness matrix; f is initialised to zero.
/// Element matrices may be computed in parallel; the scatter-add runs in a
/// fixed element order, so the result is independent of n_threads.
SparseSystem assemble(const StructuredMesh& mesh,
                      const StackingSequence& stacking,
                      const MaterialCatalog& catalog, const QuadratureRule& q,
                      int n_threads = 1, bool periodic_width = false);

/// Symmetric Dirichlet elimination on the given nodes (all 3 components set
/// to the prescribed displacement vector).
void apply_dirichlet(SparseSystem& sys, const std::vector<int>& nodes,
                     const std::array<double, 3>& value);

struct ConfigurationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Adds a statically equivalent end-moment load: a linearly varying axial
/// traction over the loaded end face with zero net force and net moment
/// M_per_width * W about the mid-thickness width axis.
void apply_moment_load(SparseSystem& sys, const StructuredMesh& mesh,
                       double M_per_width, bool require_stiff_layer = true);

/// Integral checks of the assembled load vector: net force along the limb
/// axis and net moment about the mid-thickness width axis.
struct LoadResultants {
  double net_axial_force = 0;
  double net_moment = 0;
};
LoadResultants moment_load_resultants(const SparseSystem& sys,
                                      const StructuredMesh& mesh);

}  // namespace lamfe
