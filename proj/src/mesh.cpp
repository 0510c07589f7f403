#include "lamfe/mesh.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>

namespace lamfe {

void MeshSpec::validate() const {
  if (n_elems_arc < 1 || n_elems_limb < 0 || n_elems_width < 1 ||
      n_elems_per_ply < 1 || n_elems_per_interface < 0)
    throw InvalidParameter("MeshSpec: invalid element counts");
  if (bias_width < 1 || bias_layer < 1 || bias_defect < 1)
    throw InvalidParameter("MeshSpec: bias ratios must be >= 1");
  if (stiff_layer_columns < 0 || stiff_layer_columns >= n_elems_s())
    throw InvalidParameter("MeshSpec: invalid stiff layer column count");
}

ElementCoords StructuredMesh::coords_of(int elem) const {
  ElementCoords c;
  for (int i = 0; i < 20; ++i) {
    const auto& p = nodes[connectivity[elem][i]];
    c(i, 0) = p[0];
    c(i, 1) = p[1];
    c(i, 2) = p[2];
  }
  return c;
}

namespace {

struct GridIndexer {
  int n_s, n_l, n_r;
  int n_corner, n_sedge, n_ledge;

  GridIndexer(int s, int l, int r) : n_s(s), n_l(l), n_r(r) {
    n_corner = (n_s + 1) * (n_l + 1) * (n_r + 1);
    n_sedge = n_s * (n_l + 1) * (n_r + 1);
    n_ledge = (n_s + 1) * n_l * (n_r + 1);
  }
  int total() const { return n_corner + n_sedge + n_ledge + (n_s + 1) * (n_l + 1) * n_r; }
  int corner(int is, int il, int ir) const {
    return (ir * (n_l + 1) + il) * (n_s + 1) + is;
  }
  int sedge(int is, int il, int ir) const {
    return n_corner + (ir * (n_l + 1) + il) * n_s + is;
  }
  int ledge(int is, int il, int ir) const {
    return n_corner + n_sedge + (ir * n_l + il) * (n_s + 1) + is;
  }
  int redge(int is, int il, int ir) const {
    return n_corner + n_sedge + n_ledge + (ir * (n_l + 1) + il) * (n_s + 1) + is;
  }
};

/// Radial layer grid: nodes from R to R+T plus a material tag per radial
/// element row.
void radial_grid(const CornerGeometry& g, const MeshSpec& spec,
                 std::vector<double>& r_nodes, std::vector<MaterialTag>& tags) {
  r_nodes = {g.inner_radius_R};
  tags.clear();
  double r0 = g.inner_radius_R;
  for (int ply = 0; ply < g.n_plies; ++ply) {
    auto local = grade_1d(spec.n_elems_per_ply, g.ply_thickness,
                          spec.bias_layer, GradeMode::TowardBothEnds);
    for (int i = 1; i <= spec.n_elems_per_ply; ++i) {
      r_nodes.push_back(r0 + local[i]);
      tags.push_back({MaterialTag::Kind::Ply, ply});
    }
    r0 += g.ply_thickness;
    if (ply + 1 < g.n_plies && spec.n_elems_per_interface > 0) {
      auto loci = grade_1d(spec.n_elems_per_interface, g.interface_thickness,
                           spec.bias_layer, GradeMode::TowardBothEnds);
      for (int i = 1; i <= spec.n_elems_per_interface; ++i) {
        r_nodes.push_back(r0 + loci[i]);
        tags.push_back({MaterialTag::Kind::Interface, ply});
      }
      r0 += g.interface_thickness;
    }
  }
}

using MapFn = std::function<std::array<double, 3>(double, double, double)>;

StructuredMesh build_structured(const CornerGeometry& geom,
                                const MeshSpec& spec,
                                const std::vector<double>& s_nodes,
                                const std::vector<double>& l_nodes,
                                const std::vector<double>& r_nodes,
                                const std::vector<MaterialTag>& radial_tags,
                                const MapFn& map_flat) {
  StructuredMesh m;
  m.geometry = geom;
  m.n_s = static_cast<int>(s_nodes.size()) - 1;
  m.n_l = static_cast<int>(l_nodes.size()) - 1;
  m.n_r = static_cast<int>(r_nodes.size()) - 1;
  const GridIndexer ix(m.n_s, m.n_l, m.n_r);

  m.nodes.resize(ix.total());
  m.nodes_flat.resize(ix.total());
  auto place = [&](int id, double s, double l, double r) {
    m.nodes_flat[id] = {s, l, r};
    m.nodes[id] = map_flat(s, l, r);
  };
  for (int ir = 0; ir <= m.n_r; ++ir)
    for (int il = 0; il <= m.n_l; ++il)
      for (int is = 0; is <= m.n_s; ++is)
        place(ix.corner(is, il, ir), s_nodes[is], l_nodes[il], r_nodes[ir]);
  for (int ir = 0; ir <= m.n_r; ++ir)
    for (int il = 0; il <= m.n_l; ++il)
      for (int is = 0; is < m.n_s; ++is)
        place(ix.sedge(is, il, ir), 0.5 * (s_nodes[is] + s_nodes[is + 1]),
              l_nodes[il], r_nodes[ir]);
  for (int ir = 0; ir <= m.n_r; ++ir)
    for (int il = 0; il < m.n_l; ++il)
      for (int is = 0; is <= m.n_s; ++is)
        place(ix.ledge(is, il, ir), s_nodes[is],
              0.5 * (l_nodes[il] + l_nodes[il + 1]), r_nodes[ir]);
  for (int ir = 0; ir < m.n_r; ++ir)
    for (int il = 0; il <= m.n_l; ++il)
      for (int is = 0; is <= m.n_s; ++is)
        place(ix.redge(is, il, ir), s_nodes[is], l_nodes[il],
              0.5 * (r_nodes[ir] + r_nodes[ir + 1]));

  const int n_elems = m.n_s * m.n_l * m.n_r;
  m.connectivity.resize(n_elems);
  m.material.resize(n_elems);
  m.elem_center.resize(n_elems);
  m.elem_index.resize(n_elems);
  const double W = l_nodes.back();
  const double rew = geom.resin_edge_width;
  for (int ir = 0; ir < m.n_r; ++ir)
    for (int il = 0; il < m.n_l; ++il)
      for (int is = 0; is < m.n_s; ++is) {
        const int e = m.elem_id(is, il, ir);
        auto& cn = m.connectivity[e];
        cn[0] = ix.corner(is, il, ir);
        cn[1] = ix.corner(is + 1, il, ir);
        cn[2] = ix.corner(is + 1, il + 1, ir);
        cn[3] = ix.corner(is, il + 1, ir);
        cn[4] = ix.corner(is, il, ir + 1);
        cn[5] = ix.corner(is + 1, il, ir + 1);
        cn[6] = ix.corner(is + 1, il + 1, ir + 1);
        cn[7] = ix.corner(is, il + 1, ir + 1);
        cn[8] = ix.sedge(is, il, ir);
        cn[9] = ix.ledge(is + 1, il, ir);
        cn[10] = ix.sedge(is, il + 1, ir);
        cn[11] = ix.ledge(is, il, ir);
        cn[12] = ix.sedge(is, il, ir + 1);
        cn[13] = ix.ledge(is + 1, il, ir + 1);
        cn[14] = ix.sedge(is, il + 1, ir + 1);
        cn[15] = ix.ledge(is, il, ir + 1);
        cn[16] = ix.redge(is, il, ir);
        cn[17] = ix.redge(is + 1, il, ir);
        cn[18] = ix.redge(is + 1, il + 1, ir);
        cn[19] = ix.redge(is, il + 1, ir);

        const double sc = 0.5 * (s_nodes[is] + s_nodes[is + 1]);
        const double lc = 0.5 * (l_nodes[il] + l_nodes[il + 1]);
        const double rc = 0.5 * (r_nodes[ir] + r_nodes[ir + 1]);
        m.elem_center[e] = {sc, lc, rc};
        m.elem_index[e] = {is, il, ir};

        MaterialTag tag = radial_tags[ir];
        if (rew > 0 && (lc < rew || lc > W - rew))
          tag = {MaterialTag::Kind::ResinEdge, 0};
        if (is >= m.n_s - spec.stiff_layer_columns)
          tag = {MaterialTag::Kind::StiffLayer, 0};
        m.material[e] = tag;
      }

  // Boundary sets.
  for (int ir = 0; ir <= m.n_r; ++ir)
    for (int il = 0; il <= m.n_l; ++il) {
      m.clamped_nodes.push_back(ix.corner(0, il, ir));
      m.loaded_nodes.push_back(ix.corner(m.n_s, il, ir));
      if (il < m.n_l) {
        m.clamped_nodes.push_back(ix.ledge(0, il, ir));
        m.loaded_nodes.push_back(ix.ledge(m.n_s, il, ir));
      }
      if (ir < m.n_r) {
        m.clamped_nodes.push_back(ix.redge(0, il, ir));
        m.loaded_nodes.push_back(ix.redge(m.n_s, il, ir));
      }
    }
  for (int ir = 0; ir < m.n_r; ++ir)
    for (int il = 0; il < m.n_l; ++il)
      m.loaded_face_elems.push_back(m.elem_id(m.n_s - 1, il, ir));

  for (int ir = 0; ir <= m.n_r; ++ir)
    for (int is = 0; is <= m.n_s; ++is) {
      m.width_pairs.push_back({ix.corner(is, 0, ir), ix.corner(is, m.n_l, ir)});
      if (is < m.n_s)
        m.width_pairs.push_back({ix.sedge(is, 0, ir), ix.sedge(is, m.n_l, ir)});
      if (ir < m.n_r)
        m.width_pairs.push_back({ix.redge(is, 0, ir), ix.redge(is, m.n_l, ir)});
    }

  // Jacobian validity at full-integration points.
  const auto q = QuadratureRule::gauss(3);
  for (int e = 0; e < n_elems; ++e) {
    if (min_jacobian_det(m.coords_of(e), q) <= 0)
      throw MeshTangling("build_mesh: non-positive Jacobian in element " +
                         std::to_string(e) + " (is,il,ir = " +
                         std::to_string(m.elem_index[e][0]) + "," +
                         std::to_string(m.elem_index[e][1]) + "," +
                         std::to_string(m.elem_index[e][2]) + ")");
  }
  return m;
}

}  // namespace

StructuredMesh build_mesh(const CornerGeometry& geom, const MeshSpec& spec,
                          const std::optional<WrinkleParams>& wrinkle,
                          const StackingSequence& stacking) {
  geom.validate();
  spec.validate();
  if (wrinkle) wrinkle->validate();
  if (static_cast<int>(stacking.size()) != geom.n_plies)
    throw InvalidParameter("build_mesh: stacking length must equal n_plies");

  // s grid: uniform limbs (offsets in mm) around the graded [0,1] arc.
  std::vector<double> s_nodes;
  const double L = geom.limb_length_L;
  for (int i = 0; i < spec.n_elems_limb; ++i)
    s_nodes.push_back(-L + L * i / spec.n_elems_limb);
  auto arc = grade_1d(spec.n_elems_arc, 1.0, spec.bias_defect,
                      GradeMode::TowardCenter);
  for (double a : arc) s_nodes.push_back(a);
  for (int i = 1; i <= spec.n_elems_limb; ++i)
    s_nodes.push_back(1.0 + L * i / spec.n_elems_limb);

  auto l_nodes = grade_1d(spec.n_elems_width, geom.width_W, spec.bias_width,
                          GradeMode::TowardBothEnds);

  std::vector<double> r_nodes;
  std::vector<MaterialTag> radial_tags;
  radial_grid(geom, spec, r_nodes, radial_tags);

  MapFn map_flat = [&geom, &wrinkle](double s, double l,
                                     double r) -> std::array<double, 3> {
    double rr = r;
    if (wrinkle) rr += wrinkle_offset(s, l, r, *wrinkle, geom);
    const Vec3 p = map_to_curved(s, l, rr, geom);
    return {p.x, p.y, p.z};
  };
  return build_structured(geom, spec, s_nodes, l_nodes, r_nodes, radial_tags,
                          map_flat);
}

StructuredMesh build_flat_laminate(const CornerGeometry& geom,
                                   const MeshSpec& spec, double length,
                                   const StackingSequence& stacking) {
  geom.validate();
  spec.validate();
  if (static_cast<int>(stacking.size()) != geom.n_plies)
    throw InvalidParameter("build_flat_laminate: stacking length mismatch");
  if (length <= 0) throw InvalidParameter("build_flat_laminate: length <= 0");

  auto s_nodes = grade_1d(spec.n_elems_s(), length, spec.bias_defect,
                          GradeMode::TowardCenter);
  auto l_nodes = grade_1d(spec.n_elems_width, geom.width_W, spec.bias_width,
                          GradeMode::TowardBothEnds);
  std::vector<double> r_nodes;
  std::vector<MaterialTag> radial_tags;
  radial_grid(geom, spec, r_nodes, radial_tags);

  const double R = geom.inner_radius_R;
  MapFn map_flat = [R](double s, double l, double r) -> std::array<double, 3> {
    return {s, l, r - R};
  };
  return build_structured(geom, spec, s_nodes, l_nodes, r_nodes, radial_tags,
                          map_flat);
}

std::vector<int> StructuredMesh::boundary_nodes() const {
  const GridIndexer ix(n_s, n_l, n_r);
  std::vector<char> on(nodes.size(), 0);
  auto edge = [](int i, int n) { return i == 0 || i == n; };
  for (int ir = 0; ir <= n_r; ++ir)
    for (int il = 0; il <= n_l; ++il)
      for (int is = 0; is <= n_s; ++is) {
        if (edge(is, n_s) || edge(il, n_l) || edge(ir, n_r))
          on[ix.corner(is, il, ir)] = 1;
        if (is < n_s && (edge(il, n_l) || edge(ir, n_r)))
          on[ix.sedge(is, il, ir)] = 1;
        if (il < n_l && (edge(is, n_s) || edge(ir, n_r)))
          on[ix.ledge(is, il, ir)] = 1;
        if (ir < n_r && (edge(is, n_s) || edge(il, n_l)))
          on[ix.redge(is, il, ir)] = 1;
      }
  std::vector<int> out;
  for (std::size_t i = 0; i < on.size(); ++i)
    if (on[i]) out.push_back(static_cast<int>(i));
  return out;
}

void write_vtk_mesh(const StructuredMesh& mesh, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("write_vtk_mesh: cannot open " + path);
  f << "# vtk DataFile Version 3.0\n"
    << "laminate mesh\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  f << "POINTS " << mesh.n_nodes() << " double\n";
  f.precision(10);
  for (const auto& p : mesh.nodes)
    f << p[0] << " " << p[1] << " " << p[2] << "\n";
  const int ne = mesh.n_elems();
  f << "CELLS " << ne << " " << ne * 9 << "\n";
  for (const auto& cn : mesh.connectivity) {
    f << "8";
    for (int i = 0; i < 8; ++i) f << " " << cn[i];
    f << "\n";
  }
  f << "CELL_TYPES " << ne << "\n";
  for (int e = 0; e < ne; ++e) f << "12\n";  // VTK_HEXAHEDRON
  // Material tag as point data (max incident tag code per point) for easy
  // colouring, plus the exact per-cell tags.
  std::vector<int> ptag(mesh.n_nodes(), -1);
  for (int e = 0; e < ne; ++e)
    for (int i = 0; i < 8; ++i)
      ptag[mesh.connectivity[e][i]] =
          std::max(ptag[mesh.connectivity[e][i]], mesh.material[e].code());
  f << "POINT_DATA " << mesh.n_nodes() << "\nSCALARS material_tag int 1\n"
    << "LOOKUP_TABLE default\n";
  for (int t : ptag) f << t << "\n";
  f << "CELL_DATA " << ne << "\nSCALARS material int 1\nLOOKUP_TABLE default\n";
  for (const auto& t : mesh.material) f << t.code() << "\n";
}

}  // namespace lamfe
