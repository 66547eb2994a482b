//! Face-centred dual mesh: one finite-volume cell per primal face.
//!
//! The cell of an interior face is the union of the two sub-tets spanned by
//! the face and the barycenters of its two adjacent tets; a boundary face
//! contributes a single sub-tet. Barycentric splitting puts a quarter of each
//! tet volume behind each of its faces, so the cells partition the domain.

use crate::error::{Error, Result};
use crate::math::Vec3;
use crate::mesh::primal::PrimalMesh;

/// Planar triangular facet bounding a dual cell.
#[derive(Debug, Clone)]
pub struct DualFacet {
    pub area: f64,
    /// Unit normal pointing out of the owning cell.
    pub normal: Vec3,
    pub centroid: Vec3,
    /// Adjacent cell, or `None` on the domain boundary.
    pub neighbor: Option<usize>,
    /// Boundary tag of the underlying primal face for boundary facets.
    pub tag: Option<u32>,
}

/// Finite-volume cell of the dual mesh. `node` (the primal face barycenter)
/// is where cell unknowns live; boundary cells keep the tag of their face.
#[derive(Debug, Clone)]
pub struct DualCell {
    pub node: Vec3,
    pub volume: f64,
    pub facets: Vec<DualFacet>,
    /// Generating tets: the face owner and, for interior faces, its neighbor.
    pub tets: (usize, Option<usize>),
    pub boundary_tag: Option<u32>,
}

impl DualCell {
    pub fn is_boundary(&self) -> bool {
        self.tets.1.is_none()
    }
}

#[derive(Debug, Clone)]
pub struct DualMesh {
    pub cells: Vec<DualCell>,
}

impl DualMesh {
    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn total_volume(&self) -> f64 {
        self.cells.iter().map(|c| c.volume).sum()
    }

    /// Average per-tet vectors over the cell's generating tets.
    pub fn average_over_tets(&self, cell: usize, per_tet: &[Vec3]) -> Vec3 {
        let c = &self.cells[cell];
        match c.tets.1 {
            Some(t1) => (per_tet[c.tets.0] + per_tet[t1]) * 0.5,
            None => per_tet[c.tets.0],
        }
    }

    /// Gradient of a primal vertex field at a cell node: the arithmetic mean
    /// of the P1 gradients over the cell's generating tets.
    pub fn node_gradient(&self, primal: &PrimalMesh, cell: usize, vertex_values: &[f64]) -> Vec3 {
        let c = &self.cells[cell];
        let g0 = primal.p1_gradient_of(c.tets.0, vertex_values);
        match c.tets.1 {
            Some(t1) => (g0 + primal.p1_gradient_of(t1, vertex_values)) * 0.5,
            None => g0,
        }
    }
}

/// Build the dual mesh of a primal tetrahedral mesh. Cell `i` corresponds to
/// primal face `i`.
pub fn build_dual(primal: &PrimalMesh) -> Result<DualMesh> {
    let barycenters: Vec<Vec3> = (0..primal.n_tets()).map(|t| primal.tet_barycenter(t)).collect();
    let mut cells = Vec::with_capacity(primal.n_faces());

    for (fi, face) in primal.faces.iter().enumerate() {
        let node = primal.face_barycenter(fi);
        let gen0 = face.owner;
        let gen1 = face.neighbor;
        let mut volume = primal.tet_volumes[gen0] / 4.0;
        if let Some(t1) = gen1 {
            volume += primal.tet_volumes[t1] / 4.0;
        }

        let mut facets = Vec::with_capacity(if gen1.is_some() { 6 } else { 4 });
        for tet in [Some(gen0), gen1].into_iter().flatten() {
            let bary = barycenters[tet];
            let d = primal.opposite_vertex(tet, fi);
            // Facets between this cell and the cells of the other three
            // faces of `tet`: one per edge of the face.
            const EDGES: [(usize, usize, usize); 3] = [(0, 1, 2), (0, 2, 1), (1, 2, 0)];
            for (i, j, k) in EDGES {
                let (va, vb, vc) = (face.verts[i], face.verts[j], face.verts[k]);
                let pa = primal.vertices[va];
                let pb = primal.vertices[vb];
                let pc = primal.vertices[vc];
                let cr = (pb - pa).cross(bary - pa);
                let area = 0.5 * cr.norm();
                if area == 0.0 {
                    return Err(Error::MalformedMesh(format!(
                        "zero-area dual facet on face {fi} in tet {tet}"
                    )));
                }
                let mut normal = cr / cr.norm();
                if normal.dot(pc - pa) > 0.0 {
                    normal = -normal;
                }
                // The adjacent cell is the face of `tet` opposite the third
                // face vertex: it contains the edge (va, vb) and vertex d.
                let klocal = primal.tets[tet]
                    .iter()
                    .position(|&v| v == vc)
                    .expect("face vertex in tet");
                let other = primal.tet_faces[tet][klocal];
                debug_assert!(other != fi);
                debug_assert!(primal.faces[other].verts.contains(&d));
                facets.push(DualFacet {
                    area,
                    normal,
                    centroid: (pa + pb + bary) / 3.0,
                    neighbor: Some(other),
                    tag: None,
                });
            }
        }
        if gen1.is_none() {
            // The primal face itself closes the cell on the domain boundary.
            let (area, mut normal) = primal.face_area_normal(fi);
            let pa = primal.vertices[face.verts[0]];
            if normal.dot(barycenters[gen0] - pa) > 0.0 {
                normal = -normal;
            }
            facets.push(DualFacet {
                area,
                normal,
                centroid: node,
                neighbor: None,
                tag: face.tag,
            });
        }

        cells.push(DualCell {
            node,
            volume,
            facets,
            tets: (gen0, gen1),
            boundary_tag: if gen1.is_none() { face.tag } else { None },
        });
    }

    Ok(DualMesh { cells })
}
