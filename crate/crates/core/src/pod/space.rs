//! Inner-product spaces for snapshot fields.
//!
//! Momentum and species live on dual cells and use a cell-volume weighted
//! product. Pressure lives on primal vertices and uses a per-tet quadrature
//! at the six edge midpoints (weight 1/6 each), assembled once into a sparse
//! Gram matrix: each tet contributes |T|/8 on the diagonal of its vertices
//! and |T|/24 on each of its six vertex pairs.

use crate::error::{Error, Result};
use crate::math::{Csr, Vec3};
use crate::mesh::{DualMesh, PrimalMesh};

pub enum ProductSpace {
    Diagonal { weights: Vec<f64> },
    Quadrature { q: Csr },
}

impl ProductSpace {
    /// Dual-cell product for three-component fields stored interleaved
    /// (x0, y0, z0, x1, ...): each cell volume is repeated per component.
    pub fn momentum(dual: &DualMesh) -> ProductSpace {
        let mut weights = Vec::with_capacity(3 * dual.n_cells());
        for cell in &dual.cells {
            weights.extend_from_slice(&[cell.volume, cell.volume, cell.volume]);
        }
        ProductSpace::Diagonal { weights }
    }

    /// Dual-cell product for scalar fields.
    pub fn species(dual: &DualMesh) -> ProductSpace {
        ProductSpace::Diagonal { weights: dual.cells.iter().map(|c| c.volume).collect() }
    }

    /// Vertex-field product by edge-midpoint quadrature. Midpoint values come
    /// from linear interpolation of the two edge vertices, so the rule is the
    /// definition of the discrete product rather than an approximation of
    /// another one; its Gram matrix is positive definite.
    pub fn pressure(primal: &PrimalMesh) -> ProductSpace {
        let mut triplets = Vec::with_capacity(primal.n_tets() * 16);
        for t in 0..primal.n_tets() {
            let verts = primal.tets[t];
            let vol = primal.tet_volumes[t];
            for &v in &verts {
                triplets.push((v, v, vol / 8.0));
            }
            for i in 0..4 {
                for j in (i + 1)..4 {
                    triplets.push((verts[i], verts[j], vol / 24.0));
                    triplets.push((verts[j], verts[i], vol / 24.0));
                }
            }
        }
        ProductSpace::Quadrature { q: Csr::from_triplets(primal.n_vertices(), &mut triplets) }
    }

    pub fn dim(&self) -> usize {
        match self {
            ProductSpace::Diagonal { weights } => weights.len(),
            ProductSpace::Quadrature { q } => q.n,
        }
    }

    pub fn dot(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        if a.len() != self.dim() || b.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "inner product over {} entries applied to fields of {} and {}",
                self.dim(),
                a.len(),
                b.len()
            )));
        }
        Ok(match self {
            ProductSpace::Diagonal { weights } => {
                let mut acc = 0.0;
                for i in 0..weights.len() {
                    acc += weights[i] * a[i] * b[i];
                }
                acc
            }
            ProductSpace::Quadrature { q } => q.quad_form(a, b),
        })
    }

    pub fn norm(&self, a: &[f64]) -> Result<f64> {
        Ok(self.dot(a, a)?.max(0.0).sqrt())
    }
}

/// Interleave a per-cell vector field into a flat (x0, y0, z0, x1, ...) array.
pub fn flatten_vectors(field: &[Vec3]) -> Vec<f64> {
    let mut flat = Vec::with_capacity(3 * field.len());
    for v in field {
        flat.extend_from_slice(&[v.x, v.y, v.z]);
    }
    flat
}

pub fn unflatten_vectors(flat: &[f64]) -> Vec<Vec3> {
    assert_eq!(flat.len() % 3, 0);
    flat.chunks_exact(3).map(|c| Vec3::new(c[0], c[1], c[2])).collect()
}
