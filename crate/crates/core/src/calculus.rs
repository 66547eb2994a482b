//! Spatial derivatives of fields attached to dual nodes.
//!
//! Every first derivative comes from the same two-step recipe: fit the four
//! face values of a primal tetrahedron (exact for affine fields), then
//! average the per-tet results over a node's generating tets. Second
//! derivatives apply the recipe twice. All loops run in fixed index order so
//! results are reproducible bit for bit.

use crate::math::{Mat3, Vec3, MAT3_ZERO};
use crate::mesh::{DualMesh, PrimalMesh};

/// Gradient of a scalar dual-node field on one tetrahedron.
pub fn tet_gradient(primal: &PrimalMesh, t: usize, field: &[f64]) -> Vec3 {
    primal.face_field_gradient(t, primal.gather_face_vals(t, field))
}

/// Per-node gradient of a scalar dual-node field.
pub fn node_gradients(primal: &PrimalMesh, dual: &DualMesh, field: &[f64]) -> Vec<Vec3> {
    let per_tet: Vec<Vec3> =
        (0..primal.n_tets()).map(|t| tet_gradient(primal, t, field)).collect();
    (0..dual.n_cells()).map(|c| dual.average_over_tets(c, &per_tet)).collect()
}

/// Jacobian of a vector dual-node field on one tetrahedron; row r holds the
/// gradient of component r.
pub fn tet_jacobian(primal: &PrimalMesh, t: usize, field: &[Vec3]) -> Mat3 {
    let faces = primal.tet_faces[t];
    let mut j = MAT3_ZERO;
    for r in 0..3 {
        let vals = [
            field[faces[0]].as_array()[r],
            field[faces[1]].as_array()[r],
            field[faces[2]].as_array()[r],
            field[faces[3]].as_array()[r],
        ];
        let g = primal.face_field_gradient(t, vals);
        j[r] = [g.x, g.y, g.z];
    }
    j
}

/// Per-node Jacobians of a vector dual-node field.
pub fn node_jacobians(primal: &PrimalMesh, dual: &DualMesh, field: &[Vec3]) -> Vec<Mat3> {
    let per_tet: Vec<Mat3> =
        (0..primal.n_tets()).map(|t| tet_jacobian(primal, t, field)).collect();
    (0..dual.n_cells())
        .map(|c| {
            let cell = &dual.cells[c];
            let a = per_tet[cell.tets.0];
            match cell.tets.1 {
                Some(t2) => {
                    let b = per_tet[t2];
                    let mut m = MAT3_ZERO;
                    for r in 0..3 {
                        for s in 0..3 {
                            m[r][s] = 0.5 * (a[r][s] + b[r][s]);
                        }
                    }
                    m
                }
                None => a,
            }
        })
        .collect()
}

/// Per-node divergence of a vector dual-node field.
pub fn node_divergence(primal: &PrimalMesh, dual: &DualMesh, field: &[Vec3]) -> Vec<f64> {
    let per_tet: Vec<f64> = (0..primal.n_tets())
        .map(|t| {
            let j = tet_jacobian(primal, t, field);
            j[0][0] + j[1][1] + j[2][2]
        })
        .collect();
    dual.cells
        .iter()
        .map(|cell| match cell.tets.1 {
            Some(t2) => 0.5 * (per_tet[cell.tets.0] + per_tet[t2]),
            None => per_tet[cell.tets.0],
        })
        .collect()
}

fn curl_of(j: &Mat3) -> Vec3 {
    Vec3::new(j[2][1] - j[1][2], j[0][2] - j[2][0], j[1][0] - j[0][1])
}

/// Per-node curl of a vector dual-node field.
pub fn node_curl(primal: &PrimalMesh, dual: &DualMesh, field: &[Vec3]) -> Vec<Vec3> {
    node_jacobians(primal, dual, field).iter().map(curl_of).collect()
}

/// Per-node vector Laplacian: divergence of the gradient, component-wise.
pub fn node_laplacian(primal: &PrimalMesh, dual: &DualMesh, field: &[Vec3]) -> Vec<Vec3> {
    let jac = node_jacobians(primal, dual, field);
    let mut out = vec![Vec3::ZERO; field.len()];
    for r in 0..3 {
        let row: Vec<Vec3> = jac.iter().map(|j| Vec3::new(j[r][0], j[r][1], j[r][2])).collect();
        let div = node_divergence(primal, dual, &row);
        for (o, d) in out.iter_mut().zip(&div) {
            match r {
                0 => o.x = *d,
                1 => o.y = *d,
                _ => o.z = *d,
            }
        }
    }
    out
}

/// Per-node scalar Laplacian.
pub fn node_laplacian_scalar(primal: &PrimalMesh, dual: &DualMesh, field: &[f64]) -> Vec<f64> {
    let grad = node_gradients(primal, dual, field);
    node_divergence(primal, dual, &grad)
}

/// curl(curl(field)) per node.
pub fn node_rot_rot(primal: &PrimalMesh, dual: &DualMesh, field: &[Vec3]) -> Vec<Vec3> {
    let c = node_curl(primal, dual, field);
    node_curl(primal, dual, &c)
}

/// Row-wise divergence of the outer product a⊗b: component r of the result
/// is the divergence of the field a_r·b.
pub fn div_outer(primal: &PrimalMesh, dual: &DualMesh, a: &[Vec3], b: &[Vec3]) -> Vec<Vec3> {
    let mut out = vec![Vec3::ZERO; a.len()];
    let mut row = vec![Vec3::ZERO; a.len()];
    for r in 0..3 {
        for (i, (av, bv)) in a.iter().zip(b).enumerate() {
            row[i] = *bv * av.as_array()[r];
        }
        let div = node_divergence(primal, dual, &row);
        for (o, d) in out.iter_mut().zip(&div) {
            match r {
                0 => o.x = *d,
                1 => o.y = *d,
                _ => o.z = *d,
            }
        }
    }
    out
}

/// Divergence of a vector field scaled by a scalar field, div(b·s).
pub fn div_scaled(primal: &PrimalMesh, dual: &DualMesh, b: &[Vec3], s: &[f64]) -> Vec<f64> {
    let field: Vec<Vec3> = b.iter().zip(s).map(|(bv, sv)| *bv * *sv).collect();
    node_divergence(primal, dual, &field)
}

/// Transfer a scalar dual-node field to primal vertices by averaging over
/// each vertex's incident faces.
pub fn dual_to_vertex(primal: &PrimalMesh, field: &[f64]) -> Vec<f64> {
    primal
        .vertex_faces
        .iter()
        .map(|faces| {
            let sum: f64 = faces.iter().map(|&f| field[f]).sum();
            sum / faces.len() as f64
        })
        .collect()
}
