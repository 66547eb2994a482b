//! Explicit transport-diffusion stage: convective facet fluxes, viscous and
//! diffusive facet stresses, the cell pressure-gradient integral and the
//! momentum source, all advanced by one time step.

use crate::calculus::{node_gradients, node_jacobians};
use crate::error::{Error, Result};
use crate::fom::flux::rusanov_flux;
use crate::fom::types::{BoundaryConditions, FluidParams, FomState, SourceTerm};
use crate::math::{mat3_mul_vec, Vec3};
use crate::mesh::{DualMesh, PrimalMesh};

/// Pressure attached to one generating tetrahedron of a face: the mean of
/// the three face-vertex values and the tet-barycenter value.
pub fn pressure_face_value(
    primal: &PrimalMesh,
    face: usize,
    tet: usize,
    pressure: &[f64],
) -> f64 {
    let fv = primal.faces[face].verts;
    let tv = primal.tets[tet];
    let bary =
        0.25 * (pressure[tv[0]] + pressure[tv[1]] + pressure[tv[2]] + pressure[tv[3]]);
    0.25 * (pressure[fv[0]] + pressure[fv[1]] + pressure[fv[2]] + bary)
}

/// One explicit step of the momentum and species transport equations,
/// leaving the returned momentum not yet projected.
pub fn transport_diffusion_stage(
    primal: &PrimalMesh,
    dual: &DualMesh,
    state: &FomState,
    params: &FluidParams,
    bc: &BoundaryConditions,
    source: Option<&SourceTerm>,
    dt: f64,
) -> Result<(Vec<Vec3>, Vec<f64>)> {
    let inv_rho = 1.0 / params.rho;
    let t = state.time;

    // node-level derivative data for the viscous and diffusive stresses
    let jacobians = node_jacobians(primal, dual, &state.momentum);
    let species_grad = node_gradients(primal, dual, &state.species);
    // constant P1 pressure gradient per tetrahedron
    let press_grad: Vec<Vec3> =
        (0..primal.n_tets()).map(|t| primal.p1_gradient_of(t, &state.pressure)).collect();

    let n = dual.n_cells();
    let mut momentum = vec![Vec3::ZERO; n];
    let mut species = vec![0.0; n];

    for i in 0..n {
        let cell = &dual.cells[i];
        let w_i = state.momentum[i];
        let y_i = state.species[i];
        let u_i = w_i * inv_rho;
        let w4_i = [w_i.x, w_i.y, w_i.z, y_i];

        let mut conv = [0.0f64; 4];
        let mut visc = Vec3::ZERO;
        let mut diff = 0.0;
        for facet in &cell.facets {
            let (w4_j, u_j, jac_j, grad_j) = match facet.neighbor {
                Some(j) => {
                    let w_j = state.momentum[j];
                    (
                        [w_j.x, w_j.y, w_j.z, state.species[j]],
                        w_j * inv_rho,
                        Some(&jacobians[j]),
                        Some(species_grad[j]),
                    )
                }
                None => {
                    let tag = facet.tag.expect("boundary facet carries a tag");
                    let g = bc.momentum(tag, facet.centroid, t);
                    let ys = bc.species(tag, facet.centroid, t);
                    ([g.x, g.y, g.z, ys], g * inv_rho, None, None)
                }
            };
            let f = rusanov_flux(w4_i, w4_j, u_i, u_j, facet.normal);
            for k in 0..4 {
                conv[k] += facet.area * f[k];
            }

            // stress from the mean of the adjacent node Jacobians, one-sided
            // on the boundary
            let jm = match jac_j {
                Some(j) => {
                    let mut m = jacobians[i];
                    for r in 0..3 {
                        for s in 0..3 {
                            m[r][s] = 0.5 * (m[r][s] + j[r][s]);
                        }
                    }
                    m
                }
                None => jacobians[i],
            };
            visc += mat3_mul_vec(&jm, facet.normal) * (facet.area * params.mu * inv_rho);

            let gm = match grad_j {
                Some(g) => (species_grad[i] + g) * 0.5,
                None => species_grad[i],
            };
            diff += params.diffusivity * gm.dot(facet.normal) * facet.area;
        }

        // ∫_C ∇π as per-tet P1 gradients weighted by the quarter sub-volumes
        let mut press = press_grad[cell.tets.0] * (0.25 * primal.tet_volumes[cell.tets.0]);
        if let Some(t2) = cell.tets.1 {
            press += press_grad[t2] * (0.25 * primal.tet_volumes[t2]);
        }

        let scale = dt / cell.volume;
        let mut w_new = w_i
            + (Vec3::new(conv[0], conv[1], conv[2]) * -1.0 - press + visc) * scale;
        if let Some(src) = source {
            w_new += (src.f)(cell.node, t) * dt;
        }
        let y_new = y_i + (diff - conv[3]) * scale;

        if !(w_new.x.is_finite() && w_new.y.is_finite() && w_new.z.is_finite() && y_new.is_finite())
        {
            return Err(Error::Blowup { what: format!("transport stage, cell {i}"), time: t });
        }
        momentum[i] = w_new;
        species[i] = y_new;
    }
    Ok((momentum, species))
}
