//! Lid-driven cavity with a passive species blob: unit cube at rest, lid
//! sliding in +x on the top face, no-slip walls elsewhere, and a sphere of
//! species concentration released at the center.

use crate::error::{Error, Result};
use crate::fom::{BoundaryConditions, BoundaryFunctions, FluidParams, Problem, TimeControls};
use crate::math::Vec3;
use crate::mesh::PrimalMesh;

pub const LID_MOMENTUM: Vec3 = Vec3 { x: 1.0, y: 0.0, z: 0.0 };

/// Concentration 10 inside the centered ball of radius 0.1, zero outside.
pub fn initial_species(p: Vec3) -> f64 {
    let d2 = (p.x - 0.5).powi(2) + (p.y - 0.5).powi(2) + (p.z - 0.5).powi(2);
    if d2 <= 1e-2 {
        10.0
    } else {
        0.0
    }
}

pub fn default_params() -> FluidParams {
    FluidParams { rho: 1.0, mu: 1e-2, diffusivity: 1e-2 }
}

pub fn default_controls() -> TimeControls {
    TimeControls { cfl: 1.0, t_end: 5.0, snapshot_interval: 0.01 }
}

/// Full problem definition. Fails if the mesh carries no top-face tag.
pub fn problem(primal: &PrimalMesh, params: FluidParams) -> Result<Problem> {
    let lid = primal
        .tag_id("zmax")
        .ok_or_else(|| Error::MalformedMesh("mesh has no zmax boundary tag".into()))?;
    let per_tag = (0..primal.tag_names.len() as u32)
        .map(|tag| {
            if tag == lid {
                BoundaryFunctions::fixed_momentum(LID_MOMENTUM)
            } else {
                BoundaryFunctions::fixed_momentum(Vec3::ZERO)
            }
        })
        .collect();
    Ok(Problem {
        params,
        bc: BoundaryConditions { per_tag },
        source: None,
        initial_momentum: Box::new(|_| Vec3::ZERO),
        initial_species: Box::new(initial_species),
        initial_pressure: None,
    })
}
