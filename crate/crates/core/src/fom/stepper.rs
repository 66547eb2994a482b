//! CFL-driven time loop over the three solver stages.

use crate::error::{Error, Result};
use crate::fom::projection::PressureProjector;
use crate::fom::snapshots::SnapshotSet;
use crate::fom::stage::transport_diffusion_stage;
use crate::fom::types::{FluidParams, FomState, Problem, TimeControls};
use crate::math::Vec3;
use crate::mesh::{DualMesh, PrimalMesh};

/// Largest stable explicit step: per cell h/(|u| + ε + 2(ν + 𝒟)/h) with
/// h = |C|/area(∂C), the length scale that keeps the facet-flux update
/// monotone at unit Courant number. Snapshot clipping happens in the loop,
/// not here.
pub fn compute_dt(momentum: &[Vec3], params: &FluidParams, dual: &DualMesh, cfl: f64) -> f64 {
    let spread = 2.0 * (params.mu / params.rho + params.diffusivity);
    let mut dt = f64::INFINITY;
    for (cell, w) in dual.cells.iter().zip(momentum) {
        let surface: f64 = cell.facets.iter().map(|f| f.area).sum();
        let h = cell.volume / surface;
        let speed = w.norm() / params.rho + 1e-12 + spread / h;
        dt = dt.min(h / speed);
    }
    cfl * dt
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunDiagnostics {
    pub steps: usize,
    /// Largest post-projection divergence norm relative to that step's
    /// Poisson right side.
    pub max_divergence_residual: f64,
    /// Largest post-projection divergence norm in absolute terms.
    pub max_divergence_norm: f64,
    pub max_solver_iterations: usize,
    pub max_velocity: f64,
}

/// Advance the full-order model to t_end, recording a snapshot at t = 0 and
/// after every snapshot interval.
pub fn run_fom(
    primal: &PrimalMesh,
    dual: &DualMesh,
    problem: &Problem,
    controls: &TimeControls,
    tolerance: f64,
) -> Result<(SnapshotSet, RunDiagnostics)> {
    problem.params.validate()?;
    controls.validate()?;
    problem.bc.validate(primal)?;
    for (i, cell) in dual.cells.iter().enumerate() {
        for facet in &cell.facets {
            if facet.neighbor.is_none() && facet.tag.is_none() {
                return Err(Error::MalformedMesh(format!(
                    "boundary facet of cell {i} has no tag to look up Dirichlet data"
                )));
            }
        }
    }

    let projector = PressureProjector::new(primal, tolerance)?;
    let mut momentum: Vec<Vec3> =
        dual.cells.iter().map(|c| (problem.initial_momentum)(c.node)).collect();
    let mut species: Vec<f64> =
        dual.cells.iter().map(|c| (problem.initial_species)(c.node)).collect();
    // boundary nodes are face barycenters on the wall: they carry the
    // Dirichlet data, not an initial-condition sample
    for b in &projector.boundary {
        momentum[b.face] = problem.bc.momentum(b.tag, b.barycenter, 0.0);
        species[b.face] = problem.bc.species(b.tag, b.barycenter, 0.0);
    }
    let pressure = match &problem.initial_pressure {
        Some(f) => {
            let mut p: Vec<f64> = primal.vertices.iter().map(|v| f(*v)).collect();
            projector.anchor_zero_mean(&mut p);
            p
        }
        None => projector.project(&momentum, &problem.bc, 0.0, 1.0)?.delta,
    };

    let mut state = FomState { momentum, pressure, species, time: 0.0 };
    state.check_shapes(primal, dual)?;

    let n_intervals = (controls.t_end / controls.snapshot_interval + 1e-9).floor() as usize;
    let mut states = Vec::with_capacity(n_intervals + 1);
    states.push(state.clone());

    let mut diag = RunDiagnostics::default();
    let mut completed = 0usize;
    while completed < n_intervals {
        let target = (completed + 1) as f64 * controls.snapshot_interval;
        let dt_cfl = compute_dt(&state.momentum, &problem.params, dual, controls.cfl);
        let gap = target - state.time;
        let (dt, hit) = if dt_cfl >= gap { (gap, true) } else { (dt_cfl, false) };
        let t_next = if hit { target } else { state.time + dt };

        let (mut tilde, mut new_species) = transport_diffusion_stage(
            primal,
            dual,
            &state,
            &problem.params,
            &problem.bc,
            problem.source.as_ref(),
            dt,
        )
        .map_err(|e| stamp(e, state.time))?;
        // impose the end-of-step Dirichlet data before the projection so the
        // correction still cancels the divergence functional exactly
        for b in &projector.boundary {
            tilde[b.face] = problem.bc.momentum(b.tag, b.barycenter, t_next);
            new_species[b.face] = problem.bc.species(b.tag, b.barycenter, t_next);
        }
        let res = projector
            .project(&tilde, &problem.bc, t_next, dt)
            .map_err(|e| stamp(e, state.time))?;
        state.momentum = projector.post_projection(&tilde, &res.delta, dt);
        state.species = new_species;
        for (p, d) in state.pressure.iter_mut().zip(&res.delta) {
            *p += d;
        }
        projector.anchor_zero_mean(&mut state.pressure);
        state.time = t_next;

        let div = projector.divergence_norm(&state.momentum, &res.boundary_flux, dt);
        let rel = if res.rhs_norm > 0.0 {
            div / res.rhs_norm
        } else if div == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        diag.max_divergence_residual = diag.max_divergence_residual.max(rel);
        diag.max_divergence_norm = diag.max_divergence_norm.max(div);
        diag.max_solver_iterations = diag.max_solver_iterations.max(res.iterations);
        let vmax = state
            .momentum
            .iter()
            .fold(0.0f64, |m, w| m.max(w.norm() / problem.params.rho));
        diag.max_velocity = diag.max_velocity.max(vmax);
        diag.steps += 1;

        if hit {
            states.push(state.clone());
            completed += 1;
        }
    }

    Ok((SnapshotSet { states }, diag))
}

fn stamp(e: Error, time: f64) -> Error {
    match e {
        Error::Blowup { what, .. } => Error::Blowup { what, time },
        Error::SolverFailure(msg) => Error::SolverFailure(format!("at t={time:.6}: {msg}")),
        other => other,
    }
}
