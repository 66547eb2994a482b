//! Assembly of the reduced operators by Galerkin projection of the governing
//! equations onto the mode sets.
//!
//! Momentum and species operators use the cell-volume product on dual nodes;
//! pressure operators use the vertex quadrature product, with dual-node
//! fields transferred to vertices by averaging. Third-order tensors are kept
//! as one matrix per output mode.

use crate::calculus::{
    div_outer, div_scaled, dual_to_vertex, node_divergence, node_laplacian,
    node_laplacian_scalar, node_rot_rot,
};
use crate::error::{Error, Result};
use crate::fom::projection::assemble_poisson;
use crate::fom::types::{BoundaryConditions, FluidParams};
use crate::math::{DMat, Vec3};
use crate::mesh::{DualMesh, PrimalMesh};
use crate::pod::{unflatten_vectors, PodBasis, ProductSpace, Variable};

/// Reduced operators for the coupled momentum, pressure and species system.
///
/// Sizes: N momentum modes (lifting included), N_p pressure modes, N_y
/// species modes. Third-order tensors are stored as one matrix per leading
/// index: `convective[i]` holds the (j, k) block contracted twice with the
/// momentum coefficients.
#[derive(Debug, Clone)]
pub struct RomOperators {
    /// Gram matrix of the momentum modes, N x N.
    pub mass: DMat,
    /// Projection of the scaled mode Laplacians, N x N.
    pub viscous: DMat,
    /// Projection of div(mode_j outer mode_k), N matrices of N x N.
    pub convective: Vec<DMat>,
    /// Projection of the pressure-mode gradients, N x N_p.
    pub pressure_grad: DMat,
    /// Projection of the source companion modes, N x N (zero without sources).
    pub source: DMat,
    /// Pressure-mode restriction of the vertex stiffness operator, N_p x N_p.
    pub pressure_stiffness: DMat,
    /// Double divergence of mode pairs against pressure modes, N_p of N x N.
    pub div_div: Vec<DMat>,
    /// Divergence of the source companions against pressure modes, N_p x N.
    pub source_div: DMat,
    /// Boundary viscous coupling, N_p x N.
    pub boundary_viscous: DMat,
    /// Boundary acceleration vector frozen at the first snapshot time, N_p.
    pub boundary_accel: Vec<f64>,
    /// Species convection tensor, N_y matrices of N x N_y.
    pub transport_convective: Vec<DMat>,
    /// Species diffusion, N_y x N_y.
    pub transport_diffusive: DMat,
}

impl RomOperators {
    pub fn n_momentum(&self) -> usize {
        self.mass.n_rows
    }

    pub fn n_pressure(&self) -> usize {
        self.pressure_stiffness.n_rows
    }

    pub fn n_species(&self) -> usize {
        self.transport_diffusive.n_rows
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_momentum();
        let np = self.n_pressure();
        let ny = self.n_species();
        let shapes = [
            (&self.mass, n, n, "momentum mass"),
            (&self.viscous, n, n, "viscous"),
            (&self.pressure_grad, n, np, "pressure gradient"),
            (&self.source, n, n, "source"),
            (&self.pressure_stiffness, np, np, "pressure stiffness"),
            (&self.source_div, np, n, "source divergence"),
            (&self.boundary_viscous, np, n, "boundary viscous"),
            (&self.transport_diffusive, ny, ny, "species diffusion"),
        ];
        for (m, rows, cols, what) in shapes {
            if m.n_rows != rows || m.n_cols != cols {
                return Err(Error::DimensionMismatch(format!(
                    "{what} block is {}x{}, expected {rows}x{cols}",
                    m.n_rows, m.n_cols
                )));
            }
            if !m.data().iter().all(|v| v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{what} block has nonfinite entries")));
            }
        }
        if self.convective.len() != n
            || self.div_div.len() != np
            || self.transport_convective.len() != ny
            || self.boundary_accel.len() != np
        {
            return Err(Error::DimensionMismatch("tensor block count mismatch".into()));
        }
        for m in self.convective.iter().chain(&self.div_div) {
            if m.n_rows != n || m.n_cols != n || !m.data().iter().all(|v| v.is_finite()) {
                return Err(Error::DimensionMismatch("tensor block shape mismatch".into()));
            }
        }
        for m in &self.transport_convective {
            if m.n_rows != n || m.n_cols != ny || !m.data().iter().all(|v| v.is_finite()) {
                return Err(Error::DimensionMismatch("species tensor shape mismatch".into()));
            }
        }
        if !self.boundary_accel.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidArgument("boundary acceleration has nonfinite entries".into()));
        }
        Ok(())
    }
}

/// Momentum-equation blocks.
pub struct MomentumOps {
    pub mass: DMat,
    pub viscous: DMat,
    pub convective: Vec<DMat>,
    pub pressure_grad: DMat,
    pub source: DMat,
}

/// Pressure-equation blocks plus the time-dependent boundary evaluator.
pub struct PressureOps {
    pub stiffness: DMat,
    pub div_div: Vec<DMat>,
    pub source_div: DMat,
    pub boundary_viscous: DMat,
    pub accel: BoundaryAccel,
}

/// Species-equation blocks.
pub struct TransportOps {
    pub convective: Vec<DMat>,
    pub diffusive: DMat,
}

fn fv_dot(dual: &DualMesh, a: &[Vec3], b: &[Vec3]) -> f64 {
    let mut acc = 0.0;
    for (cell, (x, y)) in dual.cells.iter().zip(a.iter().zip(b)) {
        acc += cell.volume * x.dot(*y);
    }
    acc
}

fn fv_dot_scalar(dual: &DualMesh, a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (cell, (x, y)) in dual.cells.iter().zip(a.iter().zip(b)) {
        acc += cell.volume * x * y;
    }
    acc
}

fn node_modes(basis: &PodBasis, dual: &DualMesh, what: &str) -> Result<Vec<Vec<Vec3>>> {
    if basis.n_modes() > 0 && basis.field_len() != 3 * dual.n_cells() {
        return Err(Error::DimensionMismatch(format!(
            "{what} modes have {} entries, mesh has {} dual cells",
            basis.field_len(),
            dual.n_cells()
        )));
    }
    Ok(basis.modes.iter().map(|m| unflatten_vectors(m)).collect())
}

fn unflatten_sources(source_modes: &[Vec<f64>], n_cells: usize) -> Result<Vec<Vec<Vec3>>> {
    source_modes
        .iter()
        .map(|m| {
            if m.len() != 3 * n_cells {
                return Err(Error::DimensionMismatch(format!(
                    "source mode has {} entries, mesh has {} dual cells",
                    m.len(),
                    n_cells
                )));
            }
            Ok(unflatten_vectors(m))
        })
        .collect()
}

/// Assemble the momentum-equation blocks.
///
/// `source_modes` must be empty or aligned one-to-one with the momentum
/// modes (lifting companion first when the momentum basis carries one).
pub fn assemble_momentum_ops(
    primal: &PrimalMesh,
    dual: &DualMesh,
    momentum: &PodBasis,
    pressure: &PodBasis,
    source_modes: &[Vec<f64>],
    params: &FluidParams,
) -> Result<MomentumOps> {
    let n = momentum.n_modes();
    let np = pressure.n_modes();
    if momentum.variable != Variable::Momentum || pressure.variable != Variable::Pressure {
        return Err(Error::InvalidArgument("basis variables do not match their roles".into()));
    }
    if !source_modes.is_empty() && source_modes.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} source modes for {n} momentum modes",
            source_modes.len()
        )));
    }
    let phi = node_modes(momentum, dual, "momentum")?;
    let sigma = unflatten_sources(source_modes, dual.n_cells())?;
    let nu = params.mu / params.rho;

    let mut mass = DMat::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = fv_dot(dual, &phi[i], &phi[j]);
            mass.set(i, j, v);
            mass.set(j, i, v);
        }
    }

    let mut viscous = DMat::zeros(n, n);
    for j in 0..n {
        let lap = node_laplacian(primal, dual, &phi[j]);
        for i in 0..n {
            viscous.set(i, j, nu * fv_dot(dual, &phi[i], &lap));
        }
    }

    let mut convective = vec![DMat::zeros(n, n); n];
    for j in 0..n {
        for k in 0..n {
            let field = div_outer(primal, dual, &phi[j], &phi[k]);
            for i in 0..n {
                convective[i].set(j, k, fv_dot(dual, &phi[i], &field) / params.rho);
            }
        }
    }

    let mut pressure_grad = DMat::zeros(n, np);
    for j in 0..np {
        let grad: Vec<Vec3> = (0..dual.n_cells())
            .map(|c| dual.node_gradient(primal, c, &pressure.modes[j]))
            .collect();
        for i in 0..n {
            pressure_grad.set(i, j, fv_dot(dual, &phi[i], &grad));
        }
    }

    let mut source = DMat::zeros(n, n);
    for (j, s) in sigma.iter().enumerate() {
        for i in 0..n {
            source.set(i, j, fv_dot(dual, &phi[i], s));
        }
    }

    Ok(MomentumOps { mass, viscous, convective, pressure_grad, source })
}

/// Time-dependent boundary acceleration functional: for each pressure mode,
/// the quadrature of the mode against the rate of change of the prescribed
/// boundary momentum, through the outward normals.
#[derive(Debug, Clone)]
pub struct BoundaryAccel {
    faces: Vec<AccelFace>,
    /// weights[i][f][c] = (area/3) * psi_i(corner c of boundary face f)
    weights: Vec<Vec<[f64; 3]>>,
}

#[derive(Debug, Clone)]
struct AccelFace {
    corners: [Vec3; 3],
    normal: Vec3,
    tag: u32,
}

impl BoundaryAccel {
    pub fn n_modes(&self) -> usize {
        self.weights.len()
    }

    /// Evaluate the reduced boundary term at time t. The sign is the one the
    /// term carries on the right side of the reduced pressure system.
    pub fn eval(&self, bc: &BoundaryConditions, t: f64) -> Vec<f64> {
        let mut g = vec![0.0; self.weights.len()];
        for (f, face) in self.faces.iter().enumerate() {
            for c in 0..3 {
                let rate = bc.momentum_rate(face.tag, face.corners[c], t);
                let along = rate.dot(face.normal);
                if along != 0.0 {
                    for (gi, w) in g.iter_mut().zip(&self.weights) {
                        *gi -= w[f][c] * along;
                    }
                }
            }
        }
        g
    }
}

/// Assemble the pressure-equation blocks.
pub fn assemble_pressure_ops(
    primal: &PrimalMesh,
    dual: &DualMesh,
    pressure: &PodBasis,
    momentum: &PodBasis,
    source_modes: &[Vec<f64>],
    params: &FluidParams,
) -> Result<PressureOps> {
    let n = momentum.n_modes();
    let np = pressure.n_modes();
    if !source_modes.is_empty() && source_modes.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} source modes for {n} momentum modes",
            source_modes.len()
        )));
    }
    let phi = node_modes(momentum, dual, "momentum")?;
    let sigma = unflatten_sources(source_modes, dual.n_cells())?;
    let fe = ProductSpace::pressure(primal);
    let psi = &pressure.modes;
    for m in psi {
        if m.len() != primal.n_vertices() {
            return Err(Error::DimensionMismatch(format!(
                "pressure mode has {} entries, mesh has {} vertices",
                m.len(),
                primal.n_vertices()
            )));
        }
    }

    let vertex_stiffness = assemble_poisson(primal)?;
    let mut stiffness = DMat::zeros(np, np);
    for i in 0..np {
        for j in 0..=i {
            let v = vertex_stiffness.quad_form(&psi[i], &psi[j]);
            stiffness.set(i, j, v);
            stiffness.set(j, i, v);
        }
    }

    let mut div_div = vec![DMat::zeros(n, n); np];
    for j in 0..n {
        for k in 0..n {
            let pair = div_outer(primal, dual, &phi[j], &phi[k]);
            let scalar = node_divergence(primal, dual, &pair);
            let at_vertices = dual_to_vertex(primal, &scalar);
            for i in 0..np {
                div_div[i].set(j, k, fe.dot(&psi[i], &at_vertices)? / params.rho);
            }
        }
    }

    let mut source_div = DMat::zeros(np, n);
    for (j, s) in sigma.iter().enumerate() {
        let div = node_divergence(primal, dual, s);
        let at_vertices = dual_to_vertex(primal, &div);
        for i in 0..np {
            source_div.set(i, j, -fe.dot(&psi[i], &at_vertices)?);
        }
    }

    // boundary faces: the dual cell of a boundary face shares its index
    let nu = params.mu / params.rho;
    let boundary = boundary_faces(primal)?;

    let mut boundary_viscous = DMat::zeros(np, n);
    for (j, mode) in phi.iter().enumerate() {
        let rr = node_rot_rot(primal, dual, mode);
        for &(f, area, normal, verts, _) in &boundary {
            let along = rr[f].dot(normal);
            for i in 0..np {
                let psi_sum: f64 = verts.iter().map(|&v| psi[i][v]).sum();
                boundary_viscous.add_to(i, j, -nu * area / 3.0 * psi_sum * along);
            }
        }
    }

    Ok(PressureOps {
        stiffness,
        div_div,
        source_div,
        boundary_viscous,
        accel: boundary_accel(primal, pressure)?,
    })
}

fn boundary_faces(primal: &PrimalMesh) -> Result<Vec<(usize, f64, Vec3, [usize; 3], u32)>> {
    let mut boundary = Vec::new();
    for (f, face) in primal.faces.iter().enumerate() {
        if face.neighbor.is_some() {
            continue;
        }
        let (area, normal) = primal.face_area_normal(f);
        let tag = face.tag.ok_or_else(|| {
            Error::MalformedMesh(format!("boundary face {f} carries no boundary tag"))
        })?;
        boundary.push((f, area, normal, face.verts, tag));
    }
    Ok(boundary)
}

/// Build the boundary acceleration evaluator from the mesh and the pressure
/// basis alone, so the online stage can recreate it without reassembling the
/// volume operators.
pub fn boundary_accel(primal: &PrimalMesh, pressure: &PodBasis) -> Result<BoundaryAccel> {
    if pressure.variable != Variable::Pressure {
        return Err(Error::InvalidArgument("basis variables do not match their roles".into()));
    }
    let psi = &pressure.modes;
    for m in psi {
        if m.len() != primal.n_vertices() {
            return Err(Error::DimensionMismatch(format!(
                "pressure mode has {} entries, mesh has {} vertices",
                m.len(),
                primal.n_vertices()
            )));
        }
    }
    let boundary = boundary_faces(primal)?;
    let faces: Vec<AccelFace> = boundary
        .iter()
        .map(|&(_, _, normal, verts, tag)| AccelFace {
            corners: [
                primal.vertices[verts[0]],
                primal.vertices[verts[1]],
                primal.vertices[verts[2]],
            ],
            normal,
            tag,
        })
        .collect();
    let weights: Vec<Vec<[f64; 3]>> = psi
        .iter()
        .map(|mode| {
            boundary
                .iter()
                .map(|&(_, area, _, verts, _)| {
                    [
                        area / 3.0 * mode[verts[0]],
                        area / 3.0 * mode[verts[1]],
                        area / 3.0 * mode[verts[2]],
                    ]
                })
                .collect()
        })
        .collect();
    Ok(BoundaryAccel { faces, weights })
}

/// Assemble the species-equation blocks.
pub fn assemble_transport_ops(
    primal: &PrimalMesh,
    dual: &DualMesh,
    species: &PodBasis,
    momentum: &PodBasis,
    params: &FluidParams,
) -> Result<TransportOps> {
    let n = momentum.n_modes();
    let ny = species.n_modes();
    if species.variable != Variable::Species {
        return Err(Error::InvalidArgument("species basis variable mismatch".into()));
    }
    let phi = node_modes(momentum, dual, "momentum")?;
    let chi = &species.modes;
    for m in chi {
        if m.len() != dual.n_cells() {
            return Err(Error::DimensionMismatch(format!(
                "species mode has {} entries, mesh has {} dual cells",
                m.len(),
                dual.n_cells()
            )));
        }
    }

    let mut convective = vec![DMat::zeros(n, ny); ny];
    for j in 0..n {
        for k in 0..ny {
            let field = div_scaled(primal, dual, &phi[j], &chi[k]);
            for i in 0..ny {
                convective[i].set(j, k, fv_dot_scalar(dual, &chi[i], &field) / params.rho);
            }
        }
    }

    let mut diffusive = DMat::zeros(ny, ny);
    for j in 0..ny {
        let lap = node_laplacian_scalar(primal, dual, &chi[j]);
        for i in 0..ny {
            diffusive.set(i, j, params.diffusivity * fv_dot_scalar(dual, &chi[i], &lap));
        }
    }

    Ok(TransportOps { convective, diffusive })
}

/// Assemble every reduced block and freeze the boundary acceleration at the
/// first snapshot time for the stored operator set.
pub fn assemble_operators(
    primal: &PrimalMesh,
    dual: &DualMesh,
    momentum: &PodBasis,
    pressure: &PodBasis,
    species: Option<&PodBasis>,
    source_modes: &[Vec<f64>],
    bc: &BoundaryConditions,
    params: &FluidParams,
    t_first: f64,
) -> Result<(RomOperators, BoundaryAccel)> {
    let m = assemble_momentum_ops(primal, dual, momentum, pressure, source_modes, params)?;
    let p = assemble_pressure_ops(primal, dual, pressure, momentum, source_modes, params)?;
    let (transport_convective, transport_diffusive) = match species {
        Some(basis) => {
            let t = assemble_transport_ops(primal, dual, basis, momentum, params)?;
            (t.convective, t.diffusive)
        }
        None => (Vec::new(), DMat::zeros(0, 0)),
    };
    let boundary_accel = p.accel.eval(bc, t_first);
    let ops = RomOperators {
        mass: m.mass,
        viscous: m.viscous,
        convective: m.convective,
        pressure_grad: m.pressure_grad,
        source: m.source,
        pressure_stiffness: p.stiffness,
        div_div: p.div_div,
        source_div: p.source_div,
        boundary_viscous: p.boundary_viscous,
        boundary_accel,
        transport_convective,
        transport_diffusive,
    };
    ops.validate()?;
    Ok((ops, p.accel))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fom::types::BoundaryFunctions;
    use crate::mesh::{build_cube_primal, build_dual};
    use crate::pod::{build_basis, flatten_vectors};

    fn meshes(n: usize) -> (PrimalMesh, DualMesh) {
        let primal = build_cube_primal(n).unwrap();
        let dual = build_dual(&primal).unwrap();
        (primal, dual)
    }

    fn params() -> FluidParams {
        FluidParams { mu: 1e-2, rho: 1.0, diffusivity: 1e-2 }
    }

    fn smooth_momentum_basis(dual: &DualMesh, count: usize) -> PodBasis {
        let space = ProductSpace::momentum(dual);
        let snaps: Vec<Vec<f64>> = (0..count + 2)
            .map(|s| {
                let field: Vec<Vec3> = (0..dual.n_cells())
                    .map(|c| {
                        let p = dual.cells[c].node;
                        let f = 1.0 + 0.35 * s as f64;
                        Vec3::new(
                            (f * p.y).sin() + 0.2 * (p.z * f).cos(),
                            (f * p.z).cos() - 0.1 * p.x,
                            0.3 * (f * p.x).sin() + 0.05 * s as f64,
                        )
                    })
                    .collect();
                flatten_vectors(&field)
            })
            .collect();
        let mut basis = build_basis(&space, Variable::Momentum, &snaps, 1.0, false).unwrap();
        basis.modes.truncate(count);
        basis
    }

    fn smooth_pressure_basis(primal: &PrimalMesh, count: usize) -> PodBasis {
        let space = ProductSpace::pressure(primal);
        let snaps: Vec<Vec<f64>> = (0..count + 2)
            .map(|s| {
                primal
                    .vertices
                    .iter()
                    .map(|p| ((1.0 + 0.4 * s as f64) * (p.x + 0.7 * p.y - 0.3 * p.z)).sin())
                    .collect()
            })
            .collect();
        let mut basis = build_basis(&space, Variable::Pressure, &snaps, 1.0, false).unwrap();
        basis.modes.truncate(count);
        basis
    }

    fn smooth_species_basis(dual: &DualMesh, count: usize) -> PodBasis {
        let space = ProductSpace::species(dual);
        let snaps: Vec<Vec<f64>> = (0..count + 2)
            .map(|s| {
                (0..dual.n_cells())
                    .map(|c| {
                        let p = dual.cells[c].node;
                        ((2.1 + 0.3 * s as f64) * p.x + 1.3 * p.y * p.z).cos()
                    })
                    .collect()
            })
            .collect();
        let mut basis = build_basis(&space, Variable::Species, &snaps, 1.0, false).unwrap();
        basis.modes.truncate(count);
        basis
    }

    #[test]
    fn orthonormal_basis_has_identity_mass() {
        let (primal, dual) = meshes(2);
        let momentum = smooth_momentum_basis(&dual, 3);
        let pressure = smooth_pressure_basis(&primal, 1);
        let ops =
            assemble_momentum_ops(&primal, &dual, &momentum, &pressure, &[], &params()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((ops.mass.get(i, j) - want).abs() < 1e-10, "mass[{i}][{j}]");
            }
        }
    }

    #[test]
    fn constant_mode_has_no_convection_or_diffusion() {
        let (primal, dual) = meshes(2);
        let space = ProductSpace::momentum(&dual);
        let ones = flatten_vectors(&vec![Vec3::new(1.0, 0.0, 0.0); dual.n_cells()]);
        let norm = space.norm(&ones).unwrap();
        let mode: Vec<f64> = ones.iter().map(|v| v / norm).collect();
        let momentum = PodBasis {
            variable: Variable::Momentum,
            modes: vec![mode],
            n_lifting: 0,
            eigenvalues: vec![1.0],
            cumulative_energies: vec![1.0],
            eigenvectors: vec![vec![1.0]],
            normalizers: vec![1.0],
        };
        let pressure = smooth_pressure_basis(&primal, 1);
        let ops =
            assemble_momentum_ops(&primal, &dual, &momentum, &pressure, &[], &params()).unwrap();
        assert!(ops.convective[0].get(0, 0).abs() < 1e-12);
        assert!(ops.viscous.get(0, 0).abs() < 1e-12);
    }

    #[test]
    fn gradient_coupling_of_linear_pressure_mode_is_exact() {
        let (primal, dual) = meshes(2);
        let space = ProductSpace::momentum(&dual);
        let ones = flatten_vectors(&vec![Vec3::new(1.0, 0.0, 0.0); dual.n_cells()]);
        let norm = space.norm(&ones).unwrap();
        let mode: Vec<f64> = ones.iter().map(|v| v / norm).collect();
        let momentum = PodBasis {
            variable: Variable::Momentum,
            modes: vec![mode],
            n_lifting: 0,
            eigenvalues: vec![1.0],
            cumulative_energies: vec![1.0],
            eigenvectors: vec![vec![1.0]],
            normalizers: vec![1.0],
        };
        // single pressure mode = x coordinate: gradient (1,0,0) everywhere
        let psi: Vec<f64> = primal.vertices.iter().map(|p| p.x).collect();
        let pressure = PodBasis {
            variable: Variable::Pressure,
            modes: vec![psi],
            n_lifting: 0,
            eigenvalues: vec![1.0],
            cumulative_energies: vec![1.0],
            eigenvectors: vec![vec![1.0]],
            normalizers: vec![1.0],
        };
        let ops =
            assemble_momentum_ops(&primal, &dual, &momentum, &pressure, &[], &params()).unwrap();
        // <mode, (1,0,0)> = norm of the unnormalized field = total volume / norm
        let want = 1.0 / norm;
        assert!((ops.pressure_grad.get(0, 0) - want).abs() < 1e-12);
    }

    #[test]
    fn convective_tensor_matches_componentwise_oracle() {
        let (primal, dual) = meshes(2);
        let momentum = smooth_momentum_basis(&dual, 3);
        let pressure = smooth_pressure_basis(&primal, 1);
        let p = params();
        let ops = assemble_momentum_ops(&primal, &dual, &momentum, &pressure, &[], &p).unwrap();
        let phi: Vec<Vec<Vec3>> =
            momentum.modes.iter().map(|m| unflatten_vectors(m)).collect();
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    // oracle: three scalar divergences, one per component
                    let mut field = vec![Vec3::ZERO; dual.n_cells()];
                    for r in 0..3 {
                        let prod: Vec<Vec3> = phi[j]
                            .iter()
                            .zip(&phi[k])
                            .map(|(a, b)| *b * a.as_array()[r])
                            .collect();
                        let div = node_divergence(&primal, &dual, &prod);
                        for (f, d) in field.iter_mut().zip(div) {
                            match r {
                                0 => f.x = d,
                                1 => f.y = d,
                                _ => f.z = d,
                            }
                        }
                    }
                    let want = fv_dot(&dual, &phi[i], &field) / p.rho;
                    let got = ops.convective[i].get(j, k);
                    assert!(
                        (got - want).abs() <= 1e-13 * (1.0 + want.abs()),
                        "C[{i}][{j}][{k}]: {got} vs {want}"
                    );
                }
            }
        }
    }

    #[test]
    fn div_div_tensor_matches_componentwise_oracle() {
        let (primal, dual) = meshes(2);
        let momentum = smooth_momentum_basis(&dual, 2);
        let pressure = smooth_pressure_basis(&primal, 2);
        let p = params();
        let ops =
            assemble_pressure_ops(&primal, &dual, &pressure, &momentum, &[], &p).unwrap();
        let fe = ProductSpace::pressure(&primal);
        let phi: Vec<Vec<Vec3>> =
            momentum.modes.iter().map(|m| unflatten_vectors(m)).collect();
        for j in 0..2 {
            for k in 0..2 {
                let mut pair = vec![Vec3::ZERO; dual.n_cells()];
                for r in 0..3 {
                    let prod: Vec<Vec3> = phi[j]
                        .iter()
                        .zip(&phi[k])
                        .map(|(a, b)| *b * a.as_array()[r])
                        .collect();
                    let div = node_divergence(&primal, &dual, &prod);
                    for (f, d) in pair.iter_mut().zip(div) {
                        match r {
                            0 => f.x = d,
                            1 => f.y = d,
                            _ => f.z = d,
                        }
                    }
                }
                let scalar = node_divergence(&primal, &dual, &pair);
                let at_vertices = dual_to_vertex(&primal, &scalar);
                for i in 0..2 {
                    let want = fe.dot(&pressure.modes[i], &at_vertices).unwrap() / p.rho;
                    let got = ops.div_div[i].get(j, k);
                    assert!(
                        (got - want).abs() <= 1e-13 * (1.0 + want.abs()),
                        "D[{i}][{j}][{k}]: {got} vs {want}"
                    );
                }
            }
        }
    }

    #[test]
    fn species_tensor_matches_componentwise_oracle_and_zero_diffusivity() {
        let (primal, dual) = meshes(2);
        let momentum = smooth_momentum_basis(&dual, 2);
        let species = smooth_species_basis(&dual, 2);
        let mut p = params();
        let ops = assemble_transport_ops(&primal, &dual, &species, &momentum, &p).unwrap();
        let phi: Vec<Vec<Vec3>> =
            momentum.modes.iter().map(|m| unflatten_vectors(m)).collect();
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    let prod: Vec<Vec3> = phi[j]
                        .iter()
                        .zip(&species.modes[k])
                        .map(|(v, s)| *v * *s)
                        .collect();
                    let div = node_divergence(&primal, &dual, &prod);
                    let want = fv_dot_scalar(&dual, &species.modes[i], &div) / p.rho;
                    let got = ops.convective[i].get(j, k);
                    assert!(
                        (got - want).abs() <= 1e-13 * (1.0 + want.abs()),
                        "E[{i}][{j}][{k}]: {got} vs {want}"
                    );
                }
            }
        }

        p.diffusivity = 0.0;
        let ops0 = assemble_transport_ops(&primal, &dual, &species, &momentum, &p).unwrap();
        assert!(ops0.diffusive.data().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn pressure_stiffness_is_positive_on_nonconstant_modes() {
        let (primal, dual) = meshes(2);
        let momentum = smooth_momentum_basis(&dual, 1);
        let pressure = smooth_pressure_basis(&primal, 1);
        let ops =
            assemble_pressure_ops(&primal, &dual, &pressure, &momentum, &[], &params()).unwrap();
        assert!(ops.stiffness.get(0, 0) > 0.0);
        assert_eq!(ops.stiffness.asymmetry(), 0.0);
    }

    #[test]
    fn steady_boundary_data_gives_zero_acceleration_term() {
        let (primal, dual) = meshes(2);
        let momentum = smooth_momentum_basis(&dual, 2);
        let pressure = smooth_pressure_basis(&primal, 2);
        let ops =
            assemble_pressure_ops(&primal, &dual, &pressure, &momentum, &[], &params()).unwrap();
        let bc = BoundaryConditions::uniform(&primal, || BoundaryFunctions {
            momentum: Box::new(|_, _| Vec3::new(1.0, 0.0, 0.0)),
            momentum_rate: Box::new(|_, _| Vec3::ZERO),
            species: Box::new(|_, _| 0.0),
        });
        for t in [0.0, 0.7, 2.5] {
            assert!(ops.accel.eval(&bc, t).iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn time_dependent_boundary_data_scales_the_acceleration_term() {
        let (primal, dual) = meshes(2);
        let momentum = smooth_momentum_basis(&dual, 1);
        let pressure = smooth_pressure_basis(&primal, 2);
        let ops =
            assemble_pressure_ops(&primal, &dual, &pressure, &momentum, &[], &params()).unwrap();
        // rate linear in t: the term must scale linearly too
        let bc = BoundaryConditions::uniform(&primal, || BoundaryFunctions {
            momentum: Box::new(|_, _| Vec3::ZERO),
            momentum_rate: Box::new(|x, t| Vec3::new(t * x.y, t, 0.2)),
            species: Box::new(|_, _| 0.0),
        });
        let g0 = ops.accel.eval(&bc, 0.0);
        let g1 = ops.accel.eval(&bc, 1.0);
        let g2 = ops.accel.eval(&bc, 2.0);
        for i in 0..2 {
            let slope = g1[i] - g0[i];
            assert!((g2[i] - (g0[i] + 2.0 * slope)).abs() < 1e-13 * (1.0 + slope.abs()));
        }
    }

    #[test]
    fn viscosity_scales_the_boundary_viscous_block_linearly() {
        let (primal, dual) = meshes(2);
        let momentum = smooth_momentum_basis(&dual, 2);
        let pressure = smooth_pressure_basis(&primal, 2);
        let mut p = params();
        let a = assemble_pressure_ops(&primal, &dual, &pressure, &momentum, &[], &p).unwrap();
        p.mu *= 3.0;
        let b = assemble_pressure_ops(&primal, &dual, &pressure, &momentum, &[], &p).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let x = a.boundary_viscous.get(i, j);
                let y = b.boundary_viscous.get(i, j);
                assert!((y - 3.0 * x).abs() <= 1e-13 * (1.0 + x.abs()), "P[{i}][{j}]");
            }
        }
    }
}
