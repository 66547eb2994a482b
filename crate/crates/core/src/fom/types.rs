//! Problem data for the full-order solver.

use crate::error::{Error, Result};
use crate::math::Vec3;
use crate::mesh::{DualMesh, PrimalMesh};

#[derive(Debug, Clone, Copy)]
pub struct FluidParams {
    pub rho: f64,
    pub mu: f64,
    pub diffusivity: f64,
}

impl FluidParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0) {
            return Err(Error::InvalidArgument(format!("density {} must be positive", self.rho)));
        }
        if !(self.mu >= 0.0) || !(self.diffusivity >= 0.0) {
            return Err(Error::InvalidArgument(
                "viscosity and diffusivity must be nonnegative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TimeControls {
    pub cfl: f64,
    pub t_end: f64,
    pub snapshot_interval: f64,
}

impl TimeControls {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0) {
            return Err(Error::InvalidArgument(format!("cfl {} must be positive", self.cfl)));
        }
        if !(self.snapshot_interval > 0.0) {
            return Err(Error::InvalidArgument("snapshot interval must be positive".into()));
        }
        if !(self.t_end >= 0.0) {
            return Err(Error::InvalidArgument("end time must be nonnegative".into()));
        }
        Ok(())
    }
}

pub type VectorFn = Box<dyn Fn(Vec3, f64) -> Vec3 + Send + Sync>;
pub type ScalarFn = Box<dyn Fn(Vec3, f64) -> f64 + Send + Sync>;

/// Dirichlet data for one boundary region.
pub struct BoundaryFunctions {
    /// Prescribed momentum g(x, t).
    pub momentum: VectorFn,
    /// Time derivative of g, needed by the reduced pressure equation.
    pub momentum_rate: VectorFn,
    /// Prescribed species value.
    pub species: ScalarFn,
}

impl BoundaryFunctions {
    pub fn fixed_momentum(value: Vec3) -> Self {
        BoundaryFunctions {
            momentum: Box::new(move |_, _| value),
            momentum_rate: Box::new(|_, _| Vec3::ZERO),
            species: Box::new(|_, _| 0.0),
        }
    }
}

/// Dirichlet data per boundary tag, indexed by the mesh's tag ids.
pub struct BoundaryConditions {
    pub per_tag: Vec<BoundaryFunctions>,
}

impl BoundaryConditions {
    /// Same data on every tagged region.
    pub fn uniform(mesh: &PrimalMesh, f: impl Fn() -> BoundaryFunctions) -> Self {
        BoundaryConditions { per_tag: (0..mesh.tag_names.len()).map(|_| f()).collect() }
    }

    pub fn validate(&self, mesh: &PrimalMesh) -> Result<()> {
        if self.per_tag.len() != mesh.tag_names.len() {
            return Err(Error::InvalidArgument(format!(
                "{} boundary entries for {} tagged regions",
                self.per_tag.len(),
                mesh.tag_names.len()
            )));
        }
        Ok(())
    }

    pub fn momentum(&self, tag: u32, x: Vec3, t: f64) -> Vec3 {
        (self.per_tag[tag as usize].momentum)(x, t)
    }

    pub fn momentum_rate(&self, tag: u32, x: Vec3, t: f64) -> Vec3 {
        (self.per_tag[tag as usize].momentum_rate)(x, t)
    }

    pub fn species(&self, tag: u32, x: Vec3, t: f64) -> f64 {
        (self.per_tag[tag as usize].species)(x, t)
    }
}

/// Momentum source f_u(x, t) evaluated at dual nodes.
pub struct SourceTerm {
    pub f: VectorFn,
}

/// One full-order state: momentum and species at dual nodes, pressure at
/// primal vertices.
#[derive(Debug, Clone)]
pub struct FomState {
    pub momentum: Vec<Vec3>,
    pub pressure: Vec<f64>,
    pub species: Vec<f64>,
    pub time: f64,
}

impl FomState {
    pub fn check_shapes(&self, primal: &PrimalMesh, dual: &DualMesh) -> Result<()> {
        if self.momentum.len() != dual.n_cells()
            || self.species.len() != dual.n_cells()
            || self.pressure.len() != primal.n_vertices()
        {
            return Err(Error::DimensionMismatch(format!(
                "state sized {}/{}/{} for mesh with {} cells, {} vertices",
                self.momentum.len(),
                self.species.len(),
                self.pressure.len(),
                dual.n_cells(),
                primal.n_vertices()
            )));
        }
        Ok(())
    }
}

/// Everything run_fom needs besides the mesh and the time controls.
pub struct Problem {
    pub params: FluidParams,
    pub bc: BoundaryConditions,
    pub source: Option<SourceTerm>,
    pub initial_momentum: Box<dyn Fn(Vec3) -> Vec3 + Send + Sync>,
    pub initial_species: Box<dyn Fn(Vec3) -> f64 + Send + Sync>,
    /// Analytic initial pressure; when absent the solver projects the
    /// initial momentum once to obtain it.
    pub initial_pressure: Option<Box<dyn Fn(Vec3) -> f64 + Send + Sync>>,
}
