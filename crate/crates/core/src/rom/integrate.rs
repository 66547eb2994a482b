//! Online stage: initial-coefficient projection, pressure recovery, and
//! explicit fourth-order Runge-Kutta integration of the reduced momentum and
//! species coefficients. Pressure coefficients are recovered algebraically
//! from the momentum coefficients rather than integrated.

use crate::error::{Error, Result};
use crate::fom::types::{BoundaryConditions, FomState};
use crate::math::DMat;
use crate::mesh::{DualMesh, PrimalMesh};
use crate::pod::{flatten_vectors, unflatten_vectors, PodBasis, ProductSpace};
use crate::rom::operators::{BoundaryAccel, RomOperators};

/// Reduced coefficients at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct RomState {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub time: f64,
}

/// Operators plus factorizations and the calibrated pressure shift, ready to
/// advance in time.
pub struct ReducedSystem<'a> {
    pub ops: &'a RomOperators,
    mass_factor: DMat,
    stiffness_factor: Option<DMat>,
    /// Constant added to recovered pressure coefficients, fixed once from the
    /// initial condition.
    pub pressure_shift: Vec<f64>,
    /// When absent, the boundary acceleration term is the stored vector,
    /// which is exact for boundary data constant in time.
    accel: Option<(&'a BoundaryAccel, &'a BoundaryConditions)>,
    /// Zero the pressure-gradient coupling in the momentum equation.
    pub ablate_pressure: bool,
}

impl<'a> ReducedSystem<'a> {
    pub fn new(
        ops: &'a RomOperators,
        accel: Option<(&'a BoundaryAccel, &'a BoundaryConditions)>,
    ) -> Result<Self> {
        ops.validate()?;
        let mass_factor = ops
            .mass
            .cholesky()
            .map_err(|_| Error::IllConditioned("momentum mass matrix is not positive".into()))?;
        let np = ops.n_pressure();
        let stiffness_factor = if np == 0 {
            None
        } else {
            // safety floor keeps a nearly-constant stray mode factorizable
            let mut shifted = ops.pressure_stiffness.clone();
            let trace: f64 = (0..np).map(|i| shifted.get(i, i)).sum();
            for i in 0..np {
                shifted.add_to(i, i, 1e-14 * trace);
            }
            Some(shifted.cholesky().map_err(|_| {
                Error::IllConditioned("pressure stiffness is not positive".into())
            })?)
        };
        if let Some((a, _)) = accel {
            if a.n_modes() != np {
                return Err(Error::DimensionMismatch(format!(
                    "boundary evaluator carries {} modes, operators {np}",
                    a.n_modes()
                )));
            }
        }
        Ok(ReducedSystem {
            ops,
            mass_factor,
            stiffness_factor,
            pressure_shift: vec![0.0; np],
            accel,
            ablate_pressure: false,
        })
    }

    fn boundary_accel_at(&self, t: f64) -> Vec<f64> {
        match self.accel {
            Some((a, bc)) => a.eval(bc, t),
            None => self.ops.boundary_accel.clone(),
        }
    }

    /// Pressure coefficients straight from the reduced elliptic solve,
    /// before the calibration shift.
    pub fn raw_pressure(&self, a: &[f64], t: f64) -> Vec<f64> {
        let np = self.ops.n_pressure();
        let factor = match &self.stiffness_factor {
            Some(f) => f,
            None => return Vec::new(),
        };
        let mut rhs = self.boundary_accel_at(t);
        for i in 0..np {
            let quad = quad_contract(&self.ops.div_div[i], a);
            rhs[i] += quad;
        }
        add_mul_vec(&mut rhs, &self.ops.source_div, a);
        add_mul_vec(&mut rhs, &self.ops.boundary_viscous, a);
        factor.chol_solve(&rhs)
    }

    /// Fix the calibration shift so recovered pressure matches `b0` at the
    /// initial time.
    pub fn calibrate_pressure(&mut self, a0: &[f64], b0: &[f64], t0: f64) {
        let raw = self.raw_pressure(a0, t0);
        self.pressure_shift = b0.iter().zip(&raw).map(|(b, r)| b - r).collect();
    }

    pub fn recover_pressure(&self, a: &[f64], t: f64) -> Vec<f64> {
        let mut b = self.raw_pressure(a, t);
        for (bi, s) in b.iter_mut().zip(&self.pressure_shift) {
            *bi += s;
        }
        b
    }

    fn momentum_rate(&self, a: &[f64], t: f64) -> Vec<f64> {
        let n = self.ops.n_momentum();
        let mut rhs = vec![0.0; n];
        for i in 0..n {
            rhs[i] = -quad_contract(&self.ops.convective[i], a);
        }
        add_mul_vec(&mut rhs, &self.ops.viscous, a);
        add_mul_vec(&mut rhs, &self.ops.source, a);
        if !self.ablate_pressure && self.ops.n_pressure() > 0 {
            let b = self.raw_pressure(a, t);
            let kb = self.ops.pressure_grad.mul_vec(&b);
            for (r, k) in rhs.iter_mut().zip(kb) {
                *r -= k;
            }
        }
        self.mass_factor.chol_solve(&rhs)
    }

    fn species_rate(&self, a: &[f64], c: &[f64]) -> Vec<f64> {
        let ny = self.ops.n_species();
        let mut rate = vec![0.0; ny];
        for i in 0..ny {
            rate[i] = -bilinear_contract(&self.ops.transport_convective[i], a, c);
        }
        add_mul_vec(&mut rate, &self.ops.transport_diffusive, c);
        rate
    }

    /// One fourth-order Runge-Kutta step of the coupled momentum and species
    /// coefficients.
    pub fn step(&self, state: &RomState, dt: f64) -> Result<RomState> {
        let t = state.time;
        let (a1, c1) = (self.momentum_rate(&state.a, t), self.species_rate(&state.a, &state.c));
        let (a_h, c_h) = advance(&state.a, &state.c, &a1, &c1, dt / 2.0);
        let (a2, c2) = (self.momentum_rate(&a_h, t + dt / 2.0), self.species_rate(&a_h, &c_h));
        let (a_m, c_m) = advance(&state.a, &state.c, &a2, &c2, dt / 2.0);
        let (a3, c3) = (self.momentum_rate(&a_m, t + dt / 2.0), self.species_rate(&a_m, &c_m));
        let (a_e, c_e) = advance(&state.a, &state.c, &a3, &c3, dt);
        let (a4, c4) = (self.momentum_rate(&a_e, t + dt), self.species_rate(&a_e, &c_e));

        let combine = |y: &[f64], k1: &[f64], k2: &[f64], k3: &[f64], k4: &[f64]| {
            y.iter()
                .enumerate()
                .map(|(i, v)| v + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
                .collect::<Vec<f64>>()
        };
        let a = combine(&state.a, &a1, &a2, &a3, &a4);
        let c = combine(&state.c, &c1, &c2, &c3, &c4);
        let time = t + dt;
        if !a.iter().chain(&c).all(|v| v.is_finite()) {
            return Err(Error::Blowup { what: "reduced coefficients".into(), time });
        }
        let b = self.recover_pressure(&a, time);
        Ok(RomState { a, b, c, time })
    }

    /// Advance through the given sorted instants, taking `substeps` equal
    /// Runge-Kutta steps per interval, and return the state at each instant
    /// (the initial state first).
    pub fn integrate(
        &self,
        initial: &RomState,
        times: &[f64],
        substeps: usize,
    ) -> Result<Vec<RomState>> {
        if substeps == 0 {
            return Err(Error::InvalidArgument("substep count must be positive".into()));
        }
        let mut out = Vec::with_capacity(times.len().max(1));
        let mut state = initial.clone();
        out.push(state.clone());
        for pair in times.windows(2) {
            let dt = (pair[1] - pair[0]) / substeps as f64;
            if dt <= 0.0 {
                return Err(Error::InvalidArgument("instants must increase".into()));
            }
            for _ in 0..substeps {
                state = self.step(&state, dt)?;
            }
            // land on the grid instant exactly
            state.time = pair[1];
            state.b = self.recover_pressure(&state.a, state.time);
            out.push(state.clone());
        }
        Ok(out)
    }
}

fn advance(a: &[f64], c: &[f64], da: &[f64], dc: &[f64], h: f64) -> (Vec<f64>, Vec<f64>) {
    (
        a.iter().zip(da).map(|(v, d)| v + h * d).collect(),
        c.iter().zip(dc).map(|(v, d)| v + h * d).collect(),
    )
}

/// x^T M x for a square block.
fn quad_contract(m: &DMat, x: &[f64]) -> f64 {
    let mut acc = 0.0;
    for j in 0..m.n_rows {
        if x[j] == 0.0 {
            continue;
        }
        let mut row = 0.0;
        for k in 0..m.n_cols {
            row += m.get(j, k) * x[k];
        }
        acc += x[j] * row;
    }
    acc
}

/// x^T M y for a rectangular block.
fn bilinear_contract(m: &DMat, x: &[f64], y: &[f64]) -> f64 {
    let mut acc = 0.0;
    for j in 0..m.n_rows {
        if x[j] == 0.0 {
            continue;
        }
        let mut row = 0.0;
        for k in 0..m.n_cols {
            row += m.get(j, k) * y[k];
        }
        acc += x[j] * row;
    }
    acc
}

fn add_mul_vec(acc: &mut [f64], m: &DMat, x: &[f64]) {
    if m.n_rows == 0 || m.n_cols == 0 {
        return;
    }
    for (a, v) in acc.iter_mut().zip(m.mul_vec(x)) {
        *a += v;
    }
}

/// Least-squares coefficients of a full-order state in the given bases.
pub fn project_initial(
    primal: &PrimalMesh,
    dual: &DualMesh,
    momentum: &PodBasis,
    pressure: &PodBasis,
    species: Option<&PodBasis>,
    mass: &DMat,
    state: &FomState,
) -> Result<RomState> {
    let fv = ProductSpace::momentum(dual);
    let flat = flatten_vectors(&state.momentum);
    let e: Vec<f64> =
        momentum.modes.iter().map(|m| fv.dot(m, &flat)).collect::<Result<_>>()?;
    let factor = mass
        .cholesky()
        .map_err(|_| Error::IllConditioned("momentum mass matrix is not positive".into()))?;
    let a = factor.chol_solve(&e);

    let fe = ProductSpace::pressure(primal);
    let b: Vec<f64> =
        pressure.modes.iter().map(|m| fe.dot(m, &state.pressure)).collect::<Result<_>>()?;

    let c = match species {
        Some(basis) => {
            let sp = ProductSpace::species(dual);
            basis.modes.iter().map(|m| sp.dot(m, &state.species)).collect::<Result<_>>()?
        }
        None => Vec::new(),
    };

    Ok(RomState { a, b, c, time: state.time })
}

/// Linear combination of the basis modes with the state's coefficients.
pub fn reconstruct(
    primal: &PrimalMesh,
    dual: &DualMesh,
    momentum: &PodBasis,
    pressure: &PodBasis,
    species: Option<&PodBasis>,
    state: &RomState,
) -> Result<FomState> {
    if state.a.len() != momentum.n_modes()
        || state.b.len() != pressure.n_modes()
        || state.c.len() != species.map_or(0, |s| s.n_modes())
    {
        return Err(Error::DimensionMismatch(format!(
            "coefficient lengths ({}, {}, {}) do not match the bases",
            state.a.len(),
            state.b.len(),
            state.c.len()
        )));
    }
    let mut flat = vec![0.0; 3 * dual.n_cells()];
    for (coeff, mode) in state.a.iter().zip(&momentum.modes) {
        for (f, m) in flat.iter_mut().zip(mode) {
            *f += coeff * m;
        }
    }
    let mut pressure_field = vec![0.0; primal.n_vertices()];
    for (coeff, mode) in state.b.iter().zip(&pressure.modes) {
        for (f, m) in pressure_field.iter_mut().zip(mode) {
            *f += coeff * m;
        }
    }
    let mut species_field = vec![0.0; dual.n_cells()];
    if let Some(basis) = species {
        for (coeff, mode) in state.c.iter().zip(&basis.modes) {
            for (f, m) in species_field.iter_mut().zip(mode) {
                *f += coeff * m;
            }
        }
    }
    Ok(FomState {
        momentum: unflatten_vectors(&flat),
        pressure: pressure_field,
        species: species_field,
        time: state.time,
    })
}
