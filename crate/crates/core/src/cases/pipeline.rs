//! End-to-end orchestration. Each stage is a pure function of the artifacts
//! on disk, so running the stages one by one from separate processes gives
//! the same bytes as one pipeline call.

use std::path::Path;

use crate::binfmt::atomic_write;
use crate::cases::report::{guarded_relative_error, write_error_csv, ErrorReport};
use crate::cases::{cavity, manufactured};
use crate::error::{Error, Result};
use crate::fom::{read_snapshots, run_fom, write_snapshots, Problem, SnapshotSet, TimeControls};
use crate::math::DMat;
use crate::mesh::{build_cube_primal, build_dual, DualMesh, PrimalMesh};
use crate::pod::{
    build_basis, build_source_basis, flatten_vectors, read_basis, write_basis, PodBasis,
    ProductSpace, Variable,
};
use crate::rom::{
    boundary_accel, project_initial, read_operators, reconstruct, write_coefficient_csv,
    write_operators, ReducedSystem, RomState,
};
use crate::vtk::write_field_dump;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseKind {
    Manufactured,
    Cavity,
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub case: CaseKind,
    pub n: usize,
    pub params: crate::fom::FluidParams,
    pub controls: TimeControls,
    pub kappa_momentum: f64,
    pub kappa_pressure: f64,
    pub kappa_species: f64,
    /// Runge-Kutta steps per snapshot interval.
    pub rom_substeps: usize,
    /// Zero the pressure-gradient coupling in the reduced momentum equation.
    pub ablate_pressure: bool,
    pub tolerance: f64,
    /// Field-dump cadence in snapshots; 0 writes only the final one.
    pub dump_every: usize,
}

impl PipelineConfig {
    pub fn manufactured(n: usize) -> Self {
        PipelineConfig {
            case: CaseKind::Manufactured,
            n,
            params: manufactured::default_params(),
            controls: manufactured::default_controls(),
            kappa_momentum: 0.99999,
            kappa_pressure: 0.9999,
            kappa_species: 0.9999,
            rom_substeps: 50,
            ablate_pressure: false,
            tolerance: 1e-10,
            dump_every: 0,
        }
    }

    pub fn cavity(n: usize) -> Self {
        PipelineConfig {
            case: CaseKind::Cavity,
            n,
            params: cavity::default_params(),
            controls: cavity::default_controls(),
            kappa_momentum: 0.9999,
            kappa_pressure: 0.99,
            kappa_species: 0.9999,
            rom_substeps: 50,
            ablate_pressure: false,
            tolerance: 1e-10,
            dump_every: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidArgument("mesh subdivision count must be positive".into()));
        }
        for (name, k) in [
            ("kappa_wu", self.kappa_momentum),
            ("kappa_pi", self.kappa_pressure),
            ("kappa_wy", self.kappa_species),
        ] {
            if !(k > 0.0 && k <= 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "{name} = {k} outside (0, 1]"
                )));
            }
        }
        if self.rom_substeps == 0 {
            return Err(Error::InvalidArgument("substep count must be positive".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidArgument("solver tolerance must be positive".into()));
        }
        self.params.validate()?;
        self.controls.validate()
    }
}

pub const SNAPSHOTS_FILE: &str = "snapshots.bin";
pub const MOMENTUM_BASIS_FILE: &str = "basis_wu.bin";
pub const PRESSURE_BASIS_FILE: &str = "basis_pi.bin";
pub const SPECIES_BASIS_FILE: &str = "basis_wy.bin";
pub const EIGENVALUES_FILE: &str = "eigenvalues.csv";
pub const OPERATORS_FILE: &str = "operators.bin";

pub fn coefficients_file(ablated: bool) -> &'static str {
    if ablated {
        "rom_coefficients_ablated.csv"
    } else {
        "rom_coefficients.csv"
    }
}

pub fn report_file(ablated: bool) -> &'static str {
    if ablated {
        "error_report_ablated.csv"
    } else {
        "error_report.csv"
    }
}

/// Mesh, problem data and per-case reduction policy.
pub struct CaseSetup {
    pub primal: PrimalMesh,
    pub dual: DualMesh,
    pub problem: Problem,
    pub lift_momentum: bool,
    pub has_source: bool,
    pub has_species: bool,
}

pub fn build_case(cfg: &PipelineConfig) -> Result<CaseSetup> {
    cfg.validate()?;
    let primal = build_cube_primal(cfg.n)?;
    let dual = build_dual(&primal)?;
    let (problem, lift_momentum, has_source, has_species) = match cfg.case {
        CaseKind::Manufactured => {
            (manufactured::problem(&primal, cfg.params), false, true, false)
        }
        CaseKind::Cavity => (cavity::problem(&primal, cfg.params)?, true, false, true),
    };
    Ok(CaseSetup { primal, dual, problem, lift_momentum, has_source, has_species })
}

fn dump_indices(every: usize, count: usize) -> Vec<usize> {
    if count == 0 {
        return Vec::new();
    }
    if every == 0 {
        return vec![count - 1];
    }
    let mut out: Vec<usize> = (0..count).step_by(every).collect();
    if *out.last().unwrap() != count - 1 {
        out.push(count - 1);
    }
    out
}

/// Full-order run: snapshots plus field dumps.
pub fn stage_fom(cfg: &PipelineConfig, dir: &Path) -> Result<()> {
    let case = build_case(cfg)?;
    let (snaps, _) =
        run_fom(&case.primal, &case.dual, &case.problem, &cfg.controls, cfg.tolerance)?;
    write_snapshots(&dir.join(SNAPSHOTS_FILE), &snaps)?;
    for k in dump_indices(cfg.dump_every, snaps.n_snapshots()) {
        let path = dir.join(format!("fom_{k:04}.vtk"));
        write_field_dump(&path, &case.primal, &case.dual, &snaps.states[k])?;
    }
    Ok(())
}

fn empty_basis(variable: Variable) -> PodBasis {
    PodBasis {
        variable,
        modes: Vec::new(),
        n_lifting: 0,
        eigenvalues: Vec::new(),
        cumulative_energies: Vec::new(),
        eigenvectors: Vec::new(),
        normalizers: Vec::new(),
    }
}

/// A variable whose snapshots carry no energy at all gets an empty basis
/// instead of failing the build; its reduced coefficients stay empty.
fn basis_or_empty(
    space: &ProductSpace,
    variable: Variable,
    snapshots: &[Vec<f64>],
    kappa: f64,
) -> Result<PodBasis> {
    match build_basis(space, variable, snapshots, kappa, false) {
        Ok(b) => Ok(b),
        Err(Error::DegenerateSnapshots(_)) => Ok(empty_basis(variable)),
        Err(e) => Err(e),
    }
}

/// Cumulative-energy table: one row per eigenvalue index, one column per
/// variable, blank cells where a variable has fewer eigenvalues.
fn write_eigenvalue_csv(path: &Path, bases: [Option<&PodBasis>; 3]) -> Result<()> {
    let io = |e| Error::io(path, e);
    let rows = bases
        .iter()
        .flatten()
        .map(|b| b.cumulative_energies.len())
        .max()
        .unwrap_or(0);
    atomic_write(path, |w| {
        use std::io::Write;
        writeln!(w, "modes,cum_wu,cum_pi,cum_wy").map_err(io)?;
        for k in 0..rows {
            write!(w, "{}", k + 1).map_err(io)?;
            for basis in bases.iter() {
                match basis.and_then(|b| b.cumulative_energies.get(k)) {
                    Some(c) => write!(w, ",{c:.16e}").map_err(io)?,
                    None => write!(w, ",").map_err(io)?,
                }
            }
            writeln!(w).map_err(io)?;
        }
        Ok(())
    })
}

/// Compression: one basis per active variable plus the cumulative-energy
/// table.
pub fn stage_pod(cfg: &PipelineConfig, dir: &Path) -> Result<()> {
    stage_pod_from(cfg, &dir.join(SNAPSHOTS_FILE), dir)
}

/// Same, reading the snapshot set from an explicit location.
pub fn stage_pod_from(cfg: &PipelineConfig, snapshots: &Path, dir: &Path) -> Result<()> {
    let case = build_case(cfg)?;
    let snaps = read_snapshots(snapshots)?;
    let fv = ProductSpace::momentum(&case.dual);
    let momentum = build_basis(
        &fv,
        Variable::Momentum,
        &snaps.momentum_fields(),
        cfg.kappa_momentum,
        case.lift_momentum,
    )?;
    let fe = ProductSpace::pressure(&case.primal);
    let pressure =
        basis_or_empty(&fe, Variable::Pressure, &snaps.pressure_fields(), cfg.kappa_pressure)?;
    write_basis(&dir.join(MOMENTUM_BASIS_FILE), &momentum)?;
    write_basis(&dir.join(PRESSURE_BASIS_FILE), &pressure)?;
    let species = if case.has_species {
        let sp = ProductSpace::species(&case.dual);
        let basis =
            basis_or_empty(&sp, Variable::Species, &snaps.species_fields(), cfg.kappa_species)?;
        write_basis(&dir.join(SPECIES_BASIS_FILE), &basis)?;
        Some(basis)
    } else {
        None
    };
    write_eigenvalue_csv(
        &dir.join(EIGENVALUES_FILE),
        [Some(&momentum), Some(&pressure), species.as_ref()],
    )
}

/// Companion source modes: raw source snapshots recombined with the momentum
/// basis's eigenvector weights, plus the raw mean when the momentum basis
/// leads with a lifting field.
fn source_companions(
    case: &CaseSetup,
    momentum: &PodBasis,
    times: &[f64],
) -> Result<Vec<Vec<f64>>> {
    let src = match &case.problem.source {
        Some(s) => s,
        None => return Ok(Vec::new()),
    };
    let raw: Vec<Vec<f64>> = times
        .iter()
        .map(|&t| {
            let field: Vec<_> = case.dual.cells.iter().map(|c| (src.f)(c.node, t)).collect();
            flatten_vectors(&field)
        })
        .collect();
    let mut modes = build_source_basis(momentum, &raw)?;
    if momentum.n_lifting > 0 {
        let len = raw[0].len();
        let mut mean = vec![0.0; len];
        for s in &raw {
            for (m, v) in mean.iter_mut().zip(s) {
                *m += v;
            }
        }
        let inv = 1.0 / raw.len() as f64;
        for m in mean.iter_mut() {
            *m *= inv;
        }
        modes.insert(0, mean);
    }
    Ok(modes)
}

fn read_bases(
    cfg: &PipelineConfig,
    case: &CaseSetup,
    dir: &Path,
) -> Result<(PodBasis, PodBasis, Option<PodBasis>)> {
    let _ = cfg;
    let momentum = read_basis(&dir.join(MOMENTUM_BASIS_FILE))?;
    let pressure = read_basis(&dir.join(PRESSURE_BASIS_FILE))?;
    let species = if case.has_species {
        Some(read_basis(&dir.join(SPECIES_BASIS_FILE))?)
    } else {
        None
    };
    Ok((momentum, pressure, species))
}

/// Reduction: assemble and persist every reduced operator block.
pub fn stage_offline(cfg: &PipelineConfig, dir: &Path) -> Result<()> {
    let case = build_case(cfg)?;
    let snaps = read_snapshots(&dir.join(SNAPSHOTS_FILE))?;
    let (momentum, pressure, species) = read_bases(cfg, &case, dir)?;
    let source_modes = source_companions(&case, &momentum, &snaps.times())?;
    let t_first = snaps.states[0].time;
    let (ops, _) = crate::rom::assemble_operators(
        &case.primal,
        &case.dual,
        &momentum,
        &pressure,
        species.as_ref(),
        &source_modes,
        &case.problem.bc,
        &cfg.params,
        t_first,
    )?;
    write_operators(&dir.join(OPERATORS_FILE), &ops)
}

/// Shared by the online stage and the comparison: integrate the reduced
/// system through the snapshot instants.
pub fn run_reduced(
    cfg: &PipelineConfig,
    case: &CaseSetup,
    ops: &crate::rom::RomOperators,
    snaps: &SnapshotSet,
    momentum: &PodBasis,
    pressure: &PodBasis,
    species: Option<&PodBasis>,
) -> Result<Vec<RomState>> {
    let accel = boundary_accel(&case.primal, pressure)?;
    let mut sys = ReducedSystem::new(ops, Some((&accel, &case.problem.bc)))?;
    sys.ablate_pressure = cfg.ablate_pressure;
    let mut initial = project_initial(
        &case.primal,
        &case.dual,
        momentum,
        pressure,
        species,
        &ops.mass,
        &snaps.states[0],
    )?;
    sys.calibrate_pressure(&initial.a, &initial.b, initial.time);
    initial.b = sys.recover_pressure(&initial.a, initial.time);
    let times = snaps.times();
    sys.integrate(&initial, &times, cfg.rom_substeps)
}

/// Online stage: coefficient trajectories plus reconstructed field dumps.
pub fn stage_rom(cfg: &PipelineConfig, dir: &Path) -> Result<()> {
    let case = build_case(cfg)?;
    let snaps = read_snapshots(&dir.join(SNAPSHOTS_FILE))?;
    let (momentum, pressure, species) = read_bases(cfg, &case, dir)?;
    let ops = read_operators(&dir.join(OPERATORS_FILE))?;
    let states =
        run_reduced(cfg, &case, &ops, &snaps, &momentum, &pressure, species.as_ref())?;
    write_coefficient_csv(&dir.join(coefficients_file(cfg.ablate_pressure)), &states)?;
    let prefix = if cfg.ablate_pressure { "rom_ablated" } else { "rom" };
    for k in dump_indices(cfg.dump_every, states.len()) {
        let rec = reconstruct(
            &case.primal,
            &case.dual,
            &momentum,
            &pressure,
            species.as_ref(),
            &states[k],
        )?;
        write_field_dump(&dir.join(format!("{prefix}_{k:04}.vtk")), &case.primal, &case.dual, &rec)?;
    }
    Ok(())
}

/// Comparison: reduced and projected solutions against the full-order
/// snapshots, written as the error table.
pub fn stage_compare(cfg: &PipelineConfig, dir: &Path) -> Result<ErrorReport> {
    let case = build_case(cfg)?;
    let snaps = read_snapshots(&dir.join(SNAPSHOTS_FILE))?;
    let (momentum, pressure, species) = read_bases(cfg, &case, dir)?;
    let ops = read_operators(&dir.join(OPERATORS_FILE))?;
    let states =
        run_reduced(cfg, &case, &ops, &snaps, &momentum, &pressure, species.as_ref())?;

    let fv = ProductSpace::momentum(&case.dual);
    let fe = ProductSpace::pressure(&case.primal);
    let sp = ProductSpace::species(&case.dual);

    let n = snaps.n_snapshots();
    let mut report = ErrorReport {
        times: snaps.times(),
        rom_momentum: Vec::with_capacity(n),
        proj_momentum: Vec::with_capacity(n),
        rom_pressure: Vec::with_capacity(n),
        proj_pressure: Vec::with_capacity(n),
        rom_species: Vec::new(),
        proj_species: Vec::new(),
    };
    for (state, reduced) in snaps.states.iter().zip(&states) {
        let rec = reconstruct(
            &case.primal,
            &case.dual,
            &momentum,
            &pressure,
            species.as_ref(),
            reduced,
        )?;
        let projected_coeffs = project_initial(
            &case.primal,
            &case.dual,
            &momentum,
            &pressure,
            species.as_ref(),
            &ops.mass,
            state,
        )?;
        let proj = reconstruct(
            &case.primal,
            &case.dual,
            &momentum,
            &pressure,
            species.as_ref(),
            &projected_coeffs,
        )?;
        let flat_ref = flatten_vectors(&state.momentum);
        report.rom_momentum.push(guarded_relative_error(
            &fv,
            &flatten_vectors(&rec.momentum),
            &flat_ref,
        )?);
        report.proj_momentum.push(guarded_relative_error(
            &fv,
            &flatten_vectors(&proj.momentum),
            &flat_ref,
        )?);
        report.rom_pressure.push(guarded_relative_error(&fe, &rec.pressure, &state.pressure)?);
        report.proj_pressure.push(guarded_relative_error(&fe, &proj.pressure, &state.pressure)?);
        if case.has_species {
            report.rom_species.push(guarded_relative_error(&sp, &rec.species, &state.species)?);
            report.proj_species.push(guarded_relative_error(&sp, &proj.species, &state.species)?);
        }
    }
    write_error_csv(&dir.join(report_file(cfg.ablate_pressure)), &report)?;
    Ok(report)
}

/// Gram matrix of the basis modes in the given space.
pub fn basis_gram(space: &ProductSpace, basis: &PodBasis) -> Result<DMat> {
    let n = basis.n_modes();
    let mut gram = DMat::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = space.dot(&basis.modes[i], &basis.modes[j])?;
            gram.set(i, j, v);
            gram.set(j, i, v);
        }
    }
    Ok(gram)
}

fn with_stage(e: Error, stage: &str) -> Error {
    let label = |m: String| format!("[{stage}] {m}");
    match e {
        Error::InvalidArgument(m) => Error::InvalidArgument(label(m)),
        Error::MalformedMesh(m) => Error::MalformedMesh(label(m)),
        Error::DimensionMismatch(m) => Error::DimensionMismatch(label(m)),
        Error::ZeroNorm(m) => Error::ZeroNorm(label(m)),
        Error::SolverFailure(m) => Error::SolverFailure(label(m)),
        Error::DegenerateSnapshots(m) => Error::DegenerateSnapshots(label(m)),
        Error::NotSymmetric(m) => Error::NotSymmetric(label(m)),
        Error::IllConditioned(m) => Error::IllConditioned(label(m)),
        Error::Parse { line, msg } => Error::Parse { line, msg: label(msg) },
        Error::Config { line, msg } => Error::Config { line, msg: label(msg) },
        Error::Blowup { what, time } => Error::Blowup { what: label(what), time },
        Error::Io { path, source } => Error::Io { path: label(path), source },
        other @ Error::DegenerateElement { .. } => other,
    }
}

/// All five stages in sequence; artifacts land in `dir`.
pub fn run_pipeline(cfg: &PipelineConfig, dir: &Path) -> Result<ErrorReport> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    stage_fom(cfg, dir).map_err(|e| with_stage(e, "fom-run"))?;
    stage_pod(cfg, dir).map_err(|e| with_stage(e, "pod-build"))?;
    stage_offline(cfg, dir).map_err(|e| with_stage(e, "rom-offline"))?;
    stage_rom(cfg, dir).map_err(|e| with_stage(e, "rom-run"))?;
    stage_compare(cfg, dir).map_err(|e| with_stage(e, "compare"))
}
