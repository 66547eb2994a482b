//! Snapshot correlation, truncation and mode construction.

use crate::error::{Error, Result};
use crate::math::DMat;
use crate::pod::eig::sym_eig;
use crate::pod::space::ProductSpace;

/// Which field a basis belongs to; decides the inner product and the layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variable {
    Momentum,
    Pressure,
    Species,
}

impl Variable {
    pub fn tag(self) -> u32 {
        match self {
            Variable::Momentum => 0,
            Variable::Pressure => 1,
            Variable::Species => 2,
        }
    }

    pub fn from_tag(tag: u32) -> Result<Variable> {
        Ok(match tag {
            0 => Variable::Momentum,
            1 => Variable::Pressure,
            2 => Variable::Species,
            other => return Err(Error::InvalidArgument(format!("unknown variable tag {other}"))),
        })
    }
}

#[derive(Debug)]
pub struct PodBasis {
    pub variable: Variable,
    /// Orthonormal modes in the variable's inner product; when a lifting
    /// field is present it sits at index 0 and is excluded from the
    /// orthonormality claim (it keeps its physical scale).
    pub modes: Vec<Vec<f64>>,
    pub n_lifting: usize,
    /// All snapshot-correlation eigenvalues, descending, clipped at zero.
    pub eigenvalues: Vec<f64>,
    /// Running sums of eigenvalue fractions; last entry is 1.
    pub cumulative_energies: Vec<f64>,
    /// Correlation eigenvectors of the retained (non-lifting) modes.
    pub eigenvectors: Vec<Vec<f64>>,
    /// Norm of each retained mode's raw snapshot combination; dividing the
    /// same combination of any linearly related snapshot family by this
    /// factor keeps coefficients shared between the two expansions.
    pub normalizers: Vec<f64>,
}

impl PodBasis {
    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn n_energy_modes(&self) -> usize {
        self.modes.len() - self.n_lifting
    }

    pub fn field_len(&self) -> usize {
        self.modes.first().map_or(0, Vec::len)
    }

    pub fn n_snapshots(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn lifting(&self) -> Option<&[f64]> {
        (self.n_lifting == 1).then(|| self.modes[0].as_slice())
    }

    /// Modes that carry coefficients produced by the eigensolve.
    pub fn energy_modes(&self) -> &[Vec<f64>] {
        &self.modes[self.n_lifting..]
    }
}

/// Eigenvalues this far below the leading one are treated as pure noise.
const RANK_CUTOFF: f64 = 1e-12;

pub fn correlation_matrix(space: &ProductSpace, snapshots: &[Vec<f64>]) -> Result<DMat> {
    if snapshots.is_empty() {
        return Err(Error::InvalidArgument("correlation of an empty snapshot set".into()));
    }
    let ns = snapshots.len();
    let mut c = DMat::zeros(ns, ns);
    for j in 0..ns {
        for k in j..ns {
            let v = space.dot(&snapshots[j], &snapshots[k])? / ns as f64;
            c.set(j, k, v);
            c.set(k, j, v);
        }
    }
    Ok(c)
}

/// Smallest mode count whose cumulative energy reaches `kappa`; the whole
/// list if none does (the caller caps at the numerical rank).
pub fn select_modes(cumulative_energies: &[f64], kappa: f64) -> Result<usize> {
    if !(kappa > 0.0 && kappa <= 1.0) {
        return Err(Error::InvalidArgument(format!("energy bound {kappa} outside (0, 1]")));
    }
    for (i, &c) in cumulative_energies.iter().enumerate() {
        if c >= kappa {
            return Ok(i + 1);
        }
    }
    Ok(cumulative_energies.len())
}

/// Snapshot mean and the centered snapshots.
pub fn build_lifting(snapshots: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    if snapshots.is_empty() {
        return Err(Error::InvalidArgument("lifting of an empty snapshot set".into()));
    }
    let len = snapshots[0].len();
    let mut mean = vec![0.0; len];
    for s in snapshots {
        if s.len() != len {
            return Err(Error::DimensionMismatch("ragged snapshot set".into()));
        }
        for (m, v) in mean.iter_mut().zip(s) {
            *m += v;
        }
    }
    let inv = 1.0 / snapshots.len() as f64;
    for m in mean.iter_mut() {
        *m *= inv;
    }
    let homogenized = snapshots
        .iter()
        .map(|s| s.iter().zip(&mean).map(|(v, m)| v - m).collect())
        .collect();
    Ok((mean, homogenized))
}

pub fn build_basis(
    space: &ProductSpace,
    variable: Variable,
    snapshots: &[Vec<f64>],
    kappa: f64,
    lifting: bool,
) -> Result<PodBasis> {
    let (lift, centered);
    let mut lift_energy = 0.0;
    let work: &[Vec<f64>] = if lifting {
        (lift, centered) = build_lifting(snapshots)?;
        let n = space.norm(&lift)?;
        if n == 0.0 {
            return Err(Error::DegenerateSnapshots(
                "lifting requested but the snapshot mean is zero".into(),
            ));
        }
        lift_energy = n * n;
        &centered
    } else {
        lift = Vec::new();
        snapshots
    };

    let corr = correlation_matrix(space, work)?;
    let eig = sym_eig(&corr)?;
    let ns = work.len();
    let eigenvalues: Vec<f64> = eig.values.iter().map(|&l| l.max(0.0)).collect();
    let total: f64 = eigenvalues.iter().sum();

    // Residual energy at the level of mean-subtraction roundoff means the
    // snapshots do not vary; genuine fluctuations sit many orders higher.
    if total <= 1e-24 * lift_energy {
        // With a lifting field that means every snapshot equals the mean and
        // the lifting alone spans them; without one nothing spans anything.
        if !lifting {
            return Err(Error::DegenerateSnapshots("all snapshots are zero".into()));
        }
        return Ok(PodBasis {
            variable,
            modes: vec![lift],
            n_lifting: 1,
            eigenvalues,
            cumulative_energies: vec![1.0; ns],
            eigenvectors: Vec::new(),
            normalizers: Vec::new(),
        });
    }

    let mut cumulative = Vec::with_capacity(ns);
    let mut running = 0.0;
    for &l in &eigenvalues {
        running += l / total;
        cumulative.push(running);
    }

    let rank = eigenvalues.iter().filter(|&&l| l > RANK_CUTOFF * eigenvalues[0]).count();
    let n_keep = select_modes(&cumulative, kappa)?.min(rank);

    let mut modes = Vec::with_capacity(n_keep + usize::from(lifting));
    let mut eigenvectors = Vec::with_capacity(n_keep);
    let mut normalizers = Vec::with_capacity(n_keep);
    if lifting {
        modes.push(lift);
    }
    for i in 0..n_keep {
        let xi = &eig.vectors[i];
        let mut mode = vec![0.0; work[0].len()];
        for (n, snap) in work.iter().enumerate() {
            let w = xi[n];
            if w != 0.0 {
                for (m, v) in mode.iter_mut().zip(snap) {
                    *m += w * v;
                }
            }
        }
        let normalizer = space.norm(&mode)?;
        if normalizer == 0.0 {
            return Err(Error::DegenerateSnapshots(format!(
                "mode {i} collapsed to zero despite eigenvalue {:.3e}",
                eigenvalues[i]
            )));
        }
        for m in mode.iter_mut() {
            *m /= normalizer;
        }
        modes.push(mode);
        eigenvectors.push(xi.clone());
        normalizers.push(normalizer);
    }

    Ok(PodBasis {
        variable,
        modes,
        n_lifting: usize::from(lifting),
        eigenvalues,
        cumulative_energies: cumulative,
        eigenvectors,
        normalizers,
    })
}

/// Companion basis for a snapshot family linearly related to the momentum
/// snapshots, sharing the momentum coefficients.
pub fn build_source_basis(basis: &PodBasis, sources: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    if sources.len() != basis.n_snapshots() {
        return Err(Error::InvalidArgument(format!(
            "{} source snapshots for {} momentum snapshots",
            sources.len(),
            basis.n_snapshots()
        )));
    }
    let len = sources.first().map_or(0, Vec::len);
    let mut out = Vec::with_capacity(basis.eigenvectors.len());
    for (xi, normalizer) in basis.eigenvectors.iter().zip(&basis.normalizers) {
        let mut mode = vec![0.0; len];
        for (n, snap) in sources.iter().enumerate() {
            if snap.len() != len {
                return Err(Error::DimensionMismatch("ragged source snapshot set".into()));
            }
            let w = xi[n];
            if w != 0.0 {
                for (m, v) in mode.iter_mut().zip(snap) {
                    *m += w * v;
                }
            }
        }
        for m in mode.iter_mut() {
            *m /= normalizer;
        }
        out.push(mode);
    }
    Ok(out)
}
