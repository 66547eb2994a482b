//! Per-snapshot relative errors of the reduced solution and of the plain
//! basis projection, both measured against the full-order reference in each
//! variable's inner-product norm.

use std::path::Path;

use crate::binfmt::atomic_write;
use crate::error::{Error, Result};
use crate::pod::ProductSpace;

/// Relative gap ‖field − reference‖/‖reference‖ in the space's norm.
pub fn relative_error(space: &ProductSpace, field: &[f64], reference: &[f64]) -> Result<f64> {
    let ref_norm = space.norm(reference)?;
    if ref_norm == 0.0 {
        return Err(Error::ZeroNorm("relative error against a zero reference".into()));
    }
    let diff: Vec<f64> = field.iter().zip(reference).map(|(a, b)| a - b).collect();
    Ok(space.norm(&diff)? / ref_norm)
}

/// Same gap, defined through the limits at a zero reference: zero against
/// zero is a perfect match, anything else against zero is unbounded. Used
/// for report rows where a variable starts from rest.
pub fn guarded_relative_error(
    space: &ProductSpace,
    field: &[f64],
    reference: &[f64],
) -> Result<f64> {
    let ref_norm = space.norm(reference)?;
    if ref_norm == 0.0 {
        let field_norm = space.norm(field)?;
        return Ok(if field_norm == 0.0 { 0.0 } else { f64::INFINITY });
    }
    let diff: Vec<f64> = field.iter().zip(reference).map(|(a, b)| a - b).collect();
    Ok(space.norm(&diff)? / ref_norm)
}

/// Error trajectories at snapshot times. Species columns are present only
/// when the case transports a species; empty vectors mean absent.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub times: Vec<f64>,
    pub rom_momentum: Vec<f64>,
    pub proj_momentum: Vec<f64>,
    pub rom_pressure: Vec<f64>,
    pub proj_pressure: Vec<f64>,
    pub rom_species: Vec<f64>,
    pub proj_species: Vec<f64>,
}

impl ErrorReport {
    pub fn validate(&self) -> Result<()> {
        let n = self.times.len();
        let full = [&self.rom_momentum, &self.proj_momentum, &self.rom_pressure, &self.proj_pressure];
        if full.iter().any(|v| v.len() != n) {
            return Err(Error::DimensionMismatch("error columns disagree with times".into()));
        }
        let ns = self.rom_species.len();
        if ns != self.proj_species.len() || (ns != 0 && ns != n) {
            return Err(Error::DimensionMismatch("species error columns are ragged".into()));
        }
        Ok(())
    }

    pub fn has_species(&self) -> bool {
        !self.rom_species.is_empty()
    }
}

pub fn write_error_csv(path: &Path, report: &ErrorReport) -> Result<()> {
    report.validate()?;
    let io = |e| Error::io(path, e);
    atomic_write(path, |w| {
        use std::io::Write;
        writeln!(w, "t,err_rom_wu,err_proj_wu,err_rom_pi,err_proj_pi,err_rom_wy,err_proj_wy")
            .map_err(io)?;
        for (k, t) in report.times.iter().enumerate() {
            write!(
                w,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                t,
                report.rom_momentum[k],
                report.proj_momentum[k],
                report.rom_pressure[k],
                report.proj_pressure[k]
            )
            .map_err(io)?;
            if report.has_species() {
                writeln!(w, ",{:.16e},{:.16e}", report.rom_species[k], report.proj_species[k])
                    .map_err(io)?;
            } else {
                writeln!(w, ",,").map_err(io)?;
            }
        }
        Ok(())
    })
}
