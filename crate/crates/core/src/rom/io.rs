//! Binary serialization of the assembled reduced operators and CSV output of
//! reduced-coefficient trajectories.

use std::io::{Read, Write};
use std::path::Path;

use crate::binfmt::{self, count};
use crate::error::{Error, Result};
use crate::math::DMat;
use crate::rom::integrate::RomState;
use crate::rom::operators::RomOperators;

const MAGIC: &[u8; 7] = b"HFVOPS\0";
const VERSION: u32 = 1;

/// Layout: magic, version, the three mode counts, then every block row-major
/// in a fixed order (mass, viscous, convective, pressure gradient, source,
/// pressure stiffness, divergence tensor, source divergence, boundary
/// viscous, boundary acceleration, species convective, species diffusive).
/// The boundary acceleration is the vector frozen at assembly time.
pub fn write_operators(path: &Path, ops: &RomOperators) -> Result<()> {
    ops.validate()?;
    let io = |e| Error::io(path, e);
    binfmt::atomic_write(path, |w| {
        w.write_all(MAGIC).map_err(io)?;
        binfmt::write_u32(w, VERSION).map_err(io)?;
        binfmt::write_u64(w, ops.n_momentum() as u64).map_err(io)?;
        binfmt::write_u64(w, ops.n_pressure() as u64).map_err(io)?;
        binfmt::write_u64(w, ops.n_species() as u64).map_err(io)?;
        let blocks: Vec<&DMat> = [&ops.mass, &ops.viscous]
            .into_iter()
            .chain(&ops.convective)
            .chain([&ops.pressure_grad, &ops.source, &ops.pressure_stiffness])
            .chain(&ops.div_div)
            .chain([&ops.source_div, &ops.boundary_viscous])
            .collect();
        for m in blocks {
            binfmt::write_f64s(w, m.data()).map_err(io)?;
        }
        binfmt::write_f64s(w, &ops.boundary_accel).map_err(io)?;
        for m in ops.transport_convective.iter().chain([&ops.transport_diffusive]) {
            binfmt::write_f64s(w, m.data()).map_err(io)?;
        }
        Ok(())
    })
}

pub fn read_operators(path: &Path) -> Result<RomOperators> {
    let mut r = binfmt::open_reader(path)?;
    let name = path.display().to_string();
    let ops = parse_operators(&mut r, &name)?;
    let mut probe = [0u8; 1];
    match r.read(&mut probe) {
        Ok(0) => Ok(ops),
        Ok(_) => Err(Error::Parse { line: 0, msg: format!("{name}: trailing bytes after operators") }),
        Err(e) => Err(Error::io(path, e)),
    }
}

fn parse_operators(r: &mut impl Read, name: &str) -> Result<RomOperators> {
    let io = |e| Error::Parse { line: 0, msg: format!("{name}: truncated: {e}") };
    binfmt::check_magic(r, MAGIC, name)?;
    let version = binfmt::read_u32(r).map_err(io)?;
    if version != VERSION {
        return Err(Error::Parse {
            line: 0,
            msg: format!("{name}: unsupported operator format version {version}"),
        });
    }
    let n = count(binfmt::read_u64(r).map_err(io)?, "momentum mode")?;
    let np = count(binfmt::read_u64(r).map_err(io)?, "pressure mode")?;
    let ny = count(binfmt::read_u64(r).map_err(io)?, "species mode")?;
    fn block<R: Read>(r: &mut R, rows: usize, cols: usize, name: &str) -> Result<DMat> {
        let data = binfmt::read_f64s(r, rows * cols)
            .map_err(|e| Error::Parse { line: 0, msg: format!("{name}: truncated: {e}") })?;
        DMat::from_rows(rows, cols, data)
    }
    let mass = block(r, n, n, name)?;
    let viscous = block(r, n, n, name)?;
    let convective = (0..n).map(|_| block(r, n, n, name)).collect::<Result<Vec<_>>>()?;
    let pressure_grad = block(r, n, np, name)?;
    let source = block(r, n, n, name)?;
    let pressure_stiffness = block(r, np, np, name)?;
    let div_div = (0..np).map(|_| block(r, n, n, name)).collect::<Result<Vec<_>>>()?;
    let source_div = block(r, np, n, name)?;
    let boundary_viscous = block(r, np, n, name)?;
    let boundary_accel = binfmt::read_f64s(r, np).map_err(io)?;
    let transport_convective = (0..ny).map(|_| block(r, n, ny, name)).collect::<Result<Vec<_>>>()?;
    let transport_diffusive = block(r, ny, ny, name)?;
    let ops = RomOperators {
        mass,
        viscous,
        convective,
        pressure_grad,
        source,
        pressure_stiffness,
        div_div,
        source_div,
        boundary_viscous,
        boundary_accel,
        transport_convective,
        transport_diffusive,
    };
    ops.validate()?;
    Ok(ops)
}

/// One row per instant: the time, then the momentum, pressure, and species
/// coefficients in order.
pub fn write_coefficient_csv(path: &Path, states: &[RomState]) -> Result<()> {
    let first = states
        .first()
        .ok_or_else(|| Error::InvalidArgument("no states to write".into()))?;
    let (n, np, ny) = (first.a.len(), first.b.len(), first.c.len());
    for (k, s) in states.iter().enumerate() {
        if s.a.len() != n || s.b.len() != np || s.c.len() != ny {
            return Err(Error::DimensionMismatch(format!(
                "state {k} disagrees with state 0 on coefficient counts"
            )));
        }
    }
    let io = |e| Error::io(path, e);
    binfmt::atomic_write(path, |w| {
        use std::io::Write;
        let mut header = String::from("t");
        for i in 1..=n {
            header.push_str(&format!(",a_{i}"));
        }
        for i in 1..=np {
            header.push_str(&format!(",b_{i}"));
        }
        for i in 1..=ny {
            header.push_str(&format!(",c_{i}"));
        }
        writeln!(w, "{header}").map_err(io)?;
        for s in states {
            write!(w, "{:.16e}", s.time).map_err(io)?;
            for v in s.a.iter().chain(&s.b).chain(&s.c) {
                write!(w, ",{v:.16e}").map_err(io)?;
            }
            writeln!(w).map_err(io)?;
        }
        Ok(())
    })
}
