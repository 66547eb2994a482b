//! On-disk basis container.
//!
//! Layout, all little-endian after a 7-byte magic:
//! version, variable tag, lifting flag (u32), then field length, snapshot
//! count and energy-mode count (u64), then eigenvalues, cumulative energies,
//! normalizers, eigenvectors row per mode, and the modes themselves with the
//! lifting field first.

use std::io::{Read, Write};
use std::path::Path;

use crate::binfmt;
use crate::error::{Error, Result};
use crate::pod::basis::{PodBasis, Variable};

const MAGIC: &[u8; 7] = b"HFVPOD\0";
const VERSION: u32 = 1;

pub fn write_basis(path: &Path, basis: &PodBasis) -> Result<()> {
    binfmt::atomic_write(path, |w| {
        let io = |e| Error::io(path, e);
        w.write_all(MAGIC).map_err(io)?;
        binfmt::write_u32(w, VERSION).map_err(io)?;
        binfmt::write_u32(w, basis.variable.tag()).map_err(io)?;
        binfmt::write_u32(w, basis.n_lifting as u32).map_err(io)?;
        binfmt::write_u64(w, basis.field_len() as u64).map_err(io)?;
        binfmt::write_u64(w, basis.n_snapshots() as u64).map_err(io)?;
        binfmt::write_u64(w, basis.n_energy_modes() as u64).map_err(io)?;
        binfmt::write_f64s(w, &basis.eigenvalues).map_err(io)?;
        binfmt::write_f64s(w, &basis.cumulative_energies).map_err(io)?;
        binfmt::write_f64s(w, &basis.normalizers).map_err(io)?;
        for xi in &basis.eigenvectors {
            binfmt::write_f64s(w, xi).map_err(io)?;
        }
        for mode in &basis.modes {
            binfmt::write_f64s(w, mode).map_err(io)?;
        }
        Ok(())
    })
}

pub fn read_basis(path: &Path) -> Result<PodBasis> {
    let mut r = binfmt::open_reader(path)?;
    let basis = parse_basis(&mut r, path)?;
    let mut probe = [0u8; 1];
    if r.read(&mut probe).map_err(|e| Error::io(path, e))? != 0 {
        return Err(Error::Parse { line: 0, msg: format!("{}: trailing bytes", path.display()) });
    }
    Ok(basis)
}

fn parse_basis(r: &mut impl Read, path: &Path) -> Result<PodBasis> {
    let name = path.display().to_string();
    let io = |e| Error::io(path, e);
    binfmt::check_magic(r, MAGIC, &name)?;
    let version = binfmt::read_u32(r).map_err(io)?;
    if version != VERSION {
        return Err(Error::Parse {
            line: 0,
            msg: format!("{name}: unsupported basis version {version}"),
        });
    }
    let variable = Variable::from_tag(binfmt::read_u32(r).map_err(io)?)?;
    let n_lifting = binfmt::read_u32(r).map_err(io)? as usize;
    if n_lifting > 1 {
        return Err(Error::Parse {
            line: 0,
            msg: format!("{name}: lifting flag {n_lifting} out of range"),
        });
    }
    let field_len = binfmt::count(binfmt::read_u64(r).map_err(io)?, &name)?;
    let n_snapshots = binfmt::count(binfmt::read_u64(r).map_err(io)?, &name)?;
    let n_energy = binfmt::count(binfmt::read_u64(r).map_err(io)?, &name)?;
    if n_energy > n_snapshots {
        return Err(Error::Parse {
            line: 0,
            msg: format!("{name}: {n_energy} modes cannot come from {n_snapshots} snapshots"),
        });
    }
    let eigenvalues = binfmt::read_f64s(r, n_snapshots).map_err(io)?;
    let cumulative_energies = binfmt::read_f64s(r, n_snapshots).map_err(io)?;
    let normalizers = binfmt::read_f64s(r, n_energy).map_err(io)?;
    let mut eigenvectors = Vec::with_capacity(n_energy);
    for _ in 0..n_energy {
        eigenvectors.push(binfmt::read_f64s(r, n_snapshots).map_err(io)?);
    }
    let mut modes = Vec::with_capacity(n_lifting + n_energy);
    for _ in 0..n_lifting + n_energy {
        modes.push(binfmt::read_f64s(r, field_len).map_err(io)?);
    }
    Ok(PodBasis {
        variable,
        modes,
        n_lifting,
        eigenvalues,
        cumulative_energies,
        eigenvectors,
        normalizers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_cube_primal, build_dual};
    use crate::pod::basis::build_basis;
    use crate::pod::space::ProductSpace;

    #[test]
    fn round_trip_preserves_every_byte() {
        let primal = build_cube_primal(2).unwrap();
        let dual = build_dual(&primal).unwrap();
        let space = ProductSpace::species(&dual);
        let snaps: Vec<Vec<f64>> = (0..4)
            .map(|k| (0..dual.n_cells()).map(|i| ((i + 7 * k) as f64 * 0.13).cos()).collect())
            .collect();
        let basis = build_basis(&space, Variable::Species, &snaps, 1.0, true).unwrap();

        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("basis.pod");
        let p2 = dir.path().join("again.pod");
        write_basis(&p1, &basis).unwrap();
        let back = read_basis(&p1).unwrap();
        assert_eq!(back.variable, basis.variable);
        assert_eq!(back.n_lifting, basis.n_lifting);
        assert_eq!(back.modes, basis.modes);
        assert_eq!(back.eigenvalues, basis.eigenvalues);
        assert_eq!(back.cumulative_energies, basis.cumulative_energies);
        assert_eq!(back.eigenvectors, basis.eigenvectors);
        assert_eq!(back.normalizers, basis.normalizers);

        write_basis(&p2, &back).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    }

    #[test]
    fn damaged_header_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.pod");
        std::fs::write(&p, b"HFVPOD\0junk").unwrap();
        assert!(read_basis(&p).is_err());
        std::fs::write(&p, b"NOTPOD\0").unwrap();
        assert!(read_basis(&p).is_err());
    }
}
