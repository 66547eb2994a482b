//! On-disk snapshot container.
//!
//! Layout, all little-endian after a 7-byte magic: version (u32), dual cell
//! count, vertex count and snapshot count (u64), then one record per
//! snapshot: the time stamp, the momentum field interleaved x,y,z per dual
//! node, the vertex pressure field, and the species field.

use std::io::{Read, Write};
use std::path::Path;

use crate::binfmt;
use crate::error::{Error, Result};
use crate::fom::types::FomState;
use crate::pod::{flatten_vectors, unflatten_vectors};

const MAGIC: &[u8; 7] = b"HFVROM\0";
const VERSION: u32 = 1;

/// A time-ordered sequence of full-order states on a fixed mesh pair.
#[derive(Debug, Clone)]
pub struct SnapshotSet {
    pub states: Vec<FomState>,
}

impl SnapshotSet {
    pub fn n_snapshots(&self) -> usize {
        self.states.len()
    }

    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.time).collect()
    }

    /// Flattened momentum fields, one row per snapshot, components interleaved.
    pub fn momentum_fields(&self) -> Vec<Vec<f64>> {
        self.states.iter().map(|s| flatten_vectors(&s.momentum)).collect()
    }

    pub fn pressure_fields(&self) -> Vec<Vec<f64>> {
        self.states.iter().map(|s| s.pressure.clone()).collect()
    }

    pub fn species_fields(&self) -> Vec<Vec<f64>> {
        self.states.iter().map(|s| s.species.clone()).collect()
    }
}

pub fn write_snapshots(path: &Path, set: &SnapshotSet) -> Result<()> {
    let first = set
        .states
        .first()
        .ok_or_else(|| Error::InvalidArgument("cannot write an empty snapshot set".into()))?;
    let n_cells = first.momentum.len();
    let n_vertices = first.pressure.len();
    for (k, s) in set.states.iter().enumerate() {
        if s.momentum.len() != n_cells || s.species.len() != n_cells || s.pressure.len() != n_vertices
        {
            return Err(Error::DimensionMismatch(format!(
                "snapshot {k} disagrees with snapshot 0 on field sizes"
            )));
        }
    }
    binfmt::atomic_write(path, |w| {
        let io = |e| Error::io(path, e);
        w.write_all(MAGIC).map_err(io)?;
        binfmt::write_u32(w, VERSION).map_err(io)?;
        binfmt::write_u64(w, n_cells as u64).map_err(io)?;
        binfmt::write_u64(w, n_vertices as u64).map_err(io)?;
        binfmt::write_u64(w, set.states.len() as u64).map_err(io)?;
        for s in &set.states {
            binfmt::write_f64(w, s.time).map_err(io)?;
            binfmt::write_f64s(w, &flatten_vectors(&s.momentum)).map_err(io)?;
            binfmt::write_f64s(w, &s.pressure).map_err(io)?;
            binfmt::write_f64s(w, &s.species).map_err(io)?;
        }
        Ok(())
    })
}

pub fn read_snapshots(path: &Path) -> Result<SnapshotSet> {
    let mut r = binfmt::open_reader(path)?;
    let set = parse_snapshots(&mut r, path)?;
    let mut probe = [0u8; 1];
    if r.read(&mut probe).map_err(|e| Error::io(path, e))? != 0 {
        return Err(Error::Parse { line: 0, msg: format!("{}: trailing bytes", path.display()) });
    }
    Ok(set)
}

fn parse_snapshots(r: &mut impl Read, path: &Path) -> Result<SnapshotSet> {
    let name = path.display().to_string();
    let io = |e| Error::io(path, e);
    binfmt::check_magic(r, MAGIC, &name)?;
    let version = binfmt::read_u32(r).map_err(io)?;
    if version != VERSION {
        return Err(Error::Parse {
            line: 0,
            msg: format!("{name}: unsupported snapshot version {version}"),
        });
    }
    let n_cells = binfmt::count(binfmt::read_u64(r).map_err(io)?, &name)?;
    let n_vertices = binfmt::count(binfmt::read_u64(r).map_err(io)?, &name)?;
    let n_snapshots = binfmt::count(binfmt::read_u64(r).map_err(io)?, &name)?;
    let mut states = Vec::with_capacity(n_snapshots);
    for _ in 0..n_snapshots {
        let time = binfmt::read_f64(r).map_err(io)?;
        let momentum = unflatten_vectors(&binfmt::read_f64s(r, 3 * n_cells).map_err(io)?);
        let pressure = binfmt::read_f64s(r, n_vertices).map_err(io)?;
        let species = binfmt::read_f64s(r, n_cells).map_err(io)?;
        states.push(FomState { momentum, pressure, species, time });
    }
    Ok(SnapshotSet { states })
}
