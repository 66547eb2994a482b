//! Legacy-VTK ASCII field dumps: primal vertices, tetrahedral connectivity,
//! and per-point data. Momentum and species live on dual nodes, so they are
//! averaged onto the vertices before writing; pressure is already a vertex
//! field.

use std::path::Path;

use crate::binfmt::atomic_write;
use crate::calculus::dual_to_vertex;
use crate::error::{Error, Result};
use crate::fom::FomState;
use crate::mesh::{DualMesh, PrimalMesh};

/// Write one state as an ASCII unstructured-grid file.
pub fn write_field_dump(
    path: &Path,
    primal: &PrimalMesh,
    dual: &DualMesh,
    state: &FomState,
) -> Result<()> {
    state.check_shapes(primal, dual)?;
    let pressure = &state.pressure;
    let mut vx = vec![0.0; dual.n_cells()];
    let mut vy = vec![0.0; dual.n_cells()];
    let mut vz = vec![0.0; dual.n_cells()];
    for (i, m) in state.momentum.iter().enumerate() {
        vx[i] = m.x;
        vy[i] = m.y;
        vz[i] = m.z;
    }
    let ux = dual_to_vertex(primal, &vx);
    let uy = dual_to_vertex(primal, &vy);
    let uz = dual_to_vertex(primal, &vz);
    let species = dual_to_vertex(primal, &state.species);

    let io = |e| Error::io(path, e);
    atomic_write(path, |w| {
        use std::io::Write;
        writeln!(w, "# vtk DataFile Version 3.0").map_err(io)?;
        writeln!(w, "fields at t = {:.16e}", state.time).map_err(io)?;
        writeln!(w, "ASCII").map_err(io)?;
        writeln!(w, "DATASET UNSTRUCTURED_GRID").map_err(io)?;
        writeln!(w, "POINTS {} double", primal.n_vertices()).map_err(io)?;
        for v in &primal.vertices {
            writeln!(w, "{:.16e} {:.16e} {:.16e}", v.x, v.y, v.z).map_err(io)?;
        }
        writeln!(w, "CELLS {} {}", primal.n_tets(), 5 * primal.n_tets()).map_err(io)?;
        for t in &primal.tets {
            writeln!(w, "4 {} {} {} {}", t[0], t[1], t[2], t[3]).map_err(io)?;
        }
        writeln!(w, "CELL_TYPES {}", primal.n_tets()).map_err(io)?;
        for _ in 0..primal.n_tets() {
            writeln!(w, "10").map_err(io)?;
        }
        writeln!(w, "POINT_DATA {}", primal.n_vertices()).map_err(io)?;
        writeln!(w, "SCALARS pressure double 1").map_err(io)?;
        writeln!(w, "LOOKUP_TABLE default").map_err(io)?;
        for p in pressure {
            writeln!(w, "{p:.16e}").map_err(io)?;
        }
        writeln!(w, "VECTORS momentum double").map_err(io)?;
        for i in 0..primal.n_vertices() {
            writeln!(w, "{:.16e} {:.16e} {:.16e}", ux[i], uy[i], uz[i]).map_err(io)?;
        }
        writeln!(w, "SCALARS species double 1").map_err(io)?;
        writeln!(w, "LOOKUP_TABLE default").map_err(io)?;
        for s in &species {
            writeln!(w, "{s:.16e}").map_err(io)?;
        }
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::Vec3;
    use crate::mesh::{build_cube_primal, build_dual};

    #[test]
    fn dump_has_consistent_counts_and_constant_fields_survive_transfer() {
        let primal = build_cube_primal(2).unwrap();
        let dual = build_dual(&primal).unwrap();
        let state = FomState {
            momentum: vec![Vec3::new(1.0, -2.0, 0.5); dual.n_cells()],
            pressure: (0..primal.n_vertices()).map(|i| i as f64).collect(),
            species: vec![3.5; dual.n_cells()],
            time: 0.25,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dump.vtk");
        write_field_dump(&path, &primal, &dual, &state).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains(&format!("POINTS {} double", primal.n_vertices())));
        assert!(text.contains(&format!("CELLS {} {}", primal.n_tets(), 5 * primal.n_tets())));
        let lines: Vec<&str> = text.lines().collect();
        // every connectivity row names four in-range vertices
        let cells_at = lines.iter().position(|l| l.starts_with("CELLS")).unwrap();
        for row in &lines[cells_at + 1..cells_at + 1 + primal.n_tets()] {
            let ids: Vec<usize> =
                row.split_whitespace().skip(1).map(|s| s.parse().unwrap()).collect();
            assert_eq!(ids.len(), 4);
            assert!(ids.iter().all(|&v| v < primal.n_vertices()));
        }
        // constant dual fields transfer to the same constant at vertices
        let vec_at = lines.iter().position(|l| l.starts_with("VECTORS")).unwrap();
        let first: Vec<f64> = lines[vec_at + 1]
            .split_whitespace()
            .map(|s| s.parse().unwrap())
            .collect();
        assert_eq!(first, vec![1.0, -2.0, 0.5]);
        assert!(text.ends_with("3.5000000000000000e0\n"));
    }

    #[test]
    fn mismatched_state_is_refused() {
        let primal = build_cube_primal(1).unwrap();
        let dual = build_dual(&primal).unwrap();
        let state = FomState {
            momentum: vec![Vec3::ZERO; 3],
            pressure: vec![0.0; primal.n_vertices()],
            species: vec![0.0; dual.n_cells()],
            time: 0.0,
        };
        let dir = tempfile::tempdir().unwrap();
        assert!(write_field_dump(&dir.path().join("x.vtk"), &primal, &dual, &state).is_err());
    }
}
