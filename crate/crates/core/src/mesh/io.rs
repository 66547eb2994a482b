//! Plain-text mesh exchange format.
//!
//! ```text
//! HFM 1
//! vertices <count>
//! <x> <y> <z>          one line per vertex, 17 significant digits
//! tets <count>
//! <a> <b> <c> <d>      vertex indices, positive orientation
//! boundary <count>
//! <a> <b> <c> <tag>    tagged boundary faces
//! ```
//!
//! Import rebuilds face adjacency from the tets and re-runs the full mesh
//! validation, so a written file round-trips byte for byte.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use crate::binfmt::atomic_write;
use crate::error::{Error, Result};
use crate::math::Vec3;
use crate::mesh::primal::PrimalMesh;

pub fn write_mesh(path: &Path, mesh: &PrimalMesh) -> Result<()> {
    let mut text = String::new();
    text.push_str("HFM 1\n");
    writeln!(text, "vertices {}", mesh.n_vertices()).unwrap();
    for v in &mesh.vertices {
        writeln!(text, "{:.16e} {:.16e} {:.16e}", v.x, v.y, v.z).unwrap();
    }
    writeln!(text, "tets {}", mesh.n_tets()).unwrap();
    for t in &mesh.tets {
        writeln!(text, "{} {} {} {}", t[0], t[1], t[2], t[3]).unwrap();
    }
    let tagged: Vec<(usize, &str)> = mesh
        .faces
        .iter()
        .enumerate()
        .filter_map(|(fi, f)| f.tag.map(|t| (fi, mesh.tag_names[t as usize].as_str())))
        .collect();
    writeln!(text, "boundary {}", tagged.len()).unwrap();
    for (fi, name) in tagged {
        let v = mesh.faces[fi].verts;
        writeln!(text, "{} {} {} {}", v[0], v[1], v[2], name).unwrap();
    }
    atomic_write(path, |w| w.write_all(text.as_bytes()).map_err(|e| Error::io(path, e)))
}

pub fn read_mesh(path: &Path) -> Result<PrimalMesh> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_mesh(&text)
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

pub fn parse_mesh(text: &str) -> Result<PrimalMesh> {
    let n_lines = text.lines().count();
    let mut lines = text.lines().enumerate();
    let mut next_line = |what: &str| -> Result<(usize, &str)> {
        lines
            .next()
            .map(|(i, l)| (i + 1, l))
            .ok_or_else(|| parse_err(n_lines + 1, format!("unexpected end of file, expected {what}")))
    };

    let (ln, header) = next_line("header")?;
    if header.trim() != "HFM 1" {
        return Err(parse_err(ln, format!("bad header {header:?}, expected \"HFM 1\"")));
    }

    let (ln, l) = next_line("vertices section")?;
    let n_verts = section_count(l, "vertices", ln)?;
    let mut vertices = Vec::with_capacity(n_verts);
    for _ in 0..n_verts {
        let (ln, l) = next_line("vertex line")?;
        let mut it = l.split_whitespace();
        let mut coord = [0.0f64; 3];
        for c in &mut coord {
            let tok = it.next().ok_or_else(|| parse_err(ln, "vertex needs three coordinates"))?;
            *c = tok
                .parse()
                .map_err(|_| parse_err(ln, format!("bad coordinate {tok:?}")))?;
        }
        if it.next().is_some() {
            return Err(parse_err(ln, "trailing tokens on vertex line"));
        }
        vertices.push(Vec3::from(coord));
    }

    let (ln, l) = next_line("tets section")?;
    let n_tets = section_count(l, "tets", ln)?;
    let mut tets = Vec::with_capacity(n_tets);
    for _ in 0..n_tets {
        let (ln, l) = next_line("tet line")?;
        let mut it = l.split_whitespace();
        let mut tet = [0usize; 4];
        for v in &mut tet {
            let tok = it.next().ok_or_else(|| parse_err(ln, "tet needs four vertex indices"))?;
            *v = tok.parse().map_err(|_| parse_err(ln, format!("bad vertex index {tok:?}")))?;
        }
        if it.next().is_some() {
            return Err(parse_err(ln, "trailing tokens on tet line"));
        }
        tets.push(tet);
    }

    let (ln, l) = next_line("boundary section")?;
    let n_tagged = section_count(l, "boundary", ln)?;
    let mut tagged = Vec::with_capacity(n_tagged);
    for _ in 0..n_tagged {
        let (ln, l) = next_line("boundary line")?;
        let mut it = l.split_whitespace();
        let mut tri = [0usize; 3];
        for v in &mut tri {
            let tok = it
                .next()
                .ok_or_else(|| parse_err(ln, "boundary face needs three vertex indices and a tag"))?;
            *v = tok.parse().map_err(|_| parse_err(ln, format!("bad vertex index {tok:?}")))?;
        }
        let name = it.next().ok_or_else(|| parse_err(ln, "boundary face needs a tag name"))?;
        if it.next().is_some() {
            return Err(parse_err(ln, "trailing tokens on boundary line"));
        }
        tagged.push((tri, name.to_string()));
    }
    if let Some((i, l)) = lines.find(|(_, l)| !l.trim().is_empty()) {
        return Err(parse_err(i + 1, format!("unexpected trailing content {l:?}")));
    }

    PrimalMesh::from_parts(vertices, tets, &tagged)
}

fn section_count(line: &str, keyword: &str, ln: usize) -> Result<usize> {
    let mut it = line.split_whitespace();
    match (it.next(), it.next(), it.next()) {
        (Some(k), Some(count), None) if k == keyword => count
            .parse()
            .map_err(|_| parse_err(ln, format!("bad {keyword} count {count:?}"))),
        _ => Err(parse_err(ln, format!("expected \"{keyword} <count>\", got {line:?}"))),
    }
}
