//! Primal tetrahedral mesh with face adjacency and P1 shape-function data.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::math::Vec3;

/// Triangular face of the primal mesh. Vertex indices are stored sorted so
/// adjacency lookups are order-independent; orientation is carried by the
/// owner reference (normals point away from the owner tet).
#[derive(Debug, Clone)]
pub struct Face {
    pub verts: [usize; 3],
    pub owner: usize,
    pub neighbor: Option<usize>,
    /// Index into `PrimalMesh::tag_names` for tagged boundary faces.
    pub tag: Option<u32>,
}

impl Face {
    pub fn is_boundary(&self) -> bool {
        self.neighbor.is_none()
    }
}

/// Conforming tetrahedral mesh. Tets are stored with positive signed volume;
/// construction rejects inverted or degenerate elements and any face shared
/// by more than two tets.
#[derive(Debug, Clone)]
pub struct PrimalMesh {
    pub vertices: Vec<Vec3>,
    pub tets: Vec<[usize; 4]>,
    pub faces: Vec<Face>,
    /// For each tet, entry `k` is the face opposite local vertex `k`.
    pub tet_faces: Vec<[usize; 4]>,
    pub tet_volumes: Vec<f64>,
    /// Gradients of the four barycentric shape functions per tet.
    grad_lambda: Vec<[Vec3; 4]>,
    pub tag_names: Vec<String>,
    /// Faces incident to each vertex, in face-index order.
    pub vertex_faces: Vec<Vec<usize>>,
}

/// Relative volume threshold below which a tet counts as degenerate.
const DEGENERATE_REL: f64 = 1e-14;

impl PrimalMesh {
    /// Build connectivity and shape data from raw vertices and tets, then
    /// attach boundary tags. `tagged_faces` entries name boundary faces by
    /// their (unsorted) vertex triple; naming an unknown or interior face is
    /// an error. Tag ids follow the first appearance order of tag names.
    pub fn from_parts(
        vertices: Vec<Vec3>,
        tets: Vec<[usize; 4]>,
        tagged_faces: &[([usize; 3], String)],
    ) -> Result<PrimalMesh> {
        let mut mesh = Self::build(vertices, tets)?;
        mesh.apply_boundary_tags(tagged_faces)?;
        Ok(mesh)
    }

    fn build(vertices: Vec<Vec3>, tets: Vec<[usize; 4]>) -> Result<PrimalMesh> {
        if tets.is_empty() {
            return Err(Error::MalformedMesh("mesh has no tets".into()));
        }
        for (t, tet) in tets.iter().enumerate() {
            for &v in tet {
                if v >= vertices.len() {
                    return Err(Error::MalformedMesh(format!(
                        "tet {} references vertex {} of {}",
                        t,
                        v,
                        vertices.len()
                    )));
                }
            }
            for i in 0..4 {
                for j in (i + 1)..4 {
                    if tet[i] == tet[j] {
                        return Err(Error::MalformedMesh(format!(
                            "tet {} repeats vertex {}",
                            t, tet[i]
                        )));
                    }
                }
            }
        }

        let mut tet_volumes = Vec::with_capacity(tets.len());
        let mut grad_lambda = Vec::with_capacity(tets.len());
        for (t, tet) in tets.iter().enumerate() {
            let p0 = vertices[tet[0]];
            let a = vertices[tet[1]] - p0;
            let b = vertices[tet[2]] - p0;
            let c = vertices[tet[3]] - p0;
            let det = a.dot(b.cross(c));
            if det <= 0.0 {
                return Err(Error::MalformedMesh(format!(
                    "tet {} has nonpositive volume {:.3e}",
                    t,
                    det / 6.0
                )));
            }
            tet_volumes.push(det / 6.0);
            let g1 = b.cross(c) / det;
            let g2 = c.cross(a) / det;
            let g3 = a.cross(b) / det;
            let g0 = -(g1 + g2 + g3);
            grad_lambda.push([g0, g1, g2, g3]);
        }
        let mean_vol = tet_volumes.iter().sum::<f64>() / tets.len() as f64;
        for (t, &v) in tet_volumes.iter().enumerate() {
            if v < DEGENERATE_REL * mean_vol {
                return Err(Error::DegenerateElement { tet: t, volume: v });
            }
        }

        let mut faces: Vec<Face> = Vec::new();
        let mut tet_faces = vec![[usize::MAX; 4]; tets.len()];
        let mut lookup: HashMap<[usize; 3], usize> = HashMap::new();
        for (t, tet) in tets.iter().enumerate() {
            for k in 0..4 {
                let mut tri = [0usize; 3];
                let mut w = 0;
                for (i, &v) in tet.iter().enumerate() {
                    if i != k {
                        tri[w] = v;
                        w += 1;
                    }
                }
                tri.sort_unstable();
                let fi = match lookup.get(&tri) {
                    Some(&fi) => {
                        let face = &mut faces[fi];
                        if face.neighbor.is_some() {
                            return Err(Error::MalformedMesh(format!(
                                "face {:?} shared by more than two tets",
                                tri
                            )));
                        }
                        face.neighbor = Some(t);
                        fi
                    }
                    None => {
                        let fi = faces.len();
                        faces.push(Face { verts: tri, owner: t, neighbor: None, tag: None });
                        lookup.insert(tri, fi);
                        fi
                    }
                };
                tet_faces[t][k] = fi;
            }
        }

        let mut vertex_faces = vec![Vec::new(); vertices.len()];
        for (fi, face) in faces.iter().enumerate() {
            for &v in &face.verts {
                vertex_faces[v].push(fi);
            }
        }

        Ok(PrimalMesh {
            vertices,
            tets,
            faces,
            tet_faces,
            tet_volumes,
            grad_lambda,
            tag_names: Vec::new(),
            vertex_faces,
        })
    }

    fn apply_boundary_tags(&mut self, tagged_faces: &[([usize; 3], String)]) -> Result<()> {
        let mut lookup: HashMap<[usize; 3], usize> = HashMap::new();
        for (fi, face) in self.faces.iter().enumerate() {
            lookup.insert(face.verts, fi);
        }
        for (tri, name) in tagged_faces {
            let mut key = *tri;
            key.sort_unstable();
            let fi = *lookup.get(&key).ok_or_else(|| {
                Error::MalformedMesh(format!("boundary entry {:?} names no mesh face", tri))
            })?;
            if !self.faces[fi].is_boundary() {
                return Err(Error::MalformedMesh(format!(
                    "boundary entry {:?} names an interior face",
                    tri
                )));
            }
            let tag = match self.tag_names.iter().position(|n| n == name) {
                Some(i) => i as u32,
                None => {
                    self.tag_names.push(name.clone());
                    (self.tag_names.len() - 1) as u32
                }
            };
            self.faces[fi].tag = Some(tag);
        }
        Ok(())
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_tets(&self) -> usize {
        self.tets.len()
    }

    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn total_volume(&self) -> f64 {
        self.tet_volumes.iter().sum()
    }

    pub fn tag_id(&self, name: &str) -> Option<u32> {
        self.tag_names.iter().position(|n| n == name).map(|i| i as u32)
    }

    pub fn tet_barycenter(&self, t: usize) -> Vec3 {
        let tet = self.tets[t];
        (self.vertices[tet[0]] + self.vertices[tet[1]] + self.vertices[tet[2]] + self.vertices[tet[3]])
            / 4.0
    }

    pub fn face_barycenter(&self, f: usize) -> Vec3 {
        let v = self.faces[f].verts;
        (self.vertices[v[0]] + self.vertices[v[1]] + self.vertices[v[2]]) / 3.0
    }

    /// Face area and unit normal pointing away from the owner tet (outward
    /// for boundary faces).
    pub fn face_area_normal(&self, f: usize) -> (f64, Vec3) {
        let face = &self.faces[f];
        let [a, b, c] = face.verts;
        let pa = self.vertices[a];
        let cr = (self.vertices[b] - pa).cross(self.vertices[c] - pa);
        let area = 0.5 * cr.norm();
        let mut n = cr / cr.norm();
        let opp = self.vertices[self.opposite_vertex(face.owner, f)];
        if n.dot(opp - pa) > 0.0 {
            n = -n;
        }
        (area, n)
    }

    /// Vertex of tet `t` not lying on face `f`.
    pub fn opposite_vertex(&self, t: usize, f: usize) -> usize {
        let k = self.tet_faces[t]
            .iter()
            .position(|&fi| fi == f)
            .expect("face does not belong to tet");
        self.tets[t][k]
    }

    /// Gradient of the P1 interpolant of `vals` given at the tet's vertices.
    /// Exact for affine fields.
    pub fn p1_gradient(&self, t: usize, vals: [f64; 4]) -> Vec3 {
        let g = &self.grad_lambda[t];
        g[0] * vals[0] + g[1] * vals[1] + g[2] * vals[2] + g[3] * vals[3]
    }

    /// Gradient per tet of a vertex field.
    pub fn p1_gradient_of(&self, t: usize, vertex_values: &[f64]) -> Vec3 {
        let tet = self.tets[t];
        self.p1_gradient(
            t,
            [
                vertex_values[tet[0]],
                vertex_values[tet[1]],
                vertex_values[tet[2]],
                vertex_values[tet[3]],
            ],
        )
    }

    /// Gradient of the affine interpolant of values attached to the tet's
    /// four face barycenters; `vals[k]` belongs to the face opposite local
    /// vertex `k`. The barycenter of the face opposite vertex `k` is the
    /// image of vertex `k` under the affine map with linear part `-I/3`, so
    /// the gradient is -3 times the vertex-based P1 gradient. Exact for
    /// affine fields.
    pub fn face_field_gradient(&self, t: usize, vals: [f64; 4]) -> Vec3 {
        self.p1_gradient(t, vals) * -3.0
    }

    /// Shape-function gradients of tet `t`.
    pub fn shape_gradients(&self, t: usize) -> &[Vec3; 4] {
        &self.grad_lambda[t]
    }

    /// Gather the values of a dual-node (per-face) field on the four faces
    /// of tet `t`, ordered opposite to local vertices.
    pub fn gather_face_vals(&self, t: usize, cell_field: &[f64]) -> [f64; 4] {
        let tf = self.tet_faces[t];
        [cell_field[tf[0]], cell_field[tf[1]], cell_field[tf[2]], cell_field[tf[3]]]
    }
}

/// Uniform tetrahedral mesh of the unit cube: `n^3` hex cells, each split
/// into the six tets around the cell diagonal, so faces match across cells.
/// Boundary faces are tagged xmin/xmax/ymin/ymax/zmin/zmax.
pub fn build_cube_primal(n: usize) -> Result<PrimalMesh> {
    if n == 0 {
        return Err(Error::InvalidArgument("cube subdivisions must be at least 1".into()));
    }
    let np = n + 1;
    let ix = |a: usize, b: usize, c: usize| (a * np + b) * np + c;
    let mut vertices = Vec::with_capacity(np * np * np);
    for a in 0..np {
        for b in 0..np {
            for c in 0..np {
                vertices.push(Vec3::new(a as f64 / n as f64, b as f64 / n as f64, c as f64 / n as f64));
            }
        }
    }

    // Axis orders of the six diagonal tets; odd permutations get their last
    // two vertices swapped to keep the signed volume positive.
    const PERMS: [([usize; 3], bool); 6] = [
        ([0, 1, 2], true),
        ([0, 2, 1], false),
        ([1, 0, 2], false),
        ([1, 2, 0], true),
        ([2, 0, 1], true),
        ([2, 1, 0], false),
    ];
    let mut tets = Vec::with_capacity(6 * n * n * n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for (perm, even) in PERMS {
                    let mut d = [0usize; 3];
                    let mut corner = [[0usize; 3]; 4];
                    corner[0] = d;
                    for (step, &axis) in perm.iter().enumerate() {
                        d[axis] += 1;
                        corner[step + 1] = d;
                    }
                    let mut tet = [
                        ix(i + corner[0][0], j + corner[0][1], k + corner[0][2]),
                        ix(i + corner[1][0], j + corner[1][1], k + corner[1][2]),
                        ix(i + corner[2][0], j + corner[2][1], k + corner[2][2]),
                        ix(i + corner[3][0], j + corner[3][1], k + corner[3][2]),
                    ];
                    if !even {
                        tet.swap(2, 3);
                    }
                    tets.push(tet);
                }
            }
        }
    }

    let mut mesh = PrimalMesh::build(vertices, tets)?;

    // Classify boundary faces by lattice coordinates; iterate sides in a
    // fixed order so tag ids are stable.
    let lattice = |v: usize| -> [usize; 3] { [v / (np * np), (v / np) % np, v % np] };
    let sides: [(&str, usize, usize); 6] = [
        ("xmin", 0, 0),
        ("xmax", 0, n),
        ("ymin", 1, 0),
        ("ymax", 1, n),
        ("zmin", 2, 0),
        ("zmax", 2, n),
    ];
    let mut entries: Vec<([usize; 3], String)> = Vec::new();
    for (name, axis, level) in sides {
        for face in &mesh.faces {
            if face.is_boundary() && face.verts.iter().all(|&v| lattice(v)[axis] == level) {
                entries.push((face.verts, name.to_string()));
            }
        }
    }
    let n_boundary = mesh.faces.iter().filter(|f| f.is_boundary()).count();
    if entries.len() != n_boundary {
        return Err(Error::MalformedMesh(format!(
            "classified {} of {} boundary faces",
            entries.len(),
            n_boundary
        )));
    }
    mesh.apply_boundary_tags(&entries)?;
    Ok(mesh)
}
