//! Pressure-correction Poisson solve and the divergence-annihilating
//! momentum update.
//!
//! The discrete divergence of a dual-node momentum field W tested against a
//! P1 vertex function z is
//!     R_v(W) = Σ_f W_f·d_{f,v} − Σ_bf (A_bf/3) G_bf [v ∈ bf],
//! where d_{f,v} = Σ_{T ∋ f} (|T|/4) ∇λ_v|_T collects the quarter
//! sub-volumes of the face's generating tets and G is the prescribed normal
//! momentum on the boundary. The stiffness operator assembled here is the
//! one induced by that functional, A[v][w] = Σ_f d_{f,v}·d_{f,w} / |C_f|:
//! on a single tetrahedron it reduces to the exact P1 stiffness, it is
//! symmetric with constants in its kernel, and it makes the post-projection
//! update W_f −= Δt e_f(δ)/|C_f| (with e_f(δ) = Σ_v δ_v d_{f,v}) cancel the
//! divergence functional down to the linear-solver residual.

use crate::error::Result;
use crate::fom::types::BoundaryConditions;
use crate::math::{pcg_zero_mean, Csr, Vec3};
use crate::mesh::PrimalMesh;

pub struct BoundaryFace {
    /// Primal face index; equals the boundary cell index on the dual mesh.
    pub face: usize,
    pub tag: u32,
    pub area: f64,
    pub normal: Vec3,
    pub verts: [usize; 3],
    pub barycenter: Vec3,
}

pub struct ProjectionResult {
    /// Pressure correction per vertex, zero volume-weighted mean.
    pub delta: Vec<f64>,
    /// Prescribed normal momentum per boundary face, ordered like the
    /// projector's boundary list.
    pub boundary_flux: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
    /// Norm of the Poisson right side before the solve; the scale against
    /// which divergence residuals are measured.
    pub rhs_norm: f64,
}

pub struct PressureProjector {
    pub stiffness: Csr,
    /// d_{f,v} per face: vertex index and weighted shape gradient.
    divs: Vec<Vec<(usize, Vec3)>>,
    /// Face-cell volume |C_f| = Σ |T|/4 over generating tets.
    cell_volume: Vec<f64>,
    pub boundary: Vec<BoundaryFace>,
    /// Lumped vertex volume Σ_{T ∋ v} |T|/4, the weight of the zero-mean
    /// anchoring.
    vertex_mass: Vec<f64>,
    total_mass: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
}

/// d_{f,v} table and face-cell volumes for a mesh.
fn divergence_data(primal: &PrimalMesh) -> (Vec<Vec<(usize, Vec3)>>, Vec<f64>) {
    let nf = primal.n_faces();
    let mut divs: Vec<Vec<(usize, Vec3)>> = vec![Vec::new(); nf];
    let mut volume = vec![0.0; nf];
    for t in 0..primal.n_tets() {
        let quarter = 0.25 * primal.tet_volumes[t];
        let grads = primal.shape_gradients(t);
        for &f in &primal.tet_faces[t] {
            volume[f] += quarter;
            let entries = &mut divs[f];
            for (k, &v) in primal.tets[t].iter().enumerate() {
                let d = grads[k] * quarter;
                match entries.iter_mut().find(|(w, _)| *w == v) {
                    Some((_, acc)) => *acc += d,
                    None => entries.push((v, d)),
                }
            }
        }
    }
    for entries in &mut divs {
        entries.sort_by_key(|&(v, _)| v);
    }
    (divs, volume)
}

/// Stiffness operator of the weak pressure-correction problem.
pub fn assemble_poisson(primal: &PrimalMesh) -> Result<Csr> {
    let (divs, volume) = divergence_data(primal);
    assemble_from_divs(primal.n_vertices(), &divs, &volume)
}

fn assemble_from_divs(n: usize, divs: &[Vec<(usize, Vec3)>], volume: &[f64]) -> Result<Csr> {
    let mut triplets = Vec::new();
    for (f, entries) in divs.iter().enumerate() {
        let inv = 1.0 / volume[f];
        for (a, &(v, dv)) in entries.iter().enumerate() {
            triplets.push((v, v, dv.dot(dv) * inv));
            for &(w, dw) in entries.iter().skip(a + 1) {
                let val = dv.dot(dw) * inv;
                triplets.push((v, w, val));
                triplets.push((w, v, val));
            }
        }
    }
    Ok(Csr::from_triplets(n, &mut triplets))
}

impl PressureProjector {
    pub fn new(primal: &PrimalMesh, tolerance: f64) -> Result<Self> {
        let (divs, cell_volume) = divergence_data(primal);
        let n = primal.n_vertices();
        let stiffness = assemble_from_divs(n, &divs, &cell_volume)?;

        let mut boundary = Vec::new();
        for (f, face) in primal.faces.iter().enumerate() {
            if face.is_boundary() {
                let (area, normal) = primal.face_area_normal(f);
                boundary.push(BoundaryFace {
                    face: f,
                    tag: face.tag.unwrap_or(0),
                    area,
                    normal,
                    verts: face.verts,
                    barycenter: primal.face_barycenter(f),
                });
            }
        }

        let mut vertex_mass = vec![0.0; n];
        for t in 0..primal.n_tets() {
            let quarter = 0.25 * primal.tet_volumes[t];
            for &v in &primal.tets[t] {
                vertex_mass[v] += quarter;
            }
        }
        let total_mass = vertex_mass.iter().sum();

        Ok(PressureProjector {
            stiffness,
            divs,
            cell_volume,
            boundary,
            vertex_mass,
            total_mass,
            tolerance,
            max_iterations: 50 * n + 1000,
        })
    }

    /// Prescribed normal momentum G = g·η per boundary face at time t.
    pub fn boundary_flux(&self, bc: &BoundaryConditions, t: f64) -> Vec<f64> {
        self.boundary
            .iter()
            .map(|b| bc.momentum(b.tag, b.barycenter, t).dot(b.normal))
            .collect()
    }

    /// The divergence functional R(W, G) scaled by 1/dt, per vertex.
    pub fn divergence_rhs(&self, momentum: &[Vec3], flux: &[f64], dt: f64) -> Vec<f64> {
        let n = self.vertex_mass.len();
        let mut rhs = vec![0.0; n];
        for (f, entries) in self.divs.iter().enumerate() {
            let w = momentum[f];
            for &(v, d) in entries {
                rhs[v] += w.dot(d);
            }
        }
        for (b, g) in self.boundary.iter().zip(flux) {
            let coef = b.area / 3.0 * g;
            for &v in &b.verts {
                rhs[v] -= coef;
            }
        }
        let inv_dt = 1.0 / dt;
        for r in rhs.iter_mut() {
            *r *= inv_dt;
        }
        rhs
    }

    /// Weighted integral norm of the divergence functional after an update.
    pub fn divergence_norm(&self, momentum: &[Vec3], flux: &[f64], dt: f64) -> f64 {
        norm(&self.divergence_rhs(momentum, flux, dt))
    }

    /// Solve for the pressure correction driven by the unprojected momentum,
    /// with Dirichlet data evaluated at the step's end time.
    pub fn project(
        &self,
        momentum_tilde: &[Vec3],
        bc: &BoundaryConditions,
        t_next: f64,
        dt: f64,
    ) -> Result<ProjectionResult> {
        let flux = self.boundary_flux(bc, t_next);
        let rhs = self.divergence_rhs(momentum_tilde, &flux, dt);
        let rhs_norm = norm(&rhs);
        let sol = pcg_zero_mean(&self.stiffness, &rhs, self.tolerance, self.max_iterations)?;
        let mut delta = sol.x;
        self.anchor_zero_mean(&mut delta);
        Ok(ProjectionResult {
            delta,
            boundary_flux: flux,
            iterations: sol.iterations,
            relative_residual: sol.relative_residual,
            rhs_norm,
        })
    }

    /// Divergence-annihilating momentum update W −= Δt e(δ)/|C|.
    pub fn post_projection(&self, momentum_tilde: &[Vec3], delta: &[f64], dt: f64) -> Vec<Vec3> {
        momentum_tilde
            .iter()
            .enumerate()
            .map(|(f, w)| {
                let mut e = Vec3::ZERO;
                for &(v, d) in &self.divs[f] {
                    e += d * delta[v];
                }
                *w - e * (dt / self.cell_volume[f])
            })
            .collect()
    }

    /// Shift a vertex field to zero volume-weighted mean.
    pub fn anchor_zero_mean(&self, field: &mut [f64]) {
        let mean: f64 =
            field.iter().zip(&self.vertex_mass).map(|(x, m)| x * m).sum::<f64>() / self.total_mass;
        for x in field.iter_mut() {
            *x -= mean;
        }
    }

    /// Volume-weighted mean of a vertex field.
    pub fn weighted_mean(&self, field: &[f64]) -> f64 {
        field.iter().zip(&self.vertex_mass).map(|(x, m)| x * m).sum::<f64>() / self.total_mass
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fom::types::BoundaryFunctions;
    use crate::math::DMat;
    use crate::mesh::{build_cube_primal, build_dual};

    #[test]
    fn single_tet_operator_is_the_exact_stiffness() {
        let verts = vec![
            Vec3::new(0.1, 0.0, 0.0),
            Vec3::new(1.2, 0.1, -0.2),
            Vec3::new(0.3, 1.1, 0.15),
            Vec3::new(0.0, 0.2, 0.9),
        ];
        let primal = PrimalMesh::from_parts(verts, vec![[0, 1, 2, 3]], &[]).unwrap();
        let a = assemble_poisson(&primal).unwrap();
        let dense = a.to_dense();
        let grads = primal.shape_gradients(0);
        let vol = primal.tet_volumes[0];
        for v in 0..4 {
            let mut row_sum = 0.0;
            for w in 0..4 {
                let exact = vol * grads[v].dot(grads[w]);
                assert!(
                    (dense.get(v, w) - exact).abs() < 1e-14 * vol.recip(),
                    "entry ({v},{w})"
                );
                row_sum += dense.get(v, w);
            }
            assert!(row_sum.abs() < 1e-12);
        }
    }

    #[test]
    fn stiffness_is_symmetric_with_constant_kernel() {
        let primal = build_cube_primal(3).unwrap();
        let a = assemble_poisson(&primal).unwrap();
        let dense = a.to_dense();
        assert_eq!(dense.asymmetry(), 0.0);
        for sum in a.row_sums() {
            assert!(sum.abs() < 1e-12);
        }
        let ones = vec![1.0; primal.n_vertices()];
        let mut out = vec![0.0; primal.n_vertices()];
        a.mul_vec(&ones, &mut out);
        for v in out {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn zero_momentum_zero_flux_gives_zero_correction() {
        let primal = build_cube_primal(2).unwrap();
        let dual = build_dual(&primal).unwrap();
        let proj = PressureProjector::new(&primal, 1e-10).unwrap();
        let bc = BoundaryConditions::uniform(&primal, || BoundaryFunctions::fixed_momentum(Vec3::ZERO));
        let tilde = vec![Vec3::ZERO; dual.n_cells()];
        let res = proj.project(&tilde, &bc, 0.1, 0.1).unwrap();
        assert_eq!(res.rhs_norm, 0.0);
        for d in &res.delta {
            assert_eq!(*d, 0.0);
        }
    }

    #[test]
    fn uniform_momentum_is_a_fixed_point() {
        // a constant field with matching boundary data is discretely
        // divergence-free: the interior sum telescopes against the boundary
        // quadrature exactly
        let primal = build_cube_primal(3).unwrap();
        let dual = build_dual(&primal).unwrap();
        let proj = PressureProjector::new(&primal, 1e-10).unwrap();
        let w0 = Vec3::new(0.8, -0.45, 0.3);
        let bc = BoundaryConditions::uniform(&primal, || BoundaryFunctions::fixed_momentum(w0));
        let tilde = vec![w0; dual.n_cells()];
        let res = proj.project(&tilde, &bc, 1.0, 1.0).unwrap();
        assert!(res.rhs_norm < 1e-12, "rhs norm {}", res.rhs_norm);
        let after = proj.post_projection(&tilde, &res.delta, 1.0);
        for (a, b) in after.iter().zip(&tilde) {
            assert!((*a - *b).norm() < 1e-12);
        }
    }

    #[test]
    fn projection_matches_dense_solve() {
        let primal = build_cube_primal(2).unwrap();
        let dual = build_dual(&primal).unwrap();
        let proj = PressureProjector::new(&primal, 1e-12).unwrap();
        let bc = BoundaryConditions::uniform(&primal, || BoundaryFunctions::fixed_momentum(Vec3::ZERO));
        let tilde: Vec<Vec3> = dual
            .cells
            .iter()
            .map(|c| {
                let p = c.node;
                Vec3::new((3.1 * p.x).sin(), (2.3 * p.y + 0.4).cos(), p.z * p.x)
            })
            .collect();
        let n = primal.n_vertices();
        let flux = proj.boundary_flux(&bc, 0.1);
        let rhs = proj.divergence_rhs(&tilde, &flux, 0.1);
        let res = proj.project(&tilde, &bc, 0.1, 0.1).unwrap();

        // dense solve of the same singular system, zero-mean constraint via
        // a bordered system with the plain mean
        let dense = proj.stiffness.to_dense();
        let mut aug = DMat::zeros(n + 1, n + 1);
        for i in 0..n {
            for j in 0..n {
                aug.set(i, j, dense.get(i, j));
            }
            aug.set(i, n, 1.0);
            aug.set(n, i, 1.0);
        }
        let mut b = rhs.clone();
        b.push(0.0);
        let sol = aug.lu_solve(&b).unwrap();
        let mut want = sol[..n].to_vec();
        proj.anchor_zero_mean(&mut want);

        let scale = want.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for (a, b) in res.delta.iter().zip(&want) {
            assert!((a - b).abs() <= 1e-9 * scale, "{a} vs {b}");
        }
    }

    #[test]
    fn post_projection_kills_the_divergence() {
        let primal = build_cube_primal(3).unwrap();
        let dual = build_dual(&primal).unwrap();
        let proj = PressureProjector::new(&primal, 1e-11).unwrap();
        let bc = BoundaryConditions::uniform(&primal, || BoundaryFunctions::fixed_momentum(Vec3::ZERO));
        let tilde: Vec<Vec3> = dual
            .cells
            .iter()
            .map(|c| {
                let p = c.node;
                Vec3::new(p.y * (1.0 - p.y), (2.0 * p.x).sin() * 0.3, (p.z - 0.5).powi(2))
            })
            .collect();
        let dt = 0.05;
        let res = proj.project(&tilde, &bc, dt, dt).unwrap();
        let after = proj.post_projection(&tilde, &res.delta, dt);
        let div_after = proj.divergence_norm(&after, &res.boundary_flux, dt);
        assert!(
            div_after <= 10.0 * proj.tolerance * res.rhs_norm,
            "divergence {div_after:.3e} vs rhs {:.3e}",
            res.rhs_norm
        );
        // correction itself has zero weighted mean
        assert!(proj.weighted_mean(&res.delta).abs() < 1e-12);
    }

    #[test]
    fn solenoidal_field_correction_shrinks_under_refinement() {
        let delta_norm = |n: usize| -> f64 {
            let primal = build_cube_primal(n).unwrap();
            let dual = build_dual(&primal).unwrap();
            let proj = PressureProjector::new(&primal, 1e-12).unwrap();
            let field = |p: Vec3| {
                Vec3::new(
                    (std::f64::consts::PI * p.y).sin(),
                    (std::f64::consts::PI * p.z).cos(),
                    (std::f64::consts::PI * p.x).sin(),
                )
            };
            let tilde: Vec<Vec3> = dual.cells.iter().map(|c| field(c.node)).collect();
            let bc = BoundaryConditions { per_tag: (0..primal.tag_names.len()).map(|_| BoundaryFunctions {
                momentum: Box::new(move |x, _| field(x)),
                momentum_rate: Box::new(|_, _| Vec3::ZERO),
                species: Box::new(|_, _| 0.0),
            }).collect() };
            let res = proj.project(&tilde, &bc, 0.0, 1.0).unwrap();
            norm(&res.delta)
        };
        let coarse = delta_norm(2);
        let mid = delta_norm(4);
        let fine = delta_norm(8);
        assert!(mid < coarse && fine < mid, "{coarse} -> {mid} -> {fine}");
    }
}
