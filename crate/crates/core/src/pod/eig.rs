//! Dense symmetric eigensolver (cyclic Jacobi rotations).
//!
//! Correlation matrices here are small (one row per snapshot), so Jacobi is
//! plenty fast and has the advantage of being exactly symmetric: eigenvectors
//! come out orthonormal to machine precision.

use crate::error::{Error, Result};
use crate::math::DMat;

#[derive(Debug)]
pub struct SymEig {
    /// Descending.
    pub values: Vec<f64>,
    /// `vectors[k]` pairs with `values[k]`; unit two-norm. The sign is fixed
    /// by making the largest-magnitude entry (earliest on ties) positive.
    pub vectors: Vec<Vec<f64>>,
}

const MAX_SWEEPS: usize = 100;

pub fn sym_eig(m: &DMat) -> Result<SymEig> {
    if m.n_rows != m.n_cols {
        return Err(Error::NotSymmetric(format!("matrix is {}x{}", m.n_rows, m.n_cols)));
    }
    let n = m.n_rows;
    let max_abs = m.data().iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if max_abs > 0.0 && m.asymmetry() > 1e-12 * max_abs {
        return Err(Error::NotSymmetric(format!(
            "asymmetry {:.3e} exceeds 1e-12 of the largest entry {:.3e}",
            m.asymmetry(),
            max_abs
        )));
    }

    let mut a = m.clone();
    let mut v = DMat::identity(n);
    let frob: f64 = m.data().iter().map(|x| x * x).sum::<f64>().sqrt();
    let target = 1e-14 * frob;

    let mut converged = frob == 0.0;
    for _ in 0..MAX_SWEEPS {
        if off_diagonal_frobenius(&a) <= target {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }
    if !converged && off_diagonal_frobenius(&a) > target {
        return Err(Error::SolverFailure(format!(
            "jacobi sweeps stalled at off-diagonal norm {:.3e} (target {:.3e})",
            off_diagonal_frobenius(&a),
            target
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a.get(j, j).partial_cmp(&a.get(i, i)).unwrap());
    let values: Vec<f64> = order.iter().map(|&k| a.get(k, k)).collect();
    let mut vectors = Vec::with_capacity(n);
    for &k in &order {
        let mut col: Vec<f64> = (0..n).map(|r| v.get(r, k)).collect();
        let mut lead = 0;
        for (i, x) in col.iter().enumerate() {
            if x.abs() > col[lead].abs() {
                lead = i;
            }
        }
        if col[lead] < 0.0 {
            for x in col.iter_mut() {
                *x = -*x;
            }
        }
        vectors.push(col);
    }
    Ok(SymEig { values, vectors })
}

fn off_diagonal_frobenius(a: &DMat) -> f64 {
    let n = a.n_rows;
    let mut acc = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            acc += 2.0 * a.get(i, j) * a.get(i, j);
        }
    }
    acc.sqrt()
}

fn rotate(a: &mut DMat, v: &mut DMat, p: usize, q: usize) {
    let apq = a.get(p, q);
    if apq == 0.0 {
        return;
    }
    let theta = (a.get(q, q) - a.get(p, p)) / (2.0 * apq);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    let n = a.n_rows;
    let app = a.get(p, p);
    let aqq = a.get(q, q);
    a.set(p, p, app - t * apq);
    a.set(q, q, aqq + t * apq);
    a.set(p, q, 0.0);
    a.set(q, p, 0.0);
    for k in 0..n {
        if k != p && k != q {
            let akp = a.get(k, p);
            let akq = a.get(k, q);
            a.set(k, p, c * akp - s * akq);
            a.set(p, k, c * akp - s * akq);
            a.set(k, q, s * akp + c * akq);
            a.set(q, k, s * akp + c * akq);
        }
    }
    for k in 0..n {
        let vkp = v.get(k, p);
        let vkq = v.get(k, q);
        v.set(k, p, c * vkp - s * vkq);
        v.set(k, q, s * vkp + c * vkq);
    }
}
