//! Facet flux for the coupled momentum/species convective system.

use crate::math::Vec3;

/// Rusanov flux through a facet for the conserved 4-vector (three momentum
/// components and the species), with physical flux F_i(w) = u_i w and wave
/// speed s = max(|uL·n|, |uR·n|):
/// ½(F(wL) + F(wR))·n − ½ s (wR − wL).
pub fn rusanov_flux(
    w_l: [f64; 4],
    w_r: [f64; 4],
    u_l: Vec3,
    u_r: Vec3,
    normal: Vec3,
) -> [f64; 4] {
    let un_l = u_l.dot(normal);
    let un_r = u_r.dot(normal);
    let s = un_l.abs().max(un_r.abs());
    let mut out = [0.0; 4];
    for k in 0..4 {
        out[k] = 0.5 * (un_l * w_l[k] + un_r * w_r[k]) - 0.5 * s * (w_r[k] - w_l[k]);
    }
    out
}
