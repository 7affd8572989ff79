//! Inoue surfaces `S⁰` from integer matrices with one real eigenvalue above
//! one and a complex-conjugate pair.

use nalgebra::{Complex, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::C64;

/// Affine generator `(w, z) ↦ (s w + a, m z + b)` of `H × C`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    pub scale_w: f64,
    pub shift_w: f64,
    pub scale_z: C64,
    pub shift_z: C64,
}

impl AffineMap {
    pub fn apply(&self, w: C64, z: C64) -> (C64, C64) {
        (w * self.scale_w + self.shift_w, self.scale_z * z + self.shift_z)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InoueLattice {
    pub z: [[i64; 3]; 3],
    pub alpha: f64,
    pub beta: C64,
    /// Real eigenvector of `Z` for `alpha`.
    pub a: [f64; 3],
    /// Complex eigenvector of `Z` for `beta`.
    pub b: [C64; 3],
    /// `g0(w,z) = (αw, βz)`, `g_i(w,z) = (w + a_i, z + b_i)`.
    pub generators: [AffineMap; 4],
}

fn to_matrix(z: &[[i64; 3]; 3]) -> Matrix3<f64> {
    Matrix3::from_fn(|i, j| z[i][j] as f64)
}

fn det_i64(z: &[[i64; 3]; 3]) -> i64 {
    z[0][0] * (z[1][1] * z[2][2] - z[1][2] * z[2][1]) - z[0][1] * (z[1][0] * z[2][2] - z[1][2] * z[2][0])
        + z[0][2] * (z[1][0] * z[2][1] - z[1][1] * z[2][0])
}

/// Kernel vector of a rank-two 3×3 matrix: the largest cross product of two rows.
fn kernel(m: &Matrix3<C64>) -> Vector3<C64> {
    let rows: Vec<Vector3<C64>> = (0..3).map(|i| Vector3::new(m[(i, 0)], m[(i, 1)], m[(i, 2)])).collect();
    let cross = |u: &Vector3<C64>, v: &Vector3<C64>| Vector3::new(u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]);
    let cands = [cross(&rows[0], &rows[1]), cross(&rows[1], &rows[2]), cross(&rows[0], &rows[2])];
    let best = cands.iter().max_by(|x, y| x.norm().total_cmp(&y.norm())).unwrap();
    best / Complex::new(best.norm(), 0.0)
}

/// Builds the lattice data of the Inoue surface attached to `z`.
pub fn inoue_lattice(z: [[i64; 3]; 3]) -> Result<InoueLattice> {
    if det_i64(&z) != 1 {
        return Err(Error::NotInoue(format!("det Z = {} (must be 1)", det_i64(&z))));
    }
    let m = to_matrix(&z);
    let ev = m.complex_eigenvalues();
    let scale = ev.iter().map(|e| e.norm()).fold(1.0, f64::max);
    let tol = 1e-9 * scale;
    let (real, cplx): (Vec<C64>, Vec<C64>) = ev.iter().partition(|e| e.im.abs() <= tol);
    if real.len() != 1 || cplx.len() != 2 {
        return Err(Error::NotInoue(format!("eigenvalues {ev:?} are not one real and a complex pair")));
    }
    let alpha = real[0].re;
    if !(alpha > 1.0) {
        return Err(Error::NotInoue(format!("real eigenvalue {alpha} is not above 1")));
    }
    let beta = if cplx[0].im > 0.0 { cplx[0] } else { cplx[1] };
    let mc: Matrix3<C64> = m.map(|x| Complex::new(x, 0.0));
    let shift = |l: C64| mc - Matrix3::from_diagonal_element(l);
    // g0 g_i g0⁻¹ = Π g_j^{z_ij} needs Z a = α a and Z b = β b
    let va = kernel(&shift(Complex::new(alpha, 0.0)));
    let phase = va.iter().max_by(|x, y| x.norm().total_cmp(&y.norm())).unwrap();
    let phase = phase / phase.norm();
    let a: [f64; 3] = std::array::from_fn(|i| (va[i] / phase).re);
    let vb = kernel(&shift(beta));
    let b: [C64; 3] = std::array::from_fn(|i| vb[i]);
    let mut generators = [AffineMap { scale_w: alpha, shift_w: 0.0, scale_z: beta, shift_z: Complex::new(0.0, 0.0) }; 4];
    for i in 0..3 {
        generators[i + 1] = AffineMap { scale_w: 1.0, shift_w: a[i], scale_z: Complex::new(1.0, 0.0), shift_z: b[i] };
    }
    let lat = InoueLattice { z, alpha, beta, a, b, generators };
    lat.validate()?;
    Ok(lat)
}

impl InoueLattice {
    /// `|α|β|² − 1|`.
    pub fn product_defect(&self) -> f64 {
        (self.alpha * self.beta.norm_sqr() - 1.0).abs()
    }

    /// Determinant of the real 3×3 matrix with rows `(a_i, Re b_i, Im b_i)`.
    pub fn independence(&self) -> f64 {
        Matrix3::from_fn(|i, j| match j {
            0 => self.a[i],
            1 => self.b[i].re,
            _ => self.b[i].im,
        })
        .determinant()
    }

    /// `max |Z a − α a|, |Z b − β b|`, the conjugation relations of the generators.
    pub fn relation_defect(&self) -> f64 {
        let m = to_matrix(&self.z);
        let mut d: f64 = 0.0;
        for i in 0..3 {
            let za: f64 = (0..3).map(|j| m[(i, j)] * self.a[j]).sum();
            let zb: C64 = (0..3).map(|j| self.b[j] * m[(i, j)]).sum();
            d = d.max((za - self.alpha * self.a[i]).abs()).max((zb - self.beta * self.b[i]).norm());
        }
        d
    }

    pub fn validate(&self) -> Result<()> {
        if det_i64(&self.z) != 1 {
            return Err(Error::NotInoue("det Z != 1".into()));
        }
        if self.product_defect() > 1e-10 {
            return Err(Error::NotInoue(format!("α|β|² − 1 = {:.3e}", self.product_defect())));
        }
        if self.independence().abs() < 1e-10 {
            return Err(Error::NotInoue("translation vectors are dependent over R".into()));
        }
        if self.relation_defect() > 1e-10 {
            return Err(Error::NotInoue(format!("generator relation defect {:.3e}", self.relation_defect())));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Real root of a monic cubic by bisection, independent of the eigen solver.
    fn real_root(c: [f64; 3], lo: f64, hi: f64) -> f64 {
        let p = |x: f64| x * x * x + c[0] * x * x + c[1] * x + c[2];
        let (mut lo, mut hi) = (lo, hi);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if p(lo) * p(mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn plastic_number_companion() {
        // x³ − x − 1
        let lat = inoue_lattice([[0, 0, 1], [1, 0, 1], [0, 1, 0]]).unwrap();
        let root = real_root([0.0, -1.0, -1.0], 1.0, 2.0);
        assert!((lat.alpha - root).abs() < 1e-12 && (lat.alpha - 1.32472).abs() < 1e-5);
        assert!((lat.beta.norm() - root.powf(-0.5)).abs() < 1e-12);
    }

    #[test]
    fn second_companion_follows_its_pattern() {
        // x³ − 2x² + x − 1: the discriminant is negative, so one real root and a pair
        let c: [f64; 3] = [-2.0, 1.0, -1.0];
        let disc = 18.0 * c[0] * c[1] * c[2] - 4.0 * c[0].powi(3) * c[2] + c[0].powi(2) * c[1].powi(2) - 4.0 * c[1].powi(3) - 27.0 * c[2].powi(2);
        assert!(disc < 0.0);
        let root = real_root(c, 1.0, 3.0);
        let lat = inoue_lattice([[0, 0, 1], [1, 0, -1], [0, 1, 2]]).unwrap();
        assert!((lat.alpha - root).abs() < 1e-12);
    }

    #[test]
    fn rejects_wrong_patterns() {
        assert!(matches!(inoue_lattice([[1, 0, 0], [0, 1, 0], [0, 0, 1]]), Err(Error::NotInoue(_))));
        assert!(matches!(inoue_lattice([[2, 0, 0], [0, 1, 0], [0, 0, 1]]), Err(Error::NotInoue(_))));
        // three real eigenvalues
        assert!(matches!(inoue_lattice([[2, 1, 0], [1, 1, 0], [0, 0, 1]]), Err(Error::NotInoue(_))));
    }

    #[test]
    fn generators_conjugate_correctly() {
        let lat = inoue_lattice([[0, 0, 1], [1, 0, 1], [0, 1, 0]]).unwrap();
        let (w, z) = (Complex::new(0.3, 1.2), Complex::new(-0.4, 0.7));
        let g0 = lat.generators[0];
        for i in 0..3 {
            // g0 g_i g0⁻¹ = Π_j g_j^{z_ij}
            let (w1, z1) = (w / lat.alpha, z / lat.beta);
            let (w2, z2) = lat.generators[i + 1].apply(w1, z1);
            let (w3, z3) = g0.apply(w2, z2);
            let (mut w4, mut z4) = (w, z);
            for j in 0..3 {
                w4 += lat.a[j] * lat.z[i][j] as f64;
                z4 += lat.b[j] * lat.z[i][j] as f64;
            }
            assert!((w3 - w4).norm() < 1e-12 && (z3 - z4).norm() < 1e-12);
        }
    }
}
