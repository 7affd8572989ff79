//! Hermitian tensor fields `h_{i j̄}` on a chart grid.

use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64;

use crate::conventions::j_matrix;
use crate::error::{Error, Result};
use crate::grid::ChartGrid;

pub type C64 = Complex64;

/// A field of 2×2 Hermitian matrices stored as four real channels
/// `(h11, h22, Re h12, Im h12)`.
///
/// The same type carries metrics and metric rates; [`HermitianField::validate`]
/// adds the positivity check for metrics.
#[derive(Clone, Debug)]
pub struct HermitianField {
    pub grid: ChartGrid,
    pub u: [Vec<f64>; 4],
}

impl HermitianField {
    pub fn zeros(grid: &ChartGrid) -> Self {
        Self { grid: grid.clone(), u: std::array::from_fn(|_| vec![0.0; grid.len()]) }
    }

    pub fn identity(grid: &ChartGrid) -> Self {
        Self::constant(grid, Matrix2::identity())
    }

    pub fn constant(grid: &ChartGrid, h: Matrix2<C64>) -> Self {
        Self::from_fn(grid, |_| h)
    }

    pub fn from_fn(grid: &ChartGrid, f: impl Fn([f64; 4]) -> Matrix2<C64>) -> Self {
        let mut out = Self::zeros(grid);
        for k in 0..grid.len() {
            out.set(k, &f(grid.coords(k)));
        }
        out
    }

    pub fn len(&self) -> usize {
        self.u[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn at(&self, k: usize) -> Matrix2<C64> {
        channels_to_hermitian(&[self.u[0][k], self.u[1][k], self.u[2][k], self.u[3][k]])
    }

    /// Stores the Hermitian part of `h` at point `k`.
    pub fn set(&mut self, k: usize, h: &Matrix2<C64>) {
        let c = hermitian_to_channels(h);
        for i in 0..4 {
            self.u[i][k] = c[i];
        }
    }

    pub fn riemannian(&self, k: usize) -> Matrix4<f64> {
        riemannian_from_channels(&[self.u[0][k], self.u[1][k], self.u[2][k], self.u[3][k]])
    }

    /// Smallest eigenvalue over the grid and where it occurs.
    pub fn min_eigenvalue(&self) -> (f64, usize) {
        let mut best = (f64::INFINITY, 0);
        for k in 0..self.len() {
            let l = hermitian_eigenvalues(&self.at(k)).0;
            if l < best.0 {
                best = (l, k);
            }
        }
        best
    }

    /// Positivity and finiteness check for a metric.
    pub fn validate(&self) -> Result<()> {
        if self.u.iter().any(|c| c.len() != self.grid.len()) {
            return Err(Error::Parameter("channel length does not match grid".into()));
        }
        if self.u.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::Parameter("non-finite metric component".into()));
        }
        let (l, k) = self.min_eigenvalue();
        if !(l > 0.0) {
            return Err(Error::Degenerate { index: k, min_eigenvalue: l });
        }
        Ok(())
    }

    /// `self + s·other`
    pub fn axpy(&self, s: f64, other: &HermitianField) -> HermitianField {
        let mut out = self.clone();
        for c in 0..4 {
            for (o, x) in out.u[c].iter_mut().zip(&other.u[c]) {
                *o += s * x;
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> HermitianField {
        let mut out = self.clone();
        out.u.iter_mut().flatten().for_each(|x| *x *= s);
        out
    }

    /// Pointwise sup of the operator norm of the difference.
    pub fn sup_distance(&self, other: &HermitianField) -> f64 {
        (0..self.len())
            .map(|k| hermitian_norm(&(self.at(k) - other.at(k))))
            .fold(0.0, f64::max)
    }

    pub fn sup_norm(&self) -> f64 {
        (0..self.len()).map(|k| hermitian_norm(&self.at(k))).fold(0.0, f64::max)
    }

    /// Grid average of the field.
    pub fn mean(&self) -> Matrix2<C64> {
        let n = self.len() as f64;
        let c: [f64; 4] = std::array::from_fn(|i| self.u[i].iter().sum::<f64>() / n);
        channels_to_hermitian(&c)
    }

    /// `det h` at every point.
    pub fn determinant(&self) -> Vec<f64> {
        (0..self.len())
            .map(|k| self.u[0][k] * self.u[1][k] - self.u[2][k].powi(2) - self.u[3][k].powi(2))
            .collect()
    }
}

pub fn channels_to_hermitian(c: &[f64; 4]) -> Matrix2<C64> {
    Matrix2::new(
        C64::new(c[0], 0.0),
        C64::new(c[2], c[3]),
        C64::new(c[2], -c[3]),
        C64::new(c[1], 0.0),
    )
}

pub fn hermitian_to_channels(h: &Matrix2<C64>) -> [f64; 4] {
    let h12 = 0.5 * (h[(0, 1)] + h[(1, 0)].conj());
    [h[(0, 0)].re, h[(1, 1)].re, h12.re, h12.im]
}

/// Riemannian metric `G(X,Y) = Re h(ξ, η̄)` with `ξ = dz(X)`.
pub fn riemannian_from_channels(c: &[f64; 4]) -> Matrix4<f64> {
    let (a, b, re, im) = (c[0], c[1], c[2], c[3]);
    Matrix4::new(
        a, 0.0, re, im, //
        0.0, a, -im, re, //
        re, -im, b, 0.0, //
        im, re, 0.0, b,
    )
}

pub fn riemannian_from_hermitian(h: &Matrix2<C64>) -> Matrix4<f64> {
    riemannian_from_channels(&hermitian_to_channels(h))
}

/// Inverse of [`riemannian_from_hermitian`] on J-invariant symmetric tensors.
pub fn hermitian_from_riemannian(g: &Matrix4<f64>) -> Matrix2<C64> {
    let c = [
        0.5 * (g[(0, 0)] + g[(1, 1)]),
        0.5 * (g[(2, 2)] + g[(3, 3)]),
        0.5 * (g[(0, 2)] + g[(1, 3)]),
        0.5 * (g[(0, 3)] - g[(1, 2)]),
    ];
    channels_to_hermitian(&c)
}

/// Real 2-form `ω(X,Y) = G(JX,Y)` attached to a Hermitian matrix.
pub fn form_from_hermitian(h: &Matrix2<C64>) -> Matrix4<f64> {
    j_matrix().transpose() * riemannian_from_hermitian(h)
}

/// Hermitian matrix of a real J-invariant 2-form; the (2,0)+(0,2) part is dropped.
pub fn hermitian_from_form(phi: &Matrix4<f64>) -> Matrix2<C64> {
    hermitian_from_riemannian(&(j_matrix() * phi))
}

/// `(λ_min, λ_max)` of a 2×2 Hermitian matrix.
pub fn hermitian_eigenvalues(h: &Matrix2<C64>) -> (f64, f64) {
    let a = h[(0, 0)].re;
    let b = h[(1, 1)].re;
    let m = 0.5 * (a + b);
    let r = (0.25 * (a - b).powi(2) + h[(0, 1)].norm_sqr()).sqrt();
    (m - r, m + r)
}

pub fn hermitian_norm(h: &Matrix2<C64>) -> f64 {
    let (lo, hi) = hermitian_eigenvalues(h);
    lo.abs().max(hi.abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Matrix2<C64> {
        Matrix2::new(C64::new(1.3, 0.0), C64::new(0.2, -0.4), C64::new(0.2, 0.4), C64::new(0.8, 0.0))
    }

    #[test]
    fn riemannian_is_j_invariant() {
        let g = riemannian_from_hermitian(&sample());
        let j = j_matrix();
        assert!((j.transpose() * g * j - g).norm() < 1e-15);
        assert!((hermitian_from_riemannian(&g) - sample()).norm() < 1e-15);
    }

    #[test]
    fn flat_form_is_standard() {
        let w = form_from_hermitian(&Matrix2::identity());
        assert_eq!(w[(0, 1)], 1.0);
        assert_eq!(w[(2, 3)], 1.0);
        assert!((hermitian_from_form(&w) - Matrix2::identity()).norm() < 1e-15);
    }

    #[test]
    fn eigenvalues_match_riemannian_spectrum() {
        let (lo, hi) = hermitian_eigenvalues(&sample());
        let mut ev: Vec<f64> = riemannian_from_hermitian(&sample()).symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((ev[0] - lo).abs() < 1e-12 && (ev[1] - lo).abs() < 1e-12);
        assert!((ev[3] - hi).abs() < 1e-12);
    }
}
