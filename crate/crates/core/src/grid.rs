//! Periodic chart grids and Fourier differentiation.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};

/// A periodic box in `C^2 = R^4`, sampled uniformly along each real axis.
///
/// Axis sizes may differ so that data varying along few directions can be
/// resolved cheaply; each size must be a power of two and at least 8.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartGrid {
    pub complex_dim: usize,
    pub n: [usize; 4],
    pub periods: [f64; 4],
}

impl ChartGrid {
    pub fn new(n: [usize; 4], periods: [f64; 4]) -> Result<Self> {
        for (a, &na) in n.iter().enumerate() {
            if na < 8 || !na.is_power_of_two() {
                return Err(Error::Parameter(format!(
                    "axis {a}: points per axis must be a power of two >= 8, got {na}"
                )));
            }
        }
        if periods.iter().any(|&p| !(p > 0.0) || !p.is_finite()) {
            return Err(Error::Parameter(format!("periods must be positive, got {periods:?}")));
        }
        Ok(Self { complex_dim: 2, n, periods })
    }

    /// `n` points per axis on the `2π` torus.
    pub fn cubic(n: usize) -> Result<Self> {
        Self::new([n; 4], [2.0 * PI; 4])
    }

    pub fn len(&self) -> usize {
        self.n.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> [f64; 4] {
        std::array::from_fn(|a| self.periods[a] / self.n[a] as f64)
    }

    /// Smallest spacing; the CFL bound is stated in terms of it.
    pub fn min_spacing(&self) -> f64 {
        self.spacing().into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().iter().product()
    }

    pub fn volume(&self) -> f64 {
        self.periods.iter().product()
    }

    pub fn strides(&self) -> [usize; 4] {
        let n = self.n;
        [n[1] * n[2] * n[3], n[2] * n[3], n[3], 1]
    }

    pub fn index(&self, i: [usize; 4]) -> usize {
        let s = self.strides();
        i[0] * s[0] + i[1] * s[1] + i[2] * s[2] + i[3]
    }

    pub fn multi_index(&self, mut k: usize) -> [usize; 4] {
        let s = self.strides();
        let mut out = [0; 4];
        for a in 0..4 {
            out[a] = k / s[a];
            k %= s[a];
        }
        out
    }

    pub fn coords(&self, k: usize) -> [f64; 4] {
        let i = self.multi_index(k);
        let h = self.spacing();
        std::array::from_fn(|a| i[a] as f64 * h[a])
    }

    /// Samples `f` at every grid point.
    pub fn sample(&self, f: impl Fn([f64; 4]) -> f64) -> Vec<f64> {
        (0..self.len()).map(|k| f(self.coords(k))).collect()
    }

    /// Quadrature of a sampled function (trapezoid rule, spectrally accurate).
    pub fn integrate(&self, f: &[f64]) -> f64 {
        f.iter().sum::<f64>() * self.cell_volume()
    }
}

/// Anything that can differentiate periodic samples along a real axis.
///
/// The production implementation is [`Spectral`]; a finite-difference
/// implementation lives in [`crate::oracle`] for cross-checks.
pub trait Differentiator {
    fn grid(&self) -> &ChartGrid;

    fn derivative(&self, f: &[f64], axis: usize) -> Vec<f64>;

    fn second_derivative(&self, f: &[f64], a: usize, b: usize) -> Vec<f64> {
        self.derivative(&self.derivative(f, a), b)
    }

    fn gradient(&self, f: &[f64]) -> [Vec<f64>; 4] {
        std::array::from_fn(|a| self.derivative(f, a))
    }

    /// First derivatives and, optionally, the ten distinct second derivatives
    /// in [`sym_index`] order.
    fn jet_of(&self, f: &[f64], second: bool) -> ([Vec<f64>; 4], Option<Vec<Vec<f64>>>) {
        let d = self.gradient(f);
        let dd = second.then(|| {
            let mut out = Vec::with_capacity(10);
            for a in 0..4 {
                for b in a..4 {
                    out.push(self.derivative(&d[a], b));
                }
            }
            out
        });
        (d, dd)
    }
}

/// Position of the pair `(a, b)` among the ten unordered pairs, `a, b < 4`.
pub fn sym_index(a: usize, b: usize) -> usize {
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    [0, 4, 7, 9][a] + (b - a)
}

/// Fourier differentiation on a [`ChartGrid`]. The Nyquist mode is zeroed for
/// odd derivatives so that real data stays real.
pub struct Spectral {
    grid: ChartGrid,
    forward: [Arc<dyn Fft<f64>>; 4],
    inverse: [Arc<dyn Fft<f64>>; 4],
    wavenumbers: [Vec<f64>; 4],
}

impl Spectral {
    pub fn new(grid: &ChartGrid) -> Self {
        let mut planner = FftPlanner::new();
        let forward = std::array::from_fn(|a| planner.plan_fft_forward(grid.n[a]));
        let inverse = std::array::from_fn(|a| planner.plan_fft_inverse(grid.n[a]));
        let wavenumbers = std::array::from_fn(|a| {
            let n = grid.n[a];
            let scale = 2.0 * PI / grid.periods[a];
            (0..n)
                .map(|j| {
                    if j < n / 2 {
                        j as f64 * scale
                    } else if j == n / 2 {
                        0.0
                    } else {
                        (j as f64 - n as f64) * scale
                    }
                })
                .collect()
        });
        Self { grid: grid.clone(), forward, inverse, wavenumbers }
    }

    /// Wavenumber of index `j` along `axis`, with the Nyquist entry reported as 0.
    pub fn wavenumber(&self, axis: usize, j: usize) -> f64 {
        self.wavenumbers[axis][j]
    }

    fn transform(&self, data: &mut [Complex64], plans: &[Arc<dyn Fft<f64>>; 4]) {
        let strides = self.grid.strides();
        let total = self.grid.len();
        for a in 0..4 {
            let n = self.grid.n[a];
            let stride = strides[a];
            let mut line = vec![Complex64::new(0.0, 0.0); n];
            let mut scratch = vec![Complex64::new(0.0, 0.0); plans[a].get_inplace_scratch_len()];
            if stride == 1 {
                for chunk in data.chunks_exact_mut(n) {
                    plans[a].process_with_scratch(chunk, &mut scratch);
                }
                continue;
            }
            let block = stride * n;
            for base in (0..total).step_by(block) {
                for off in 0..stride {
                    let start = base + off;
                    for j in 0..n {
                        line[j] = data[start + j * stride];
                    }
                    plans[a].process_with_scratch(&mut line, &mut scratch);
                    for j in 0..n {
                        data[start + j * stride] = line[j];
                    }
                }
            }
        }
    }

    pub fn forward(&self, f: &[f64]) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = f.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.transform(&mut data, &self.forward);
        data
    }

    /// Inverse transform, returning the real part (normalized).
    pub fn inverse_real(&self, mut spec: Vec<Complex64>) -> Vec<f64> {
        self.transform(&mut spec, &self.inverse);
        let norm = 1.0 / self.grid.len() as f64;
        spec.into_iter().map(|z| z.re * norm).collect()
    }

    /// Inverse transform of complex data (normalized).
    pub fn inverse_complex(&self, mut spec: Vec<Complex64>) -> Vec<Complex64> {
        self.transform(&mut spec, &self.inverse);
        let norm = 1.0 / self.grid.len() as f64;
        spec.into_iter().map(|z| z * norm).collect()
    }

    /// Multiplies spectral data by `i k_a` for each axis in `axes` (in place).
    pub fn apply_derivatives(&self, spec: &mut [Complex64], axes: &[usize]) {
        if axes.is_empty() {
            return;
        }
        let n = self.grid.n;
        let mut k = 0;
        for i0 in 0..n[0] {
            for i1 in 0..n[1] {
                for i2 in 0..n[2] {
                    for i3 in 0..n[3] {
                        let idx = [i0, i1, i2, i3];
                        let mut m = Complex64::new(1.0, 0.0);
                        for &a in axes {
                            m *= Complex64::new(0.0, self.wavenumbers[a][idx[a]]);
                        }
                        spec[k] *= m;
                        k += 1;
                    }
                }
            }
        }
    }

    /// Derivative of already transformed data along `axes`.
    pub fn derivative_of_spectrum(&self, spec: &[Complex64], axes: &[usize]) -> Vec<f64> {
        let mut s = spec.to_vec();
        self.apply_derivatives(&mut s, axes);
        self.inverse_real(s)
    }

    /// Derivatives of one real field's spectrum along each axis list, packing
    /// two real inverse transforms into one complex transform.
    pub fn derivatives_of_spectrum(&self, spec: &[Complex64], lists: &[&[usize]]) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(lists.len());
        let norm = 1.0 / self.grid.len() as f64;
        for pair in lists.chunks(2) {
            if pair.len() == 1 {
                out.push(self.derivative_of_spectrum(spec, pair[0]));
                continue;
            }
            let mut s1 = spec.to_vec();
            self.apply_derivatives(&mut s1, pair[0]);
            let mut s2 = spec.to_vec();
            self.apply_derivatives(&mut s2, pair[1]);
            // both multipliers keep Hermitian symmetry, so the two results are real
            for (x, y) in s1.iter_mut().zip(&s2) {
                *x += Complex64::new(-y.im, y.re);
            }
            self.transform(&mut s1, &self.inverse);
            out.push(s1.iter().map(|z| z.re * norm).collect());
            out.push(s1.iter().map(|z| z.im * norm).collect());
        }
        out
    }

    /// Fraction of spectral energy in modes whose index is in the upper half of
    /// the resolved band along some axis. Used as a smoothness proxy.
    pub fn high_mode_fraction(&self, f: &[f64]) -> f64 {
        let spec = self.forward(f);
        let n = self.grid.n;
        let (mut hi, mut tot) = (0.0, 0.0);
        for (k, z) in spec.iter().enumerate() {
            let idx = self.grid.multi_index(k);
            let e = z.norm_sqr();
            tot += e;
            let high = (0..4).any(|a| {
                let j = idx[a];
                let m = if j <= n[a] / 2 { j } else { n[a] - j };
                m >= n[a] / 4
            });
            if high {
                hi += e;
            }
        }
        if tot == 0.0 {
            0.0
        } else {
            hi / tot
        }
    }
}

impl Differentiator for Spectral {
    fn grid(&self) -> &ChartGrid {
        &self.grid
    }

    fn derivative(&self, f: &[f64], axis: usize) -> Vec<f64> {
        let spec = self.forward(f);
        self.derivative_of_spectrum(&spec, &[axis])
    }

    fn second_derivative(&self, f: &[f64], a: usize, b: usize) -> Vec<f64> {
        let spec = self.forward(f);
        self.derivative_of_spectrum(&spec, &[a, b])
    }

    fn gradient(&self, f: &[f64]) -> [Vec<f64>; 4] {
        let spec = self.forward(f);
        let mut d = self.derivatives_of_spectrum(&spec, &[&[0], &[1], &[2], &[3]]).into_iter();
        std::array::from_fn(|_| d.next().unwrap())
    }

    fn jet_of(&self, f: &[f64], second: bool) -> ([Vec<f64>; 4], Option<Vec<Vec<f64>>>) {
        let spec = self.forward(f);
        let mut lists: Vec<Vec<usize>> = (0..4).map(|a| vec![a]).collect();
        if second {
            for a in 0..4 {
                for b in a..4 {
                    lists.push(vec![a, b]);
                }
            }
        }
        let refs: Vec<&[usize]> = lists.iter().map(|v| v.as_slice()).collect();
        let mut all = self.derivatives_of_spectrum(&spec, &refs).into_iter();
        let d = std::array::from_fn(|_| all.next().unwrap());
        let dd = second.then(|| all.collect());
        (d, dd)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_sizes() {
        assert!(ChartGrid::new([8, 8, 8, 6], [1.0; 4]).is_err());
        assert!(ChartGrid::new([4, 8, 8, 8], [1.0; 4]).is_err());
        assert!(ChartGrid::new([8; 4], [1.0, 1.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn index_roundtrip() {
        let g = ChartGrid::new([8, 16, 8, 32], [1.0; 4]).unwrap();
        for k in [0, 1, 77, g.len() - 1] {
            assert_eq!(g.index(g.multi_index(k)), k);
        }
    }

    #[test]
    fn differentiates_trig_exactly() {
        let g = ChartGrid::new([8, 16, 8, 8], [2.0 * PI, 2.0 * PI, 4.0, 2.0 * PI]).unwrap();
        let s = Spectral::new(&g);
        let k2 = 2.0 * PI / 4.0;
        let f = g.sample(|x| (2.0 * x[1]).sin() * (k2 * x[2]).cos() + x[0].cos());
        let (d, dd) = s.jet_of(&f, true);
        let dd = dd.unwrap();
        let exact1 = g.sample(|x| 2.0 * (2.0 * x[1]).cos() * (k2 * x[2]).cos());
        let exact12 = g.sample(|x| -2.0 * k2 * (2.0 * x[1]).cos() * (k2 * x[2]).sin());
        let exact00 = g.sample(|x| -x[0].cos());
        for k in 0..g.len() {
            assert!((d[1][k] - exact1[k]).abs() < 1e-12);
            assert!((dd[sym_index(2, 1)][k] - exact12[k]).abs() < 1e-12);
            assert!((dd[sym_index(0, 0)][k] - exact00[k]).abs() < 1e-12);
            assert!(d[3][k].abs() < 1e-12);
        }
    }

    #[test]
    fn integrates_constants() {
        let g = ChartGrid::cubic(8).unwrap();
        let one = vec![1.0; g.len()];
        assert!((g.integrate(&one) - (2.0 * PI).powi(4)).abs() < 1e-9);
    }
}
