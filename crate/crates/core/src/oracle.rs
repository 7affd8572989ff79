//! Independent reference implementations used only to cross-check the
//! production paths: fourth-order central finite differences on the periodic
//! grid, and a direct-DFT parabolic Monge–Ampère solver on the 2-torus.

use crate::grid::{ChartGrid, Differentiator};

pub struct FiniteDiff4 {
    grid: ChartGrid,
}

impl FiniteDiff4 {
    pub fn new(grid: &ChartGrid) -> Self {
        Self { grid: grid.clone() }
    }
}

impl Differentiator for FiniteDiff4 {
    fn grid(&self) -> &ChartGrid {
        &self.grid
    }

    fn derivative(&self, f: &[f64], axis: usize) -> Vec<f64> {
        let g = &self.grid;
        let n = g.n[axis];
        let stride = g.strides()[axis];
        let inv = 1.0 / (12.0 * g.spacing()[axis]);
        (0..g.len())
            .map(|k| {
                let i = (k / stride) % n;
                let base = k - i * stride;
                let at = |off: isize| f[base + ((i as isize + off).rem_euclid(n as isize) as usize) * stride];
                (-at(2) + 8.0 * at(1) - 8.0 * at(-1) + at(-2)) * inv
            })
            .collect()
    }
}

/// Parabolic Monge–Ampère flow `∂f/∂t = log(g₊ + ½Δf) − log g₋` on the
/// `2π × 2π` torus, sampled on `n × n` points stored as `f[i + n j]` with
/// `x = 2πi/n`, `y = 2πj/n`. The Laplacian is evaluated with a direct
/// (quadratic-cost) discrete Fourier transform with the Nyquist wavenumber of
/// each axis set to zero, the same discretization as the spectral
/// differentiator; time stepping is
/// classical RK4.
pub struct TorusMongeAmpere2 {
    n: usize,
    g_plus: f64,
    g_minus: f64,
}

impl TorusMongeAmpere2 {
    pub fn new(n: usize, g_plus: f64, g_minus: f64) -> Self {
        Self { n, g_plus, g_minus }
    }

    fn wavenumber(&self, i: usize) -> f64 {
        if 2 * i == self.n {
            0.0
        } else if 2 * i < self.n {
            i as f64
        } else {
            i as f64 - self.n as f64
        }
    }

    pub fn laplacian(&self, f: &[f64]) -> Vec<f64> {
        let n = self.n;
        let w = 2.0 * std::f64::consts::PI / n as f64;
        let mut out = vec![0.0; n * n];
        for p in 0..n {
            for q in 0..n {
                let (mut re, mut im) = (0.0, 0.0);
                for j in 0..n {
                    for i in 0..n {
                        let ph = -w * ((p * i + q * j) % n) as f64;
                        re += f[i + n * j] * ph.cos();
                        im += f[i + n * j] * ph.sin();
                    }
                }
                let (kx, ky) = (self.wavenumber(p), self.wavenumber(q));
                let s = -(kx * kx + ky * ky) / (n * n) as f64;
                for j in 0..n {
                    for i in 0..n {
                        let ph = w * ((p * i + q * j) % n) as f64;
                        out[i + n * j] += s * (re * ph.cos() - im * ph.sin());
                    }
                }
            }
        }
        out
    }

    pub fn rate(&self, f: &[f64]) -> Vec<f64> {
        self.laplacian(f).iter().map(|l| (self.g_plus + 0.5 * l).ln() - self.g_minus.ln()).collect()
    }

    pub fn step(&self, f: &[f64], dt: f64) -> Vec<f64> {
        let add = |a: &[f64], s: f64, b: &[f64]| a.iter().zip(b).map(|(x, y)| x + s * y).collect::<Vec<f64>>();
        let k1 = self.rate(f);
        let k2 = self.rate(&add(f, 0.5 * dt, &k1));
        let k3 = self.rate(&add(f, 0.5 * dt, &k2));
        let k4 = self.rate(&add(f, dt, &k3));
        (0..f.len()).map(|k| f[k] + dt / 6.0 * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k])).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn fourth_order_convergence() {
        let err = |n: usize| {
            let g = ChartGrid::new([n, 8, 8, 8], [2.0 * PI; 4]).unwrap();
            let f = g.sample(|x| (x[0].sin()).exp());
            let d = FiniteDiff4::new(&g).derivative(&f, 0);
            let exact = g.sample(|x| x[0].cos() * x[0].sin().exp());
            d.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
        };
        let ratio = err(32) / err(64);
        assert!(ratio > 12.0 && ratio < 20.0, "ratio {ratio}");
    }

    #[test]
    fn direct_laplacian_of_trig_polynomial() {
        let n = 8;
        let ma = TorusMongeAmpere2::new(n, 1.0, 1.0);
        let x = |i: usize| 2.0 * PI * i as f64 / n as f64;
        let f: Vec<f64> = (0..n * n).map(|k| (x(k % n)).sin() + (2.0 * x(k / n) + x(k % n)).cos()).collect();
        let want: Vec<f64> = (0..n * n).map(|k| -(x(k % n)).sin() - 5.0 * (2.0 * x(k / n) + x(k % n)).cos()).collect();
        let l = ma.laplacian(&f);
        let err = l.iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn ma_flow_flattens_and_keeps_constants_static() {
        let n = 8;
        let ma = TorusMongeAmpere2::new(n, 1.0, 1.0);
        let c = vec![0.3; n * n];
        assert!(ma.rate(&c).iter().all(|r| r.abs() < 1e-14));
        let f: Vec<f64> = (0..n * n).map(|k| 0.2 * (2.0 * PI * (k % n) as f64 / n as f64).cos()).collect();
        let mut g = f.clone();
        for _ in 0..100 {
            g = ma.step(&g, 0.01);
        }
        let osc = |v: &[f64]| v.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - v.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(osc(&g) < 0.7 * osc(&f));
    }
}
