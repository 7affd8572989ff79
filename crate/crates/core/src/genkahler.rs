//! Generalized Kähler diagnostics: the commuting-case twisted Monge–Ampère
//! flow on `T²₊ × T²₋`, Poisson structure and angle of a triple `(g, I, J)`,
//! and Hamiltonian deformations of `J` in the nondegenerate case.

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use crate::chart::{chern_torsion, compress3, flow_rate};
use crate::conventions::{j_matrix, Conventions};
use crate::error::{Error, Result};
use crate::field::HermitianField;
use crate::geometry::{exterior_of_two_form, ZERO3};
use crate::grid::{sym_index, ChartGrid, Differentiator};

/// Potential `f` on `T²₊ × T²₋` (coordinates `z₊ = x0 + i x1`,
/// `z₋ = x2 + i x3`) with a flat split background.
#[derive(Clone, Debug)]
pub struct SplitPotential {
    pub grid: ChartGrid,
    pub f: Vec<f64>,
    /// Background `(g₊, g₋)` entries of `h`.
    pub background: (f64, f64),
}

impl SplitPotential {
    pub fn zero(grid: &ChartGrid) -> Self {
        Self { grid: grid.clone(), f: vec![0.0; grid.len()], background: (1.0, 1.0) }
    }

    pub fn from_fn(grid: &ChartGrid, f: impl Fn([f64; 4]) -> f64) -> Self {
        Self { grid: grid.clone(), f: grid.sample(f), background: (1.0, 1.0) }
    }

    /// Diagonal entries `h₊ = g₊ + 2∂₊∂̄₊f`, `h₋ = g₋ − 2∂₋∂̄₋f` of the metric
    /// of `ω_I = ω_bg + i(∂₊∂̄₊ − ∂₋∂̄₋) f`.
    pub fn split_metric(&self, diff: &dyn Differentiator) -> (Vec<f64>, Vec<f64>) {
        let (_, dd) = diff.jet_of(&self.f, true);
        let dd = dd.unwrap();
        let (gp, gm) = self.background;
        let n = self.f.len();
        let plus = (0..n).map(|k| gp + 0.5 * (dd[sym_index(0, 0)][k] + dd[sym_index(1, 1)][k])).collect();
        let minus = (0..n).map(|k| gm - 0.5 * (dd[sym_index(2, 2)][k] + dd[sym_index(3, 3)][k])).collect();
        (plus, minus)
    }

    pub fn metric(&self, diff: &dyn Differentiator) -> HermitianField {
        let (p, m) = self.split_metric(diff);
        let mut w = HermitianField::zeros(&self.grid);
        w.u[0] = p;
        w.u[1] = m;
        w
    }
}

fn degenerate(factor: &str, values: &[f64]) -> Option<Error> {
    let (k, &v) = values.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1))?;
    (!(v > 0.0)).then(|| Error::Singularity { time: f64::NAN, reason: format!("{factor} factor lost positivity at point {k} (value {v:e})") })
}

/// `log det h₊ − log det h₋`.
pub fn twisted_ma_rhs(s: &SplitPotential, diff: &dyn Differentiator) -> Result<Vec<f64>> {
    let (p, m) = s.split_metric(diff);
    if let Some(e) = degenerate("plus", &p).or_else(|| degenerate("minus", &m)) {
        return Err(e);
    }
    Ok(p.iter().zip(&m).map(|(a, b)| a.ln() - b.ln()).collect())
}

/// Metric rate induced by a scalar rate `u`: `(2∂₊∂̄₊u, −2∂₋∂̄₋u)`.
pub fn induced_metric_rate(u: &[f64], grid: &ChartGrid, diff: &dyn Differentiator) -> HermitianField {
    let s = SplitPotential { grid: grid.clone(), f: u.to_vec(), background: (0.0, 0.0) };
    s.metric(diff)
}

/// Sup-distance between the tensor flow rate of the induced metric and the
/// scalar-induced rate.
pub fn tensor_consistency(s: &SplitPotential, diff: &dyn Differentiator) -> Result<f64> {
    let u = twisted_ma_rhs(s, diff)?;
    let scalar = induced_metric_rate(&u, &s.grid, diff);
    let tensor = flow_rate(&s.metric(diff), diff, &Conventions::default());
    Ok(tensor.sup_distance(&scalar))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TwistedSample {
    pub t: f64,
    /// `sup |h₊ − g₊| + sup |h₋ − g₋|`.
    pub metric_deviation: f64,
    /// `max f − min f`.
    pub oscillation: f64,
    /// Tensor-vs-scalar rate distance, when checked at this sample.
    pub consistency: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct TwistedRun {
    pub samples: Vec<TwistedSample>,
    pub potential: SplitPotential,
}

impl TwistedRun {
    pub fn max_consistency(&self) -> f64 {
        self.samples.iter().filter_map(|s| s.consistency).fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct TwistedOptions {
    pub dt: f64,
    pub sample_every: usize,
    /// Run the tensor consistency check on every `check_every`-th sample; 0 disables it.
    pub check_every: usize,
}

fn sample(s: &SplitPotential, t: f64, check: bool, diff: &dyn Differentiator) -> Result<TwistedSample> {
    let (p, m) = s.split_metric(diff);
    let dev = |v: &[f64], g: f64| v.iter().map(|x| (x - g).abs()).fold(0.0, f64::max);
    let (lo, hi) = s.f.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    Ok(TwistedSample {
        t,
        metric_deviation: dev(&p, s.background.0) + dev(&m, s.background.1),
        oscillation: hi - lo,
        consistency: if check { Some(tensor_consistency(s, diff)?) } else { None },
    })
}

/// One RK4 step of `∂f/∂t = log det h₊ − log det h₋`.
pub fn twisted_step(s: &SplitPotential, dt: f64, diff: &dyn Differentiator) -> Result<SplitPotential> {
    let at = |k: &[f64], h: f64| SplitPotential { f: s.f.iter().zip(k).map(|(a, b)| a + h * b).collect(), ..s.clone() };
    let k1 = twisted_ma_rhs(s, diff)?;
    let k2 = twisted_ma_rhs(&at(&k1, 0.5 * dt), diff)?;
    let k3 = twisted_ma_rhs(&at(&k2, 0.5 * dt), diff)?;
    let k4 = twisted_ma_rhs(&at(&k3, dt), diff)?;
    let mut out = s.clone();
    for k in 0..out.f.len() {
        out.f[k] += dt / 6.0 * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k]);
    }
    Ok(out)
}

/// RK4 integration of `∂f/∂t = log det h₊ − log det h₋`.
pub fn run_twisted_flow(s0: &SplitPotential, t_end: f64, opts: &TwistedOptions, diff: &dyn Differentiator) -> Result<TwistedRun> {
    if !(opts.dt > 0.0) || !(t_end >= 0.0) || opts.sample_every == 0 {
        return Err(Error::Parameter("run_twisted_flow: need dt > 0, t_end >= 0, sample_every >= 1".into()));
    }
    let steps = (t_end / opts.dt).round() as usize;
    let with_time = |e: Error, t: f64| match e {
        Error::Singularity { reason, .. } => Error::Singularity { time: t, reason },
        e => e,
    };
    let mut s = s0.clone();
    let mut samples = vec![sample(&s, 0.0, opts.check_every > 0, diff).map_err(|e| with_time(e, 0.0))?];
    for step in 1..=steps {
        let t = step as f64 * opts.dt;
        s = twisted_step(&s, opts.dt, diff).map_err(|e| with_time(e, t))?;
        if step % opts.sample_every == 0 || step == steps {
            let n = samples.len();
            let check = opts.check_every > 0 && n % opts.check_every == 0;
            samples.push(sample(&s, t, check, diff).map_err(|e| with_time(e, t))?);
        }
    }
    Ok(TwistedRun { samples, potential: s })
}

/// Generalized Kähler triple `(g, I, J)` as pointwise matrices; `I`, `J`
/// act on column vectors.
#[derive(Clone, Debug)]
pub struct GKTriple {
    pub grid: ChartGrid,
    pub g: Vec<Matrix4<f64>>,
    pub i: Vec<Matrix4<f64>>,
    pub j: Vec<Matrix4<f64>>,
}

/// Complex structure anticommuting with the standard one, `J e0 = e2`, `J e1 = −e3`.
pub fn quaternionic_partner() -> Matrix4<f64> {
    let mut j = Matrix4::zeros();
    j[(2, 0)] = 1.0;
    j[(0, 2)] = -1.0;
    j[(3, 1)] = -1.0;
    j[(1, 3)] = 1.0;
    j
}

/// The standard structure on `T²₊` and its conjugate on `T²₋`.
pub fn split_partner() -> Matrix4<f64> {
    let mut j = j_matrix();
    j[(3, 2)] = -1.0;
    j[(2, 3)] = 1.0;
    j
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GKResiduals {
    /// `max |I² + 1|, |J² + 1|`.
    pub square: f64,
    /// `max |g − Iᵀ g I|, |g − Jᵀ g J|`.
    pub hermitian: f64,
    /// `sup |d^c_I ω_I + d^c_J ω_J|`.
    pub compatibility: f64,
}

impl GKResiduals {
    pub fn max(&self) -> f64 {
        self.square.max(self.hermitian).max(self.compatibility)
    }
}

impl GKTriple {
    fn constant(grid: &ChartGrid, g: Matrix4<f64>, i: Matrix4<f64>, j: Matrix4<f64>) -> Self {
        let n = grid.len();
        Self { grid: grid.clone(), g: vec![g; n], i: vec![i; n], j: vec![j; n] }
    }

    /// Flat Kähler metric with `I = J`.
    pub fn kahler_flat(grid: &ChartGrid) -> Self {
        Self::constant(grid, Matrix4::identity(), j_matrix(), j_matrix())
    }

    /// Flat hyperkähler pair.
    pub fn hyperkahler_flat(grid: &ChartGrid) -> Self {
        Self::constant(grid, Matrix4::identity(), j_matrix(), quaternionic_partner())
    }

    /// Commuting triple of a split potential.
    pub fn commuting(s: &SplitPotential, diff: &dyn Differentiator) -> Self {
        let w = s.metric(diff);
        let n = w.len();
        Self { grid: s.grid.clone(), g: (0..n).map(|k| w.riemannian(k)).collect(), i: vec![j_matrix(); n], j: vec![split_partner(); n] }
    }

    pub fn residuals(&self, diff: &dyn Differentiator) -> GKResiduals {
        let id = Matrix4::<f64>::identity();
        let mut square: f64 = 0.0;
        let mut hermitian: f64 = 0.0;
        for k in 0..self.g.len() {
            let (g, i, j) = (&self.g[k], &self.i[k], &self.j[k]);
            square = square.max((i * i + id).abs().max()).max((j * j + id).abs().max());
            hermitian = hermitian.max((g - i.transpose() * g * i).abs().max()).max((g - j.transpose() * g * j).abs().max());
        }
        let conv = Conventions::default();
        let hi = torsion_of(&self.g, &self.i, diff, &conv);
        let hj = torsion_of(&self.g, &self.j, diff, &conv);
        let compatibility = hi.iter().zip(&hj).map(|(a, b)| (0..4).map(|c| (a[c] + b[c]).abs()).fold(0.0, f64::max)).fold(0.0, f64::max);
        GKResiduals { square, hermitian, compatibility }
    }
}

/// Component gradients of a matrix field: `out[k][a] = ∂_a M(k)`.
pub fn matrix_gradient(m: &[Matrix4<f64>], diff: &dyn Differentiator) -> Vec<[Matrix4<f64>; 4]> {
    let mut out = vec![[Matrix4::zeros(); 4]; m.len()];
    for r in 0..4 {
        for c in 0..4 {
            let comp: Vec<f64> = m.iter().map(|x| x[(r, c)]).collect();
            if comp.iter().all(|&x| x == comp[0]) {
                continue;
            }
            let d = diff.gradient(&comp);
            for (k, o) in out.iter_mut().enumerate() {
                for a in 0..4 {
                    o[a][(r, c)] = d[a][k];
                }
            }
        }
    }
    out
}

/// `d^c_I ω_I = −dω(I·, I·, I·)` per point, compressed by [`compress3`].
pub fn torsion_of(g: &[Matrix4<f64>], i: &[Matrix4<f64>], diff: &dyn Differentiator, conv: &Conventions) -> Vec<[f64; 4]> {
    let omega: Vec<Matrix4<f64>> = g.iter().zip(i).map(|(g, i)| i.transpose() * g).collect();
    let dw = matrix_gradient(&omega, diff);
    dw.iter()
        .zip(i)
        .map(|(dw, i)| {
            let t = exterior_of_two_form(dw);
            let mut h = ZERO3;
            for a in 0..4 {
                for b in 0..4 {
                    for c in 0..4 {
                        let mut v = 0.0;
                        for d in 0..4 {
                            for e in 0..4 {
                                for f in 0..4 {
                                    v += t[d][e][f] * i[(d, a)] * i[(e, b)] * i[(f, c)];
                                }
                            }
                        }
                        h[a][b][c] = -conv.dc_sign * v;
                    }
                }
            }
            compress3(&h)
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct PoissonReport {
    /// `σ = ½ [I, J] g⁻¹` per point (upper indices).
    pub sigma: Vec<Matrix4<f64>>,
    /// `p = ¼ tr(IJ)` per point.
    pub p: Vec<f64>,
    /// Points where `|p| = 1` to within the tolerance.
    pub degenerate: Vec<usize>,
    /// Numerical rank of `σ` per point.
    pub rank: Vec<usize>,
}

pub const DEGENERACY_TOL: f64 = 1e-9;

pub fn poisson_sigma(t: &GKTriple) -> Result<PoissonReport> {
    let n = t.g.len();
    let mut out = PoissonReport { sigma: Vec::with_capacity(n), p: Vec::with_capacity(n), degenerate: vec![], rank: Vec::with_capacity(n) };
    for k in 0..n {
        let ginv = t.g[k].try_inverse().ok_or(Error::Degenerate { index: k, min_eigenvalue: 0.0 })?;
        let (i, j) = (&t.i[k], &t.j[k]);
        let sigma = 0.5 * (i * j - j * i) * ginv;
        let p = 0.25 * (i * j).trace();
        if (p.abs() - 1.0).abs() <= DEGENERACY_TOL {
            out.degenerate.push(k);
        }
        let sv = sigma.singular_values();
        let scale = 1.0 + sv.max();
        out.rank.push(sv.iter().filter(|&&x| x > 1e-9 * scale).count());
        out.sigma.push(sigma);
        out.p.push(p);
    }
    Ok(out)
}

/// Periodic cubic Lagrange interpolation of several fields at one point.
fn interpolate(grid: &ChartGrid, fields: &[Vec<f64>], x: [f64; 4], out: &mut [f64]) {
    let h = grid.spacing();
    let mut idx = [[0usize; 4]; 4];
    let mut w = [[0.0; 4]; 4];
    for a in 0..4 {
        let s = x[a] / h[a];
        let i0 = s.floor();
        let t = s - i0;
        let n = grid.n[a] as i64;
        for (m, off) in (-1i64..=2).enumerate() {
            idx[a][m] = (i0 as i64 + off).rem_euclid(n) as usize;
        }
        w[a] = [-t * (t - 1.0) * (t - 2.0) / 6.0, (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0, -(t + 1.0) * t * (t - 2.0) / 2.0, (t + 1.0) * t * (t - 1.0) / 6.0];
    }
    out.iter_mut().for_each(|o| *o = 0.0);
    for m0 in 0..4 {
        for m1 in 0..4 {
            for m2 in 0..4 {
                for m3 in 0..4 {
                    let wt = w[0][m0] * w[1][m1] * w[2][m2] * w[3][m3];
                    let k = grid.index([idx[0][m0], idx[1][m1], idx[2][m2], idx[3][m3]]);
                    for (o, f) in out.iter_mut().zip(fields) {
                        *o += wt * f[k];
                    }
                }
            }
        }
    }
}

/// One Euler step of the Hamiltonian flow of `X = σ df`, pulling `J` back
/// semi-Lagrangianly and rebuilding `g = ½ σ⁻¹ [I, J]` with `σ` frozen.
pub fn joyce_deform(t: &GKTriple, f: &[f64], dt: f64, diff: &dyn Differentiator) -> Result<GKTriple> {
    let report = poisson_sigma(t)?;
    let df = diff.gradient(f);
    let n = t.g.len();
    let support: Vec<bool> = (0..n).map(|k| (0..4).any(|a| df[a][k].abs() > 1e-14)).collect();
    let p_max = (0..n).filter(|&k| support[k]).map(|k| report.p[k].abs()).fold(0.0, f64::max);
    if p_max >= 1.0 - 1e-6 {
        return Err(Error::TypeChange { p_max });
    }
    let x: Vec<[f64; 4]> = (0..n).map(|k| std::array::from_fn(|a| (0..4).map(|b| report.sigma[k][(a, b)] * df[b][k]).sum())).collect();
    let xcomp: [Vec<f64>; 4] = std::array::from_fn(|a| x.iter().map(|v| v[a]).collect());
    let dx: [[Vec<f64>; 4]; 4] = std::array::from_fn(|a| diff.gradient(&xcomp[a]));
    let jcomp: Vec<Vec<f64>> = (0..16).map(|rc| t.j.iter().map(|m| m[(rc / 4, rc % 4)]).collect()).collect();
    let mut out = t.clone();
    let mut buf = vec![0.0; 16];
    for k in 0..n {
        if !support[k] {
            continue;
        }
        let c = t.grid.coords(k);
        interpolate(&t.grid, &jcomp, std::array::from_fn(|a| c[a] + dt * x[k][a]), &mut buf);
        let j_there = Matrix4::from_fn(|r, cc| buf[r * 4 + cc]);
        let dphi = Matrix4::identity() + dt * Matrix4::from_fn(|a, b| dx[a][b][k]);
        let inv = dphi.try_inverse().ok_or_else(|| Error::Parameter("deformation step too large".into()))?;
        let j_new = inv * j_there * dphi;
        let omega = report.sigma[k].try_inverse().ok_or(Error::TypeChange { p_max: report.p[k].abs() })?;
        let g = 0.5 * omega * (t.i[k] * j_new - j_new * t.i[k]);
        out.j[k] = j_new;
        out.g[k] = 0.5 * (g + g.transpose());
    }
    Ok(out)
}

/// `(L_X A)^a_b = X^c ∂_c A^a_b − A^c_b ∂_c X^a + A^a_c ∂_b X^c`.
pub fn lie_derivative_endomorphism(a: &[Matrix4<f64>], x: &[[f64; 4]], diff: &dyn Differentiator) -> Vec<Matrix4<f64>> {
    let da = matrix_gradient(a, diff);
    let xcomp: [Vec<f64>; 4] = std::array::from_fn(|c| x.iter().map(|v| v[c]).collect());
    let dx: [[Vec<f64>; 4]; 4] = std::array::from_fn(|c| diff.gradient(&xcomp[c]));
    (0..a.len())
        .map(|k| {
            let grad_x = Matrix4::from_fn(|r, c| dx[r][c][k]);
            let transport: Matrix4<f64> = (0..4).map(|c| da[k][c] * x[k][c]).sum();
            transport - grad_x * a[k] + a[k] * grad_x
        })
        .collect()
}

/// `sup |N_A|` with `N^a_{bc} = A^d_b ∂_d A^a_c − A^d_c ∂_d A^a_b − A^a_d(∂_b A^d_c − ∂_c A^d_b)`.
pub fn nijenhuis_residual(a: &[Matrix4<f64>], diff: &dyn Differentiator) -> f64 {
    let da = matrix_gradient(a, diff);
    let mut sup: f64 = 0.0;
    for k in 0..a.len() {
        let m = &a[k];
        for r in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    let mut v = 0.0;
                    for d in 0..4 {
                        v += m[(d, b)] * da[k][d][(r, c)] - m[(d, c)] * da[k][d][(r, b)] - m[(r, d)] * (da[k][b][(d, c)] - da[k][c][(d, b)]);
                    }
                    sup = sup.max(v.abs());
                }
            }
        }
    }
    sup
}

/// Lee vector field `θ♯` of `(g, I)` for a Hermitian field in the standard structure.
pub fn lee_vector(w: &HermitianField, diff: &dyn Differentiator) -> Result<Vec<[f64; 4]>> {
    let tf = chern_torsion(w, diff, &Conventions::default())?;
    Ok((0..w.len())
        .map(|k| {
            let ginv = w.riemannian(k).try_inverse().expect("validated metric");
            std::array::from_fn(|a| (0..4).map(|b| ginv[(a, b)] * tf.theta[k][b]).sum())
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Spectral;

    #[test]
    fn zero_potential_is_static() {
        let g = ChartGrid::cubic(8).unwrap();
        let r = twisted_ma_rhs(&SplitPotential::zero(&g), &Spectral::new(&g)).unwrap();
        assert!(r.iter().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn equal_determinants_give_zero_rhs() {
        // on a torus Δ₊f = −Δ₋f forces f constant
        let g = ChartGrid::cubic(8).unwrap();
        let s = SplitPotential { background: (0.7, 0.7), ..SplitPotential::from_fn(&g, |_| 2.5) };
        let r = twisted_ma_rhs(&s, &Spectral::new(&g)).unwrap();
        assert!(r.iter().all(|x| x.abs() < 1e-13));
    }

    #[test]
    fn tensor_flow_matches_scalar_rate() {
        let g = ChartGrid::cubic(16).unwrap();
        let s = SplitPotential::from_fn(&g, |x| 0.05 * x[0].sin() * x[2].cos() + 0.03 * (x[1] + x[3]).cos());
        let d = tensor_consistency(&s, &Spectral::new(&g)).unwrap();
        assert!(d < 1e-7, "{d}");
    }

    #[test]
    fn small_potential_decays() {
        let g = ChartGrid::cubic(8).unwrap();
        let diff = Spectral::new(&g);
        let s = SplitPotential::from_fn(&g, |x| 0.05 * x[0].sin() * x[2].cos() + 0.03 * (x[1] - x[3]).cos());
        let run = run_twisted_flow(&s, 4.0, &TwistedOptions { dt: 0.02, sample_every: 20, check_every: 5 }, &diff).unwrap();
        let dev: Vec<f64> = run.samples.iter().map(|x| x.metric_deviation).collect();
        assert!(dev.windows(2).all(|w| w[1] < w[0]), "{dev:?}");
        // the slowest modes decay like e^{-t}
        assert!(*dev.last().unwrap() < 0.03 * dev[0], "{dev:?}");
        assert!(run.max_consistency() < 1e-6);
    }

    #[test]
    fn kahler_pair_has_no_poisson_structure() {
        let g = ChartGrid::cubic(8).unwrap();
        let r = poisson_sigma(&GKTriple::kahler_flat(&g)).unwrap();
        assert!(r.sigma.iter().all(|s| s.abs().max() == 0.0));
        assert!(r.p.iter().all(|&p| (p + 1.0).abs() < 1e-15));
        assert_eq!(r.degenerate.len(), g.len());
    }

    #[test]
    fn hyperkahler_pair_is_nondegenerate() {
        let g = ChartGrid::cubic(8).unwrap();
        let t = GKTriple::hyperkahler_flat(&g);
        let r = poisson_sigma(&t).unwrap();
        let k = t.i[0] * t.j[0];
        assert!((r.sigma[0] - k).abs().max() < 1e-15);
        assert!(r.p.iter().all(|p| p.abs() < 1e-15) && r.rank.iter().all(|&x| x == 4));
        assert!(t.residuals(&Spectral::new(&g)).max() < 1e-15);
    }

    #[test]
    fn commuting_triple_is_generalized_kahler() {
        let g = ChartGrid::cubic(16).unwrap();
        let diff = Spectral::new(&g);
        let s = SplitPotential::from_fn(&g, |x| 0.1 * x[0].sin() * x[2].cos() + 0.05 * (x[1] - x[3]).cos());
        let t = GKTriple::commuting(&s, &diff);
        let res = t.residuals(&diff);
        assert!(res.max() < 1e-12, "{res:?}");
        let r = poisson_sigma(&t).unwrap();
        assert!(r.p.iter().all(|p| p.abs() < 1e-14) && r.rank.iter().all(|&x| x == 0));
    }

    #[test]
    fn joyce_step_keeps_compatibility() {
        let g = ChartGrid::cubic(16).unwrap();
        let diff = Spectral::new(&g);
        let t = GKTriple::hyperkahler_flat(&g);
        let f = g.sample(|x| 0.1 * x[1].sin());
        let out = joyce_deform(&t, &f, 1e-3, &diff).unwrap();
        let res = out.residuals(&diff);
        assert!(res.compatibility < 1e-6, "{res:?}");
        let r = poisson_sigma(&out).unwrap();
        assert!(r.p.iter().all(|p| p.abs() < 1.0));
        assert!(r.rank.iter().all(|&x| x == 0 || x == 4));
    }

    #[test]
    fn joyce_constant_is_identity_and_reversible() {
        let g = ChartGrid::cubic(16).unwrap();
        let diff = Spectral::new(&g);
        let t = GKTriple::hyperkahler_flat(&g);
        let same = joyce_deform(&t, &vec![3.0; g.len()], 0.1, &diff).unwrap();
        assert!(same.j.iter().zip(&t.j).all(|(a, b)| a == b));
        let back = |dt: f64| {
            let f = g.sample(|x| 0.1 * x[1].sin() + 0.05 * x[2].cos());
            let minus: Vec<f64> = f.iter().map(|x| -x).collect();
            let one = joyce_deform(&t, &f, dt, &diff).unwrap();
            let two = joyce_deform(&one, &minus, dt, &diff).unwrap();
            two.j.iter().zip(&t.j).map(|(a, b)| (a - b).abs().max()).fold(0.0, f64::max)
        };
        let (e1, e2) = (back(0.02), back(0.01));
        assert!(e2 < 0.3 * e1, "{e1} {e2}");
    }

    #[test]
    fn type_change_is_rejected() {
        let g = ChartGrid::cubic(8).unwrap();
        let f = g.sample(|x| x[0].sin());
        assert!(matches!(joyce_deform(&GKTriple::kahler_flat(&g), &f, 0.1, &Spectral::new(&g)), Err(Error::TypeChange { .. })));
    }

    #[test]
    fn lee_transport_stays_integrable() {
        let g = ChartGrid::cubic(16).unwrap();
        let diff = Spectral::new(&g);
        let s = SplitPotential::from_fn(&g, |x| 0.1 * x[0].sin() * x[2].cos() + 0.05 * (x[1] - x[3]).cos());
        let w = s.metric(&diff);
        let theta = lee_vector(&w, &diff).unwrap();
        let i = vec![j_matrix(); g.len()];
        let l = lie_derivative_endomorphism(&i, &theta, &diff);
        assert!(l.iter().any(|m| m.abs().max() > 1e-4));
        let n = |dt: f64| nijenhuis_residual(&i.iter().zip(&l).map(|(a, b)| a + dt * b).collect::<Vec<_>>(), &diff);
        let (a, b) = (n(1e-2), n(5e-3));
        assert!(b < 0.3 * a, "{a} {b}");
    }

    #[test]
    fn twisted_step_is_fourth_order() {
        let g = ChartGrid::cubic(8).unwrap();
        let s = Spectral::new(&g);
        let s0 = SplitPotential::from_fn(&g, |x| 0.15 * (x[0].sin() + (x[1] - x[2]).cos() - x[3].sin()));
        let err = |dt: f64| {
            let one = twisted_step(&s0, dt, &s).unwrap();
            let half = twisted_step(&twisted_step(&s0, 0.5 * dt, &s).unwrap(), 0.5 * dt, &s).unwrap();
            one.f.iter().zip(&half.f).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
        };
        let (a, b) = (err(0.1), err(0.05));
        assert!(a > 0.0 && a / b > 20.0, "{a} {b}");
    }
}
