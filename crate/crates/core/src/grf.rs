//! Generalized Ricci flow on torus grids: rates, functionals, the Schrödinger
//! ground state, the conjugate heat equation and soliton residuals.
//!
//! Time is the generalized Ricci flow time, `∂g/∂t = −2Rc + ½H²`. Pluriclosed
//! flow as implemented in [`crate::chart`] runs at half this speed, so the gauge
//! check compares twice the pluriclosed rate with the right-hand side below.

use nalgebra::Matrix4;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::chart::{self, MetricJet};
use crate::conventions::Conventions;
use crate::error::{Error, Result};
use crate::field::{riemannian_from_hermitian, HermitianField};
use crate::geometry;
use crate::grid::{ChartGrid, Differentiator, Spectral};
use crate::riemann::{self, JetSource, SymField, SymJet, ThreeForm};

/// `(g, H, f)` on a torus grid.
#[derive(Clone, Debug)]
pub struct GRFState {
    pub g: SymField,
    pub h: ThreeForm,
    pub f: Vec<f64>,
}

impl GRFState {
    pub fn grid(&self) -> &ChartGrid {
        &self.g.grid
    }

    pub fn validate(&self) -> Result<()> {
        let l = self.g.min_eigenvalue();
        if !(l > 0.0) {
            return Err(Error::Degenerate { index: 0, min_eigenvalue: l });
        }
        Ok(())
    }
}

/// Pointwise curvature data shared by the functionals.
pub struct Curvature {
    pub rc: Vec<Matrix4<f64>>,
    pub h2: Vec<Matrix4<f64>>,
    pub h_norm2: Vec<f64>,
    pub scalar: Vec<f64>,
    pub vol: Vec<f64>,
    pub ginv: Vec<Matrix4<f64>>,
}

pub fn curvature(jet: &dyn JetSource, h: &dyn Fn(usize) -> geometry::T3) -> Curvature {
    let n = jet.len();
    let mut out = Curvature { rc: Vec::with_capacity(n), h2: Vec::with_capacity(n), h_norm2: Vec::with_capacity(n), scalar: Vec::with_capacity(n), vol: Vec::with_capacity(n), ginv: Vec::with_capacity(n) };
    for k in 0..n {
        let p = jet.point(k);
        let gi = p.g.try_inverse().expect("positive metric");
        let rc = geometry::ricci(&p, &gi);
        let (h2, hn) = geometry::h_squared(&h(k), &gi);
        out.scalar.push((gi * rc).trace());
        out.rc.push(rc);
        out.h2.push(h2);
        out.h_norm2.push(hn);
        out.vol.push(p.g.determinant().sqrt());
        out.ginv.push(gi);
    }
    out
}

/// `(−2Rc + ½H², Δ_d H)` with `Δ_d H = −d d^*H` (valid because `dH = 0`).
pub fn grf_rhs(s: &GRFState, diff: &dyn Differentiator) -> Result<(SymField, ThreeForm)> {
    s.validate()?;
    let jet = SymJet::new(&s.g, diff, true);
    let cv = curvature(&jet, &|k| s.h.at(k));
    let mut rate = SymField::zeros(s.grid());
    for k in 0..s.g.len() {
        rate.set(k, &(-2.0 * cv.rc[k] + 0.5 * cv.h2[k]));
    }
    let dstar = riemann::codifferential_three_form(&s.g, &s.h, diff);
    let mut hr = riemann::exterior_two_forms(&riemann::pair_channels(&dstar), diff);
    hr.c.iter_mut().flatten().for_each(|x| *x = -*x);
    Ok((rate, hr))
}

/// Residual report of the pluriclosed / generalized Ricci gauge identity.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GaugeReport {
    /// `sup |2 ∂_t g_PCF − (−2Rc + ½H² − L_{θ♯} g)|`
    pub defect: f64,
    pub pcf_sup: f64,
    pub lie_sup: f64,
    pub grid: [usize; 4],
}

pub fn gauge_equivalence_check(w: &HermitianField, diff: &dyn Differentiator) -> Result<GaugeReport> {
    gauge_equivalence_check_with(w, diff, &Conventions::default())
}

pub fn gauge_equivalence_check_with(w: &HermitianField, diff: &dyn Differentiator, conv: &Conventions) -> Result<GaugeReport> {
    w.validate()?;
    let jet = MetricJet::new(w, diff, true);
    let residual = chart::pluriclosed_residual(&jet, &Conventions::default());
    if residual > chart::PLURICLOSED_TOL {
        return Err(Error::NotPluriclosed { residual, tolerance: chart::PLURICLOSED_TOL });
    }
    let pcf = chart::rhs_bismut(&jet, diff, conv);
    let n = jet.len();
    let mut theta: [Vec<f64>; 4] = std::array::from_fn(|_| Vec::with_capacity(n));
    let mut hs = Vec::with_capacity(n);
    for k in 0..n {
        let p = jet.point(k);
        let gi = p.g.try_inverse().expect("validated metric");
        let h = geometry::torsion_form(&p, conv);
        let t = geometry::lee_from_torsion(&h, &p.g, &gi);
        for a in 0..4 {
            theta[a].push(t[a]);
        }
        hs.push(chart::compress3(&h));
    }
    let cv = curvature(&jet, &|k| chart::expand3(&hs[k]));
    let lie = riemann::lie_derivative_metric(&jet, &theta, diff);
    let mut report = GaugeReport { defect: 0.0, pcf_sup: 0.0, lie_sup: 0.0, grid: w.grid.n };
    for k in 0..n {
        let lhs = 2.0 * riemannian_from_hermitian(&pcf.at(k));
        let rhs = -2.0 * cv.rc[k] + 0.5 * cv.h2[k] - lie[k];
        report.defect = report.defect.max((lhs - rhs).abs().max());
        report.pcf_sup = report.pcf_sup.max(lhs.abs().max());
        report.lie_sup = report.lie_sup.max(lie[k].abs().max());
    }
    Ok(report)
}

/// `F(g, H, f) = ∫ (R − |H|²/12 + |∇f|²) e^{−f} dV`.
pub fn f_functional(s: &GRFState, diff: &dyn Differentiator) -> Result<f64> {
    s.validate()?;
    let jet = SymJet::new(&s.g, diff, true);
    let cv = curvature(&jet, &|k| s.h.at(k));
    let df = diff.gradient(&s.f);
    let mut total = 0.0;
    for k in 0..s.g.len() {
        let grad = nalgebra::Vector4::new(df[0][k], df[1][k], df[2][k], df[3][k]);
        let g2 = (grad.transpose() * cv.ginv[k] * grad)[0];
        total += (cv.scalar[k] - cv.h_norm2[k] / 12.0 + g2) * (-s.f[k]).exp() * cv.vol[k];
    }
    Ok(total * s.grid().cell_volume())
}

/// Soliton residuals `Rc − ¼H² + ∇²f` and `d^*H + ∇f ⌟ H`.
#[derive(Clone, Debug)]
pub struct SolitonResidual {
    pub metric_residual: Vec<Matrix4<f64>>,
    pub torsion_residual: Vec<Matrix4<f64>>,
    pub metric_sup: f64,
    pub metric_l2: f64,
    pub torsion_sup: f64,
    pub torsion_l2: f64,
}

impl SolitonResidual {
    pub fn is_solitonic(&self) -> bool {
        self.metric_sup < 1e-6 && self.torsion_sup < 1e-6
    }
}

pub fn soliton_residual(s: &GRFState, diff: &dyn Differentiator) -> Result<SolitonResidual> {
    s.validate()?;
    let jet = SymJet::new(&s.g, diff, true);
    let cv = curvature(&jet, &|k| s.h.at(k));
    let (hess, df) = riemann::hessian_field(&jet, &s.f, diff);
    let dstar = riemann::codifferential_three_form(&s.g, &s.h, diff);
    let n = s.g.len();
    let mut metric = Vec::with_capacity(n);
    let mut torsion = Vec::with_capacity(n);
    let (mut ms, mut ml, mut ts, mut tl) = (0.0f64, 0.0, 0.0f64, 0.0);
    for k in 0..n {
        let m = cv.rc[k] - 0.25 * cv.h2[k] + hess[k];
        let h = s.h.at(k);
        let up: [f64; 4] = std::array::from_fn(|a| (0..4).map(|b| cv.ginv[k][(a, b)] * df[b][k]).sum());
        let t = dstar[k] + Matrix4::from_fn(|b, c| (0..4).map(|a| up[a] * h[a][b][c]).sum());
        ms = ms.max(m.abs().max());
        ts = ts.max(t.abs().max());
        ml += tensor_norm2(&m, &cv.ginv[k]) * cv.vol[k];
        tl += 0.5 * tensor_norm2(&t, &cv.ginv[k]) * cv.vol[k];
        metric.push(m);
        torsion.push(t);
    }
    let dv = s.grid().cell_volume();
    Ok(SolitonResidual { metric_residual: metric, torsion_residual: torsion, metric_sup: ms, metric_l2: (ml * dv).sqrt(), torsion_sup: ts, torsion_l2: (tl * dv).sqrt() })
}

/// Full contraction `A_{ab} B^{ab}` of a 2-tensor with itself.
pub fn tensor_norm2(a: &Matrix4<f64>, ginv: &Matrix4<f64>) -> f64 {
    (ginv * a * ginv * a.transpose()).trace()
}

/// Options for [`lambda_lowest`].
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct LambdaOptions {
    pub tolerance: f64,
    pub max_outer: usize,
    pub max_cg: usize,
}

impl Default for LambdaOptions {
    fn default() -> Self {
        Self { tolerance: 1e-10, max_outer: 200, max_cg: 2000 }
    }
}

#[derive(Clone, Debug)]
pub struct LambdaResult {
    pub lambda: f64,
    /// Minimizer normalized by `∫ e^{−f} dV = 1`.
    pub f: Vec<f64>,
    pub iterations: usize,
}

/// Weighted Schrödinger operator `B u = −4 ∂_a(√G G^{ab} ∂_b u) + √G (V − σ) u`,
/// symmetric in the plain inner product; `B u = μ √G u` is the eigenproblem.
/// Nyquist modes are projected out: first derivatives annihilate them, which
/// would otherwise leave spurious eigenvalues below the ground state.
struct Schrodinger<'a> {
    spectral: &'a Spectral,
    sqrt_g_ginv: Vec<Matrix4<f64>>,
    vol: Vec<f64>,
    potential: Vec<f64>,
    shift: f64,
    precond: Vec<f64>,
}

impl Schrodinger<'_> {
    fn project(&self, u: &[f64]) -> Vec<f64> {
        let mut s = self.spectral.forward(u);
        for (x, p) in s.iter_mut().zip(&self.precond) {
            if *p == 0.0 {
                *x = Complex64::new(0.0, 0.0);
            }
        }
        self.spectral.inverse_real(s)
    }

    fn apply(&self, u: &[f64]) -> Vec<f64> {
        let du = self.spectral.gradient(u);
        let n = u.len();
        let flux: [Vec<f64>; 4] = std::array::from_fn(|a| (0..n).map(|k| (0..4).map(|b| self.sqrt_g_ginv[k][(a, b)] * du[b][k]).sum()).collect());
        let mut spec = vec![Complex64::new(0.0, 0.0); n];
        for a in 0..4 {
            let mut s = self.spectral.forward(&flux[a]);
            self.spectral.apply_derivatives(&mut s, &[a]);
            for (x, y) in spec.iter_mut().zip(s) {
                *x += y;
            }
        }
        let div = self.spectral.inverse_real(spec);
        let out: Vec<f64> = (0..n).map(|k| -4.0 * div[k] + self.vol[k] * (self.potential[k] - self.shift) * u[k]).collect();
        self.project(&out)
    }

    fn precondition(&self, r: &[f64]) -> Vec<f64> {
        let mut s = self.spectral.forward(r);
        for (x, p) in s.iter_mut().zip(&self.precond) {
            *x *= p;
        }
        self.spectral.inverse_real(s)
    }

    fn solve(&self, b: &[f64], x0: &[f64], tol: f64, max_iter: usize) -> Result<Vec<f64>> {
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let b = &self.project(b);
        let mut x = self.project(x0);
        let ax = self.apply(&x);
        let mut r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let bn = dot(b, b).sqrt().max(1e-300);
        let mut z = self.precondition(&r);
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        for _ in 0..max_iter {
            if dot(&r, &r).sqrt() <= tol * bn {
                return Ok(x);
            }
            let ap = self.apply(&p);
            let alpha = rz / dot(&p, &ap);
            for k in 0..x.len() {
                x[k] += alpha * p[k];
                r[k] -= alpha * ap[k];
            }
            z = self.precondition(&r);
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for k in 0..p.len() {
                p[k] = z[k] + beta * p[k];
            }
        }
        let res = dot(&r, &r).sqrt() / bn;
        if res < tol * 1e3 {
            return Ok(x);
        }
        Err(Error::NoConvergence { iterations: max_iter, residual: res })
    }
}

/// Lowest eigenvalue of `−4Δ + R − |H|²/12` by shifted inverse iteration.
pub fn lambda_lowest(g: &SymField, h: &ThreeForm, opts: &LambdaOptions) -> Result<LambdaResult> {
    let grid = g.grid.clone();
    let spectral = Spectral::new(&grid);
    let jet = SymJet::new(g, &spectral, true);
    let cv = curvature(&jet, &|k| h.at(k));
    let n = g.len();
    let potential: Vec<f64> = (0..n).map(|k| cv.scalar[k] - cv.h_norm2[k] / 12.0).collect();
    let vmax = potential.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let shift = -vmax - 1.0;
    let sqrt_g_ginv: Vec<Matrix4<f64>> = (0..n).map(|k| cv.ginv[k] * cv.vol[k]).collect();
    let mean_a = sqrt_g_ginv.iter().fold(Matrix4::zeros(), |m, x| m + x) / n as f64;
    let mean_c = (0..n).map(|k| cv.vol[k] * (potential[k] - shift)).sum::<f64>() / n as f64;
    let precond: Vec<f64> = (0..n)
        .map(|k| {
            let idx = grid.multi_index(k);
            if (0..4).any(|a| 2 * idx[a] == grid.n[a]) {
                return 0.0;
            }
            let kv = nalgebra::Vector4::from_fn(|a, _| spectral.wavenumber(a, idx[a]));
            1.0 / (4.0 * (kv.transpose() * mean_a * kv)[0] + mean_c)
        })
        .collect();
    let op = Schrodinger { spectral: &spectral, sqrt_g_ginv, vol: cv.vol.clone(), potential, shift, precond };
    let wdot = |a: &[f64], b: &[f64]| (0..n).map(|k| a[k] * b[k] * cv.vol[k]).sum::<f64>();
    let mut u = vec![1.0; n];
    let nu = wdot(&u, &u).sqrt();
    u.iter_mut().for_each(|x| *x /= nu);
    let mut mu_old = f64::INFINITY;
    for it in 1..=opts.max_outer {
        let rhs: Vec<f64> = (0..n).map(|k| cv.vol[k] * u[k]).collect();
        let x = op.solve(&rhs, &u, opts.tolerance * 1e-2, opts.max_cg)?;
        let nx = wdot(&x, &x).sqrt();
        u = x.iter().map(|v| v / nx).collect();
        let bu = op.apply(&u);
        let mu: f64 = u.iter().zip(&bu).map(|(a, b)| a * b).sum();
        if (mu - mu_old).abs() <= opts.tolerance * mu.abs().max(1.0) {
            // ground state has one sign; normalize to be positive
            if u.iter().sum::<f64>() < 0.0 {
                u.iter_mut().for_each(|x| *x = -*x);
            }
            if u.iter().any(|&x| x <= 0.0) {
                return Err(Error::NoConvergence { iterations: it, residual: f64::NAN });
            }
            let lambda = mu + shift;
            // ∫ u² dV = 1 with u = e^{−f/2} gives ∫ e^{−f} dV = 1
            let dv = grid.cell_volume();
            let scale = (wdot(&u, &u) * dv).sqrt();
            let f = u.iter().map(|x| -2.0 * (x / scale).ln()).collect();
            return Ok(LambdaResult { lambda, f, iterations: it });
        }
        mu_old = mu;
    }
    Err(Error::NoConvergence { iterations: opts.max_outer, residual: f64::NAN })
}

/// First variation of `λ` in direction `δg` with `H` fixed:
/// `δλ = −∫ ⟨δg, Rc − ¼H² + ∇²f⟩ e^{−f} dV` at the minimizer `f`.
pub fn lambda_variation(g: &SymField, h: &ThreeForm, f: &[f64], dg: &SymField) -> Result<f64> {
    let spectral = Spectral::new(&g.grid);
    let state = GRFState { g: g.clone(), h: h.clone(), f: f.to_vec() };
    let res = soliton_residual(&state, &spectral)?;
    let jet = SymJet::new(g, &spectral, false);
    let mut total = 0.0;
    for k in 0..g.len() {
        let p = jet.point(k);
        let gi = p.g.try_inverse().expect("positive metric");
        let pair = (gi * dg.at(k) * gi * res.metric_residual[k]).trace();
        total += pair * (-f[k]).exp() * p.g.determinant().sqrt();
    }
    Ok(-total * g.grid.cell_volume())
}

/// Forward generalized Ricci flow trajectory stored at every step together with
/// its rates, for dense (cubic Hermite) output.
pub struct ForwardTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<(SymField, ThreeForm)>,
    pub rates: Vec<(SymField, ThreeForm)>,
}

impl ForwardTrajectory {
    /// Classical RK4 with fixed `dt`.
    pub fn integrate(g0: &SymField, h0: &ThreeForm, t_end: f64, dt: f64, diff: &dyn Differentiator) -> Result<Self> {
        let steps = (t_end / dt).round() as usize;
        let rate = |g: &SymField, h: &ThreeForm| grf_rhs(&GRFState { g: g.clone(), h: h.clone(), f: vec![0.0; g.len()] }, diff);
        let mut traj = ForwardTrajectory { times: vec![0.0], states: vec![(g0.clone(), h0.clone())], rates: vec![] };
        let (mut g, mut h) = (g0.clone(), h0.clone());
        for step in 0..steps {
            let k1 = rate(&g, &h)?;
            let k2 = rate(&g.axpy(0.5 * dt, &k1.0), &h.axpy(0.5 * dt, &k1.1))?;
            let k3 = rate(&g.axpy(0.5 * dt, &k2.0), &h.axpy(0.5 * dt, &k2.1))?;
            let k4 = rate(&g.axpy(dt, &k3.0), &h.axpy(dt, &k3.1))?;
            traj.rates.push(k1.clone());
            g = g.axpy(dt / 6.0, &k1.0).axpy(dt / 3.0, &k2.0).axpy(dt / 3.0, &k3.0).axpy(dt / 6.0, &k4.0);
            h = h.axpy(dt / 6.0, &k1.1).axpy(dt / 3.0, &k2.1).axpy(dt / 3.0, &k3.1).axpy(dt / 6.0, &k4.1);
            if !(g.min_eigenvalue() > 1e-6) {
                return Err(Error::Singularity { time: (step + 1) as f64 * dt, reason: "metric degenerated".into() });
            }
            traj.times.push((step + 1) as f64 * dt);
            traj.states.push((g.clone(), h.clone()));
        }
        let last = rate(&g, &h)?;
        traj.rates.push(last);
        Ok(traj)
    }

    /// Cubic Hermite interpolation of `(g, H)` at time `t`.
    pub fn at(&self, t: f64) -> (SymField, ThreeForm) {
        let n = self.times.len();
        if n == 1 {
            return self.states[0].clone();
        }
        let dt = self.times[1] - self.times[0];
        let i = (((t - self.times[0]) / dt).floor() as isize).clamp(0, n as isize - 2) as usize;
        let s = (t - self.times[i]) / dt;
        let (h00, h10, h01, h11) = (2.0 * s.powi(3) - 3.0 * s * s + 1.0, s.powi(3) - 2.0 * s * s + s, -2.0 * s.powi(3) + 3.0 * s * s, s.powi(3) - s * s);
        let (g0, b0) = &self.states[i];
        let (g1, b1) = &self.states[i + 1];
        let (r0, q0) = &self.rates[i];
        let (r1, q1) = &self.rates[i + 1];
        let mut g = g0.clone();
        for c in 0..10 {
            for k in 0..g.len() {
                g.c[c][k] = h00 * g0.c[c][k] + h10 * dt * r0.c[c][k] + h01 * g1.c[c][k] + h11 * dt * r1.c[c][k];
            }
        }
        let mut b = b0.clone();
        for c in 0..4 {
            for k in 0..g.len() {
                b.c[c][k] = h00 * b0.c[c][k] + h10 * dt * q0.c[c][k] + h01 * b1.c[c][k] + h11 * dt * q1.c[c][k];
            }
        }
        (g, b)
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().expect("nonempty trajectory")
    }
}

/// Rate of `u = e^{−f}` in backward time `τ = T − t`:
/// `∂_τ u = Δu − (R − ¼|H|²) u`, equivalent to
/// `∂_t f = −Δf + |∇f|² − R + ¼|H|²`.
fn conjugate_heat_rate(g: &SymField, h: &ThreeForm, u: &[f64], spectral: &Spectral) -> Vec<f64> {
    let jet = SymJet::new(g, spectral, true);
    let cv = curvature(&jet, &|k| h.at(k));
    let n = u.len();
    let du = spectral.gradient(u);
    let mut spec = vec![Complex64::new(0.0, 0.0); n];
    for a in 0..4 {
        let flux: Vec<f64> = (0..n).map(|k| cv.vol[k] * (0..4).map(|b| cv.ginv[k][(a, b)] * du[b][k]).sum::<f64>()).collect();
        let mut s = spectral.forward(&flux);
        spectral.apply_derivatives(&mut s, &[a]);
        for (x, y) in spec.iter_mut().zip(s) {
            *x += y;
        }
    }
    let div = spectral.inverse_real(spec);
    (0..n).map(|k| div[k] / cv.vol[k] - (cv.scalar[k] - 0.25 * cv.h_norm2[k]) * u[k]).collect()
}

/// One backward RK4 step of the conjugate heat equation from time `t` to
/// `t − dt` along a stored forward trajectory. Works with `u = e^{−f}`.
pub fn conjugate_heat_step(traj: &ForwardTrajectory, f: &[f64], t: f64, dt: f64) -> Result<Vec<f64>> {
    if traj.times.is_empty() {
        return Err(Error::Precondition("forward trajectory not stored".into()));
    }
    if t - dt < traj.times[0] - 1e-12 || t > traj.t_end() + 1e-12 {
        return Err(Error::Parameter(format!("backward step [{}, {t}] leaves the stored trajectory", t - dt)));
    }
    let spectral = Spectral::new(&traj.states[0].0.grid);
    let u: Vec<f64> = f.iter().map(|x| (-x).exp()).collect();
    let rate = |time: f64, v: &[f64]| {
        let (g, h) = traj.at(time);
        conjugate_heat_rate(&g, &h, v, &spectral)
    };
    let add = |a: &[f64], s: f64, b: &[f64]| a.iter().zip(b).map(|(x, y)| x + s * y).collect::<Vec<f64>>();
    let k1 = rate(t, &u);
    let k2 = rate(t - 0.5 * dt, &add(&u, 0.5 * dt, &k1));
    let k3 = rate(t - 0.5 * dt, &add(&u, 0.5 * dt, &k2));
    let k4 = rate(t - dt, &add(&u, dt, &k3));
    let next: Vec<f64> = (0..u.len()).map(|k| u[k] + dt / 6.0 * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k])).collect();
    if next.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::Singularity { time: t - dt, reason: "e^{-f} lost positivity".into() });
    }
    Ok(next.iter().map(|x| -x.ln()).collect())
}

/// `∫ e^{−f} dV_g`.
pub fn weighted_mass(g: &SymField, f: &[f64]) -> f64 {
    (0..g.len()).map(|k| (-f[k]).exp() * g.at(k).determinant().sqrt()).sum::<f64>() * g.grid.cell_volume()
}

/// Integrand of the monotonicity formula,
/// `∫ (2|Rc − ¼H² + ∇²f|² + |d^*H + ∇f⌟H|²) e^{−f} dV`, where the 2-form norm is
/// the form norm `½ β_{ab} β^{ab}`.
pub fn monotonicity_integrand(s: &GRFState, diff: &dyn Differentiator) -> Result<f64> {
    let res = soliton_residual(s, diff)?;
    let jet = SymJet::new(&s.g, diff, false);
    let mut total = 0.0;
    for k in 0..s.g.len() {
        let p = jet.point(k);
        let gi = p.g.try_inverse().expect("positive metric");
        let m = tensor_norm2(&res.metric_residual[k], &gi);
        let t = 0.5 * tensor_norm2(&res.torsion_residual[k], &gi);
        total += (2.0 * m + t) * (-s.f[k]).exp() * p.g.determinant().sqrt();
    }
    Ok(total * s.grid().cell_volume())
}

/// Samples of a coupled run: `F` and the monotonicity integrand over time.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MonotonicitySample {
    pub t: f64,
    pub f_value: f64,
    pub integrand: f64,
    pub mass: f64,
}

/// Integrates `(g, H)` forward to `t_end`, solves the conjugate heat equation
/// backward from `f_end`, and evaluates `F` and the integrand every
/// `sample_every` steps.
pub fn coupled_run(g0: &SymField, h0: &ThreeForm, f_end: &[f64], t_end: f64, dt: f64, sample_every: usize) -> Result<Vec<MonotonicitySample>> {
    let spectral = Spectral::new(&g0.grid);
    let traj = ForwardTrajectory::integrate(g0, h0, t_end, dt, &spectral)?;
    let steps = traj.times.len() - 1;
    let mut f = f_end.to_vec();
    let mut out = Vec::new();
    for i in (0..=steps).rev() {
        let t = traj.times[i];
        if (steps - i) % sample_every == 0 {
            let (g, h) = &traj.states[i];
            let st = GRFState { g: g.clone(), h: h.clone(), f: f.clone() };
            out.push(MonotonicitySample { t, f_value: f_functional(&st, &spectral)?, integrand: monotonicity_integrand(&st, &spectral)?, mass: weighted_mass(g, &f) });
        }
        if i > 0 {
            f = conjugate_heat_step(&traj, &f, t, dt)?;
        }
    }
    out.reverse();
    Ok(out)
}

/// Smooth non-flat test data of size `eps`: a metric perturbing the identity
/// by low Fourier modes and `H = dB` for a trigonometric 2-form `B`.
pub fn trigonometric_state(grid: &ChartGrid, eps: f64) -> (SymField, ThreeForm) {
    let spectral = Spectral::new(grid);
    let g = SymField::from_fn(grid, |x| {
        let a = eps * x[0].sin() + 0.5 * eps * (x[1] + x[2]).cos();
        let b = eps * (x[3] - x[1]).sin();
        let c = 0.5 * eps * x[2].cos();
        let mut m = Matrix4::identity();
        m[(0, 0)] += a;
        m[(1, 1)] -= 0.5 * a;
        m[(2, 2)] += b;
        m[(0, 3)] = c;
        m[(3, 0)] = c;
        m[(1, 2)] = 0.5 * b;
        m[(2, 1)] = 0.5 * b;
        m
    });
    let mut beta: [[Vec<f64>; 4]; 4] = std::array::from_fn(|_| std::array::from_fn(|_| vec![0.0; grid.len()]));
    for k in 0..grid.len() {
        let x = grid.coords(k);
        let entries = [(0, 1, eps * (x[2] + x[3]).sin()), (2, 3, eps * (x[0] - x[1]).cos()), (1, 3, 0.5 * eps * x[0].sin())];
        for (a, b, v) in entries {
            beta[a][b][k] = v;
            beta[b][a][k] = -v;
        }
    }
    (g, riemann::exterior_two_forms(&beta, &spectral))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{metric_from_alpha, random_modes, PotentialForm};

    fn perturbed(n: usize, eps: f64) -> (SymField, ThreeForm) {
        trigonometric_state(&ChartGrid::cubic(n).unwrap(), eps)
    }

    #[test]
    fn flat_torus_is_static_and_lambda_vanishes() {
        let grid = ChartGrid::cubic(8).unwrap();
        let spectral = Spectral::new(&grid);
        let g = SymField::from_fn(&grid, |_| Matrix4::from_diagonal(&nalgebra::Vector4::new(1.0, 2.0, 1.5, 0.7)));
        let state = GRFState { g: g.clone(), h: ThreeForm::zeros(grid.len()), f: vec![0.0; grid.len()] };
        let (dg, dh) = grf_rhs(&state, &spectral).unwrap();
        assert!(dg.sup_norm() < 1e-12 && dh.sup_norm() < 1e-12);
        let lam = lambda_lowest(&g, &state.h, &LambdaOptions::default()).unwrap();
        assert!(lam.lambda.abs() < 1e-10, "{}", lam.lambda);
        assert!(weighted_mass(&g, &lam.f) - 1.0 < 1e-10);
    }

    #[test]
    fn lambda_is_f_at_its_minimizer_and_below_constant_f() {
        let (g, h) = perturbed(8, 0.2);
        let spectral = Spectral::new(&g.grid);
        let lam = lambda_lowest(&g, &h, &LambdaOptions::default()).unwrap();
        let at_min = f_functional(&GRFState { g: g.clone(), h: h.clone(), f: lam.f.clone() }, &spectral).unwrap();
        assert!((at_min - lam.lambda).abs() < 1e-8, "{at_min} vs {}", lam.lambda);
        let mass = weighted_mass(&g, &vec![0.0; g.len()]);
        let flat_f = vec![mass.ln(); g.len()];
        let constant = f_functional(&GRFState { g, h, f: flat_f }, &spectral).unwrap();
        assert!(constant >= lam.lambda - 1e-12);
    }

    #[test]
    fn lambda_variation_matches_central_difference() {
        let (g, h) = perturbed(8, 0.2);
        let opts = LambdaOptions::default();
        let base = lambda_lowest(&g, &h, &opts).unwrap();
        let dg = SymField::from_fn(&g.grid, |x| {
            let mut m = Matrix4::identity() * 0.3;
            m[(0, 1)] = x[2].cos();
            m[(1, 0)] = x[2].cos();
            m[(3, 3)] += x[0].sin();
            m
        });
        let analytic = lambda_variation(&g, &h, &base.f, &dg).unwrap();
        let eps = 1e-4;
        let up = lambda_lowest(&g.axpy(eps, &dg), &h, &opts).unwrap().lambda;
        let down = lambda_lowest(&g.axpy(-eps, &dg), &h, &opts).unwrap().lambda;
        let fd = (up - down) / (2.0 * eps);
        assert!((fd - analytic).abs() < 1e-3 * analytic.abs(), "{fd} vs {analytic}");
    }

    #[test]
    fn gauge_identity_on_random_potential() {
        let grid = ChartGrid::cubic(16).unwrap();
        let spectral = Spectral::new(&grid);
        let a = PotentialForm::from_modes(&grid, &random_modes(3, 0.2, 1)).unwrap();
        let w = metric_from_alpha(&a, &spectral).unwrap();
        let report = gauge_equivalence_check(&w, &spectral).unwrap();
        assert!(report.defect < 1e-10, "{report:?}");
        assert!(report.lie_sup > 1e-4);
    }

    #[test]
    fn conjugate_heat_step_preserves_mass() {
        let (g, h) = perturbed(8, 0.1);
        let spectral = Spectral::new(&g.grid);
        let traj = ForwardTrajectory::integrate(&g, &h, 0.04, 0.02, &spectral).unwrap();
        let (g1, _) = &traj.states[2];
        let f1 = vec![weighted_mass(g1, &vec![0.0; g.len()]).ln(); g.len()];
        let f0 = conjugate_heat_step(&traj, &conjugate_heat_step(&traj, &f1, 0.04, 0.02).unwrap(), 0.02, 0.02).unwrap();
        assert!((weighted_mass(&g, &f0) - 1.0).abs() < 1e-8);
        assert!(conjugate_heat_step(&traj, &f1, 0.01, 0.02).is_err());
    }
}
