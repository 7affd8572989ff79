//! Grid-level Hermitian tensor engine: pluriclosed residual, torsion, Ricci
//! forms and the pluriclosed-flow right-hand side in three formulations.

use nalgebra::{Matrix2, Matrix4};
use serde::{Deserialize, Serialize};

use crate::conventions::Conventions;
use crate::error::{Error, Result};
use crate::field::{form_from_hermitian, hermitian_from_form, riemannian_from_channels, HermitianField, C64};
use crate::geometry::{self, ComplexJet, PointJet, T3};
use crate::grid::{sym_index, ChartGrid, Differentiator};

/// Metric channels together with their first and (optionally) second derivatives.
pub struct MetricJet {
    pub grid: ChartGrid,
    u: [Vec<f64>; 4],
    du: [[Vec<f64>; 4]; 4],
    ddu: Option<[Vec<Vec<f64>>; 4]>,
}

impl MetricJet {
    pub fn new(w: &HermitianField, diff: &dyn Differentiator, second: bool) -> Self {
        let mut du: [[Vec<f64>; 4]; 4] = Default::default();
        let mut ddu: [Vec<Vec<f64>>; 4] = Default::default();
        for c in 0..4 {
            let (d, dd) = diff.jet_of(&w.u[c], second);
            du[c] = d;
            if let Some(dd) = dd {
                ddu[c] = dd;
            }
        }
        Self { grid: w.grid.clone(), u: w.u.clone(), du, ddu: second.then_some(ddu) }
    }

    pub fn len(&self) -> usize {
        self.u[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn has_second(&self) -> bool {
        self.ddu.is_some()
    }

    /// Point data without second derivatives, even when they are stored.
    pub fn point_first(&self, k: usize) -> PointJet {
        let ch = |v: &[Vec<f64>; 4]| [v[0][k], v[1][k], v[2][k], v[3][k]];
        let g = riemannian_from_channels(&ch(&self.u));
        let dg = std::array::from_fn(|a| {
            riemannian_from_channels(&[self.du[0][a][k], self.du[1][a][k], self.du[2][a][k], self.du[3][a][k]])
        });
        PointJet { g, dg, ddg: None }
    }

    pub fn point(&self, k: usize) -> PointJet {
        let ch = |v: &[Vec<f64>; 4]| [v[0][k], v[1][k], v[2][k], v[3][k]];
        let g = riemannian_from_channels(&ch(&self.u));
        let dg = std::array::from_fn(|a| {
            riemannian_from_channels(&[self.du[0][a][k], self.du[1][a][k], self.du[2][a][k], self.du[3][a][k]])
        });
        let ddg = self.ddu.as_ref().map(|dd| {
            Box::new(std::array::from_fn(|a| {
                std::array::from_fn(|b| {
                    let s = sym_index(a, b);
                    riemannian_from_channels(&[dd[0][s][k], dd[1][s][k], dd[2][s][k], dd[3][s][k]])
                })
            }))
        });
        PointJet { g, dg, ddg }
    }
}

/// Compresses a 3-form to its four independent components, indexed by the
/// omitted direction: `c[d] = H_{abc}` with `{a<b<c} = {0..3} \ {d}`.
pub fn compress3(h: &T3) -> [f64; 4] {
    [h[1][2][3], h[0][2][3], h[0][1][3], h[0][1][2]]
}

pub fn expand3(c: &[f64; 4]) -> T3 {
    let mut h = geometry::ZERO3;
    let triples = [(1, 2, 3), (0, 2, 3), (0, 1, 3), (0, 1, 2)];
    for (d, &(a, b, e)) in triples.iter().enumerate() {
        let v = c[d];
        h[a][b][e] = v;
        h[b][e][a] = v;
        h[e][a][b] = v;
        h[b][a][e] = -v;
        h[a][e][b] = -v;
        h[e][b][a] = -v;
    }
    h
}

/// Chern torsion, Bismut torsion and Lee form on the grid.
#[derive(Clone, Debug)]
pub struct TorsionField {
    pub grid: ChartGrid,
    /// `T_{i k p̄}` per point, indexed `[i][k][p]`.
    pub t: Vec<[[[C64; 2]; 2]; 2]>,
    /// `H = d^c ω` per point, compressed by [`compress3`].
    pub h: Vec<[f64; 4]>,
    /// Lee form `θ`, defined by `dω = θ ∧ ω`. With our sign of `H` this is
    /// `−⋆H` in the complex orientation.
    pub theta: Vec<[f64; 4]>,
}

#[derive(Clone, Debug)]
pub struct CurvatureForms {
    pub grid: ChartGrid,
    pub rho_c: Vec<Matrix4<f64>>,
    pub rho_b11: Vec<Matrix4<f64>>,
    pub s: Vec<Matrix2<C64>>,
    pub q1: Vec<Matrix2<C64>>,
}

/// Sup-norm discrepancies among the three right-hand-side formulations.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CrossCheck {
    pub bismut_vs_chern: f64,
    pub bismut_vs_coordinate: f64,
    pub chern_vs_coordinate: f64,
    pub grid: [usize; 4],
}

impl CrossCheck {
    pub fn max(&self) -> f64 {
        self.bismut_vs_chern.max(self.bismut_vs_coordinate).max(self.chern_vs_coordinate)
    }
}

/// Tolerance used for the pluriclosed precondition.
pub const PLURICLOSED_TOL: f64 = 1e-8;

/// Sup over the grid of the coefficient of `i∂∂̄ω = ½ dH` on `dx0∧dx1∧dx2∧dx3`.
pub fn check_pluriclosed(w: &HermitianField, diff: &dyn Differentiator) -> Result<f64> {
    w.validate()?;
    let jet = MetricJet::new(w, diff, true);
    Ok(pluriclosed_residual(&jet, &Conventions::default()))
}

pub fn pluriclosed_residual(jet: &MetricJet, conv: &Conventions) -> f64 {
    (0..jet.len())
        .map(|k| (0.5 * geometry::dh_top(&jet.point(k), conv)).abs())
        .fold(0.0, f64::max)
}

pub fn chern_torsion(w: &HermitianField, diff: &dyn Differentiator, conv: &Conventions) -> Result<TorsionField> {
    w.validate()?;
    let jet = MetricJet::new(w, diff, true);
    let n = jet.len();
    let mut out = TorsionField { grid: w.grid.clone(), t: Vec::with_capacity(n), h: Vec::with_capacity(n), theta: Vec::with_capacity(n) };
    for k in 0..n {
        let p = jet.point(k);
        let cj = ComplexJet::from_point(&p);
        out.t.push(geometry::chern_torsion_point(&cj));
        let h = geometry::torsion_form(&p, conv);
        let ginv = p.g.try_inverse().expect("validated metric");
        out.theta.push(geometry::lee_from_torsion(&h, &p.g, &ginv));
        out.h.push(compress3(&h));
    }
    Ok(out)
}

/// Exterior derivative of a field of 1-forms, as 2-form matrices.
pub fn exterior_of_one_forms(beta: &[Vec<f64>; 4], diff: &dyn Differentiator) -> Vec<Matrix4<f64>> {
    let grads: [[Vec<f64>; 4]; 4] = std::array::from_fn(|b| diff.gradient(&beta[b]));
    (0..beta[0].len())
        .map(|k| Matrix4::from_fn(|a, b| grads[b][a][k] - grads[a][b][k]))
        .collect()
}

/// `b_a = ½ tr(J Γ^B_a)` on the grid.
pub fn bismut_potential_field(jet: &MetricJet, conv: &Conventions) -> [Vec<f64>; 4] {
    let n = jet.len();
    let mut b: [Vec<f64>; 4] = std::array::from_fn(|_| Vec::with_capacity(n));
    for k in 0..n {
        let p = jet.point_first(k);
        let ginv = p.g.try_inverse().expect("validated metric");
        let gl = geometry::christoffel_lower(&p);
        let h = geometry::torsion_form(&p, conv);
        let gb = geometry::bismut_christoffel(&gl, &h, &ginv);
        let v = geometry::bismut_potential(&gb);
        for a in 0..4 {
            b[a].push(v[a]);
        }
    }
    b
}

/// Bismut Ricci form `ρ_B = d b`.
pub fn bismut_ricci_form(jet: &MetricJet, diff: &dyn Differentiator, conv: &Conventions) -> Vec<Matrix4<f64>> {
    exterior_of_one_forms(&bismut_potential_field(jet, conv), diff)
}

/// `−ρ_B^{1,1}` as a Hermitian metric rate.
pub fn rhs_bismut(jet: &MetricJet, diff: &dyn Differentiator, conv: &Conventions) -> HermitianField {
    let rho = bismut_ricci_form(jet, diff, conv);
    let mut out = HermitianField::zeros(&jet.grid);
    for (k, r) in rho.iter().enumerate() {
        out.set(k, &hermitian_from_form(&(-geometry::project_11(r))));
    }
    out
}

/// `2(−S + Q¹)` as a Hermitian metric rate; the factor converts from the
/// `ω = i g dz∧dz̄` normalization to ours, `ω = (i/2) h dz∧dz̄`.
pub fn rhs_chern(jet: &MetricJet) -> HermitianField {
    let mut out = HermitianField::zeros(&jet.grid);
    for k in 0..jet.len() {
        let cj = ComplexJet::from_point(&jet.point(k));
        let r = (geometry::chern_q1(&cj) - geometry::chern_s(&cj)) * C64::new(2.0, 0.0);
        out.set(k, &r);
    }
    out
}

/// `(d d^*ω)^{1,1} + i∂∂̄ log det h` as a Hermitian metric rate. The log-det
/// Hessian is taken spectrally from the sampled scalar.
pub fn rhs_coordinate(jet: &MetricJet, diff: &dyn Differentiator) -> HermitianField {
    let n = jet.len();
    let mut beta: [Vec<f64>; 4] = std::array::from_fn(|_| Vec::with_capacity(n));
    let mut logdet = Vec::with_capacity(n);
    for k in 0..n {
        let p = jet.point_first(k);
        let ginv = p.g.try_inverse().expect("validated metric");
        let gam = geometry::raise_last(&geometry::christoffel_lower(&p), &ginv);
        let w = crate::conventions::j_matrix().transpose() * p.g;
        let dw = geometry::omega_derivatives(&p);
        let d = geometry::codifferential_two_form(&w, &dw, &gam, &ginv);
        for a in 0..4 {
            beta[a].push(d[a]);
        }
        // det G = (det h)^2
        logdet.push(0.5 * p.g.determinant().ln());
    }
    let ddb = exterior_of_one_forms(&beta, diff);
    let (_, hess) = diff.jet_of(&logdet, true);
    let hess = hess.expect("second derivatives requested");
    let mut out = HermitianField::zeros(&jet.grid);
    for k in 0..n {
        let hs = |a: usize, b: usize| hess[sym_index(a, b)][k];
        // ∂_k ∂_l̄ L = ¼[(L_xx' + L_yy') + i(L_xy' − L_yx')]
        let m = Matrix2::from_fn(|i, j| {
            let (x, y, u, v) = (2 * i, 2 * i + 1, 2 * j, 2 * j + 1);
            C64::new(0.25 * (hs(x, u) + hs(y, v)), 0.25 * (hs(x, v) - hs(y, u)))
        });
        let r = hermitian_from_form(&geometry::project_11(&ddb[k])) + m * C64::new(2.0, 0.0);
        out.set(k, &r);
    }
    out
}

pub fn curvature_forms(w: &HermitianField, diff: &dyn Differentiator, conv: &Conventions) -> Result<CurvatureForms> {
    w.validate()?;
    let jet = MetricJet::new(w, diff, true);
    let rho = bismut_ricci_form(&jet, diff, conv);
    let n = jet.len();
    let mut out = CurvatureForms {
        grid: w.grid.clone(),
        rho_c: Vec::with_capacity(n),
        rho_b11: rho.iter().map(geometry::project_11).collect(),
        s: Vec::with_capacity(n),
        q1: Vec::with_capacity(n),
    };
    for k in 0..n {
        let cj = ComplexJet::from_point(&jet.point(k));
        // ρ_C = −i∂∂̄ log det h, i.e. the form of the Hermitian matrix −2∂∂̄L
        let m = geometry::ddbar_log_det(&cj) * C64::new(-2.0, 0.0);
        out.rho_c.push(form_from_hermitian(&m));
        out.s.push(geometry::chern_s(&cj));
        out.q1.push(geometry::chern_q1(&cj));
    }
    Ok(out)
}

/// Pluriclosed-flow right-hand side (`−ρ_B^{1,1}`, as a Hermitian rate) plus the
/// cross-check against the other two formulations.
pub fn pcf_rhs(w: &HermitianField, diff: &dyn Differentiator) -> Result<(HermitianField, CrossCheck)> {
    pcf_rhs_with(w, diff, &Conventions::default())
}

pub fn pcf_rhs_with(w: &HermitianField, diff: &dyn Differentiator, conv: &Conventions) -> Result<(HermitianField, CrossCheck)> {
    w.validate()?;
    let jet = MetricJet::new(w, diff, true);
    let residual = pluriclosed_residual(&jet, &Conventions::default());
    if residual > PLURICLOSED_TOL {
        return Err(Error::NotPluriclosed { residual, tolerance: PLURICLOSED_TOL });
    }
    let c = rhs_bismut(&jet, diff, conv);
    let b = rhs_chern(&jet);
    let a = rhs_coordinate(&jet, diff);
    let report = CrossCheck {
        bismut_vs_chern: c.sup_distance(&b),
        bismut_vs_coordinate: c.sup_distance(&a),
        chern_vs_coordinate: b.sup_distance(&a),
        grid: w.grid.n,
    };
    Ok((c, report))
}

/// Cheaper right-hand side used for time stepping: first derivatives only.
pub fn flow_rate(w: &HermitianField, diff: &dyn Differentiator, conv: &Conventions) -> HermitianField {
    let jet = MetricJet::new(w, diff, false);
    rhs_bismut(&jet, diff, conv)
}

/// Options for [`step_flow`].
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct StepOptions {
    /// CFL constant `c` in `dt ≤ 4c / Σ_a h_a⁻²`, i.e. `dt ≤ c h²` on a cubic grid.
    pub cfl: f64,
    /// Halt when the smallest metric eigenvalue drops below this.
    pub min_eigenvalue: f64,
}

impl Default for StepOptions {
    fn default() -> Self {
        Self { cfl: 0.08, min_eigenvalue: 1e-6 }
    }
}

pub fn max_stable_dt(grid: &ChartGrid, opts: &StepOptions) -> f64 {
    let h = grid.spacing();
    4.0 * opts.cfl / h.iter().map(|x| x.powi(-2)).sum::<f64>()
}

/// Generic classical RK4 step on Hermitian fields.
pub fn rk4_step(w: &HermitianField, dt: f64, rate: impl Fn(&HermitianField) -> HermitianField) -> HermitianField {
    let k1 = rate(w);
    let k2 = rate(&w.axpy(0.5 * dt, &k1));
    let k3 = rate(&w.axpy(0.5 * dt, &k2));
    let k4 = rate(&w.axpy(dt, &k3));
    let mut out = w.clone();
    for c in 0..4 {
        for k in 0..out.len() {
            out.u[c][k] += dt / 6.0 * (k1.u[c][k] + 2.0 * k2.u[c][k] + 2.0 * k3.u[c][k] + k4.u[c][k]);
        }
    }
    out
}

/// One RK4 step of pluriclosed flow. The stored channels are Hermitian by
/// construction, so no re-symmetrization is needed.
pub fn step_flow(w: &HermitianField, dt: f64, diff: &dyn Differentiator, opts: &StepOptions, time: f64) -> Result<HermitianField> {
    let limit = max_stable_dt(&w.grid, opts);
    if !(dt > 0.0) || dt > limit * (1.0 + 1e-12) {
        return Err(Error::Parameter(format!("dt = {dt} violates the CFL bound {limit}")));
    }
    let conv = Conventions::default();
    let out = rk4_step(w, dt, |v| flow_rate(v, diff, &conv));
    check_positive(&out, opts.min_eigenvalue, time + dt)?;
    Ok(out)
}

pub fn check_positive(w: &HermitianField, min_eigenvalue: f64, time: f64) -> Result<()> {
    let (l, k) = w.min_eigenvalue();
    if !(l >= min_eigenvalue) {
        let x = w.grid.coords(k);
        return Err(Error::Singularity {
            time,
            reason: format!("smallest eigenvalue {l:e} at grid point {k} (x = {x:?})"),
        });
    }
    Ok(())
}

/// `∫ ω ∧ γ` for a constant 2-form `γ`; only the grid average of `ω` matters.
pub fn pairing_with_constant_form(w: &HermitianField, gamma: &Matrix4<f64>) -> f64 {
    let n = w.len();
    let mut total = 0.0;
    for k in 0..n {
        let om = form_from_hermitian(&w.at(k));
        total += wedge_top(&om, gamma);
    }
    total * w.grid.cell_volume()
}

/// Coefficient of `α ∧ β` on `dx0∧dx1∧dx2∧dx3` for two 2-forms.
pub fn wedge_top(a: &Matrix4<f64>, b: &Matrix4<f64>) -> f64 {
    let pairs = [((0, 1), (2, 3), 1.0), ((0, 2), (1, 3), -1.0), ((0, 3), (1, 2), 1.0)];
    pairs
        .iter()
        .map(|&((p, q), (r, s), sg)| sg * (a[(p, q)] * b[(r, s)] + b[(p, q)] * a[(r, s)]))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Spectral;

    #[test]
    fn compress_roundtrip() {
        let c = [1.0, -2.0, 3.0, 0.5];
        assert_eq!(compress3(&expand3(&c)), c);
        let h = expand3(&c);
        assert_eq!(h[2][1][3], -1.0);
    }

    #[test]
    fn flat_metric_is_fixed() {
        let g = ChartGrid::cubic(8).unwrap();
        let s = Spectral::new(&g);
        let w = HermitianField::identity(&g);
        assert!(check_pluriclosed(&w, &s).unwrap() < 1e-14);
        let (r, rep) = pcf_rhs(&w, &s).unwrap();
        assert!(r.sup_norm() < 1e-14 && rep.max() < 1e-14);
        let next = step_flow(&w, 0.01, &s, &StepOptions::default(), 0.0).unwrap();
        assert!(next.sup_distance(&w) < 1e-14);
    }

    #[test]
    fn wedge_of_flat_form() {
        let w = form_from_hermitian(&Matrix2::identity());
        // ω∧ω = 2 dV
        assert!((wedge_top(&w, &w) - 2.0).abs() < 1e-15);
    }
}
