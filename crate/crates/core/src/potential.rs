//! The (1,0)-form reduction of pluriclosed flow on the torus.

use nalgebra::{Matrix2, Matrix4};
use serde::{Deserialize, Serialize};

use crate::chart::{self, MetricJet};
use crate::conventions::Conventions;
use crate::error::{Error, Result};
use crate::field::{riemannian_from_hermitian, HermitianField, C64};
use crate::geometry;
use crate::grid::{sym_index, ChartGrid, Differentiator};

/// A (1,0)-form `α = α_1 dz¹ + α_2 dz²` on a chart grid, with a constant
/// flat background. The generated metric is `ω = ω_bg + ∂̄α + ∂ᾱ`.
#[derive(Clone, Debug)]
pub struct PotentialForm {
    pub grid: ChartGrid,
    /// `alpha[i][k]` is `α_i` at point `k`.
    pub alpha: [Vec<C64>; 2],
    pub background: Matrix2<C64>,
}

fn i_unit() -> C64 {
    C64::new(0.0, 1.0)
}

/// `∂_i` and `∂_ī` of a complex field from real partials.
pub struct ComplexGradient {
    pub d: [Vec<C64>; 2],
    pub dbar: [Vec<C64>; 2],
}

pub fn complex_gradient(f: &[C64], diff: &dyn Differentiator) -> ComplexGradient {
    let re: Vec<f64> = f.iter().map(|z| z.re).collect();
    let im: Vec<f64> = f.iter().map(|z| z.im).collect();
    let gr = diff.gradient(&re);
    let gi = diff.gradient(&im);
    let i = i_unit();
    let partial = |a: usize, k: usize| C64::new(gr[a][k], gi[a][k]);
    let n = f.len();
    let d = std::array::from_fn(|c| (0..n).map(|k| (partial(2 * c, k) - i * partial(2 * c + 1, k)) * 0.5).collect());
    let dbar = std::array::from_fn(|c| (0..n).map(|k| (partial(2 * c, k) + i * partial(2 * c + 1, k)) * 0.5).collect());
    ComplexGradient { d, dbar }
}

/// One Fourier mode `coeff · e^{i k·x}` of the two components of `α`,
/// coefficients as `[re, im]` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaMode {
    pub k: [i32; 4],
    pub coeff: [[f64; 2]; 2],
}

/// Random modes with `|k|_∞ ≤ max_mode`, scaled so that
/// `Σ |k| |coeff| = amplitude`, which bounds the metric perturbation by `2·amplitude`.
pub fn random_modes(seed: u64, amplitude: f64, max_mode: i32) -> Vec<AlphaMode> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let m = max_mode;
    let mut modes = Vec::new();
    for k0 in -m..=m {
        for k1 in -m..=m {
            for k2 in -m..=m {
                for k3 in -m..=m {
                    let k = [k0, k1, k2, k3];
                    if k == [0; 4] {
                        continue;
                    }
                    let k2n = k.iter().map(|&x| (x * x) as f64).sum::<f64>();
                    let w = 1.0 / k2n;
                    let coeff = std::array::from_fn(|_| [w * rng.gen_range(-1.0..1.0), w * rng.gen_range(-1.0..1.0)]);
                    modes.push(AlphaMode { k, coeff });
                }
            }
        }
    }
    let total: f64 = modes
        .iter()
        .map(|m| {
            let kn = m.k.iter().map(|&x| (x * x) as f64).sum::<f64>().sqrt();
            kn * m.coeff.iter().map(|c| c[0].hypot(c[1])).sum::<f64>()
        })
        .sum();
    for md in &mut modes {
        for c in &mut md.coeff {
            c[0] *= amplitude / total;
            c[1] *= amplitude / total;
        }
    }
    modes
}

impl PotentialForm {
    /// Sums the given Fourier modes on the grid; `k` counts periods per box
    /// side and must lie strictly below the Nyquist index.
    pub fn from_modes(grid: &ChartGrid, modes: &[AlphaMode]) -> Result<Self> {
        let n = grid.n;
        let mut spec = [vec![C64::new(0.0, 0.0); grid.len()], vec![C64::new(0.0, 0.0); grid.len()]];
        let total = grid.len() as f64;
        for m in modes {
            if (0..4).any(|a| 2 * m.k[a].unsigned_abs() as usize >= n[a]) {
                return Err(Error::Parameter(format!("mode {:?} is not resolved on a {:?} grid", m.k, n)));
            }
            let idx = grid.index(std::array::from_fn(|a| m.k[a].rem_euclid(n[a] as i32) as usize));
            for c in 0..2 {
                spec[c][idx] += C64::new(m.coeff[c][0], m.coeff[c][1]) * total;
            }
        }
        let fft = crate::grid::Spectral::new(grid);
        let mut out = Self::zero(grid);
        let [s0, s1] = spec;
        out.alpha = [fft.inverse_complex(s0), fft.inverse_complex(s1)];
        Ok(out)
    }

    pub fn zero(grid: &ChartGrid) -> Self {
        Self { grid: grid.clone(), alpha: [vec![C64::new(0.0, 0.0); grid.len()], vec![C64::new(0.0, 0.0); grid.len()]], background: Matrix2::identity() }
    }

    pub fn from_fn(grid: &ChartGrid, f: impl Fn([f64; 4]) -> [C64; 2]) -> Self {
        let mut out = Self::zero(grid);
        for k in 0..grid.len() {
            let v = f(grid.coords(k));
            out.alpha[0][k] = v[0];
            out.alpha[1][k] = v[1];
        }
        out
    }

    /// `α = −(i/2) ∂φ`, which generates the Kähler perturbation `i∂∂̄φ`.
    pub fn kahler(phi: &[f64], grid: &ChartGrid, diff: &dyn Differentiator) -> Self {
        let phic: Vec<C64> = phi.iter().map(|&x| C64::new(x, 0.0)).collect();
        let g = complex_gradient(&phic, diff);
        let s = -0.5 * i_unit();
        let mut out = Self::zero(grid);
        for c in 0..2 {
            out.alpha[c] = g.d[c].iter().map(|z| s * z).collect();
        }
        out
    }

    pub fn axpy(&self, s: f64, rate: &[Vec<C64>; 2]) -> Self {
        let mut out = self.clone();
        for c in 0..2 {
            for (a, r) in out.alpha[c].iter_mut().zip(&rate[c]) {
                *a += r * s;
            }
        }
        out
    }
}

/// Hermitian matrix of `∂̄β + ∂β̄` for a (1,0)-form `β`:
/// `δh_{i j̄} = −2i (∂_i β̄_j − ∂_j̄ β_i)`.
pub fn ddbar_of_one_form(beta: &[Vec<C64>; 2], grid: &ChartGrid, diff: &dyn Differentiator) -> HermitianField {
    let gb: [ComplexGradient; 2] = std::array::from_fn(|c| complex_gradient(&beta[c], diff));
    let mut out = HermitianField::zeros(grid);
    let m2i = C64::new(0.0, -2.0);
    for k in 0..grid.len() {
        // ∂_i β̄_j = conj(∂_ī β_j)
        let h = Matrix2::from_fn(|i, j| m2i * (gb[j].dbar[i][k].conj() - gb[i].dbar[j][k]));
        out.set(k, &h);
    }
    out
}

pub fn metric_from_alpha(a: &PotentialForm, diff: &dyn Differentiator) -> Result<HermitianField> {
    let mut w = ddbar_of_one_form(&a.alpha, &a.grid, diff);
    let bg = crate::field::hermitian_to_channels(&a.background);
    for c in 0..4 {
        w.u[c].iter_mut().for_each(|x| *x += bg[c]);
    }
    w.validate()?;
    Ok(w)
}

/// `∂α/∂t = ∂̄^* ω − (i/2) ∂ log det h`, where `∂̄^*ω` is the (1,0) part of the
/// real codifferential `d^*ω`.
pub fn alpha_flow_rhs(a: &PotentialForm, diff: &dyn Differentiator) -> Result<[Vec<C64>; 2]> {
    let w = metric_from_alpha(a, diff)?;
    Ok(alpha_rate_of_metric(&w, diff))
}

pub fn alpha_rate_of_metric(w: &HermitianField, diff: &dyn Differentiator) -> [Vec<C64>; 2] {
    let jet = MetricJet::new(w, diff, false);
    let n = jet.len();
    let mut codiff: [Vec<f64>; 4] = std::array::from_fn(|_| Vec::with_capacity(n));
    let mut logdet = Vec::with_capacity(n);
    for k in 0..n {
        let p = jet.point(k);
        let ginv = p.g.try_inverse().expect("validated metric");
        let gam = geometry::raise_last(&geometry::christoffel_lower(&p), &ginv);
        let om = crate::conventions::j_matrix().transpose() * p.g;
        let d = geometry::codifferential_two_form(&om, &geometry::omega_derivatives(&p), &gam, &ginv);
        for b in 0..4 {
            codiff[b].push(d[b]);
        }
        logdet.push(0.5 * p.g.determinant().ln());
    }
    let ldc: Vec<C64> = logdet.iter().map(|&x| C64::new(x, 0.0)).collect();
    let dl = complex_gradient(&ldc, diff);
    let i = i_unit();
    std::array::from_fn(|c| {
        (0..n)
            .map(|k| C64::new(codiff[2 * c][k], -codiff[2 * c + 1][k]) * 0.5 - i * 0.5 * dl.d[c][k])
            .collect()
    })
}

/// Real 8×8 generalized metric `W = Eᵀ diag(G, G⁻¹) E` with `E = [[1,0],[M,1]]`,
/// where `M` is the real bilinear form of `i∂̄ᾱ`. Blocks:
/// `[[G + MᵀG⁻¹M, MᵀG⁻¹], [G⁻¹M, G⁻¹]]`.
#[derive(Clone, Debug)]
pub struct GeneralizedMetricW {
    pub w: Vec<nalgebra::SMatrix<f64, 8, 8>>,
}

/// Real bilinear form `B(X,Y) = 2 Re(c_{ij} ξ^i η^j)` of a complex matrix `c`
/// acting on (1,0) components `ξ = dz(X)`, `η = dz(Y)`.
pub fn real_bilinear(c: &Matrix2<C64>) -> Matrix4<f64> {
    let xi = |a: usize| -> [C64; 2] {
        let mut v = [C64::new(0.0, 0.0); 2];
        v[a / 2] = if a % 2 == 0 { C64::new(1.0, 0.0) } else { C64::new(0.0, 1.0) };
        v
    };
    Matrix4::from_fn(|a, b| {
        let (x, y) = (xi(a), xi(b));
        let mut s = C64::new(0.0, 0.0);
        for i in 0..2 {
            for j in 0..2 {
                s += c[(i, j)] * x[i] * y[j];
            }
        }
        2.0 * s.re
    })
}

pub fn w_matrix(a: &PotentialForm, diff: &dyn Differentiator) -> Result<GeneralizedMetricW> {
    let w = metric_from_alpha(a, diff)?;
    let gd: [ComplexGradient; 2] = std::array::from_fn(|c| complex_gradient(&a.alpha[c], diff));
    let mut out = Vec::with_capacity(w.len());
    for k in 0..w.len() {
        // (∂α)_{ij} = ∂_i α_j; M realizes i ∂̄ᾱ = conj of (−i ∂α)
        let da = Matrix2::from_fn(|i, j| gd[j].d[i][k]);
        let m = real_bilinear(&(da.map(|z| z.conj()) * i_unit()));
        out.push(assemble_w(&riemannian_from_hermitian(&w.at(k)), &m));
    }
    Ok(GeneralizedMetricW { w: out })
}

pub fn assemble_w(g: &Matrix4<f64>, m: &Matrix4<f64>) -> nalgebra::SMatrix<f64, 8, 8> {
    let gi = g.try_inverse().expect("validated metric");
    let mut w = nalgebra::SMatrix::<f64, 8, 8>::zeros();
    w.fixed_view_mut::<4, 4>(0, 0).copy_from(&(g + m.transpose() * gi * m));
    w.fixed_view_mut::<4, 4>(0, 4).copy_from(&(m.transpose() * gi));
    w.fixed_view_mut::<4, 4>(4, 0).copy_from(&(gi * m));
    w.fixed_view_mut::<4, 4>(4, 4).copy_from(&gi);
    w
}

impl GeneralizedMetricW {
    pub fn max_det_defect(&self) -> f64 {
        self.w.iter().map(|w| (w.determinant() - 1.0).abs()).fold(0.0, f64::max)
    }
}

/// One sample of a potential-flow run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PotentialSample {
    pub t: f64,
    pub flat_distance: f64,
    pub det_w_defect: f64,
    pub torsion_l2: f64,
    pub min_eigenvalue: f64,
}

#[derive(Clone, Debug)]
pub struct PotentialRun {
    pub samples: Vec<PotentialSample>,
    pub final_alpha: PotentialForm,
}

/// Sup-distance of the volume-normalized metric to its grid average.
pub fn flat_distance(w: &HermitianField, reference_volume: f64) -> f64 {
    let vol: f64 = w.determinant().iter().sum::<f64>() / w.len() as f64;
    let s = (reference_volume / vol).sqrt();
    let scaled = w.scale(s);
    let avg = HermitianField::constant(&w.grid, scaled.mean());
    scaled.sup_distance(&avg)
}

/// `‖H‖_{L²}` of the Bismut torsion with respect to the metric itself.
pub fn torsion_l2(w: &HermitianField, diff: &dyn Differentiator) -> f64 {
    let jet = MetricJet::new(w, diff, false);
    let conv = Conventions::default();
    let mut total = 0.0;
    for k in 0..jet.len() {
        let p = jet.point(k);
        let ginv = p.g.try_inverse().expect("validated metric");
        let h = geometry::torsion_form(&p, &conv);
        let (_, n2) = geometry::h_squared(&h, &ginv);
        total += n2 / 6.0 * p.g.determinant().sqrt();
    }
    (total * w.grid.cell_volume()).sqrt()
}

/// RK4 integration of the α equation with fixed step `dt`, sampling the
/// diagnostics every `sample_every` steps.
pub fn run_potential_flow(a0: &PotentialForm, t_end: f64, dt: f64, sample_every: usize, diff: &dyn Differentiator) -> Result<PotentialRun> {
    if !(dt > 0.0) || !(t_end >= 0.0) || sample_every == 0 {
        return Err(Error::Parameter("run_potential_flow: need dt > 0, t_end >= 0, sample_every >= 1".into()));
    }
    let steps = (t_end / dt).round() as usize;
    let mut a = a0.clone();
    let w0 = metric_from_alpha(&a, diff)?;
    let reference_volume = w0.determinant().iter().sum::<f64>() / w0.len() as f64;
    let mut samples = Vec::new();
    let sample = |a: &PotentialForm, t: f64| -> Result<PotentialSample> {
        let w = metric_from_alpha(a, diff).map_err(|e| match e {
            Error::Degenerate { index, min_eigenvalue } => Error::Singularity {
                time: t,
                reason: format!("metric lost positivity at point {index} (eigenvalue {min_eigenvalue:e})"),
            },
            e => e,
        })?;
        Ok(PotentialSample {
            t,
            flat_distance: flat_distance(&w, reference_volume),
            det_w_defect: w_matrix(a, diff)?.max_det_defect(),
            torsion_l2: torsion_l2(&w, diff),
            min_eigenvalue: w.min_eigenvalue().0,
        })
    };
    samples.push(sample(&a, 0.0)?);
    for step in 1..=steps {
        let t = step as f64 * dt;
        let rate = |p: &PotentialForm| alpha_flow_rhs(p, diff);
        let k1 = rate(&a)?;
        let k2 = rate(&a.axpy(0.5 * dt, &k1))?;
        let k3 = rate(&a.axpy(0.5 * dt, &k2))?;
        let k4 = rate(&a.axpy(dt, &k3))?;
        for c in 0..2 {
            for k in 0..a.alpha[c].len() {
                a.alpha[c][k] += (k1[c][k] + k2[c][k] * 2.0 + k3[c][k] * 2.0 + k4[c][k]) * (dt / 6.0);
            }
        }
        if step % sample_every == 0 || step == steps {
            let s = sample(&a, t)?;
            if s.min_eigenvalue < 1e-6 {
                return Err(Error::Singularity { time: t, reason: format!("smallest eigenvalue {:e}", s.min_eigenvalue) });
            }
            samples.push(s);
        }
    }
    Ok(PotentialRun { samples, final_alpha: a })
}

/// Metric `h₀ + 2∂∂̄φ` of the Kähler form `ω₀ + i∂∂̄φ`, built from real
/// second derivatives.
pub fn kahler_metric(phi: &[f64], background: &Matrix2<C64>, diff: &dyn Differentiator) -> Result<HermitianField> {
    let grid = diff.grid().clone();
    let (_, dd) = diff.jet_of(phi, true);
    let dd = dd.expect("second derivatives requested");
    let d = |a: usize, b: usize, k: usize| dd[sym_index(a, b)][k];
    let mut w = HermitianField::constant(&grid, *background);
    for k in 0..grid.len() {
        let h11 = 0.5 * (d(0, 0, k) + d(1, 1, k));
        let h22 = 0.5 * (d(2, 2, k) + d(3, 3, k));
        let h12 = C64::new(0.5 * (d(0, 2, k) + d(1, 3, k)), 0.5 * (d(0, 3, k) - d(1, 2, k)));
        let h = Matrix2::new(C64::new(h11, 0.0), h12, h12.conj(), C64::new(h22, 0.0));
        w.set(k, &(background + h));
    }
    w.validate()?;
    Ok(w)
}

/// Parabolic Monge–Ampère driver `log det(h₀ + 2∂∂̄φ) − log det h₀`, the
/// scalar form of Kähler–Ricci flow at pluriclosed-flow speed.
pub fn monge_ampere_rate(phi: &[f64], background: &Matrix2<C64>, diff: &dyn Differentiator) -> Result<Vec<f64>> {
    let w = kahler_metric(phi, background, diff)?;
    let d0 = background.determinant().re.ln();
    Ok(w.determinant().iter().map(|x| x.ln() - d0).collect())
}

/// RK4 integration of the scalar flow, returning `(t, φ_t)` every
/// `sample_every` steps and at the end.
pub fn run_kahler_ricci(phi0: &[f64], background: &Matrix2<C64>, t_end: f64, dt: f64, sample_every: usize, diff: &dyn Differentiator) -> Result<Vec<(f64, Vec<f64>)>> {
    if !(dt > 0.0) || !(t_end >= 0.0) || sample_every == 0 {
        return Err(Error::Parameter("run_kahler_ricci: need dt > 0, t_end >= 0, sample_every >= 1".into()));
    }
    let steps = (t_end / dt).round() as usize;
    let add = |a: &[f64], s: f64, b: &[f64]| a.iter().zip(b).map(|(x, y)| x + s * y).collect::<Vec<f64>>();
    let mut phi = phi0.to_vec();
    let mut out = vec![(0.0, phi.clone())];
    for step in 1..=steps {
        let k1 = monge_ampere_rate(&phi, background, diff)?;
        let k2 = monge_ampere_rate(&add(&phi, 0.5 * dt, &k1), background, diff)?;
        let k3 = monge_ampere_rate(&add(&phi, 0.5 * dt, &k2), background, diff)?;
        let k4 = monge_ampere_rate(&add(&phi, dt, &k3), background, diff)?;
        for k in 0..phi.len() {
            phi[k] += dt / 6.0 * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k]);
        }
        if step % sample_every == 0 || step == steps {
            out.push((step as f64 * dt, phi.clone()));
        }
    }
    Ok(out)
}

/// The tensor rate induced by an α rate, for consistency checks against `pcf_rhs`.
pub fn induced_metric_rate(rate: &[Vec<C64>; 2], grid: &ChartGrid, diff: &dyn Differentiator) -> HermitianField {
    ddbar_of_one_form(rate, grid, diff)
}

pub fn pcf_rate_of_alpha(a: &PotentialForm, diff: &dyn Differentiator) -> Result<HermitianField> {
    let w = metric_from_alpha(a, diff)?;
    Ok(chart::flow_rate(&w, diff, &Conventions::default()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{sym_index, Spectral};

    #[test]
    fn modes_match_direct_sum() {
        let g = ChartGrid::new([8, 16, 8, 8], [std::f64::consts::TAU, 3.0, std::f64::consts::TAU, std::f64::consts::TAU]).unwrap();
        let modes = random_modes(3, 0.2, 2);
        let a = PotentialForm::from_modes(&g, &modes).unwrap();
        for k in [0, 17, 999, g.len() - 1] {
            let x = g.coords(k);
            let mut v = [C64::new(0.0, 0.0); 2];
            for m in &modes {
                let ph: f64 = (0..4).map(|a| m.k[a] as f64 * std::f64::consts::TAU / g.periods[a] * x[a]).sum();
                for c in 0..2 {
                    v[c] += C64::new(m.coeff[c][0], m.coeff[c][1]) * C64::new(ph.cos(), ph.sin());
                }
            }
            assert!((v[0] - a.alpha[0][k]).norm() < 1e-14 && (v[1] - a.alpha[1][k]).norm() < 1e-14);
        }
        assert!(PotentialForm::from_modes(&ChartGrid::cubic(8).unwrap(), &[AlphaMode { k: [4, 0, 0, 0], coeff: [[1.0, 0.0]; 2] }]).is_err());
    }

    #[test]
    fn kahler_potential_embeds() {
        let g = ChartGrid::cubic(16).unwrap();
        let s = Spectral::new(&g);
        let phi = g.sample(|x| 0.1 * x[0].sin() * x[3].cos());
        let w = metric_from_alpha(&PotentialForm::kahler(&phi, &g, &s), &s).unwrap();
        let (_, dd) = s.jet_of(&phi, true);
        let dd = dd.unwrap();
        for k in 0..g.len() {
            // h_{11̄} = 1 + 2 ∂₁∂̄₁φ = 1 + ½(φ_00 + φ_11)
            let h11 = 1.0 + 0.5 * (dd[sym_index(0, 0)][k] + dd[sym_index(1, 1)][k]);
            assert!((w.u[0][k] - h11).abs() < 1e-12);
        }
    }

    #[test]
    fn generalized_metric_has_unit_determinant() {
        let g = ChartGrid::cubic(8).unwrap();
        let s = Spectral::new(&g);
        let a = PotentialForm::from_modes(&g, &random_modes(1, 0.3, 1)).unwrap();
        assert!(w_matrix(&a, &s).unwrap().max_det_defect() < 1e-12);
    }

    #[test]
    fn alpha_rate_induces_pcf_rate() {
        let g = ChartGrid::cubic(16).unwrap();
        let s = Spectral::new(&g);
        let a = PotentialForm::from_modes(&g, &random_modes(2, 0.2, 1)).unwrap();
        let induced = induced_metric_rate(&alpha_flow_rhs(&a, &s).unwrap(), &g, &s);
        let direct = pcf_rate_of_alpha(&a, &s).unwrap();
        assert!(induced.sup_distance(&direct) < 1e-10, "{}", induced.sup_distance(&direct));
    }

    #[test]
    fn kahler_metric_of_trigonometric_potential() {
        let g = ChartGrid::cubic(8).unwrap();
        let s = Spectral::new(&g);
        let phi = g.sample(|x| 0.3 * (x[0] + x[2]).sin() + 0.2 * x[3].cos());
        let w = kahler_metric(&phi, &Matrix2::identity(), &s).unwrap();
        for k in 0..g.len() {
            let x = g.coords(k);
            let v = 0.3 * (x[0] + x[2]).sin();
            let m = w.at(k);
            assert!((m[(0, 0)].re - (1.0 - 0.5 * v)).abs() < 1e-12);
            assert!((m[(1, 1)].re - (1.0 - 0.5 * v - 0.1 * x[3].cos())).abs() < 1e-12);
            assert!((m[(0, 1)] - C64::new(-0.5 * v, 0.0)).norm() < 1e-12);
        }
        let big = g.sample(|x| 5.0 * x[0].cos());
        assert!(kahler_metric(&big, &Matrix2::identity(), &s).is_err());
    }

    #[test]
    fn kahler_ricci_matches_two_torus_oracle() {
        let n = 16;
        let g = ChartGrid::new([8, 8, n, n], [std::f64::consts::TAU; 4]).unwrap();
        let s = Spectral::new(&g);
        let f = |x2: f64, x3: f64| 0.4 * x2.sin() + 0.3 * (x2 - 2.0 * x3).cos();
        let phi0 = g.sample(|x| f(x[2], x[3]));
        let (dt, steps) = (0.02, 25);
        let run = run_kahler_ricci(&phi0, &Matrix2::identity(), steps as f64 * dt, dt, steps, &s).unwrap();
        let oracle = crate::oracle::TorusMongeAmpere2::new(n, 1.0, 1.0);
        let mut u: Vec<f64> = (0..n * n).map(|k| phi0[k]).collect();
        for _ in 0..steps {
            u = oracle.step(&u, dt);
        }
        let (t, phi) = run.last().unwrap();
        assert!((t - 0.5).abs() < 1e-12);
        for k in 0..g.len() {
            assert!((phi[k] - u[k % (n * n)]).abs() < 1e-10, "{k}");
        }
    }
}
